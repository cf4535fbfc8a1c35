"""CDS index options priced as options on a fully-funded protection PV.

A payer is treated as an exchange of two positive PVs. ``X`` is long index
protection struck at option inception plus a riskfree annuity that funds
the coupon. ``Y`` is the strike leg plus the same carry. Black-76 is then
applied to ``X`` against ``Y``, so there is no spread numeraire that
vanishes when every name has defaulted.

Time zero is the option strike date. The valuation date may be later, in
which case defaults since the strike enter through ``accrued_loss``,
``names_now`` and the realised coupon carry.
"""
from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from typing import Sequence

from .curves import dv01_flat, parse_date, year_fraction
from .numerics import Bracket, BracketError, find_root, norm_cdf
from .single_name import PriceResult

__all__ = [
    "IndexState",
    "IndexStrike",
    "PremiumBoundsError",
    "ConstructionError",
    "settlement_dv01",
    "spread_from_upfront",
    "carry_value",
    "x_tilde",
    "y_tilde",
    "price_index_option",
    "price_index_option_hy",
    "implied_pv_vol",
    "exercise_value",
    "scan_strikes",
]


class PremiumBoundsError(ValueError):
    """A premium lies outside the no-arbitrage range of the Black formula."""


class ConstructionError(ValueError):
    """``X`` or ``Y`` came out nonpositive, so Black-76 cannot be applied."""


@dataclass(frozen=True)
class IndexState:
    """Index and option-contract state.

    Args:
        original_names: names in the original index (``N_00``).
        names_at_strike: names alive when the option was struck (``N_0``).
        names_now: names alive at the valuation date (``N_t``).
        accrued_loss: loss since the strike date, fraction of original notional.
        coupon: fixed index coupon, decimal.
        quote: index spread (decimal) when ``quote_type == "spread"``,
            or price per 100 when ``quote_type == "price"``.
        marking_recovery: recovery used by the settlement DV01 convention.
        riskfree_rate: flat continuously compounded rate.
        default_dates: dates of defaults since the strike, used for the coupon
            carry; when omitted each default is placed mid-way through the period.
        default_leg_names: names covered by the quoted upfront, when it differs
            from ``names_now`` (e.g. a credit event awaiting its auction).
    """

    original_names: int
    names_at_strike: int
    names_now: int
    accrued_loss: float
    coupon: float
    quote: float
    valuation_date: dt.date
    expiry: dt.date
    maturity: dt.date
    strike_date: dt.date | None = None
    quote_type: str = "spread"
    marking_recovery: float = 0.4
    riskfree_rate: float = 0.0
    default_dates: tuple | None = None
    default_leg_names: int | None = None

    def __post_init__(self):
        for name in ("valuation_date", "expiry", "maturity"):
            object.__setattr__(self, name, parse_date(getattr(self, name)))
        if self.strike_date is None:
            object.__setattr__(self, "strike_date", self.valuation_date)
        else:
            object.__setattr__(self, "strike_date", parse_date(self.strike_date))
        if self.default_dates is not None:
            object.__setattr__(self, "default_dates",
                               tuple(parse_date(d) for d in self.default_dates))
        if not self.original_names >= self.names_at_strike >= self.names_now >= 0:
            raise ValueError("need original_names >= names_at_strike >= names_now >= 0")
        if self.names_at_strike == 0:
            raise ValueError("names_at_strike must be positive")
        max_loss = (self.names_at_strike - self.names_now) / self.original_names
        if not 0.0 <= self.accrued_loss <= max_loss + 1e-15:
            raise ValueError(f"accrued_loss must lie in [0, {max_loss}]")
        if self.quote_type not in ("spread", "price"):
            raise ValueError("quote_type must be 'spread' or 'price'")
        if self.quote_type == "spread" and self.quote < 0:
            raise ValueError("index spread must be nonnegative")
        if not math.isfinite(self.quote):
            raise ValueError("quote must be finite")
        if not 0.0 <= self.marking_recovery < 1.0:
            raise ValueError("marking_recovery must lie in [0, 1)")
        if not self.strike_date <= self.valuation_date < self.expiry < self.maturity:
            raise ValueError("need strike_date <= valuation_date < expiry < maturity")
        if self.default_dates is not None:
            if len(self.default_dates) != self.names_at_strike - self.names_now:
                raise ValueError("default_dates must list one date per default since the strike")
            if any(not self.strike_date <= d <= self.valuation_date for d in self.default_dates):
                raise ValueError("default dates must fall between strike and valuation dates")
        if self.default_leg_names is not None and not (
                0 <= self.default_leg_names <= self.original_names):
            raise ValueError("default_leg_names must lie in [0, original_names]")

    @property
    def t(self) -> float:
        return year_fraction(self.strike_date, self.valuation_date)

    @property
    def t_expiry(self) -> float:
        return year_fraction(self.strike_date, self.expiry)

    @property
    def t_maturity(self) -> float:
        return year_fraction(self.strike_date, self.maturity)

    @property
    def factor(self) -> float:
        return self.names_now / self.original_names

    def upfront(self, r: float | None = None) -> float:
        """Upfront per unit of live notional implied by the quote."""
        if self.quote_type == "price":
            return (100.0 - self.quote) / 100.0
        r = self.riskfree_rate if r is None else r
        s = self.quote
        return (s - self.coupon) * dv01_flat(s, self.t_maturity - self.t, r,
                                             self.marking_recovery)

    @property
    def spread(self) -> float:
        if self.quote_type == "spread":
            return self.quote
        return spread_from_upfront(self.upfront(), self.coupon, self.t_maturity - self.t,
                                   self.riskfree_rate, self.marking_recovery)


@dataclass(frozen=True)
class IndexStrike:
    """Strike as a spread (spread-quoted indices) or an upfront (price-quoted)."""

    spread: float | None = None
    upfront: float | None = None

    def __post_init__(self):
        if (self.spread is None) == (self.upfront is None):
            raise ValueError("give exactly one of spread or upfront")
        if self.spread is not None and not self.spread > 0:
            raise ValueError("strike spread must be positive")
        if self.upfront is not None and not math.isfinite(self.upfront):
            raise ValueError("strike upfront must be finite")

    @classmethod
    def from_price(cls, price: float) -> "IndexStrike":
        return cls(upfront=(100.0 - price) / 100.0)


def settlement_dv01(s: float, state: IndexState, r: float | None = None) -> float:
    """Conventional DV01 over [expiry, maturity] on a flat curve at spread ``s``."""
    r = state.riskfree_rate if r is None else r
    return dv01_flat(s, state.t_maturity - state.t_expiry, r, state.marking_recovery)


def spread_from_upfront(upfront: float, coupon: float, horizon: float, r: float,
                        recovery: float) -> float:
    """Flat spread whose conventional upfront ``(s - c) DV01(s)`` equals ``upfront``."""
    def f(s):
        return (s - coupon) * dv01_flat(s, horizon, r, recovery) - upfront

    # upfront is bounded above by 1 - R as s -> infinity
    hi = max(coupon, 1e-4) * 2
    while f(hi) < 0:
        hi *= 2
        if hi > 1e6:
            raise BracketError(f"upfront {upfront} is not attainable under recovery {recovery}")
    if f(0.0) > 0:
        raise BracketError(f"upfront {upfront} is below the zero-spread value")
    return find_root(f, Bracket(0.0, hi), tol=1e-15)


def _default_times(state: IndexState) -> list[float]:
    n_defaults = state.names_at_strike - state.names_now
    if state.default_dates is None:
        return [0.5 * state.t] * n_defaults
    return [year_fraction(state.strike_date, d) for d in state.default_dates]


def _rolled_accrual(start: float, end: float, r: float) -> float:
    # integral of exp(r (end - u)) du over [start, end]
    span = end - start
    if abs(r * span) < 1e-12:
        return span
    return math.expm1(r * span) / r


def _discounted_accrual(start: float, end: float, g: float) -> float:
    # integral of exp(-g (u - start)) du over [start, end]
    span = end - start
    if abs(g * span) < 1e-12:
        return span
    return -math.expm1(-g * span) / g


def carry_value(state: IndexState, r: float | None = None) -> float:
    """Value at the valuation date of the funding annuity net of coupon carry paid.

    Carry missed on names defaulted since the strike, rolled up at ``r``, plus
    the remaining riskfree annuity to maturity. Divided by ``N_0`` per name.
    """
    r = state.riskfree_rate if r is None else r
    t = state.t
    missed = sum(_rolled_accrual(tau, t, r) for tau in _default_times(state))
    return missed / state.names_at_strike + dv01_flat(0.0, state.t_maturity - t, r, 0.0)


def _default_leg_names(state: IndexState) -> int:
    return state.names_now if state.default_leg_names is None else state.default_leg_names


def x_tilde(state: IndexState, r: float | None = None) -> float:
    """PV of the fully-funded long-protection position; a tradable, so its own forward."""
    r = state.riskfree_rate if r is None else r
    live = _default_leg_names(state) / state.original_names
    upfront = state.upfront(r)
    funded = state.coupon * state.names_at_strike / state.original_names
    return state.accrued_loss + live * upfront + funded * carry_value(state, r)


def _expected_carry_at_expiry(state: IndexState, r: float, writedown: str) -> float:
    """Discounted expectation of the carry term at expiry, per name at strike."""
    t, t_e, t_m = state.t, state.t_expiry, state.t_maturity
    realised = carry_value(state, r) - dv01_flat(0.0, t_m - t, r, 0.0)
    dead = 1.0 - state.names_now / state.names_at_strike
    alive = state.names_now / state.names_at_strike
    hazard = state.spread / (1.0 - state.marking_recovery)
    if writedown == "printed":
        survival = math.exp(-hazard * (t_e - t))
        future_alive = 0.5 * (1.0 - survival)
    elif writedown == "integral":
        future_alive = _discounted_accrual(t, t_e, r) - _discounted_accrual(t, t_e, r + hazard)
    else:
        raise ValueError("writedown must be 'printed' or 'integral'")
    future = dead * _discounted_accrual(t, t_e, r) + alive * future_alive
    remaining = math.exp(-r * (t_e - t)) * dv01_flat(0.0, t_m - t_e, r, 0.0)
    return realised + future + remaining


def y_tilde(state: IndexState, strike: IndexStrike, r: float | None = None,
            writedown: str = "printed") -> float:
    """Discounted expected strike leg plus funding carry at expiry.

    The carry written down by defaults before expiry is estimated from a flat
    index hazard ``spread / (1 - R)``. ``writedown="printed"`` uses half the
    expected default fraction; ``"integral"`` integrates the flat-hazard loss
    of carry exactly.
    """
    r = state.riskfree_rate if r is None else r
    df = math.exp(-r * (state.t_expiry - state.t))
    if strike.spread is not None:
        s_k = strike.spread
        leg = (s_k - state.coupon) * settlement_dv01(s_k, state, r)
    else:
        leg = strike.upfront
    carry = _expected_carry_at_expiry(state, r, writedown)
    return state.names_at_strike / state.original_names * (df * leg + state.coupon * carry)


def _black_on_pv(x: float, y: float, sigma: float, tau: float, side: str):
    if not sigma > 0:
        raise ValueError(f"volatility must be positive, got {sigma}")
    if not (x > 0 and y > 0):
        raise ConstructionError(f"X={x:.6g}, Y={y:.6g}: both must be positive")
    sd = sigma * math.sqrt(tau)
    d_plus = (math.log(x / y) + 0.5 * sd * sd) / sd
    d_minus = d_plus - sd
    if side == "payer":
        value = x * norm_cdf(d_plus) - y * norm_cdf(d_minus)
        delta = norm_cdf(d_plus)
    elif side == "receiver":
        value = y * norm_cdf(-d_minus) - x * norm_cdf(-d_plus)
        delta = norm_cdf(d_plus) - 1.0
    else:
        raise ValueError("side must be 'payer' or 'receiver'")
    return value, d_plus, d_minus, delta


def _price(state, strike, sigma, side, r, writedown):
    x = x_tilde(state, r)
    y = y_tilde(state, strike, r, writedown)
    tau = state.t_expiry - state.t
    value, d_plus, d_minus, delta = _black_on_pv(x, y, sigma, tau, side)
    return PriceResult(value, x / y, d_plus, d_minus, delta, 0.0,
                       {"x_tilde": x, "y_tilde": y, "expiry_years": tau})


def price_index_option(state: IndexState, strike: IndexStrike, sigma: float,
                       side: str = "payer", r: float | None = None,
                       writedown: str = "printed") -> PriceResult:
    """Black-76 on the protection PV against the strike-leg PV.

    ``sigma`` is the volatility of the PV ratio, not of the spread. The
    result's ``forward`` field holds ``X/Y``.
    """
    if state.quote_type != "spread" or strike.spread is None:
        raise ValueError("spread-quoted state and strike required; use price_index_option_hy")
    return _price(state, strike, sigma, side, r, writedown)


def price_index_option_hy(state: IndexState, strike: IndexStrike, sigma: float,
                          side: str = "payer", r: float | None = None,
                          writedown: str = "printed") -> PriceResult:
    """Price-quoted index option; the strike is an upfront and may be negative."""
    if state.quote_type != "price" or strike.upfront is None:
        raise ValueError("price-quoted state and upfront strike required")
    return _price(state, strike, sigma, side, r, writedown)


def implied_pv_vol(state: IndexState, strike: IndexStrike, premium: float,
                   side: str = "payer", r: float | None = None,
                   writedown: str = "printed", tol: float = 1e-10) -> float:
    """PV volatility reproducing ``premium``."""
    x = x_tilde(state, r)
    y = y_tilde(state, strike, r, writedown)
    if side == "payer":
        intrinsic, cap = max(x - y, 0.0), x
    else:
        intrinsic, cap = max(y - x, 0.0), y
    if premium <= intrinsic:
        raise PremiumBoundsError(f"premium {premium:.6g} is at or below intrinsic {intrinsic:.6g}")
    if premium >= cap:
        raise PremiumBoundsError(f"premium {premium:.6g} is at or above the cap {cap:.6g}")
    tau = state.t_expiry - state.t

    def f(sigma):
        return _black_on_pv(x, y, sigma, tau, side)[0] - premium

    lo, hi = 1e-6, 1.0
    while f(lo) > 0 and lo > 1e-14:
        lo *= 1e-2
    while f(hi) < 0:
        hi *= 2.0
        if hi > 1e3:
            raise PremiumBoundsError("premium too close to the cap to invert")
    sigma = find_root(f, Bracket(lo, hi), tol=1e-15)
    if abs(f(sigma)) > tol:
        raise BracketError(f"implied vol residual {f(sigma):.3e}")
    return sigma


def exercise_value(state: IndexState, strike: IndexStrike,
                   quote_at_expiry: float) -> float:
    """Intrinsic payer value at expiry.

    ``state`` describes the index at expiry (``names_now`` and
    ``accrued_loss`` realised), and ``quote_at_expiry`` is a spread or a price
    matching ``state.quote_type``.
    """
    horizon = state.t_maturity - state.t_expiry
    live = _default_leg_names(state) / state.original_names
    if state.quote_type == "price":
        protection = (100.0 - quote_at_expiry) / 100.0
        leg = strike.upfront
    else:
        s = quote_at_expiry
        protection = (s - state.coupon) * dv01_flat(s, horizon, state.riskfree_rate,
                                                    state.marking_recovery)
        s_k = strike.spread
        leg = (s_k - state.coupon) * dv01_flat(s_k, horizon, state.riskfree_rate,
                                               state.marking_recovery)
    at_strike = state.names_at_strike / state.original_names
    return max(state.accrued_loss + live * protection - at_strike * leg, 0.0)


def scan_strikes(state: IndexState, strikes: Sequence[IndexStrike], sigma: float,
                 r: float | None = None) -> list[dict]:
    """Payer, receiver and delta for each strike (helper for tables)."""
    pricer = price_index_option if state.quote_type == "spread" else price_index_option_hy
    rows = []
    for k in strikes:
        payer = pricer(state, k, sigma, "payer", r)
        receiver = pricer(state, k, sigma, "receiver", r)
        rows.append({
            "strike": k.spread if k.spread is not None else k.upfront,
            "payer": payer.premium,
            "receiver": receiver.premium,
            "delta": payer.delta,
            "parity_residual": payer.premium - receiver.premium
            - (payer.diagnostics["x_tilde"] - payer.diagnostics["y_tilde"]),
        })
    return rows

