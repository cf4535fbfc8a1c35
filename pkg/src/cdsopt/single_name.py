"""Single-name CDS options.

All-running knockout options use Black-76 on the forward spread in the
survival measure. Options whose strike is partly or wholly upfront, or
quoted against a fixed coupon, are priced by integrating the exercise value
over the same lognormal spread. The integral is converted from the survival
measure back to the money-market measure using a flat-curve DV01, scaled by
an ``epsilon`` chosen so that the conversion reprices today's risky
discount factor exactly. With all-running strikes the two routes agree.
"""
from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field

import numpy as np

from .curves import CreditCurve, parse_date
from .numerics import (
    Bracket,
    BracketError,
    QuadratureRule,
    find_root,
    gaussian_nodes,
    integrate_gaussian,
    norm_cdf,
)
from .recovery import RecoveryParams, RecoveryQuote, recovery_option_pv

__all__ = [
    "OptionSpec",
    "PriceResult",
    "CalibrationError",
    "black76",
    "upfront_equivalent",
    "price_ko_running",
    "price_nko_running",
    "calibrate_epsilon",
    "price_ko_upfront_running",
    "price_ko_quoted",
    "price_nko_upfront_running",
    "price",
]

SIDES = ("payer", "receiver")
CONVENTIONS = ("strike_spread", "spot_at_expiry")


class CalibrationError(RuntimeError):
    """The epsilon condition could not be bracketed."""


@dataclass(frozen=True)
class OptionSpec:
    """A single-name CDS option.

    Spreads and the upfront are decimals of notional. ``coupon`` only matters
    for :func:`price_ko_quoted`.
    """

    expiry: dt.date
    maturity: dt.date
    strike_running: float = 0.0
    strike_upfront: float = 0.0
    side: str = "payer"
    knockout: bool = True
    coupon: float = 0.0
    strike_leg_convention: str = "strike_spread"

    def __post_init__(self):
        object.__setattr__(self, "expiry", parse_date(self.expiry))
        object.__setattr__(self, "maturity", parse_date(self.maturity))
        if self.expiry >= self.maturity:
            raise ValueError("expiry must precede maturity")
        if self.strike_running < 0 or self.strike_upfront < 0:
            raise ValueError("strike parts must be nonnegative")
        if self.strike_running == 0 and self.strike_upfront == 0 and self.coupon == 0:
            raise ValueError("strike is zero")
        if self.side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}")
        if self.strike_leg_convention not in CONVENTIONS:
            raise ValueError(f"strike_leg_convention must be one of {CONVENTIONS}")


@dataclass
class PriceResult:
    premium: float
    forward: float
    d_plus: float
    d_minus: float
    delta: float
    epsilon_used: float = 0.0
    diagnostics: dict = field(default_factory=dict)


def _check_vol(sigma):
    if not sigma > 0:
        raise ValueError(f"volatility must be positive, got {sigma}")


def _times(curve: CreditCurve, spec: OptionSpec) -> tuple[float, float]:
    t_e = curve.time(spec.expiry)
    if t_e <= 0:
        raise ValueError("option expiry must be after the valuation date")
    return t_e, curve.time(spec.maturity)


def black76(forward: float, strike: float, sigma: float, t: float, annuity: float,
            side: str = "payer") -> tuple[float, float, float]:
    """Black-76 premium with an arbitrary annuity. Returns ``(premium, d+, d-)``."""
    if strike <= 0:
        raise ValueError("Black-76 needs a positive strike")
    _check_vol(sigma)
    sd = sigma * math.sqrt(t)
    if forward <= 0:
        # a riskless name: the spread stays at zero
        value = 0.0 if side == "payer" else strike
        return value * annuity, -math.inf, -math.inf
    d_plus = (math.log(forward / strike) + 0.5 * sd * sd) / sd
    d_minus = d_plus - sd
    if side == "payer":
        value = forward * norm_cdf(d_plus) - strike * norm_cdf(d_minus)
    else:
        value = strike * norm_cdf(-d_minus) - forward * norm_cdf(-d_plus)
    return value * annuity, d_plus, d_minus


def upfront_equivalent(curve: CreditCurve, expiry, maturity, running: float) -> float:
    """Upfront amount equivalent to ``running`` spread paid over the forward annuity."""
    return running * curve.forward_rpv01(curve.time(expiry), curve.time(maturity))


def price_ko_running(curve: CreditCurve, spec: OptionSpec, sigma: float) -> PriceResult:
    """Knockout option exercising into all-running protection at ``spec.strike_running``."""
    if spec.strike_upfront != 0:
        raise ValueError("price_ko_running needs an all-running strike")
    t_e, t_m = _times(curve, spec)
    annuity = curve.forward_rpv01(t_e, t_m)
    forward = curve.forward_par_spread(t_e, t_m)
    premium, d_plus, d_minus = black76(forward, spec.strike_running, sigma, t_e, annuity, spec.side)
    delta = norm_cdf(d_plus) if spec.side == "payer" else norm_cdf(d_plus) - 1.0
    return PriceResult(premium, forward, d_plus, d_minus, delta, curve.epsilon,
                       {"rpv01": annuity, "expiry_years": t_e})


def price_nko_running(curve: CreditCurve, spec: OptionSpec, sigma: float) -> PriceResult:
    """No-knockout all-running option.

    The payer adds front-end protection to the knockout payer. A receiver is
    never exercised into a defaulted name, so it keeps the knockout value.
    """
    res = price_ko_running(curve, spec, sigma)
    if spec.side == "payer":
        t_e = res.diagnostics["expiry_years"]
        fep = curve.default_pv(0.0, t_e)
        res.diagnostics.update(ko_premium=res.premium, fep=fep)
        res.premium += fep
    return res


def _lognormal_spread(forward, sigma, t, z):
    sd = sigma * math.sqrt(t)
    return forward * np.exp(sd * z - 0.5 * sd * sd)


def calibrate_epsilon(curve: CreditCurve, t_e: float, t_m: float, sigma: float,
                      rule: QuadratureRule | None = None, tol: float = 1e-10) -> float:
    """Hazard scaling that makes the DV01-based measure change reprice ``B*(t_e)``.

    Solves ``E[1 / DV01(s(Z); t_e, t_m)] = B*(t_e) / V1_0(t_e, t_m)`` for the
    epsilon inside the DV01, where ``s(Z)`` is the lognormal spread at expiry.
    The left side increases with epsilon, so the root is unique.
    """
    _check_vol(sigma)
    rule = rule or QuadratureRule()
    forward = curve.forward_par_spread(t_e, t_m)
    target = curve.risky_discount(t_e) / curve.forward_rpv01(t_e, t_m)
    horizon = t_m - t_e

    def residual(eps):
        def inv_dv01(z):
            s = _lognormal_spread(forward, sigma, t_e, z)
            return 1.0 / curve.with_epsilon(eps).dv01(s, horizon)
        return integrate_gaussian(inv_dv01, rule) - target

    lo = -1.0
    r_lo = residual(lo)
    if r_lo > 0:
        raise CalibrationError(
            f"RPV01/B* exceeds the riskfree PV01 bound: residual at eps=-1 is {r_lo:.3e}")
    hi = 1.0
    r_hi = residual(hi)
    while r_hi < 0:
        if hi > 1e8:
            raise CalibrationError(
                f"epsilon bracket failed: residual(-1)={r_lo:.3e}, residual({hi:g})={r_hi:.3e}")
        hi *= 4.0
        r_hi = residual(hi)
    try:
        eps = find_root(residual, Bracket(lo, hi), tol=1e-15)
    except BracketError as exc:
        raise CalibrationError(str(exc)) from exc
    # the root tolerance is on epsilon; the residual is what the caller relies on
    if abs(residual(eps)) > tol * max(1.0, target):
        raise CalibrationError(f"epsilon residual {residual(eps):.3e} above tolerance")
    return eps


def _exercise_boundary(intrinsic, rule: QuadratureRule) -> float | None:
    zb = rule.z_bound
    lo = float(intrinsic(np.array([-zb]))[0])
    hi = float(intrinsic(np.array([zb]))[0])
    if lo == 0 or hi == 0 or np.sign(lo) == np.sign(hi):
        return None
    return find_root(lambda z: float(intrinsic(np.array([z]))[0]), Bracket(-zb, zb), tol=1e-14)


def _integrate_payoff(intrinsic, numeraire, rule: QuadratureRule):
    """Return ``(E*[payer/DV01], E*[receiver/DV01], z*)`` with the kink split off."""
    z_star = _exercise_boundary(intrinsic, rule)
    if rule.scheme == "adaptive_simpson":
        def piece(sign, lo, hi):
            return integrate_gaussian(
                lambda z: max(sign * float(intrinsic(np.array([z]))[0]), 0.0)
                / float(numeraire(np.array([z]))[0]), rule, lo, hi)
    else:
        def piece(sign, lo, hi):
            z, w = gaussian_nodes(rule, lo, hi)
            if z.size == 0:
                return 0.0
            return float(np.dot(w, np.maximum(sign * intrinsic(z), 0.0) / numeraire(z)))

    if z_star is None:
        if rule.scheme == "gauss_hermite":
            payer = piece(1.0, -math.inf, math.inf)
            receiver = piece(-1.0, -math.inf, math.inf)
        else:
            payer = piece(1.0, -rule.z_bound, rule.z_bound)
            receiver = piece(-1.0, -rule.z_bound, rule.z_bound)
        return payer, receiver, None
    return piece(1.0, z_star, math.inf), piece(-1.0, -math.inf, z_star), z_star


def _quadrature_price(curve, spec, sigma, rule, epsilon, intrinsic_in_spread, forward=None):
    t_e, t_m = _times(curve, spec)
    horizon = t_m - t_e
    annuity = curve.forward_rpv01(t_e, t_m)
    fwd = curve.forward_par_spread(t_e, t_m) if forward is None else forward
    dv01_curve = curve.with_epsilon(epsilon)

    def spread(z):
        return _lognormal_spread(fwd, sigma, t_e, z)

    def numeraire(z):
        return dv01_curve.dv01(spread(z), horizon)

    def intrinsic(z):
        s = spread(z)
        return intrinsic_in_spread(s, dv01_curve.dv01(s, horizon))

    payer, receiver, z_star = _integrate_payoff(intrinsic, numeraire, rule)
    value = payer if spec.side == "payer" else receiver
    return value * annuity, z_star, annuity, fwd


def _price_by_quadrature(curve, spec, sigma, rule, epsilon, intrinsic_in_spread):
    _check_vol(sigma)
    rule = rule or QuadratureRule()
    t_e, t_m = _times(curve, spec)
    if epsilon is None:
        epsilon = calibrate_epsilon(curve, t_e, t_m, sigma, rule)
    premium, z_star, annuity, forward = _quadrature_price(
        curve, spec, sigma, rule, epsilon, intrinsic_in_spread)
    sd = sigma * math.sqrt(t_e)
    if z_star is None:
        # exercise boundary lies outside the integration range
        at_forward = intrinsic_in_spread(forward, curve.with_epsilon(epsilon).dv01(forward, t_m - t_e))
        d_minus = math.inf if at_forward > 0 else -math.inf
    else:
        d_minus = -z_star
    d_plus = d_minus + sd

    bump = 1e-4 * forward
    up, *_ = _quadrature_price(curve, spec, sigma, rule, epsilon, intrinsic_in_spread, forward + bump)
    down, *_ = _quadrature_price(curve, spec, sigma, rule, epsilon, intrinsic_in_spread, forward - bump)
    delta = (up - down) / (2.0 * bump * annuity)
    return PriceResult(premium, forward, d_plus, d_minus, delta, epsilon,
                       {"rpv01": annuity, "risky_discount": curve.risky_discount(t_e),
                        "expiry_years": t_e, "exercise_z": z_star})


def price_ko_upfront_running(curve: CreditCurve, spec: OptionSpec, sigma: float,
                             rule: QuadratureRule | None = None,
                             epsilon: float | None = None) -> PriceResult:
    """Knockout option whose strike is ``strike_upfront`` cash plus ``strike_running``.

    On exercise the payer's value per unit notional is
    ``s * DV01(s) - u_K - s_K * DV01(s)`` with ``DV01`` the epsilon-calibrated
    flat-curve annuity. ``epsilon`` is calibrated unless supplied.
    """
    u_k, s_k = spec.strike_upfront, spec.strike_running

    def intrinsic(s, dv01):
        return (s - s_k) * dv01 - u_k

    res = _price_by_quadrature(curve, spec, sigma, rule, epsilon, intrinsic)
    res.diagnostics["strike_upfront"] = u_k
    return res


def price_ko_quoted(curve: CreditCurve, spec: OptionSpec, sigma: float,
                    rule: QuadratureRule | None = None,
                    epsilon: float | None = None) -> PriceResult:
    """Knockout option on a fixed-coupon contract quoted in spread.

    Exercise value is ``(s - c) DV01(s) - (s_K - c) DV01(s_strike)`` where
    ``s_strike`` is the strike spread or the spread at expiry according to
    ``spec.strike_leg_convention``. The quoted spread is the lognormal state
    variable, with today's forward par spread as its mean.
    """
    c, s_k = spec.coupon, spec.strike_running
    rule = rule or QuadratureRule()
    t_e, t_m = _times(curve, spec)
    if epsilon is None:
        epsilon = calibrate_epsilon(curve, t_e, t_m, sigma, rule)
    if spec.strike_leg_convention == "strike_spread":
        leg = (s_k - c) * curve.with_epsilon(epsilon).dv01(s_k, t_m - t_e)

        def intrinsic(s, dv01):
            return (s - c) * dv01 - leg
    else:
        leg = None

        def intrinsic(s, dv01):
            return (s - c) * dv01 - (s_k - c) * dv01

    res = _price_by_quadrature(curve, spec, sigma, rule, epsilon, intrinsic)
    res.diagnostics["strike_leg"] = leg
    res.diagnostics["coupon"] = c
    return res


def price_nko_upfront_running(curve: CreditCurve, spec: OptionSpec, sigma: float,
                              rule: QuadratureRule | None = None,
                              rec: RecoveryParams | None = None,
                              epsilon: float | None = None) -> PriceResult:
    """No-knockout option with a part-upfront strike.

    After a default before expiry the payer can deliver the defaulted name
    for par less the upfront, so it carries a put on realised recovery struck
    at ``1 - u_K``; the receiver correspondingly holds a call.
    """
    if rec is None:
        raise ValueError("no-knockout upfront pricing needs RecoveryParams")
    res = price_ko_upfront_running(curve, spec, sigma, rule, epsilon)
    strike = 1.0 - spec.strike_upfront
    quote = RecoveryQuote(strike=strike, expiry=spec.expiry)
    side = "put" if spec.side == "payer" else "call"
    embedded = recovery_option_pv(curve, rec, quote, side)
    res.diagnostics.update(ko_premium=res.premium, recovery_option=embedded,
                           recovery_strike=strike)
    res.premium += embedded
    return res


def price(curve: CreditCurve, spec: OptionSpec, sigma: float,
          rule: QuadratureRule | None = None, rec: RecoveryParams | None = None) -> PriceResult:
    """Dispatch on the option's strike form and knockout flag."""
    if spec.coupon:
        if not spec.knockout:
            raise NotImplementedError("no-knockout quoted-spread options are not supported")
        return price_ko_quoted(curve, spec, sigma, rule)
    if spec.strike_upfront == 0:
        return (price_ko_running if spec.knockout else price_nko_running)(curve, spec, sigma)
    if spec.knockout:
        return price_ko_upfront_running(curve, spec, sigma, rule)
    return price_nko_upfront_running(curve, spec, sigma, rule, rec)
