"""Flat credit curves: discounting, survival, risky annuities and the flat-curve DV01.

Times are year fractions from the curve's valuation date, ACT/365F.
"""
from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, replace

import numpy as np

from .numerics import Bracket, BracketError, find_root

__all__ = [
    "CreditCurve",
    "parse_date",
    "year_fraction",
    "dv01_flat",
    "calibrate_flat_rate",
    "bp",
]

PREMIUM_LEGS = ("continuous", "quarterly")


def bp(x: float) -> float:
    """Basis points to decimal."""
    return x * 1e-4


def parse_date(value) -> dt.date:
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    return dt.date.fromisoformat(str(value))


def year_fraction(d1, d2) -> float:
    """ACT/365 fixed year fraction between two dates, ``d2 >= d1``."""
    d1, d2 = parse_date(d1), parse_date(d2)
    if d2 < d1:
        raise ValueError(f"end date {d2} precedes start date {d1}")
    return (d2 - d1).days / 365.0


def _annuity_factor(g, horizon):
    # (1 - exp(-g*h)) / g with the g -> 0 limit h
    g = np.asarray(g, dtype=float)
    gh = g * horizon
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(np.abs(gh) < 1e-12, horizon * (1 - 0.5 * gh),
                       -np.expm1(-gh) / np.where(g == 0, 1.0, g))
    return out


def dv01_flat(s, horizon: float, rate: float, recovery: float, epsilon: float = 0.0):
    """PV of a unit continuous annuity over ``horizon`` years on a flat curve.

    The hazard rate is ``(1 + epsilon) * s / (1 - recovery)``. Vectorised in ``s``.
    ``epsilon = -1`` gives the riskfree PV01.
    """
    if horizon <= 0:
        return np.zeros_like(np.asarray(s, dtype=float)) if np.ndim(s) else 0.0
    g = rate + (1.0 + epsilon) * np.asarray(s, dtype=float) / (1.0 - recovery)
    out = _annuity_factor(g, horizon)
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class CreditCurve:
    """Flat riskfree rate and flat hazard implied by a spot spread.

    Args:
        valuation_date: date all year fractions are measured from.
        riskfree_rate: continuously compounded rate.
        spot_spread: CDS spread as a decimal.
        marking_recovery: recovery used to turn spread into hazard.
        epsilon: hazard scaling, ``h = (1 + epsilon) s0 / (1 - R)``.
        premium_leg: ``"continuous"`` integrates the annuity exactly.
            ``"quarterly"`` pays quarterly coupons rolled back from the
            annuity end date with ACT/360 accruals and no accrued-on-default.
            In that mode the protection leg is marked at par against the
            premium leg so the flat par spread stays ``(1 + epsilon) s0``.
    """

    valuation_date: dt.date
    riskfree_rate: float
    spot_spread: float
    marking_recovery: float
    epsilon: float = 0.0
    premium_leg: str = "continuous"

    def __post_init__(self):
        object.__setattr__(self, "valuation_date", parse_date(self.valuation_date))
        if self.riskfree_rate <= -1:
            raise ValueError("riskfree_rate must exceed -1")
        if self.spot_spread < 0:
            raise ValueError("spot_spread must be nonnegative")
        if not 0.0 <= self.marking_recovery < 1.0:
            raise ValueError("marking_recovery must lie in [0, 1)")
        if self.epsilon < -1:
            raise ValueError("epsilon must be >= -1")
        if self.premium_leg not in PREMIUM_LEGS:
            raise ValueError(f"premium_leg must be one of {PREMIUM_LEGS}")

    @property
    def hazard(self) -> float:
        return (1.0 + self.epsilon) * self.spot_spread / (1.0 - self.marking_recovery)

    def with_epsilon(self, epsilon: float) -> "CreditCurve":
        return replace(self, epsilon=epsilon)

    def time(self, date) -> float:
        return year_fraction(self.valuation_date, date)

    def discount(self, t: float) -> float:
        return math.exp(-self.riskfree_rate * t)

    def survival(self, t: float) -> float:
        return math.exp(-self.hazard * t)

    def risky_discount(self, t: float) -> float:
        return math.exp(-(self.riskfree_rate + self.hazard) * t)

    def dv01(self, s, horizon: float):
        """Flat-curve DV01 at a supplied spread, using this curve's r, R and epsilon."""
        return dv01_flat(s, horizon, self.riskfree_rate, self.marking_recovery, self.epsilon)

    def forward_rpv01(self, t1: float, t2: float) -> float:
        """Time-0 value of a risky annuity paying between ``t1`` and ``t2``."""
        if not 0 <= t1 <= t2:
            raise ValueError("need 0 <= t1 <= t2")
        g = self.riskfree_rate + self.hazard
        if self.premium_leg == "continuous":
            return math.exp(-g * t1) * float(_annuity_factor(g, t2 - t1))
        n = math.ceil((t2 - t1) * 4 - 1e-9)
        if n <= 0:
            return 0.0
        pay = t2 - 0.25 * np.arange(n)[::-1]
        start = np.maximum(pay - 0.25, t1)
        accrual = (pay - start) * 365.0 / 360.0
        return float(np.sum(accrual * np.exp(-g * pay)))

    def default_pv(self, t1: float, t2: float) -> float:
        """Time-0 value of protection against default between ``t1`` and ``t2``."""
        if self.premium_leg == "continuous":
            if not 0 <= t1 <= t2:
                raise ValueError("need 0 <= t1 <= t2")
            g = self.riskfree_rate + self.hazard
            annuity = math.exp(-g * t1) * float(_annuity_factor(g, t2 - t1))
            return (1.0 - self.marking_recovery) * self.hazard * annuity
        return (1.0 + self.epsilon) * self.spot_spread * self.forward_rpv01(t1, t2)

    def forward_par_spread(self, t1: float, t2: float) -> float:
        if t2 <= t1:
            raise ValueError("forward spread needs t1 < t2")
        annuity = self.forward_rpv01(t1, t2)
        if annuity == 0.0:
            raise ValueError("forward spread undefined on an interval with no coupons")
        return self.default_pv(t1, t2) / annuity


def calibrate_flat_rate(target_rpv01: float, spot_spread: float, recovery: float,
                        t1: float, t2: float, premium_leg: str = "continuous",
                        valuation_date="2000-01-01") -> float:
    """Flat riskfree rate at which ``forward_rpv01(t1, t2)`` hits ``target_rpv01``."""

    def curve(r):
        return CreditCurve(valuation_date, r, spot_spread, recovery, premium_leg=premium_leg)

    try:
        return find_root(lambda r: curve(r).forward_rpv01(t1, t2) - target_rpv01,
                         Bracket(-0.5, 1.0), tol=1e-14)
    except BracketError as exc:
        raise BracketError(f"RPV01 {target_rpv01} unattainable for r in (-0.5, 1): {exc}") from exc
