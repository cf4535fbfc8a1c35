"""Vasicek-distributed recovery given default.

Recovery is ``R = Phi((a + b Z) / sqrt(1 - b^2))`` with ``Z`` standard
normal, so its mean is ``Phi(a)`` and ``b`` controls the width. Calls and
puts on ``R`` reduce to bivariate normal CDFs, and recovery swaps, calls and
puts pay at option expiry only if default has happened by then.
"""
from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import optimize, special, stats

from .curves import CreditCurve, parse_date
from .numerics import binorm_cdf, norm_cdf, norm_inv, norm_pdf

__all__ = [
    "RecoveryParams",
    "RecoveryQuote",
    "FitResult",
    "recovery_from_z",
    "recovery_mean_var",
    "recovery_density",
    "recovery_cdf",
    "recovery_call_expect",
    "recovery_put_expect",
    "recovery_option_pv",
    "recovery_swap_pv",
    "fit_params",
    "read_samples_csv",
]

B_MIN = 1e-4
B_MAX = 1.0 - 1e-4


@dataclass(frozen=True)
class RecoveryParams:
    a: float
    b: float

    def __post_init__(self):
        if not 0.0 < self.b < 1.0:
            raise ValueError(f"b must lie strictly inside (0, 1), got {self.b}")
        if not math.isfinite(self.a):
            raise ValueError("a must be finite")

    @classmethod
    def from_mean(cls, mean: float, b: float) -> "RecoveryParams":
        return cls(norm_inv(mean), b)

    @property
    def mean(self) -> float:
        return norm_cdf(self.a)


@dataclass(frozen=True)
class RecoveryQuote:
    strike: float
    expiry: dt.date

    def __post_init__(self):
        object.__setattr__(self, "expiry", parse_date(self.expiry))


@dataclass(frozen=True)
class FitResult:
    params: RecoveryParams
    ks_statistic: float
    at_lower_bound: bool = False


def recovery_from_z(params: RecoveryParams, z):
    """Map standard normal draws to recoveries. Vectorised."""
    return special.ndtr((params.a + params.b * np.asarray(z)) / math.sqrt(1.0 - params.b ** 2))


def recovery_mean_var(params: RecoveryParams) -> tuple[float, float]:
    mean = norm_cdf(params.a)
    var = binorm_cdf(params.a, params.a, params.b ** 2) - mean ** 2
    return mean, max(var, 0.0)


def recovery_cdf(params: RecoveryParams, x):
    """``P[R <= x]``, vectorised in ``x``."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore"):
        q = special.ndtri(x)
    return special.ndtr((q * math.sqrt(1.0 - params.b ** 2) - params.a) / params.b)


def recovery_density(params: RecoveryParams, x: float) -> float:
    """Density of ``R`` at ``x``; zero outside (0, 1)."""
    if not 0.0 < x < 1.0:
        return 0.0
    s = math.sqrt(1.0 - params.b ** 2)
    q = norm_inv(x)
    z = (q * s - params.a) / params.b
    return norm_pdf(z) * s / (params.b * norm_pdf(q))


def _strike_c(params: RecoveryParams, u: float) -> float:
    return (params.a - norm_inv(u) * math.sqrt(1.0 - params.b ** 2)) / params.b


def recovery_call_expect(params: RecoveryParams, u: float) -> float:
    """``E[(R - u)^+]``. Strikes at or outside [0, 1] take their limiting values."""
    if u <= 0.0:
        return norm_cdf(params.a) - u
    if u >= 1.0:
        return 0.0
    c = _strike_c(params, u)
    return max(binorm_cdf(params.a, c, params.b) - norm_cdf(c) * u, 0.0)


def recovery_put_expect(params: RecoveryParams, u: float) -> float:
    """``E[(u - R)^+]``."""
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return u - norm_cdf(params.a)
    c = _strike_c(params, u)
    return max(norm_cdf(-c) * u - binorm_cdf(params.a, -c, -params.b), 0.0)


def _default_weight(curve: CreditCurve, expiry) -> float:
    t_e = curve.time(expiry)
    if t_e <= 0:
        raise ValueError("recovery contract expiry must be after the valuation date")
    return curve.discount(t_e) - curve.risky_discount(t_e)


def recovery_option_pv(curve: CreditCurve, params: RecoveryParams, quote: RecoveryQuote,
                       side: str) -> float:
    """PV of a recovery call or put paying at expiry if default occurred before it."""
    if side == "call":
        payoff = recovery_call_expect(params, quote.strike)
    elif side == "put":
        payoff = recovery_put_expect(params, quote.strike)
    else:
        raise ValueError("side must be 'call' or 'put'")
    return payoff * _default_weight(curve, quote.expiry)


def recovery_swap_pv(curve: CreditCurve, params: RecoveryParams, quote: RecoveryQuote) -> float:
    """PV of receiving realised recovery against the strike, contingent on default."""
    return (norm_cdf(params.a) - quote.strike) * _default_weight(curve, quote.expiry)


def _ks(samples: np.ndarray, a: float, b: float) -> float:
    params = RecoveryParams(a, b)
    return stats.kstest(samples, lambda x: recovery_cdf(params, x)).statistic


def _best_b(samples: np.ndarray, a: float, grid: int = 199) -> tuple[float, float]:
    bs = np.linspace(B_MIN, B_MAX, grid)
    ks = np.array([_ks(samples, a, b) for b in bs])
    i = int(np.argmin(ks))
    lo = bs[max(i - 1, 0)]
    hi = bs[min(i + 1, grid - 1)]
    res = optimize.minimize_scalar(lambda b: _ks(samples, a, b), bounds=(lo, hi),
                                   method="bounded", options={"xatol": 1e-5})
    if res.fun <= ks[i]:
        return float(res.x), float(res.fun)
    return float(bs[i]), float(ks[i])


def fit_params(samples, fixed_mean: float | None = None) -> FitResult:
    """Fit ``(a, b)`` by minimising the Kolmogorov-Smirnov distance to ``samples``.

    With ``fixed_mean`` the location is pinned at ``a = Phi^-1(mean)`` and
    only ``b`` is searched. Identical samples drive ``b`` to its lower bound,
    which is flagged in the result.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two samples")
    if np.any((x <= 0) | (x >= 1)):
        raise ValueError("samples must lie strictly inside (0, 1)")

    if fixed_mean is not None:
        a = norm_inv(fixed_mean)
        b, ks = _best_b(x, a)
    else:
        best = None
        for a0 in special.ndtri(np.linspace(0.02, 0.98, 25)):
            b0, ks0 = _best_b(x, float(a0), grid=41)
            if best is None or ks0 < best[2]:
                best = (float(a0), b0, ks0)
        a, b, ks = best

        def objective(p):
            if not B_MIN <= p[1] <= B_MAX:
                return 2.0
            return _ks(x, p[0], p[1])

        res = optimize.minimize(objective, [a, b], method="Nelder-Mead",
                                options={"xatol": 1e-6, "fatol": 1e-10})
        if res.fun < ks:
            a, b, ks = float(res.x[0]), float(res.x[1]), float(res.fun)
    return FitResult(RecoveryParams(a, b), ks, at_lower_bound=b <= B_MIN * 1.01)


def read_samples_csv(path) -> list[float]:
    """Read a one-column CSV of recovery fractions (header optional)."""
    out = []
    with Path(path).open(newline="") as fh:
        for row in csv.reader(fh):
            if not row or not row[0].strip():
                continue
            try:
                value = float(row[0])
            except ValueError:
                if out:
                    raise
                continue
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"recovery {value} outside [0, 1]")
            out.append(value)
    return out
