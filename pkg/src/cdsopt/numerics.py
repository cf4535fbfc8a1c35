"""Normal distribution functions, Gaussian quadrature and bracketed root finding.

Everything here is scalar and pure. The bivariate normal uses Genz's
Gauss-Legendre decomposition of the Drezner-Wesolowsky integral, which is
accurate to roughly machine precision and is what the recovery put-call
parity checks rely on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import optimize, special

__all__ = [
    "QuadratureRule",
    "Bracket",
    "BracketError",
    "ConvergenceError",
    "norm_pdf",
    "norm_cdf",
    "norm_inv",
    "binorm_cdf",
    "integrate_gaussian",
    "adaptive_simpson",
    "find_root",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class BracketError(ValueError):
    """The objective does not change sign over the supplied bracket."""


class ConvergenceError(RuntimeError):
    """An iterative routine hit its iteration limit."""


@dataclass(frozen=True)
class QuadratureRule:
    """How to take expectations over a standard normal variable.

    ``gauss_hermite`` integrates the whole real line with probabilists'
    Hermite nodes. When an integral is restricted to a sub-interval (kinked
    payoffs are split at the exercise boundary) the same node count is used
    for Gauss-Legendre on the interval clipped to ``[-z_bound, z_bound]``.
    ``adaptive_simpson`` always works on the clipped interval.
    """

    node_count: int = 128
    scheme: str = "gauss_hermite"
    z_bound: float = 12.0

    def __post_init__(self):
        if self.scheme not in ("gauss_hermite", "adaptive_simpson"):
            raise ValueError(f"unknown quadrature scheme {self.scheme!r}")
        if self.node_count < 16:
            raise ValueError("node_count must be at least 16")
        if self.scheme == "adaptive_simpson" and self.z_bound < 6:
            raise ValueError("z_bound must be at least 6 for adaptive_simpson")


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty bracket [{self.lo}, {self.hi}]")


def norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / _SQRT_2PI


def norm_cdf(x: float) -> float:
    """Standard normal CDF, accurate to about 1e-16 absolute."""
    return float(special.ndtr(x))


def norm_inv(p: float) -> float:
    """Inverse standard normal CDF; ``p`` must lie strictly inside (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"norm_inv requires 0 < p < 1, got {p}")
    return float(special.ndtri(p))


@lru_cache(maxsize=None)
def _legendre_half(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    keep = x > 0
    return x[keep], w[keep]


def _bvn_upper(h: float, k: float, r: float) -> float:
    """P[X > h, Y > k] for a standard bivariate normal with correlation r.

    Port of A. Genz's BVNU (Statistics and Computing, 2004).
    """
    if h == math.inf or k == math.inf:
        return 0.0
    if h == -math.inf:
        return 1.0 if k == -math.inf else norm_cdf(-k)
    if k == -math.inf:
        return norm_cdf(-h)
    if r == 0.0:
        return norm_cdf(-h) * norm_cdf(-k)

    ar = abs(r)
    if ar < 0.3:
        xg, wg = _legendre_half(6)
    elif ar < 0.75:
        xg, wg = _legendre_half(12)
    else:
        xg, wg = _legendre_half(20)
    w = np.concatenate([wg, wg])
    x = np.concatenate([1.0 - xg, 1.0 + xg])
    tp = 2.0 * math.pi
    hk = h * k

    if ar < 0.925:
        hs = 0.5 * (h * h + k * k)
        asr = 0.5 * math.asin(r)
        sn = np.sin(asr * x)
        bvn = float(np.dot(np.exp((sn * hk - hs) / (1.0 - sn * sn)), w))
        return bvn * asr / tp + norm_cdf(-h) * norm_cdf(-k)

    if r < 0:
        k = -k
        hk = -hk
    bvn = 0.0
    if ar < 1.0:
        as_ = (1.0 - r) * (1.0 + r)
        a = math.sqrt(as_)
        bs = (h - k) ** 2
        asr = -0.5 * (bs / as_ + hk)
        c = (4.0 - hk) / 8.0
        d = (12.0 - hk) / 80.0
        if asr > -100:
            bvn = a * math.exp(asr) * (1 - c * (bs - as_) * (1 - d * bs) / 3 + c * d * as_ * as_)
        if hk > -100:
            b = math.sqrt(bs)
            sp = math.sqrt(tp) * norm_cdf(-b / a)
            bvn -= math.exp(-0.5 * hk) * sp * b * (1 - c * bs * (1 - d * bs) / 3)
        a *= 0.5
        xs = (a * x) ** 2
        asr_v = -0.5 * (bs / xs + hk)
        ix = asr_v > -100
        xs = xs[ix]
        sp_v = 1 + c * xs * (1 + 5 * d * xs)
        rs = np.sqrt(1 - xs)
        ep = np.exp(-(hk / 2) * xs / (1 + rs) ** 2) / rs
        bvn = (a * float(np.dot(np.exp(asr_v[ix]) * (sp_v - ep), w[ix])) - bvn) / tp
    if r > 0:
        return bvn + norm_cdf(-max(h, k))
    if h >= k:
        return -bvn
    if h < 0:
        lower = norm_cdf(k) - norm_cdf(h)
    else:
        lower = norm_cdf(-h) - norm_cdf(-k)
    return lower - bvn


def binorm_cdf(x: float, y: float, rho: float) -> float:
    """Bivariate standard normal CDF ``P[X <= x, Y <= y]`` with correlation ``rho``."""
    if not -1.0 <= rho <= 1.0:
        raise ValueError(f"correlation must lie in [-1, 1], got {rho}")
    if x == -math.inf or y == -math.inf:
        return 0.0
    if x == math.inf:
        return norm_cdf(y)
    if y == math.inf:
        return norm_cdf(x)
    if rho == 1.0:
        return norm_cdf(min(x, y))
    if rho == -1.0:
        return max(0.0, norm_cdf(x) - norm_cdf(-y))
    p = _bvn_upper(-x, -y, rho)
    return min(1.0, max(0.0, p))


@lru_cache(maxsize=None)
def _hermite_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    z, w = np.polynomial.hermite_e.hermegauss(n)
    return z, w / _SQRT_2PI


@lru_cache(maxsize=None)
def _legendre_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def gaussian_nodes(rule: QuadratureRule, lower: float = -math.inf,
                   upper: float = math.inf) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights such that ``sum(w * f(z))`` approximates
    ``E[f(Z) 1{lower < Z < upper}]`` for standard normal ``Z``.

    Only meaningful for ``gauss_hermite`` rules; the weights already include
    the normal density.
    """
    if lower == -math.inf and upper == math.inf:
        return _hermite_rule(rule.node_count)
    lo = max(lower, -rule.z_bound)
    hi = min(upper, rule.z_bound)
    if hi <= lo:
        return np.empty(0), np.empty(0)
    x, w = _legendre_rule(rule.node_count)
    half = 0.5 * (hi - lo)
    z = lo + half * (x + 1.0)
    return z, half * w * np.exp(-0.5 * z * z) / _SQRT_2PI


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-12, max_depth: int = 50,
                     panels: int = 16) -> float:
    """Adaptive Simpson integration of a scalar function over ``[a, b]``.

    The interval is cut into ``panels`` equal pieces first so narrow features
    near the middle are not missed by the initial five-point estimate.
    """
    if b <= a:
        return 0.0

    def simpson(fa, fm, fb, lo, hi):
        return (hi - lo) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(lo, hi, fa, fm, fb, whole, eps, depth):
        mid = 0.5 * (lo + hi)
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        flm = f(lm)
        frm = f(rm)
        left = simpson(fa, flm, fm, lo, mid)
        right = simpson(fm, frm, fb, mid, hi)
        delta = left + right - whole
        if depth <= 0:
            raise ConvergenceError("adaptive_simpson exceeded max_depth")
        if abs(delta) <= 15.0 * eps:
            return left + right + delta / 15.0
        return (recurse(lo, mid, fa, flm, fm, left, 0.5 * eps, depth - 1)
                + recurse(mid, hi, fm, frm, fb, right, 0.5 * eps, depth - 1))

    edges = np.linspace(a, b, panels + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        fa, fb = f(lo), f(hi)
        fm = f(0.5 * (lo + hi))
        total += recurse(lo, hi, fa, fm, fb, simpson(fa, fm, fb, lo, hi),
                         tol / panels, max_depth)
    return total


def integrate_gaussian(f: Callable, rule: QuadratureRule | None = None,
                       lower: float = -math.inf, upper: float = math.inf) -> float:
    """Expectation ``E[f(Z) 1{lower < Z < upper}]`` for ``Z ~ N(0, 1)``.

    ``f`` must accept a numpy array under ``gauss_hermite`` and a float under
    ``adaptive_simpson``.
    """
    rule = rule or QuadratureRule()
    if rule.scheme == "gauss_hermite":
        z, w = gaussian_nodes(rule, lower, upper)
        if z.size == 0:
            return 0.0
        values = np.asarray(f(z), dtype=float)
        if not np.all(np.isfinite(values)):
            raise FloatingPointError("integrand is not finite at a quadrature node")
        return float(np.dot(w, values))

    lo = max(lower, -rule.z_bound)
    hi = min(upper, rule.z_bound)

    def g(z):
        value = float(f(z))
        if not math.isfinite(value):
            raise FloatingPointError(f"integrand is not finite at z={z}")
        return value * norm_pdf(z)

    return adaptive_simpson(g, lo, hi, panels=max(16, rule.node_count // 8))


def find_root(f: Callable[[float], float], bracket: Bracket, tol: float = 1e-12,
              max_iter: int = 200) -> float:
    """Brent's method on a sign-changing bracket (bisection safeguarded)."""
    flo = f(bracket.lo)
    fhi = f(bracket.hi)
    if flo == 0.0:
        return bracket.lo
    if fhi == 0.0:
        return bracket.hi
    if np.sign(flo) == np.sign(fhi):
        raise BracketError(
            f"no sign change on [{bracket.lo}, {bracket.hi}]: "
            f"f(lo)={flo:.6g}, f(hi)={fhi:.6g}"
        )
    try:
        return optimize.brentq(f, bracket.lo, bracket.hi, xtol=tol, rtol=4 * np.finfo(float).eps,
                               maxiter=max_iter)
    except RuntimeError as exc:
        raise ConvergenceError(str(exc)) from exc
