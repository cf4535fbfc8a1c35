"""Additive factor copula coupling default and recovery.

Defaults and the latent recovery variable ``Z`` are conditionally
independent given a common factor ``A``. The conditional law of ``Z`` is
built from an arbitrary continuous CDF ``F`` shifted by ``beta * A`` and
renormalised through ``F_sharp``, so that ``Z`` given default is exactly
standard normal whatever ``beta`` and ``F`` are. Feeding ``Z`` through the
Vasicek map then gives recoveries whose distribution given default is the
single-name recovery distribution.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special, stats

from .numerics import Bracket, QuadratureRule, find_root, gaussian_nodes, norm_cdf, norm_inv
from .recovery import RecoveryParams, recovery_from_z

__all__ = [
    "FactorModel",
    "JointSample",
    "conditional_pd",
    "f_sharp",
    "f_sharp_inv",
    "conditional_recovery_cdf",
    "marginal_recovery_cdf",
    "sample_joint",
    "write_samples_csv",
]


@dataclass(frozen=True)
class FactorModel:
    """One-factor model for default and recovery.

    Args:
        pbar: unconditional default probability to the horizon.
        rho: factor loading of the Gaussian default model.
        beta: coupling of the recovery variable to the factor.
        base: continuous distribution used as ``F`` (scipy frozen distribution).
    """

    pbar: float
    rho: float
    beta: float
    base: object = field(default_factory=lambda: stats.norm())

    def __post_init__(self):
        if not 0.0 < self.pbar < 1.0:
            raise ValueError("pbar must lie in (0, 1)")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")
        if not math.isfinite(self.beta):
            raise ValueError("beta must be finite")


def conditional_pd(model: FactorModel, a):
    """``p(A) = Phi((Phi^-1(pbar) - sqrt(rho) A) / sqrt(1 - rho))``. Vectorised."""
    a = np.asarray(a, dtype=float)
    return special.ndtr((norm_inv(model.pbar) - math.sqrt(model.rho) * a)
                        / math.sqrt(1.0 - model.rho))


def _factor_weights(model: FactorModel, rule: QuadratureRule):
    a, w = gaussian_nodes(rule)
    pw = w * conditional_pd(model, a)
    # normalise by the quadrature's own E[p(A)] so F_sharp is an exact CDF
    return a, pw / pw.sum()


def f_sharp(model: FactorModel, z, rule: QuadratureRule | None = None):
    """``E[F(z - beta A) p(A)] / pbar``. Vectorised in ``z``."""
    rule = rule or QuadratureRule()
    a, pw = _factor_weights(model, rule)
    z = np.asarray(z, dtype=float)
    values = model.base.cdf(z[..., None] - model.beta * a) @ pw
    return values if values.ndim else float(values)


def f_sharp_inv(model: FactorModel, u: float, rule: QuadratureRule | None = None) -> float:
    """Solve ``f_sharp(z) = u`` for ``z``."""
    if not 0.0 < u < 1.0:
        raise ValueError("f_sharp_inv needs 0 < u < 1")
    rule = rule or QuadratureRule()
    lo, hi = -8.0, 8.0
    while f_sharp(model, lo, rule) > u:
        lo *= 2.0
    while f_sharp(model, hi, rule) < u:
        hi *= 2.0
    return find_root(lambda z: f_sharp(model, z, rule) - u, Bracket(lo, hi), tol=1e-14)


def conditional_recovery_cdf(model: FactorModel, z: float, a: float,
                             rule: QuadratureRule | None = None) -> float:
    """``P[Z < z | A = a] = F(F_sharp^-1(Phi(z)) - beta a)``."""
    u = norm_cdf(z)
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return 1.0
    return float(model.base.cdf(f_sharp_inv(model, u, rule) - model.beta * a))


def marginal_recovery_cdf(model: FactorModel, z: float,
                          rule: QuadratureRule | None = None,
                          check_rule: QuadratureRule | None = None) -> float:
    """``P[Z < z | default]`` by integrating the conditional CDF over the factor.

    ``check_rule`` (default 200 Hermite nodes) is the rule for the outer
    expectation, kept separate from the one that defines ``F_sharp``.
    """
    rule = rule or QuadratureRule()
    check_rule = check_rule or QuadratureRule(node_count=200)
    u = norm_cdf(z)
    if u <= 0.0 or u >= 1.0:
        return u
    z_inner = f_sharp_inv(model, u, rule)
    a, w = gaussian_nodes(check_rule)
    p = conditional_pd(model, a)
    return float(np.dot(w * p, model.base.cdf(z_inner - model.beta * a)) / np.dot(w, p))


@dataclass
class JointSample:
    """Simulated scenarios: one factor draw per row, ``names`` credits per row.

    ``z`` and ``recovery`` are NaN where the credit did not default.
    """

    factor: np.ndarray
    defaulted: np.ndarray
    z: np.ndarray
    recovery: np.ndarray

    def recoveries_given_default(self) -> np.ndarray:
        return self.recovery[self.defaulted]

    def z_given_default(self) -> np.ndarray:
        return self.z[self.defaulted]


def sample_joint(model: FactorModel, params: RecoveryParams, n: int, seed=None,
                 names: int = 1, rule: QuadratureRule | None = None,
                 rng: np.random.Generator | None = None) -> JointSample:
    """Simulate ``n`` factor scenarios of ``names`` conditionally independent credits.

    Given ``A`` a credit defaults with probability ``p(A)``; a defaulted credit
    draws ``X ~ F`` and sets ``Z = Phi^-1(F_sharp(X + beta A))``, which has the
    required conditional CDF ``F(F_sharp^-1(Phi(z)) - beta A)``.
    """
    if n < 1 or names < 1:
        raise ValueError("n and names must be positive")
    rng = rng if rng is not None else np.random.default_rng(seed)
    rule = rule or QuadratureRule()
    factor = rng.standard_normal(n)
    p = conditional_pd(model, factor)
    defaulted = rng.random((n, names)) < p[:, None]
    x = model.base.ppf(rng.random((n, names)))
    z = np.full((n, names), np.nan)
    rows, cols = np.nonzero(defaulted)
    shifted = x[rows, cols] + model.beta * factor[rows]
    z[rows, cols] = special.ndtri(np.clip(f_sharp(model, shifted, rule), 1e-300, 1 - 1e-16))
    recovery = np.full((n, names), np.nan)
    recovery[rows, cols] = recovery_from_z(params, z[rows, cols])
    return JointSample(factor, defaulted, z, recovery)


def write_samples_csv(sample: JointSample, path) -> None:
    """Write flattened (index, defaulted, recovery) rows; recovery is blank when alive."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "defaulted", "recovery"])
        flat_d = sample.defaulted.ravel()
        flat_r = sample.recovery.ravel()
        for i, (d, r) in enumerate(zip(flat_d, flat_r)):
            writer.writerow([i, int(d), f"{r:.10f}" if d else ""])
