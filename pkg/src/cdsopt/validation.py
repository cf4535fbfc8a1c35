"""Brute-force oracles for the closed-form pricers.

Each oracle reaches its number by a route that does not share code with the
pricer it checks: adaptive Simpson instead of Gauss quadrature, plain Monte
Carlo instead of bivariate normal CDFs or Black-76.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .curves import CreditCurve
from .index import (
    IndexState,
    IndexStrike,
    price_index_option,
    price_index_option_hy,
    x_tilde,
    y_tilde,
)
from .numerics import QuadratureRule, integrate_gaussian
from .recovery import RecoveryParams, recovery_call_expect, recovery_from_z, recovery_put_expect
from .single_name import OptionSpec, price_ko_running

__all__ = ["OracleReport", "oracle_black76", "oracle_recovery_mc", "oracle_index_terminal"]


@dataclass
class OracleReport:
    name: str
    closed_form: float
    oracle: float
    effort: int
    standard_error: float = 0.0

    @property
    def abs_err(self) -> float:
        return abs(self.closed_form - self.oracle)

    @property
    def rel_err(self) -> float:
        scale = abs(self.closed_form)
        return self.abs_err / scale if scale > 0 else self.abs_err

    def within(self, n_se: float = 3.0) -> bool:
        return self.abs_err <= n_se * self.standard_error

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(abs_err=self.abs_err, rel_err=self.rel_err)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def oracle_black76(curve: CreditCurve, spec: OptionSpec, sigma: float,
                   nodes: int = 256) -> OracleReport:
    """Integrate the running-strike payoff under the lognormal forward spread directly."""
    t_e = curve.time(spec.expiry)
    t_m = curve.time(spec.maturity)
    forward = curve.forward_par_spread(t_e, t_m)
    annuity = curve.forward_rpv01(t_e, t_m)
    sd = sigma * math.sqrt(t_e)
    s_k = spec.strike_running
    sign = 1.0 if spec.side == "payer" else -1.0

    def payoff(z):
        s = forward * math.exp(sd * z - 0.5 * sd * sd)
        return max(sign * (s - s_k), 0.0)

    rule = QuadratureRule(node_count=nodes, scheme="adaptive_simpson", z_bound=12.0)
    value = annuity * integrate_gaussian(payoff, rule)
    return OracleReport("black76", price_ko_running(curve, spec, sigma).premium, value, nodes)


def oracle_recovery_mc(params: RecoveryParams, u: float, n: int = 1_000_000,
                       seed: int = 12345, side: str = "call") -> OracleReport:
    """Monte Carlo estimate of ``E[(R-u)^+]`` (or the put) from simulated ``Z``."""
    if n < 10_000:
        raise ValueError("use at least 1e4 paths")
    rng = np.random.default_rng(seed)
    r = recovery_from_z(params, rng.standard_normal(n))
    if side == "call":
        pay = np.maximum(r - u, 0.0)
        closed = recovery_call_expect(params, u)
    else:
        pay = np.maximum(u - r, 0.0)
        closed = recovery_put_expect(params, u)
    return OracleReport(f"recovery_{side}", closed, float(pay.mean()), n,
                        float(pay.std(ddof=1) / math.sqrt(n)))


def oracle_index_terminal(state: IndexState, strike: IndexStrike, sigma: float,
                          n: int = 1_000_000, seed: int = 12345,
                          side: str = "payer") -> OracleReport:
    """Simulate the funded protection PV at expiry and average the exercise value.

    The PV is lognormal about ``X~`` in the strike-leg numeraire; the strike
    leg is deterministic in that numeraire.
    """
    x = x_tilde(state)
    y = y_tilde(state, strike)
    tau = state.t_expiry - state.t
    sd = sigma * math.sqrt(tau)
    rng = np.random.default_rng(seed)
    half = n // 2
    z = rng.standard_normal(half)
    z = np.concatenate([z, -z])
    x_t = x * np.exp(sd * z - 0.5 * sd * sd)
    pay = np.maximum(x_t - y, 0.0) if side == "payer" else np.maximum(y - x_t, 0.0)
    # antithetic pairs are not independent; estimate the error from pair means
    pair = 0.5 * (pay[:half] + pay[half:])
    pricer = price_index_option if state.quote_type == "spread" else price_index_option_hy
    closed = pricer(state, strike, sigma, side).premium
    return OracleReport(f"index_{side}", closed, float(pay.mean()), 2 * half,
                        float(pair.std(ddof=1) / math.sqrt(half)))

