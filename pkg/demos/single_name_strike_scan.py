"""
Knockout and no-knockout options across the running/upfront strike split
========================================================================

A CDS option struck at 500bp running can instead be struck at some running
spread plus an upfront amount of equal value. The prices are not the same:
the upfront part is a fixed cash amount while the running part is worth
less when the spread widens, so moving strike into the upfront cheapens
both payers and receivers.
"""

# %%
import numpy as np

from cdsopt import CreditCurve, OptionSpec, bp, calibrate_flat_rate, year_fraction
from cdsopt.recovery import RecoveryParams
from cdsopt.single_name import (
    calibrate_epsilon,
    price_ko_upfront_running,
    price_nko_upfront_running,
    upfront_equivalent,
)

valuation, expiry, maturity = "2009-11-09", "2010-03-20", "2014-12-20"
t_e = year_fraction(valuation, expiry)
t_m = year_fraction(valuation, maturity)

# %%
# Pick the flat rate so the forward risky annuity at 500bp is 3.723, using a
# quarterly premium leg.
r = calibrate_flat_rate(3.723, bp(500), 0.2, t_e, t_m, premium_leg="quarterly")
print(f"flat rate {r:.5f}")

rec = RecoveryParams(-0.842, 0.6)  # mean recovery 20%

# %%
# The hazard scaling epsilon makes the annuity numeraire consistent with the
# lognormal spread; it is calibrated once and reused for every strike.
for spot in (500, 2000):
    curve = CreditCurve(valuation, r, bp(spot), 0.2, premium_leg="quarterly")
    eps = calibrate_epsilon(curve, t_e, t_m, 1.0)
    print(f"\nspot {spot}bp: RPV01 {curve.forward_rpv01(t_e, t_m):.4f}, epsilon {eps:+.5f}")
    print(f"{'upfront':>8} {'running':>8} {'KO pay':>8} {'NKO pay':>8} {'KO rec':>8} {'NKO rec':>8}")
    for running in np.linspace(bp(spot), 0.0, 6):
        u = upfront_equivalent(curve, expiry, maturity, bp(spot) - running)
        row = []
        for side in ("payer", "receiver"):
            spec = OptionSpec(expiry, maturity, running, u, side)
            row.append(price_ko_upfront_running(curve, spec, 1.0, epsilon=eps).premium)
            row.append(price_nko_upfront_running(curve, spec, 1.0, rec=rec, epsilon=eps).premium)
        print(f"{u:8.4f} {running * 1e4:8.0f} " + " ".join(f"{v * 1e4:8.1f}" for v in row))

# %%
# The no-knockout receiver barely differs from the knockout one: its extra
# value is a recovery call struck at 1 - u_K, far out of the money when the
# mean recovery is 20%.
