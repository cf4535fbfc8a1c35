"""
Vasicek recovery: densities, options and a fit to auction results
=================================================================

Recovery given default is modelled as R = Phi((a + b Z) / sqrt(1 - b^2)),
which keeps R in (0, 1), has mean Phi(a) and lets b set the width.
"""

# %%
import numpy as np

from cdsopt.recovery import (
    RecoveryParams,
    fit_params,
    recovery_call_expect,
    recovery_density,
    recovery_mean_var,
    recovery_put_expect,
)

# %%
# Three widths around a 20% mean. Wider distributions pile mass near zero.
xs = np.array([0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9])
print("x     " + " ".join(f"{x:7.2f}" for x in xs))
for b in (0.5, 0.6, 0.7):
    p = RecoveryParams.from_mean(0.2, b)
    mean, var = recovery_mean_var(p)
    print(f"b={b}  " + " ".join(f"{recovery_density(p, x):7.3f}" for x in xs)
          + f"   sd {np.sqrt(var):.3f}")

# %%
# Calls and puts on recovery come out of bivariate normal CDFs; parity is exact.
p = RecoveryParams(-0.842, 0.6)
for u in (0.1, 0.2, 0.5, 0.88):
    c, q = recovery_call_expect(p, u), recovery_put_expect(p, u)
    print(f"u={u:4.2f}  call {c:.6f}  put {q:.6f}  call-put-(mean-u) {c - q - (p.mean - u):+.1e}")

# %%
# Nine published auction recoveries, with the mean held at 17.5%.
samples = [0.83, 0.4125, 0.384, 0.015, 0.0175, 0.02375, 0.03, 0.0325, 0.04875]
fit = fit_params(samples, fixed_mean=0.175)
print(f"fitted b {fit.params.b:.3f} (a {fit.params.a:.3f}), KS distance {fit.ks_statistic:.3f}")
