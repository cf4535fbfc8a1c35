"""
Index options on the fully-funded protection PV
===============================================

An index payer is an option to buy protection on the surviving names plus
the losses already accrued. Valuing it as Black-76 on the PV of a
fully-funded long-protection position (X) against the strike-leg PV (Y)
keeps both sides positive and tradable, so defaults before expiry, even
the loss of every name, need no special handling.
"""

# %%
from cdsopt import IndexState, IndexStrike, bp
from cdsopt.index import implied_pv_vol, price_index_option, price_index_option_hy, x_tilde, y_tilde

valuation, expiry, maturity = "2009-11-09", "2010-03-20", "2014-12-20"

ig = IndexState(original_names=125, names_at_strike=125, names_now=125, accrued_loss=0.0,
                coupon=bp(100), quote=bp(100), valuation_date=valuation, expiry=expiry,
                maturity=maturity, marking_recovery=0.4, riskfree_rate=0.03)
print(f"IG: X = {x_tilde(ig):.5f}")
for k in (60, 80, 100, 120, 140):
    strike = IndexStrike(spread=bp(k))
    pay = price_index_option(ig, strike, 0.5)
    rec = price_index_option(ig, strike, 0.5, "receiver")
    vol = implied_pv_vol(ig, strike, pay.premium)
    print(f"  {k:4d}bp  Y {y_tilde(ig, strike):.5f}  payer {pay.premium * 1e4:7.2f}bp  "
          f"receiver {rec.premium * 1e4:7.2f}bp  delta {pay.delta:.3f}  implied {vol:.4f}")

# %%
# High-yield trades on price. Here one credit event has not yet auctioned:
# 100 names in the default leg but 99 in the coupon leg.
hy = IndexState(original_names=100, names_at_strike=99, names_now=99, default_leg_names=100,
                accrued_loss=0.0, coupon=bp(500), quote=93.25, quote_type="price",
                valuation_date=valuation, expiry=expiry, maturity=maturity,
                marking_recovery=0.3, riskfree_rate=0.03)
print(f"\nHY: implied spread {hy.spread * 1e4:.0f}bp, X = {x_tilde(hy):.4f}")
for px in (88, 93.25, 98):
    res = price_index_option_hy(hy, IndexStrike.from_price(px), 0.3)
    print(f"  strike {px:6.2f}  payer {res.premium * 1e4:7.1f}bp")

# %%
# Every name defaulted: the spread term drops out and the payer is worth the
# accrued loss less the strike leg.
gone = IndexState(125, 125, 0, 0.6, bp(100), bp(100), valuation, expiry, maturity,
                  marking_recovery=0.4, riskfree_rate=0.03)
res = price_index_option(gone, IndexStrike(spread=bp(100)), 0.5)
print(f"\nall defaulted: X = {res.diagnostics['x_tilde']:.4f}, payer {res.premium:.4f}")
