import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdsopt.curves import CreditCurve, bp
from cdsopt.numerics import QuadratureRule
from cdsopt.recovery import RecoveryParams, recovery_call_expect
from cdsopt.single_name import (
    CalibrationError,
    OptionSpec,
    black76,
    calibrate_epsilon,
    price,
    price_ko_quoted,
    price_ko_running,
    price_ko_upfront_running,
    price_nko_running,
    price_nko_upfront_running,
    upfront_equivalent,
)

from conftest import EXPIRY, MATURITY, T_E, T_M, VALUATION


def phi(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def spec(running=0.0, upfront=0.0, side="payer", **kw):
    return OptionSpec(EXPIRY, MATURITY, running, upfront, side, **kw)


class TestOptionSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            spec(side="straddle")
        with pytest.raises(ValueError):
            OptionSpec(MATURITY, EXPIRY)
        with pytest.raises(ValueError):
            spec(running=-0.01)
        with pytest.raises(ValueError):
            spec(bp(100), strike_leg_convention="mid")


class TestRunning:
    def test_fig2_atm(self, fig2_curve):
        res = price_ko_running(fig2_curve, spec(bp(500)), 1.0)
        half = 0.5 * math.sqrt(T_E)
        assert half == pytest.approx(0.29954, abs=1e-5)
        assert res.premium == pytest.approx(3.723 * 0.05 * (phi(half) - phi(-half)), rel=1e-12)
        assert res.premium == pytest.approx(0.04383, abs=1e-5)
        assert res.d_plus == pytest.approx(half)
        assert res.delta == pytest.approx(phi(half))

    def test_zero_vol_atm(self, fig2_curve):
        assert price_ko_running(fig2_curve, spec(bp(500)), 1e-9).premium < 1e-10

    def test_deep_otm(self, fig2_curve):
        assert price_ko_running(fig2_curve, spec(bp(1e6)), 1.0).premium < 1e-12

    def test_errors(self, fig2_curve):
        with pytest.raises(ValueError):
            price_ko_running(fig2_curve, spec(0.0), 1.0)
        with pytest.raises(ValueError):
            price_ko_running(fig2_curve, spec(bp(500)), 0.0)

    def test_nko(self, fig2_curve):
        zero = CreditCurve(VALUATION, 0.03, 0.0, 0.2)
        assert price_nko_running(zero, spec(bp(10)), 0.5).premium == price_ko_running(zero, spec(bp(10)), 0.5).premium
        ko = price_ko_running(fig2_curve, spec(bp(500)), 1.0).premium
        nko = price_nko_running(fig2_curve, spec(bp(500)), 1.0).premium
        assert nko - ko == pytest.approx(fig2_curve.default_pv(0, T_E), rel=1e-14)
        rec = price_nko_running(fig2_curve, spec(bp(500), side="receiver"), 1.0).premium
        assert rec == price_ko_running(fig2_curve, spec(bp(500), side="receiver"), 1.0).premium

    @settings(max_examples=200)
    @given(st.floats(0.0, 0.3), st.floats(1e-3, 0.5), st.floats(1e-3, 0.5), st.floats(0.05, 2.0))
    def test_parity(self, r, s0, sk, sigma):
        c = CreditCurve(VALUATION, r, s0, 0.4)
        p = price_ko_running(c, spec(sk), sigma)
        q = price_ko_running(c, spec(sk, side="receiver"), sigma)
        v = c.forward_rpv01(T_E, T_M)
        assert p.premium - q.premium == pytest.approx((p.forward - sk) * v, abs=1e-12)

    def test_black76_helper(self):
        value, dp, dm = black76(0.05, 0.05, 0.4, 1.0, 2.0)
        assert value == pytest.approx(2 * 0.05 * (phi(0.2) - phi(-0.2)))
        assert dp - dm == pytest.approx(0.4)


class TestEpsilon:
    def test_fig2(self, fig2_curve):
        eps = calibrate_epsilon(fig2_curve, T_E, T_M, 1.0)
        assert abs(eps) < 0.15
        assert eps == pytest.approx(-0.0323353501, abs=1e-9)

    def test_degenerate_vol(self):
        # with a continuous annuity the flat curve already satisfies the identity
        c = CreditCurve(VALUATION, 0.03, bp(500), 0.2)
        assert abs(calibrate_epsilon(c, T_E, T_M, 1e-4)) < 1e-8

    def test_bound_violation(self):
        @dataclasses.dataclass(frozen=True)
        class Inflated(CreditCurve):
            def forward_rpv01(self, t1, t2):
                return 10.0 * super().forward_rpv01(t1, t2)

        c = Inflated(VALUATION, 0.03, bp(500), 0.2)
        with pytest.raises(CalibrationError):
            calibrate_epsilon(c, T_E, T_M, 1.0)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.0, 0.08), st.floats(bp(50), bp(3000)), st.floats(0.2, 1.5))
    def test_residual(self, r, s0, sigma):
        c = CreditCurve(VALUATION, r, s0, 0.4)
        eps = calibrate_epsilon(c, T_E, T_M, sigma)
        fwd = c.forward_par_spread(T_E, T_M)
        z, w = np.polynomial.hermite_e.hermegauss(200)
        s = fwd * np.exp(sigma * math.sqrt(T_E) * z - 0.5 * sigma ** 2 * T_E)
        g = r + (1 + eps) * s / 0.6
        lhs = np.dot(w, g / -np.expm1(-g * (T_M - T_E))) / math.sqrt(2 * math.pi)
        assert lhs == pytest.approx(c.risky_discount(T_E) / c.forward_rpv01(T_E, T_M), rel=1e-9)


class TestUpfrontRunning:
    def test_reduces_to_black(self, fig2_curve):
        for side in ("payer", "receiver"):
            s = spec(bp(400), side=side)
            q = price_ko_upfront_running(fig2_curve, s, 1.0)
            assert q.premium == pytest.approx(price_ko_running(fig2_curve, s, 1.0).premium, rel=1e-6)

    def test_d_and_delta_match_black(self, fig2_curve):
        s = spec(bp(400))
        q = price_ko_upfront_running(fig2_curve, s, 1.0)
        b = price_ko_running(fig2_curve, s, 1.0)
        assert q.d_minus == pytest.approx(b.d_minus, abs=1e-9)
        assert q.delta == pytest.approx(b.delta, abs=1e-6)

    def test_adaptive_rule_agrees(self, fig2_curve):
        s = spec(bp(200), 0.07446)
        g = price_ko_upfront_running(fig2_curve, s, 1.0)
        a = price_ko_upfront_running(fig2_curve, s, 1.0, QuadratureRule(256, "adaptive_simpson"), g.epsilon_used)
        assert a.premium == pytest.approx(g.premium, rel=1e-8)

    def test_upfront_parity(self, fig2_curve):
        u = upfront_equivalent(fig2_curve, EXPIRY, MATURITY, bp(300))
        p = price_ko_upfront_running(fig2_curve, spec(bp(200), u), 1.0).premium
        q = price_ko_upfront_running(fig2_curve, spec(bp(200), u, "receiver"), 1.0).premium
        v = fig2_curve.forward_rpv01(T_E, T_M)
        assert p - q == pytest.approx((0.05 - bp(200)) * v - u * fig2_curve.risky_discount(T_E), abs=1e-10)

    def test_fig2_gaps(self, fig2_curve):
        running = price_ko_upfront_running(fig2_curve, spec(bp(500)), 1.0)
        u = upfront_equivalent(fig2_curve, EXPIRY, MATURITY, bp(500))
        upfront = price_ko_upfront_running(fig2_curve, spec(0.0, u), 1.0)
        assert (upfront.premium - running.premium) * 1e4 == pytest.approx(-35, abs=10)
        r_run = price_ko_upfront_running(fig2_curve, spec(bp(500), side="receiver"), 1.0)
        r_up = price_ko_upfront_running(fig2_curve, spec(0.0, u, "receiver"), 1.0)
        assert (r_up.premium - r_run.premium) * 1e4 == pytest.approx(-100, abs=25)

    @pytest.mark.parametrize("side", ["payer", "receiver"])
    def test_monotone_in_total_strike_and_vol(self, fig2_curve, side):
        prices = [price_ko_upfront_running(fig2_curve, spec(bp(100), u, side), 1.0).premium
                  for u in (0.0, 0.05, 0.1, 0.15)]
        diffs = np.diff(prices)
        assert np.all(diffs <= 0) if side == "payer" else np.all(diffs >= 0)
        by_vol = [price_ko_upfront_running(fig2_curve, spec(bp(100), 0.1, side), v).premium
                  for v in (0.3, 0.6, 1.0, 1.4)]
        assert np.all(np.diff(by_vol) >= 0)


class TestQuoted:
    def test_conventions_fixture(self, fig2_curve):
        kw = dict(coupon=bp(100))
        strike = price_ko_quoted(fig2_curve, spec(bp(500), **kw), 1.0).premium
        spot = price_ko_quoted(fig2_curve, spec(bp(500), strike_leg_convention="spot_at_expiry", **kw), 1.0).premium
        assert strike == pytest.approx(0.03890358944, rel=1e-8)
        assert spot == pytest.approx(0.04383353269, rel=1e-8)
        assert spot - strike == pytest.approx(0.00492994325, rel=1e-6)

    def test_zero_coupon_spot_convention_is_running(self, fig2_curve):
        s = spec(bp(300), strike_leg_convention="spot_at_expiry")
        assert price_ko_quoted(fig2_curve, s, 1.0).premium == pytest.approx(
            price_ko_upfront_running(fig2_curve, spec(bp(300)), 1.0).premium, rel=1e-12)

    def test_zero_coupon_strike_convention_is_upfront(self, fig2_curve):
        eps = calibrate_epsilon(fig2_curve, T_E, T_M, 1.0)
        u = bp(300) * fig2_curve.with_epsilon(eps).dv01(bp(300), T_M - T_E)
        assert price_ko_quoted(fig2_curve, spec(bp(300)), 1.0).premium == pytest.approx(
            price_ko_upfront_running(fig2_curve, spec(0.0, u), 1.0).premium, rel=1e-12)

    def test_strike_at_coupon(self, fig2_curve):
        res = price_ko_quoted(fig2_curve, spec(bp(100), coupon=bp(100)), 1.0)
        assert res.diagnostics["strike_leg"] == 0.0
        assert res.premium > 0


class TestNoKnockout:
    def test_receiver_gain(self):
        # struck at 12% upfront, a 92% recovery leaves the receiver 4% ahead
        sharp = RecoveryParams.from_mean(0.92, 1e-6)
        assert recovery_call_expect(sharp, 1.0 - 0.12) == pytest.approx(0.04, abs=1e-6)

    def test_zero_upfront_adds_fep(self, fig2_curve, fig_recovery):
        s = spec(bp(400))
        nko = price_nko_upfront_running(fig2_curve, s, 1.0, rec=fig_recovery).premium
        # the embedded put pays at expiry, the running FEP at default
        assert nko == pytest.approx(price_nko_running(fig2_curve, s, 1.0).premium, rel=1e-2)

    def test_fig2_receiver_gap(self, fig2_curve, fig_recovery):
        worst = 0.0
        for run in np.linspace(bp(500), 0.0, 6):
            u = upfront_equivalent(fig2_curve, EXPIRY, MATURITY, bp(500) - run)
            s = spec(run, u, "receiver")
            gap = (price_nko_upfront_running(fig2_curve, s, 1.0, rec=fig_recovery).premium
                   - price_ko_upfront_running(fig2_curve, s, 1.0).premium)
            worst = max(worst, gap)
            assert gap >= 0
        assert worst * 1e4 < 0.1

    def test_needs_recovery(self, fig2_curve):
        with pytest.raises(ValueError):
            price_nko_upfront_running(fig2_curve, spec(bp(400), 0.02), 1.0)


class TestDispatch:
    def test_routes(self, fig2_curve, fig_recovery):
        assert price(fig2_curve, spec(bp(400)), 1.0).premium == price_ko_running(fig2_curve, spec(bp(400)), 1.0).premium
        s = spec(bp(400), knockout=False)
        assert price(fig2_curve, s, 1.0).premium == price_nko_running(fig2_curve, s, 1.0).premium
        s = spec(bp(200), 0.05, knockout=False)
        assert price(fig2_curve, s, 1.0, rec=fig_recovery).premium == pytest.approx(
            price_nko_upfront_running(fig2_curve, s, 1.0, rec=fig_recovery).premium)
