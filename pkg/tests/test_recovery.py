import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from cdsopt.curves import CreditCurve
from cdsopt.numerics import norm_cdf, norm_pdf
from cdsopt.recovery import (
    RecoveryParams,
    RecoveryQuote,
    fit_params,
    read_samples_csv,
    recovery_call_expect,
    recovery_cdf,
    recovery_density,
    recovery_from_z,
    recovery_mean_var,
    recovery_option_pv,
    recovery_put_expect,
    recovery_swap_pv,
)

from conftest import EXPIRY, VALUATION

HY9 = [0.83, 0.4125, 0.384, 0.015, 0.0175, 0.02375, 0.03, 0.0325, 0.04875]

params_st = st.builds(RecoveryParams, st.floats(-3, 3), st.floats(0.01, 0.99))


class TestParams:
    @pytest.mark.parametrize("b", [0.0, 1.0, -0.2, 1.2])
    def test_width_bounds(self, b):
        with pytest.raises(ValueError):
            RecoveryParams(-0.842, b)

    def test_mean(self):
        mean, var = recovery_mean_var(RecoveryParams(-0.842, 0.6))
        assert mean == pytest.approx(0.200, abs=5e-4)
        assert RecoveryParams.from_mean(0.2, 0.5).mean == pytest.approx(0.2, abs=1e-14)

    def test_variance_limits(self):
        assert recovery_mean_var(RecoveryParams(-0.842, 1e-5))[1] < 1e-10
        _, var = recovery_mean_var(RecoveryParams(-0.842, 0.1))
        assert math.sqrt(var) == pytest.approx(norm_pdf(-0.842) * 0.1, rel=0.05)

    def test_variance_against_simulation(self):
        p = RecoveryParams(-0.842, 0.1)
        r = recovery_from_z(p, np.random.default_rng(1).standard_normal(1_000_000))
        _, var = recovery_mean_var(p)
        assert math.sqrt(var) == pytest.approx(r.std(), rel=5e-3)
        assert math.sqrt(var) == pytest.approx(0.0280, rel=0.05)


class TestDensity:
    def test_support(self):
        p = RecoveryParams(-0.842, 0.6)
        assert recovery_density(p, 0.0) == 0.0
        assert recovery_density(p, 1.0) == 0.0
        assert recovery_density(p, 1.5) == 0.0

    @pytest.mark.parametrize("b", [0.5, 0.6, 0.7])
    def test_integrates_to_one(self, b):
        from scipy import integrate
        p = RecoveryParams(-0.842, b)
        total = integrate.quad(lambda x: recovery_density(p, x), 0, 1, limit=200, points=[1e-6, 1e-3, 0.2])[0]
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_mode_below_mean(self):
        p = RecoveryParams(-0.842, 0.7)
        xs = np.linspace(1e-4, 1 - 1e-4, 20001)
        mode = xs[np.argmax([recovery_density(p, x) for x in xs])]
        assert mode < 0.2

    def test_cdf_matches_density(self):
        p = RecoveryParams(-0.842, 0.6)
        from scipy import integrate
        for x in (0.05, 0.2, 0.6):
            assert recovery_cdf(p, x) == pytest.approx(integrate.quad(lambda y: recovery_density(p, y), 0, x, limit=200)[0], abs=1e-8)

    def test_cdf_against_simulation(self):
        p = RecoveryParams(-0.842, 0.6)
        r = recovery_from_z(p, np.random.default_rng(2).standard_normal(100_000))
        assert stats.kstest(r, lambda x: recovery_cdf(p, x)).pvalue > 0.01


class TestExpectations:
    def test_limits(self):
        p = RecoveryParams(-0.842, 0.6)
        assert recovery_call_expect(p, 1e-15) == pytest.approx(norm_cdf(-0.842), abs=1e-12)
        assert recovery_call_expect(p, 1 - 1e-15) < 1e-12
        assert recovery_put_expect(p, 1e-15) < 1e-12
        assert recovery_put_expect(p, 1 - 1e-15) == pytest.approx(1 - norm_cdf(-0.842), abs=1e-12)
        assert recovery_call_expect(p, 0.0) == pytest.approx(norm_cdf(-0.842))
        assert recovery_put_expect(p, 1.0) == pytest.approx(1 - norm_cdf(-0.842))

    def test_deep_otm_call(self):
        p = RecoveryParams(-0.842, 0.6)
        value = recovery_call_expect(p, 0.88)
        assert 0 < value < 1e-3
        r = recovery_from_z(p, np.random.default_rng(3).standard_normal(1_000_000))
        pay = np.maximum(r - 0.88, 0)
        assert abs(value - pay.mean()) < 3 * pay.std() / 1e3

    def test_parity_fixed(self):
        p = RecoveryParams(-0.842, 0.6)
        assert recovery_call_expect(p, 0.5) - recovery_put_expect(p, 0.5) == pytest.approx(norm_cdf(-0.842) - 0.5, abs=1e-12)

    @settings(max_examples=300)
    @given(params_st, st.floats(1e-6, 1 - 1e-6))
    def test_parity(self, p, u):
        assert recovery_call_expect(p, u) - recovery_put_expect(p, u) == pytest.approx(p.mean - u, abs=1e-12)

    @settings(max_examples=100)
    @given(params_st, st.floats(0.01, 0.98), st.floats(0.001, 0.01))
    def test_call_decreasing_convex(self, p, u, h):
        c0, c1, c2 = (recovery_call_expect(p, u + k * h) for k in range(3))
        assert c1 <= c0 + 1e-15
        assert c0 - 2 * c1 + c2 >= -1e-12


class TestContracts:
    def test_zero_hazard(self):
        c = CreditCurve(VALUATION, 0.03, 0.0, 0.2)
        q = RecoveryQuote(0.3, EXPIRY)
        p = RecoveryParams(-0.842, 0.6)
        assert recovery_option_pv(c, p, q, "call") == 0.0
        assert recovery_swap_pv(c, p, q) == 0.0

    def test_fig2_values(self, fig2_curve, fig_recovery):
        call = recovery_option_pv(fig2_curve, fig_recovery, RecoveryQuote(0.88, EXPIRY), "call")
        assert 0 < call * 1e4 < 0.1
        swap = recovery_swap_pv(fig2_curve, fig_recovery, RecoveryQuote(0.2, EXPIRY))
        assert abs(swap) < 5e-4
        atm = RecoveryQuote(fig_recovery.mean, EXPIRY)
        assert recovery_swap_pv(fig2_curve, fig_recovery, atm) == pytest.approx(0.0, abs=1e-16)

    def test_swap_parity(self, fig2_curve, fig_recovery):
        q = RecoveryQuote(0.35, EXPIRY)
        diff = recovery_option_pv(fig2_curve, fig_recovery, q, "call") - recovery_option_pv(fig2_curve, fig_recovery, q, "put")
        assert diff == pytest.approx(recovery_swap_pv(fig2_curve, fig_recovery, q), abs=1e-15)

    def test_bad_side(self, fig2_curve, fig_recovery):
        with pytest.raises(ValueError):
            recovery_option_pv(fig2_curve, fig_recovery, RecoveryQuote(0.3, EXPIRY), "straddle")


class TestFit:
    def test_hy9(self):
        res = fit_params(HY9, fixed_mean=0.175)
        assert 0.60 <= res.params.b <= 0.90
        assert res.params.mean == pytest.approx(0.175)
        # no grid point does better
        for b in np.linspace(0.01, 0.99, 99):
            ks = stats.kstest(HY9, lambda x: recovery_cdf(RecoveryParams.from_mean(0.175, b), x)).statistic
            assert ks >= res.ks_statistic - 1e-12

    def test_point_mass(self):
        res = fit_params([0.2] * 5, fixed_mean=0.2)
        assert res.at_lower_bound

    def test_two_samples(self):
        res = fit_params([0.1, 0.3])
        assert 0.1 < res.params.mean < 0.3

    def test_recovers_simulated_params(self):
        truth = RecoveryParams(-0.5, 0.5)
        x = recovery_from_z(truth, np.random.default_rng(4).standard_normal(2000))
        res = fit_params(x)
        assert res.params.a == pytest.approx(-0.5, abs=0.1)
        assert res.params.b == pytest.approx(0.5, abs=0.1)

    def test_bad_samples(self):
        with pytest.raises(ValueError):
            fit_params([0.2])
        with pytest.raises(ValueError):
            fit_params([0.2, 1.0])

    def test_read_csv(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("recovery\n0.1\n\n0.25\n")
        assert read_samples_csv(path) == [0.1, 0.25]
        path.write_text("0.1\n1.4\n")
        with pytest.raises(ValueError):
            read_samples_csv(path)
