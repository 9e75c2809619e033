import math
import statistics

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtri

from rqmcbench import models as M


class TestInvNormal:
    def test_median(self):
        assert M.inv_normal(0.5) == 0.0

    def test_quantile_975(self):
        assert M.inv_normal(0.975) == pytest.approx(1.959964, abs=1e-5)

    @given(st.floats(1e-6, 1 - 1e-6))
    @settings(max_examples=200)
    def test_antisymmetry(self, u):
        # bounded away from 0/1: for u ~ 1e-12 the rounding of the input
        # expression 1-u alone already moves the quantile by ~1e-6
        assert M.inv_normal(1 - u) == pytest.approx(-M.inv_normal(u), abs=1e-9)

    def test_absolute_error_bound(self):
        # contract: < 1.2e-9 over the clamped domain, incl. deep tails
        grids = [
            np.linspace(2.0**-53, 1 - 2.0**-53, 400001),
            np.geomspace(2.0**-53, 0.06, 120000),
            1 - np.geomspace(2.0**-53, 0.06, 120000),
        ]
        for g in grids:
            assert np.abs(M.inv_normal(g) - ndtri(g)).max() < 1.2e-9

    def test_against_stdlib_oracle(self):
        nd = statistics.NormalDist()
        for u in (0.001, 0.0465, 0.3, 0.77, 0.9999):
            assert M.inv_normal(u) == pytest.approx(nd.inv_cdf(u), abs=1.2e-9)

    def test_clamping_keeps_output_finite(self):
        assert math.isfinite(M.inv_normal(0.0))
        assert math.isfinite(M.inv_normal(1.0))
        assert M.inv_normal(0.0) == -M.inv_normal(1.0)


class TestYieldCurve:
    def test_knot_values(self):
        curve = M.default_curve()
        assert M.spline_rate(curve, 0.5) == pytest.approx(0.14, abs=1e-12)
        assert M.spline_rate(curve, 5.0) == pytest.approx(0.89, abs=1e-12)

    def test_affine_curve_reproduced(self):
        t = np.array([0.5, 1.0, 2.0, 4.0, 8.0])
        curve = M.YieldCurve(t, 0.3 + 0.2 * t)
        for mid in (0.75, 1.5, 3.0, 6.0):
            assert M.spline_rate(curve, mid) == pytest.approx(0.3 + 0.2 * mid, abs=1e-12)

    def test_no_extrapolation(self):
        curve = M.default_curve()
        with pytest.raises(ValueError):
            M.spline_rate(curve, 31.0)
        with pytest.raises(ValueError):
            M.spline_rate(curve, 0.01)

    def test_validation(self):
        with pytest.raises(ValueError):
            M.YieldCurve(np.array([1.0, 1.0]), np.array([0.1, 0.2]))
        with pytest.raises(ValueError):
            M.YieldCurve(np.array([1.0]), np.array([0.1]))

    def test_repo_data_file_matches_package_data(self, tmp_path):
        repo = M.load_yield_curve("data/treasury_2012-02-24.csv")
        packaged = M.default_curve()
        assert np.array_equal(repo.tenors, packaged.tenors)
        assert np.array_equal(repo.rates, packaged.rates)

    def test_loader_rejects_wrong_header(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("years,percent\n1,0.5\n")
        with pytest.raises(ValueError):
            M.load_yield_curve(p)


class TestBondPrices:
    def test_flat_zero_curve(self):
        curve = M.YieldCurve(np.array([0.1, 40.0]), np.array([0.0, 0.0]))
        assert np.allclose(M.bond_prices(curve, 0.5, 5.5), 1.0, atol=0)

    def test_flat_one_percent(self):
        curve = M.YieldCurve(np.array([0.1, 40.0]), np.array([1.0, 1.0]))
        b = M.bond_prices(curve, 0.5, 5.5)
        assert b[0] == pytest.approx(math.exp(-0.005), abs=1e-12)

    def test_table_knot_bond(self):
        b = M.bond_prices(M.default_curve(), 0.5, 0.5)
        assert b[0] == pytest.approx(math.exp(-0.0007), abs=1e-12)

    def test_bad_horizon(self):
        with pytest.raises(ValueError):
            M.bond_prices(M.default_curve(), 0.5, 5.3)


class TestInitLibor:
    def test_flat_curve_closed_form(self):
        curve = M.YieldCurve(np.array([0.1, 40.0]), np.array([1.0, 1.0]))
        rates = M.init_libor(M.bond_prices(curve, 0.5, 5.5), 0.5)
        assert np.allclose(rates, (math.exp(0.005) - 1) / 0.5, atol=1e-12)
        assert rates[0] == pytest.approx(0.01002504, abs=1e-8)

    def test_zero_curve(self):
        curve = M.YieldCurve(np.array([0.1, 40.0]), np.array([0.0, 0.0]))
        assert np.allclose(M.init_libor(M.bond_prices(curve, 0.5, 5.5), 0.5), 0.0, atol=0)

    def test_negative_rates_pass_through(self):
        b = np.array([0.99, 1.01, 1.0])  # increasing then flat: negative forwards
        rates = M.init_libor(b, 0.5)
        assert rates[0] < 0

    def test_nonpositive_bond_rejected(self):
        with pytest.raises(ValueError):
            M.init_libor(np.array([1.0, -0.5]), 0.5)


class TestLiborEuler:
    def test_sigma_zero_keeps_rates(self):
        cfg = M.LiborConfig(sigma=0.0)
        l0 = np.linspace(0.01, 0.02, cfg.steps)
        terminal, fixings = M.libor_euler_path(l0, cfg, np.zeros(cfg.steps))
        assert terminal == l0[-1]
        assert np.array_equal(fixings, l0)

    def test_single_step_drift_by_hand(self):
        cfg = M.LiborConfig(maturity=0.5)
        terminal, _ = M.libor_euler_path(np.array([0.01]), cfg, np.array([0.0]))
        expected = 0.01 * (1 + 0.5 * (0.5 * 0.01 * 0.0016) / 1.005)
        assert terminal == pytest.approx(expected, abs=1e-18)

    def test_antithetic_pairs_reduce_variance(self):
        cfg = M.LiborConfig()
        model = M.LiborModel(cfg)
        rng = np.random.default_rng(8)
        z = rng.standard_normal((10000, cfg.steps))
        plain = np.empty(10000)
        anti = np.empty(10000)
        for i in range(10000):
            t1, f1 = M.libor_euler_path(model.initial_rates, cfg, z[i])
            t2, f2 = M.libor_euler_path(model.initial_rates, cfg, -z[i])
            p1 = M.caplet_discounted_payoff(t1, f1, cfg, model.front_rate)
            p2 = M.caplet_discounted_payoff(t2, f2, cfg, model.front_rate)
            plain[i] = p1
            anti[i] = 0.5 * (p1 + p2)
        assert anti.var() < plain.var()

    def test_shape_validation(self):
        cfg = M.LiborConfig()
        with pytest.raises(ValueError):
            M.libor_euler_path(np.zeros(3), cfg, np.zeros(10))


class TestCapletPayoff:
    def test_at_the_money_is_zero(self):
        cfg = M.LiborConfig()
        fix = np.full(10, 0.01)
        assert M.caplet_discounted_payoff(0.01, fix, cfg, 0.002) == 0.0

    def test_time_t_value_by_hand(self):
        cfg = M.LiborConfig()
        fix = np.zeros(10)
        fix[-1] = 0.02
        got = M.caplet_discounted_payoff(0.02, fix, cfg, 0.0)
        assert got == pytest.approx(0.5 * 0.01 / 1.01, abs=1e-15)

    def test_zero_strike_zero_vol_flat_zero_curve(self):
        curve = M.YieldCurve(np.array([0.1, 40.0]), np.array([0.0, 0.0]))
        cfg = M.LiborConfig(sigma=0.0, strike=1e-12)
        model = M.LiborModel(cfg, curve)
        assert model.payoffs(np.full((1, 10), 0.5))[0] == pytest.approx(0.0, abs=1e-15)


class TestBlackCaplet:
    def test_degenerate_vol_limit(self):
        cfg = M.LiborConfig(sigma=1e-12)
        price = M.black_caplet(cfg, 0.02, 0.95)
        assert price == pytest.approx(0.5 * 0.95 * 0.01, rel=1e-9)

    def test_at_the_money_simplification(self):
        cfg = M.LiborConfig()
        got = M.black_caplet(cfg, cfg.strike, 0.9)
        half_vol = 0.5 * cfg.sigma * math.sqrt(cfg.maturity)
        expected = 0.5 * 0.9 * cfg.strike * (2 * M.norm_cdf(half_vol) - 1)
        assert got == pytest.approx(expected, abs=1e-15)

    def test_sigma_prefactor_variant(self):
        cfg = M.LiborConfig()
        ratio = M.black_caplet(cfg, 0.02, 0.95, sigma_prefactor=True) / M.black_caplet(
            cfg, 0.02, 0.95
        )
        assert ratio == pytest.approx(cfg.sigma / cfg.accrual, rel=1e-12)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            M.black_caplet(M.LiborConfig(), -0.01, 0.9)


class TestLiborModel:
    def test_dimension_contract(self):
        assert M.LiborModel().dim == 10

    def test_kernel_matches_pathwise_python(self):
        model = M.LiborModel()
        cfg = model.config
        rng = np.random.default_rng(4)
        u = rng.random((64, cfg.steps))
        kernel = model.payoffs(u)
        for i in range(64):
            z = M.inv_normal(u[i])
            t, f = M.libor_euler_path(model.initial_rates, cfg, z)
            expected = M.caplet_discounted_payoff(t, f, cfg, model.front_rate)
            assert kernel[i] == pytest.approx(expected, abs=1e-16)


def mbs_pv_reference(xi, cfg):
    """Straight-loop oracle: every product/sum written out explicitly."""
    months = cfg.months
    rates = [cfg.initial_rate]
    for k in range(1, months + 1):
        rates.append(cfg.k0 * math.exp(xi[k - 1]) * rates[-1])
    pv = 0.0
    for k in range(1, months + 1):
        u_k = 1.0
        for j in range(k):
            u_k /= 1.0 + rates[j]
        r_k = 1.0
        for j in range(1, k):
            w_j = cfg.k1 + cfg.k2 * math.atan(cfg.k3 * rates[j] + cfg.k4)
            r_k *= 1.0 - w_j
        w_k = cfg.k1 + cfg.k2 * math.atan(cfg.k3 * rates[k] + cfg.k4)
        c_k = sum((1.0 + cfg.initial_rate) ** -j for j in range(months - k + 1))
        pv += u_k * cfg.payment * r_k * ((1.0 - w_k) + w_k * c_k)
    return pv


class TestMbs:
    def test_single_month_collapse(self):
        cfg = M.MbsConfig(months=1)
        for xi in (-0.5, 0.0, 1.3):
            assert M.mbs_pv(np.array([xi]), cfg) == pytest.approx(
                cfg.payment / (1 + cfg.initial_rate), abs=1e-15
            )

    def test_deterministic_case_matches_straight_loop(self):
        cfg = M.MbsConfig(variance=0.0)
        got = M.mbs_pv(np.zeros(360), cfg)
        assert got == pytest.approx(mbs_pv_reference(np.zeros(360), cfg), abs=1e-12)

    def test_random_path_matches_straight_loop(self):
        cfg = M.MbsConfig(months=24)
        rng = np.random.default_rng(5)
        xi = rng.normal(0, cfg.sigma_xi, 24)
        assert M.mbs_pv(xi, cfg) == pytest.approx(mbs_pv_reference(xi, cfg), rel=1e-12)

    def test_kernel_matches_pathwise_python(self):
        cfg = M.MbsConfig()
        model = M.MbsModel(cfg)
        rng = np.random.default_rng(6)
        u = rng.random((32, 360))
        kernel = model.payoffs(u)
        for i in range(32):
            xi = cfg.sigma_xi * M.inv_normal(u[i])
            assert kernel[i] == pytest.approx(M.mbs_pv(xi, cfg), rel=1e-13)

    def test_trace_invariants(self):
        cfg = M.MbsConfig()
        rng = np.random.default_rng(7)
        tr = M.mbs_trace(rng.normal(0, cfg.sigma_xi, 360), cfg)
        assert np.all(np.diff(tr["u"]) < 0) and np.all(tr["u"] > 0)
        assert np.all((tr["w"] > 0) & (tr["w"] < 1))
        assert np.all((tr["r"] > 0) & (tr["r"] <= 1))
        assert np.all(np.diff(tr["r"]) <= 0)
        # r_{k+1} = r_k (1 - w_k)
        assert np.allclose(tr["r"][1:], tr["r"][:-1] * (1 - tr["w"][:-1]), rtol=1e-14)
        assert tr["c"][-1] == pytest.approx(1.0, abs=0)

    def test_rate_normalization_small_sample(self):
        # E(i_k) = i_0 by the k0 choice (3-sigma band at 1e5 draws)
        cfg = M.MbsConfig()
        rng = np.random.default_rng(11)
        n = 10**5
        for k in (1, 12):
            total = rng.normal(0, cfg.sigma_xi, (n, k)).sum(axis=1)
            ik = cfg.k0**k * np.exp(total) * cfg.initial_rate
            se = ik.std(ddof=1) / math.sqrt(n)
            assert abs(ik.mean() - cfg.initial_rate) < 3 * se

    def test_dimension_contract(self):
        assert M.MbsModel().dim == 360

    def test_config_validation(self):
        with pytest.raises(ValueError):
            M.MbsConfig(initial_rate=0.0)
        with pytest.raises(ValueError):
            M.MbsConfig(months=0)
        with pytest.raises(ValueError):
            M.mbs_pv(np.zeros(3), M.MbsConfig())
