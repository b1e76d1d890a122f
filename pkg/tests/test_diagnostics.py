import numpy as np
import pytest
from scipy.stats import binom, chi2

from hsvar import (
    ConstraintViolation,
    Garch,
    ProportionalVol,
    ZeroVariance,
    arch_lm,
    extract_innovations,
    ljung_box,
    run_diagnostics,
)
from synthetic import garch_returns, gamma_fn, simulate_garch_prices


class TestLjungBox:
    def test_zero_autocorrelation_gives_zero(self):
        # every lag-1 product hits a zero, so the statistic is exactly 0
        x = np.tile([1.0, 0.0, -1.0, 0.0], 25)
        res = ljung_box(x, lags=1)
        assert res.statistic == 0.0
        assert res.p_value == 1.0

    def test_alternating_series_hand_value(self):
        n = 100
        x = np.tile([1.0, -1.0], n // 2)
        res = ljung_box(x, lags=1)
        rho1 = -(n - 1) / n  # alternating series, mean zero, biased denominator
        expected = n * (n + 2) * rho1**2 / (n - 1)
        assert res.statistic == pytest.approx(expected, rel=1e-12)

    def test_constant_input_reported(self):
        with pytest.raises(ZeroVariance):
            ljung_box(np.full(50, 3.0), lags=2)

    def test_lag_bounds(self):
        with pytest.raises(ConstraintViolation):
            ljung_box(np.arange(5.0), lags=5)
        with pytest.raises(ConstraintViolation):
            ljung_box(np.arange(5.0), lags=0)

    def test_matches_statsmodels(self):
        from statsmodels.stats.diagnostic import acorr_ljungbox

        rng = np.random.default_rng(31)
        x = rng.standard_normal(400)
        res = ljung_box(x, lags=10)
        sm = acorr_ljungbox(x, lags=10)
        assert res.statistic == pytest.approx(float(sm["lb_stat"].iloc[-1]), rel=1e-10)
        assert res.p_value == pytest.approx(float(sm["lb_pvalue"].iloc[-1]), abs=1e-10)

    def test_size_calibration(self):
        # i.i.d. data: rejection rate at 5% stays in the exact binomial band
        n_rep, n, lags = 200, 500, 10
        rejections = 0
        for seed in range(n_rep):
            x = np.random.default_rng(seed).standard_normal(n)
            if ljung_box(x, lags=lags).p_value < 0.05:
                rejections += 1
        lo = binom.ppf(0.005, n_rep, 0.05)
        hi = binom.ppf(0.995, n_rep, 0.05)
        assert lo <= rejections <= hi


class TestArchLm:
    def test_constant_magnitude_degenerate(self):
        x = np.tile([1.0, -1.0], 40)  # squares are constant
        res = arch_lm(x, lags=3)
        assert res.statistic == 0.0
        assert res.p_value == 1.0

    def test_detects_conditional_heteroskedasticity(self):
        r, _ = garch_returns(2000, a0=0.2, a1=0.3, b1=0.6, seed=0)
        assert arch_lm(r, lags=10).p_value < 0.01

    def test_iid_not_flagged(self):
        x = np.random.default_rng(0).standard_normal(2000)
        assert arch_lm(x, lags=10).p_value > 0.05

    def test_length_precondition(self):
        with pytest.raises(ConstraintViolation):
            arch_lm(np.arange(21.0), lags=10)

    def test_matches_statsmodels(self):
        from statsmodels.stats.diagnostic import het_arch

        rng = np.random.default_rng(32)
        x = rng.standard_normal(600)
        x = x - x.mean()  # statsmodels squares without demeaning
        res = arch_lm(x, lags=10)
        stat, p, _, _ = het_arch(x, nlags=10)
        assert res.statistic == pytest.approx(stat, rel=1e-8)
        assert res.p_value == pytest.approx(p, abs=1e-8)

    def test_power_and_size_paired(self):
        # raw conditionally heteroskedastic returns must be flagged; the
        # innovations extracted under the true model must not be
        gamma = gamma_fn("proportional", sigma=1.0)
        n_rep = 50
        raw_rejections = 0
        innov_rejections = 0
        for seed in range(n_rep):
            series, _, _ = simulate_garch_prices(
                2000, gamma, a0=1e-6, a1=0.3, b1=0.6, seed=seed
            )
            raw = np.diff(series.values) / series.values[:-1]
            if arch_lm(raw, lags=10).p_value < 0.05:
                raw_rejections += 1
            innov, _ = extract_innovations(
                series, ProportionalVol(1.0), Garch(1e-6, 0.3, 0.6)
            )
            if arch_lm(innov.values, lags=10).p_value < 0.05:
                innov_rejections += 1
        assert raw_rejections >= 0.95 * n_rep
        assert innov_rejections <= binom.ppf(0.995, n_rep, 0.05)


class TestInvariances:
    def test_scale_and_shift_invariance(self):
        rng = np.random.default_rng(33)
        x = rng.standard_normal(300)
        for test in (ljung_box, arch_lm):
            base = test(x, lags=5).statistic
            assert test(7.5 * x, lags=5).statistic == pytest.approx(base, rel=1e-10)
            assert test(x - 42.0, lags=5).statistic == pytest.approx(base, rel=1e-10)

    def test_pvalue_monotone_in_statistic(self):
        stats = [0.5, 1.0, 5.0, 10.0, 20.0]
        pvals = [float(chi2.sf(s, 10)) for s in stats]
        assert pvals == sorted(pvals, reverse=True)

    def test_pvalue_consistent_with_chi2(self):
        rng = np.random.default_rng(34)
        x = rng.standard_normal(400)
        for test in (ljung_box, arch_lm):
            res = test(x, lags=7)
            assert res.p_value == pytest.approx(float(chi2.sf(res.statistic, res.df)), abs=1e-8)
            assert res.df == 7


class TestReport:
    def test_iid_passes(self):
        x = np.random.default_rng(1).standard_normal(1000)
        report = run_diagnostics(x)
        assert report["verdict"] == "pass"
        assert {r["name"] for r in report["results"]} == {"ljung_box", "arch_lm"}

    def test_heteroskedastic_fails(self):
        r, _ = garch_returns(2000, a0=0.2, a1=0.3, b1=0.6, seed=1)
        assert run_diagnostics(r)["verdict"] == "fail"

    def test_constant_input_warns(self):
        report = run_diagnostics(np.zeros(100))
        assert report["verdict"] == "warn"
        errors = [r for r in report["results"] if "error" in r]
        assert errors and errors[0]["error"] == "ZeroVariance"

    def test_significance_validated(self):
        with pytest.raises(ConstraintViolation):
            run_diagnostics(np.random.default_rng(0).standard_normal(100), significance=1.5)
