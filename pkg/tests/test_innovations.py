import numpy as np
import pytest

from hsvar import (
    ConstantVol,
    ConstraintViolation,
    DenominatorTooSmall,
    DisplacedVol,
    Ewma,
    Garch,
    InnovationSeries,
    NoStochVol,
    ProportionalVol,
    VolPath,
    absolute_shifts,
    extract_innovations,
    hybrid_shift_scenarios,
    implied_mix_weight,
    innovations_to_csv,
    ljung_box,
    relative_shifts,
    scenarios_to_csv,
    simulate_scenarios,
    simulate_stressed_scenarios,
)
from synthetic import gamma_fn, price_series, random_positive_series, simulate_garch_prices


class TestExtract:
    def test_constant_scale(self):
        s = price_series([10.0, 11.0, 9.0])
        innov, path = extract_innovations(s, ConstantVol(2.0))
        np.testing.assert_allclose(innov.values, [0.5, -1.0], rtol=1e-15)
        np.testing.assert_allclose(path.values, 1.0)

    def test_proportional_reduces_to_relative_shift(self):
        s = price_series([100.0, 110.0])
        innov, _ = extract_innovations(s, ProportionalVol(1.0))
        np.testing.assert_allclose(innov.values, [0.10], rtol=1e-15)

    def test_alignment_and_dating(self):
        s = price_series([1.0, 2.0, 3.0, 4.0])
        innov, path = extract_innovations(s, ConstantVol(1.0))
        assert len(innov) == len(s) - 1
        assert len(path) == len(s)
        assert innov.dates == s.dates[1:]

    def test_round_trip_reconstruction(self):
        rng = np.random.default_rng(0)
        specs = [ConstantVol(0.8), ProportionalVol(0.01), DisplacedVol(0.3, 50.0, 0.01)]
        filters = [NoStochVol(), Ewma(0.94), Garch(1e-5, 0.08, 0.9)]
        for lv in specs:
            for sv in filters:
                s = random_positive_series(rng, n_obs=120)
                innov, path = extract_innovations(s, lv, sv)
                from hsvar import local_volatility

                g = local_volatility(lv, s.values[:-1])
                recon = s.values[:-1] + path.values[:-1] * g * innov.values
                np.testing.assert_allclose(recon, s.values[1:], rtol=1e-12)

    def test_recovers_generator_innovations(self):
        # synthetic path built forward from known draws: extraction under the
        # same spec must hand the draws back
        gamma = gamma_fn("proportional", sigma=1.0)
        series, w, v = simulate_garch_prices(1000, gamma, a0=1e-6, a1=0.08, b1=0.90, seed=3)
        innov, path = extract_innovations(series, ProportionalVol(1.0), Garch(1e-6, 0.08, 0.90))
        np.testing.assert_allclose(innov.values, w, rtol=1e-10)
        np.testing.assert_allclose(path.values, v, rtol=1e-10)

    def test_extracted_innovations_look_iid(self):
        # Ljung-Box should pass at 5% in at least 90% of replications
        gamma = gamma_fn("proportional", sigma=1.0)
        passes = 0
        n_rep = 100
        for seed in range(n_rep):
            series, _, _ = simulate_garch_prices(1000, gamma, a0=1e-6, a1=0.08, b1=0.90, seed=seed)
            innov, _ = extract_innovations(series, ProportionalVol(1.0), Garch(1e-6, 0.08, 0.90))
            if ljung_box(innov.values, lags=10).p_value >= 0.05:
                passes += 1
        assert passes >= 0.90 * n_rep


class TestSimulate:
    def test_constant_absolute_shift(self):
        s = price_series([7.0, 7.5])
        innov, path = extract_innovations(s, ConstantVol(3.0))
        scen = simulate_scenarios(innov, path, s, base=(10.0, 1.0))
        np.testing.assert_allclose(scen.scenarios, [10.5], rtol=1e-15)

    def test_proportional_relative_shift(self):
        s = price_series([8.0, 8.4])
        innov, path = extract_innovations(s, ProportionalVol(0.2))
        scen = simulate_scenarios(innov, path, s, base=(10.0, 1.0))
        np.testing.assert_allclose(scen.scenarios, [10.5], rtol=1e-15)

    def test_filtered_rescaling(self):
        # a 1% historical move scaled by v0/v_prev = 2 becomes a 2% move
        s = price_series([100.0, 101.0])
        innov = InnovationSeries(
            values=np.array([0.01]), dates=s.dates[1:],
            local_vol=ProportionalVol(1.0), stoch_vol=NoStochVol(),
        )
        path = VolPath(values=np.array([1.0, 1.0]), spec=NoStochVol())
        scen = simulate_scenarios(innov, path, s, base=(100.0, 2.0))
        np.testing.assert_allclose(scen.scenarios, [102.0], rtol=1e-15)

    def test_default_base_is_valuation_state(self):
        rng = np.random.default_rng(8)
        s = random_positive_series(rng, n_obs=60)
        innov, path = extract_innovations(s, ProportionalVol(1.0), Ewma(0.9))
        scen = simulate_scenarios(innov, path, s)
        assert scen.base_s0 == s.values[-1]
        assert scen.base_v0 == path.values[-1]

    def test_historical_consistency(self):
        # replaying step k from its own start state returns S_k exactly
        rng = np.random.default_rng(9)
        s = random_positive_series(rng, n_obs=80)
        for lv in [ConstantVol(2.0), ProportionalVol(0.5), DisplacedVol(0.7, 40.0, 0.1)]:
            for sv in [NoStochVol(), Garch(1e-4, 0.1, 0.85)]:
                innov, path = extract_innovations(s, lv, sv)
                for k in (0, 17, len(innov) - 1):
                    base = (float(s.values[k]), float(path.values[k]))
                    scen = simulate_scenarios(innov, path, s, base=base)
                    assert scen.scenarios[k] == pytest.approx(s.values[k + 1], rel=1e-12)

    def test_misaligned_inputs_rejected(self):
        s = price_series([1.0, 2.0, 3.0])
        innov, path = extract_innovations(s, ConstantVol(1.0))
        other = price_series([1.0, 2.0, 3.0, 4.0])
        with pytest.raises(ConstraintViolation):
            simulate_scenarios(innov, path, other)


class TestStressed:
    def test_constant_equals_absolute_shifts(self):
        rng = np.random.default_rng(10)
        s = random_positive_series(rng, n_obs=50)
        innov, _ = extract_innovations(s, ConstantVol(2.0))
        scen = simulate_stressed_scenarios(innov, s, ConstantVol(2.0), base_s0=42.0)
        np.testing.assert_allclose(scen.scenarios, 42.0 + absolute_shifts(s).values, rtol=1e-15)

    def test_proportional_equals_relative_shifts(self):
        rng = np.random.default_rng(11)
        s = random_positive_series(rng, n_obs=50)
        innov, _ = extract_innovations(s, ProportionalVol(1.0))
        scen = simulate_stressed_scenarios(innov, s, ProportionalVol(1.0), base_s0=42.0)
        np.testing.assert_allclose(
            scen.scenarios, 42.0 * (1.0 + relative_shifts(s).values), rtol=1e-14
        )

    def test_equals_unfiltered_simulation_exactly(self):
        # the stochastic-volatility ratio cancels: stressed == sv-none, bitwise
        rng = np.random.default_rng(12)
        s = random_positive_series(rng, n_obs=70)
        for lv in [ConstantVol(0.5), ProportionalVol(0.3), DisplacedVol(0.4, 60.0, 0.2)]:
            innov, path = extract_innovations(s, lv, NoStochVol())
            plain = simulate_scenarios(innov, path, s, base=(s.values[-1], 1.0))
            stressed = simulate_stressed_scenarios(innov, s, lv, base_s0=s.values[-1])
            assert (plain.scenarios == stressed.scenarios).all()
            assert stressed.mode == "stressed"


class TestHybridShift:
    def test_weight_zero_is_absolute(self):
        rng = np.random.default_rng(13)
        s = random_positive_series(rng, n_obs=40)
        scen = hybrid_shift_scenarios(s, 50.0, lambda x: 0.0)
        np.testing.assert_allclose(scen.scenarios, 50.0 + absolute_shifts(s).values, rtol=1e-15)

    def test_weight_one_is_relative(self):
        rng = np.random.default_rng(14)
        s = random_positive_series(rng, n_obs=40)
        scen = hybrid_shift_scenarios(s, 50.0, lambda x: 1.0)
        np.testing.assert_allclose(
            scen.scenarios, 50.0 * (1.0 + relative_shifts(s).values), rtol=1e-14
        )

    def test_implied_weight_reproduces_volatility_scaling(self):
        # hybrid rule with the implied weight == volatility-scaled scenarios
        rng = np.random.default_rng(15)
        for spec in [DisplacedVol(0.5, 30.0, 0.05), DisplacedVol(0.2, 80.0, 1.0)]:
            s = random_positive_series(rng, n_obs=100)
            base = float(s.values.max() * 1.25)  # keep away from every S_{k-1}
            innov, path = extract_innovations(s, spec, NoStochVol())
            scaled = simulate_scenarios(innov, path, s, base=(base, 1.0))
            hybrid = hybrid_shift_scenarios(
                s, base, lambda x, sp=spec, b=base: implied_mix_weight(b, x, sp)
            )
            np.testing.assert_allclose(hybrid.scenarios, scaled.scenarios, rtol=1e-12)

    def test_propagates_denominator_error(self):
        s = price_series([100.0, -5.0, 50.0])
        with pytest.raises(DenominatorTooSmall):
            hybrid_shift_scenarios(s, 10.0, lambda x: 0.5)


class TestScaleInvariance:
    def test_local_scale_cancels_without_filter(self):
        rng = np.random.default_rng(16)
        s = random_positive_series(rng, n_obs=90)
        for make in (
            lambda c: ConstantVol(0.4 * c),
            lambda c: ProportionalVol(0.02 * c),
            lambda c: DisplacedVol(0.6, 45.0, 0.1 * c),
        ):
            innov1, path1 = extract_innovations(s, make(1.0))
            innov2, path2 = extract_innovations(s, make(10.0))
            s1 = simulate_scenarios(innov1, path1, s).scenarios
            s2 = simulate_scenarios(innov2, path2, s).scenarios
            np.testing.assert_allclose(s1, s2, rtol=1e-12)

    def test_local_scale_cancels_through_ewma(self):
        # the exponentially weighted filter is 1-homogeneous in the returns,
        # and the sample init scales with the data, so sigma still vanishes
        rng = np.random.default_rng(17)
        s = random_positive_series(rng, n_obs=90)
        innov1, path1 = extract_innovations(s, ProportionalVol(1.0), Ewma(0.94))
        innov2, path2 = extract_innovations(s, ProportionalVol(10.0), Ewma(0.94))
        s1 = simulate_scenarios(innov1, path1, s).scenarios
        s2 = simulate_scenarios(innov2, path2, s).scenarios
        np.testing.assert_allclose(s1, s2, rtol=1e-12)

    def test_stochastic_scale_cancels(self):
        # jointly scaling (path, v0) by c rescales innovations by 1/c and
        # leaves every scenario unchanged
        rng = np.random.default_rng(18)
        s = random_positive_series(rng, n_obs=90)
        innov, path = extract_innovations(s, ProportionalVol(1.0), Garch(1e-5, 0.1, 0.8))
        c = 3.0
        scaled_innov = InnovationSeries(
            values=innov.values / c, dates=innov.dates,
            local_vol=innov.local_vol, stoch_vol=innov.stoch_vol,
        )
        scaled_path = VolPath(values=c * path.values, spec=path.spec)
        base = (float(s.values[-1]), float(path.values[-1]))
        scaled_base = (base[0], c * base[1])
        s1 = simulate_scenarios(innov, path, s, base=base).scenarios
        s2 = simulate_scenarios(scaled_innov, scaled_path, s, base=scaled_base).scenarios
        np.testing.assert_allclose(s1, s2, rtol=1e-12)


class TestExports:
    def test_scenario_csv_shape(self):
        s = price_series([10.0, 11.0, 9.0])
        innov, path = extract_innovations(s, ConstantVol(1.0))
        scen = simulate_scenarios(innov, path, s)
        lines = scenarios_to_csv(scen).strip().splitlines()
        assert lines[0] == "k,date,s_tilde"
        assert len(lines) == 3
        assert lines[1].startswith("1,2018-01-02,")

    def test_innovations_csv_shape(self):
        s = price_series([10.0, 11.0, 9.0])
        innov, _ = extract_innovations(s, ConstantVol(1.0))
        lines = innovations_to_csv(innov).strip().splitlines()
        assert lines[0] == "k,date,dw"
        assert len(lines) == 3
