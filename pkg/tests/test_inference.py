import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atfe import (
    FULL_DOMAIN,
    MeasurementRecord,
    ProbeConfig,
    ProbeMode,
    UsageError,
    confidence_interval,
    holevo_variance_empirical,
    log_likelihood_eval,
    mle,
    normal_quantile,
    outcome_probability,
)
from atfe.probe import OMEGA_MAX

import oracles


def records_from_counts(zeros, ones, g=0.0, t=0.25):
    recs = [MeasurementRecord(0, g, t) for _ in range(zeros)]
    recs += [MeasurementRecord(1, g, t) for _ in range(ones)]
    return recs


class TestLogLikelihood:
    def test_single_record_value(self):
        recs = [MeasurementRecord(0, 0.0, 0.25)]
        assert log_likelihood_eval(recs, 0.0) == pytest.approx(math.log(0.5))

    def test_opposite_outcomes_peak_at_guess(self):
        recs = records_from_counts(1, 1, g=0.2)
        omegas = np.linspace(-1, OMEGA_MAX, 2001)
        values = log_likelihood_eval(recs, omegas)
        assert omegas[np.argmax(values)] == pytest.approx(0.2, abs=2e-3)
        # closed form: log(1/4 (1 - sin^2 theta)) maximal where sin theta = 0
        assert values.max() == pytest.approx(math.log(0.25), abs=1e-6)

    def test_heterogeneous_records_supported(self):
        recs = [
            MeasurementRecord(0, 0.1, 0.25),
            MeasurementRecord(1, -0.4, 0.5),
            MeasurementRecord(0, 0.7, 0.75),
        ]
        value = log_likelihood_eval(recs, 0.05)
        expected = sum(
            math.log(
                outcome_probability(r.g_tilde, r.t_tilde, 0.05)
                if r.outcome == 0
                else 1.0 - outcome_probability(r.g_tilde, r.t_tilde, 0.05)
            )
            for r in recs
        )
        assert value == pytest.approx(expected, abs=1e-12)

    def test_ghz_probe_changes_phase_scale(self):
        recs = [MeasurementRecord(0, 0.0, 0.05)]
        ghz = ProbeConfig(mode=ProbeMode.GHZ, n_qubits=5)
        value = log_likelihood_eval(recs, 0.5, ghz)
        assert value == pytest.approx(math.log(0.5 * (1 + math.sin(math.pi / 4))), abs=1e-12)

    def test_empty_records_rejected(self):
        with pytest.raises(UsageError):
            log_likelihood_eval([], 0.0)

    def test_finite_at_degenerate_probability(self):
        # outcome 1 where p(1) = 0 exactly: floored log, never -inf
        recs = [MeasurementRecord(1, 0.0, 0.25)]
        assert np.isfinite(log_likelihood_eval(recs, 1.0))


class TestMle:
    def test_symmetric_counts_peak_at_guess(self):
        result = mle(records_from_counts(10, 10, g=0.3), FULL_DOMAIN)
        assert result.omega_hat == pytest.approx(0.3, abs=1e-6)

    def test_analytic_stationarity(self):
        # stationarity of the binomial likelihood: sin(2 pi t w) = 2m/n - 1
        result = mle(records_from_counts(75, 25), FULL_DOMAIN)
        expected = math.asin(0.5) / (math.pi / 2.0)
        assert expected == pytest.approx(1.0 / 3.0)
        assert result.omega_hat == pytest.approx(expected, abs=1e-6)

    def test_boundary_maximizer(self):
        result = mle(records_from_counts(75, 25), (0.5, 1.0))
        assert result.omega_hat == 0.5
        oracle = oracles.grid_argmax(records_from_counts(75, 25), (0.5, OMEGA_MAX), n_points=100_000)
        assert abs(result.omega_hat - oracle) < 1e-4

    def test_fisher_total_accumulates(self):
        recs = records_from_counts(3, 2, t=0.25)
        result = mle(recs, FULL_DOMAIN)
        assert result.fisher_total == pytest.approx(5 * (math.pi / 2.0) ** 2)
        ghz = ProbeConfig(mode=ProbeMode.GHZ, n_qubits=4)
        result_ghz = mle(recs, FULL_DOMAIN, ghz)
        assert result_ghz.fisher_total == pytest.approx(16 * 5 * (math.pi / 2.0) ** 2)

    def test_estimate_stays_in_domain(self):
        result = mle(records_from_counts(4, 1), (-0.2, 0.1))
        assert -0.2 <= result.omega_hat <= 0.1
        assert result.domain_used == (-0.2, 0.1)

    def test_empty_records_rejected(self):
        with pytest.raises(UsageError):
            mle([], FULL_DOMAIN)

    def test_bad_domain_rejected(self):
        with pytest.raises(UsageError):
            mle(records_from_counts(1, 1), (0.5, 0.2))
        with pytest.raises(UsageError):
            mle(records_from_counts(1, 1), (-2.0, 0.0))

    def test_grid_oracle_equivalence(self):
        # heterogeneous datasets against an exhaustive one-million-point scan
        rng = np.random.default_rng(11)
        for _ in range(200):
            n = rng.integers(3, 51)
            recs = [
                MeasurementRecord(
                    int(rng.integers(0, 2)),
                    float(rng.uniform(-1, 1)),
                    float(rng.uniform(0.05, 0.25)),
                )
                for _ in range(n)
            ]
            got = mle(recs, FULL_DOMAIN).omega_hat
            oracle = oracles.grid_argmax(recs, FULL_DOMAIN)
            assert abs(got - oracle) < 1e-5


class TestNormalQuantile:
    def test_median(self):
        assert normal_quantile(0.5) == pytest.approx(0.0, abs=1e-12)

    def test_reference_points(self):
        assert normal_quantile(0.025) == pytest.approx(1.959964, abs=1e-6)
        assert normal_quantile(0.0005) == pytest.approx(3.290527, abs=1e-6)

    def test_against_bisection_oracle(self):
        for q in (0.5, 0.1, 0.025, 0.005, 0.0005, 5e-7):
            assert normal_quantile(q) == pytest.approx(
                oracles.quantile_by_bisection(q), abs=1e-8
            )

    def test_round_trip(self):
        for q in (0.5, 0.1, 0.025, 0.005, 0.0005, 5e-7):
            z = normal_quantile(q)
            assert oracles.normal_upper_tail(z) == pytest.approx(q, abs=1e-7)

    def test_symmetry(self):
        assert normal_quantile(0.9) == pytest.approx(-normal_quantile(0.1), abs=1e-10)

    def test_range_validation(self):
        for bad in (0.0, 1.0, -0.1, 2.0):
            with pytest.raises(UsageError):
                normal_quantile(bad)


class TestConfidenceInterval:
    def test_full_width_clipping(self):
        z = normal_quantile(0.025)
        ci = confidence_interval(0.0, z * z, 0.95)
        assert ci.half_width == pytest.approx(1.0, abs=1e-12)
        assert ci.lo == pytest.approx(-1.0, abs=1e-12) and ci.lo >= -1.0
        assert ci.hi == pytest.approx(1.0, abs=1e-12) and ci.hi < 1.0
        # a wider interval clips exactly to the domain
        wide = confidence_interval(0.0, 0.25 * z * z, 0.95)
        assert wide.lo == -1.0
        assert wide.hi < 1.0 and wide.hi == pytest.approx(1.0, abs=1e-12)

    def test_edge_clipping(self):
        z = normal_quantile(0.025)
        ci = confidence_interval(0.9, 100.0 * z * z, 0.95)
        assert ci.half_width == pytest.approx(0.1, abs=1e-12)
        assert ci.lo == pytest.approx(0.8, abs=1e-12)
        assert ci.hi == pytest.approx(1.0, abs=1e-12) and ci.hi < 1.0

    def test_inverse_of_target_half_width(self):
        # fisher needed for half-width 1/2 at the 0.999 level
        z = normal_quantile(0.0005)
        fisher = (2.0 * z) ** 2
        assert fisher == pytest.approx(43.31, abs=0.01)
        ci = confidence_interval(0.0, fisher, 0.999)
        assert ci.half_width == pytest.approx(0.5, abs=1e-12)

    def test_validation(self):
        with pytest.raises(UsageError):
            confidence_interval(0.0, 0.0, 0.95)
        with pytest.raises(UsageError):
            confidence_interval(0.0, 1.0, 1.0)

    @given(
        center=st.floats(-1.0, 0.999),
        fisher=st.floats(0.1, 1e6),
        level=st.floats(0.5, 0.9999),
    )
    @settings(max_examples=200, deadline=None)
    def test_interval_well_formed(self, center, fisher, level):
        ci = confidence_interval(center, fisher, level)
        assert -1.0 <= ci.lo <= ci.hi < 1.0
        assert ci.half_width > 0.0


class TestHolevoVariance:
    def test_point_mass_is_zero(self):
        assert holevo_variance_empirical([0.3] * 5, 0.3) == 0.0

    def test_symmetric_split_matches_tangent_form(self):
        for period, delta in ((2.0, 0.05), (2.0, 0.3), (4.0, 0.2)):
            estimates = [0.1 + delta, 0.1 - delta] * 50
            expected = (period / (2 * math.pi)) ** 2 * math.tan(2 * math.pi * delta / period) ** 2
            got = holevo_variance_empirical(estimates, 0.1, period)
            assert got == pytest.approx(expected, rel=1e-9)

    def test_uniform_spread_is_infinite(self):
        estimates = np.linspace(-1, 1, 64, endpoint=False)
        assert math.isinf(holevo_variance_empirical(estimates, 0.0, 2.0))

    def test_small_errors_match_second_moment(self):
        rng = np.random.default_rng(0)
        errors = rng.normal(0.0, 2.0 / 50.0 / 3.0, size=20_000)  # well below period/50
        estimates = 0.2 + errors
        hol = holevo_variance_empirical(estimates, 0.2, 2.0)
        second_moment = float(np.mean(errors**2))
        assert hol == pytest.approx(second_moment, rel=0.01)

    def test_constant_offset_has_zero_dispersion(self):
        # the phasor form measures dispersion of the errors, so a constant
        # offset contributes nothing
        truths = np.array([0.1, -0.2, 0.4])
        got = holevo_variance_empirical(truths + 0.01, truths, 2.0)
        assert got == pytest.approx(0.0, abs=1e-12)

    def test_per_trial_truths(self):
        truths = np.array([0.1, -0.2, 0.4, -0.3] * 25)
        delta = 0.01
        signs = np.tile([1.0, -1.0], 50)
        estimates = truths + signs * delta
        got = holevo_variance_empirical(estimates, truths, 2.0)
        expected = (2.0 / (2 * math.pi)) ** 2 * math.tan(2 * math.pi * delta / 2.0) ** 2
        assert got == pytest.approx(expected, rel=1e-9)

    def test_validation(self):
        with pytest.raises(UsageError):
            holevo_variance_empirical([], 0.0)
        with pytest.raises(UsageError):
            holevo_variance_empirical([0.1], 0.0, period=0.0)


class TestCoverage:
    @pytest.mark.parametrize("level", [0.95, 0.99])
    def test_confidence_interval_coverage(self, level):
        # fixed truth, fixed guess, n=200 draws, 10^4 replications
        omega = 0.1
        n = 200
        reps = 10_000
        p0 = outcome_probability(0.0, 0.25, omega)
        rng = np.random.default_rng(123)
        zero_counts = rng.binomial(n, p0, size=reps)
        covered = 0
        cache = {}
        for m in np.unique(zero_counts):
            recs = (
                [MeasurementRecord(0, 0.0, 0.25)] * int(m)
                + [MeasurementRecord(1, 0.0, 0.25)] * int(n - m)
            )
            result = mle(recs, FULL_DOMAIN)
            ci = confidence_interval(result.omega_hat, result.fisher_total, level)
            cache[int(m)] = ci.lo <= omega <= ci.hi
        for m in zero_counts:
            covered += cache[int(m)]
        fraction = covered / reps
        sigma = math.sqrt(level * (1.0 - level) / reps)
        assert fraction >= level - 3.0 * sigma
