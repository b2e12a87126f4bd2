"""Samplers, substreams, and the log-space transforms."""

import math

import numpy as np
import pytest

from subordlab import catalog
from subordlab.dickman import make_dickman
from subordlab.errors import InvalidParameterError, UnsupportedModelError
from subordlab.montecarlo import two_sample_ks, two_sample_ks_critical_value
from subordlab.simulate import (
    RngState,
    SamplePlan,
    sample_cutoff_cp,
    sample_marginal,
    substream,
    to_neg_t_power,
    to_tl,
)


class TestSubstreams:
    def test_same_seed_and_stream_replays(self):
        a = substream(42, 3).random(100)
        b = substream(42, 3).random(100)
        np.testing.assert_array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = substream(42, 0).random(1000)
        b = substream(42, 1).random(1000)
        assert not np.array_equal(a, b)

    def test_cross_stream_correlation_smoke(self):
        n = 100_000
        a = substream(7, 0).random(n)
        b = substream(7, 1).random(n)
        corr = np.corrcoef(a, b)[0, 1]
        assert abs(corr) < 4.0 / math.sqrt(n)

    def test_rng_state_wrapper(self):
        state = RngState(seed=5, stream=2)
        np.testing.assert_array_equal(state.generator().random(8), substream(5, 2).random(8))


class TestSamplePlan:
    def test_roundtrip_and_reproducibility(self):
        plan = SamplePlan(model="gamma", params={"gamma": 1.0, "lam": 1.0}, t=0.5, n=1000, seed=9)
        clone = SamplePlan.from_dict(plan.to_dict())
        np.testing.assert_array_equal(plan.run(), clone.run())

    def test_validation(self):
        with pytest.raises(InvalidParameterError):
            SamplePlan(model="gamma", n=0)
        with pytest.raises(InvalidParameterError):
            SamplePlan(model="gamma", cutoff=1.5)
        with pytest.raises(InvalidParameterError):
            SamplePlan(model="gamma", t=0.0)


class TestSampleMarginal:
    def test_gamma_mean(self, gamma11):
        samples = sample_marginal(gamma11, 2.0, 500_000, substream(21, 0))
        stderr = samples.std(ddof=1) / math.sqrt(samples.size)
        assert abs(samples.mean() - 2.0) <= 3.0 * stderr

    def test_stable_laplace_identity(self):
        st = catalog.make_stable(1.0, 0.5)
        vals = np.exp(-sample_marginal(st, 1.0, 500_000, substream(22, 0)))
        stderr = vals.std(ddof=1) / math.sqrt(vals.size)
        assert abs(vals.mean() - math.exp(-1.0)) <= 3.0 * stderr

    def test_dickman_mean(self, dickman1):
        samples = sample_marginal(dickman1, 1.0, 500_000, substream(23, 0))
        stderr = samples.std(ddof=1) / math.sqrt(samples.size)
        assert abs(samples.mean() - 1.0) <= 3.0 * stderr

    def test_unsupported_model(self):
        w = catalog.make_weibull(2.0)
        with pytest.raises(UnsupportedModelError):
            sample_marginal(w, 0.5, 10, substream(0, 0))

    def test_exact_log_path_has_no_zeros(self, gamma11):
        log_s = sample_marginal(gamma11, 0.001, 100_000, substream(24, 0), log=True)
        assert np.all(np.isfinite(log_s))


class TestCutoffCp:
    def test_void_path_probability(self, dickman1):
        # P(sample == 0) = exp(-t * nu_bar(eps))
        eps, t, n = 1e-2, 0.25, 400_000
        nu_eps = float(dickman1.tail.tail(eps))
        samples = sample_cutoff_cp(dickman1.tail, eps, t, substream(31, 0), n)
        frac_zero = np.mean(samples == 0.0)
        target = math.exp(-t * nu_eps)
        assert abs(frac_zero - target) <= 4.0 * math.sqrt(target * (1 - target) / n)

    def test_truncated_mean(self, dickman1):
        # E sum = t * integral_eps^1 x dnu = t * gamma * (1 - eps)
        eps, n = 1e-6, 1_000_000
        samples = sample_cutoff_cp(dickman1.tail, eps, 1.0, substream(32, 0), n)
        stderr = samples.std(ddof=1) / math.sqrt(n)
        assert abs(samples.mean() - (1.0 - eps)) <= 3.0 * stderr

    def test_jump_law_matches_normalized_tail(self):
        # single-jump law: P(jump > x) = log(x)/log(eps) for the Dickman tail
        model = make_dickman(2.0)
        eps = 1e-6
        rng = substream(33, 0)
        nu_eps = float(model.tail.tail(eps))
        jumps = np.asarray(model.tail.inverse_tail(rng.random(200_000) * nu_eps))
        x_grid = np.geomspace(eps * 10, 0.9, 25)
        emp_tail = np.array([(jumps > x).mean() for x in x_grid])
        target = np.log(x_grid) / np.log(eps)
        assert np.max(np.abs(emp_tail - target)) < 0.01

    def test_invalid_cutoff(self, dickman1):
        with pytest.raises(InvalidParameterError):
            sample_cutoff_cp(dickman1.tail, 2.0, 1.0, substream(0, 0), 5)

    def test_cutoff_consistency_two_epsilons(self, dickman1):
        n = 100_000
        coarse = sample_cutoff_cp(dickman1.tail, 1e-4, 1.0, substream(34, 0), n)
        fine = sample_cutoff_cp(dickman1.tail, 1e-8, 1.0, substream(34, 1), n)
        assert two_sample_ks(coarse, fine) <= two_sample_ks_critical_value(n, n, 0.01)

    def test_exact_vs_cp_gamma(self, gamma11):
        n = 100_000
        exact = gamma11.sampler(1.0, n, substream(35, 0))
        cp = sample_cutoff_cp(gamma11.tail, 1e-6, 1.0, substream(35, 1), n)
        assert two_sample_ks(exact, cp) <= two_sample_ks_critical_value(n, n, 0.01)


class TestTransforms:
    def test_unit_sample_fixed(self):
        vals, n_inf = to_neg_t_power(np.array([1.0]), 0.3)
        assert n_inf == 0 and vals[0] == 1.0

    def test_huge_sample_no_overflow(self):
        # y = exp(100), t = 0.01 -> y**(-t) = exp(-1), computed in log space
        vals, n_inf = to_neg_t_power(np.array([100.0]), 0.01, log=True)
        assert n_inf == 0
        assert vals[0] == pytest.approx(math.exp(-1.0), rel=1e-12)

    def test_zero_goes_to_infinity_bucket(self):
        vals, n_inf = to_neg_t_power(np.array([0.0, 2.0]), 0.1)
        assert n_inf == 1 and vals.size == 1

    def test_negative_rejected(self):
        with pytest.raises(InvalidParameterError):
            to_neg_t_power(np.array([-1.0]), 0.1)

    def test_tl_arithmetic(self):
        vals, n_inf = to_tl(np.array([math.exp(-5.0)]), lambda y: -np.log(y), 0.2)
        assert vals[0] == pytest.approx(1.0, rel=1e-12)
        vals, _ = to_tl(np.array([math.exp(-2.0)]), lambda y: (-np.log(y)) ** 3, 0.5)
        assert vals[0] == pytest.approx(4.0, rel=1e-12)

    def test_tl_log_variant(self):
        vals, n_inf = to_tl(
            np.array([-800.0, -np.inf]), None, 0.5, log=True, L_log=lambda ly: -ly
        )
        assert n_inf == 1
        assert vals[0] == pytest.approx(400.0)

    def test_reproducibility_bitwise(self, gamma11):
        a = sample_marginal(gamma11, 0.1, 5000, substream(77, 0))
        b = sample_marginal(gamma11, 0.1, 5000, substream(77, 0))
        np.testing.assert_array_equal(a, b)
