"""Independent re-derivations of the statistics the harness relies on."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subordlab import catalog, criteria, montecarlo as mc, transforms
from subordlab.core import ParetoLaw, pareto_cdf
from subordlab.dickman import make_dickman
from subordlab.simulate import sample_marginal, substream, to_neg_t_power


def brute_force_ks(emp, cdf):
    """Sup of |ECDF - F| over the extended line, from first principles.

    Evaluates both functions at every sample point and just below it
    (the only places the sup can be approached), plus the limit at
    +infinity where the at-infinity bucket never arrives.
    """
    candidates = np.concatenate([emp.values, np.nextafter(emp.values, -np.inf)])
    ecdf = np.searchsorted(emp.values, candidates, side="right") / emp.n_total
    f_vals = np.asarray(cdf(candidates), dtype=float)
    sup = float(np.max(np.abs(ecdf - f_vals))) if candidates.size else 0.0
    tail_gap = abs(emp.values.size / emp.n_total - float(cdf(np.inf)))
    return max(sup, tail_gap)


class TestKsAgainstBruteForce:
    def test_continuous_target(self):
        law = ParetoLaw(1.5)
        emp = mc.EmpiricalDistribution.from_values(law.sample(5000, substream(3, 0)))
        assert mc.ks_distance(emp, law.cdf) == pytest.approx(
            brute_force_ks(emp, law.cdf), abs=1e-12
        )

    def test_atomic_target(self):
        law = mc.ParetoMixtureLaw(q=0.4, gamma=1.0)
        rng = substream(4, 0)
        values = np.where(rng.random(5000) < 0.6, 1.0, ParetoLaw(1.0).sample(5000, rng))
        emp = mc.EmpiricalDistribution.from_values(values)
        assert mc.ks_distance(emp, law.cdf) == pytest.approx(
            brute_force_ks(emp, law.cdf), abs=1e-12
        )

    def test_saturating_target_with_ties(self):
        law = mc.AffineMinLaw(2.0, 8.0, 1.0)
        values = np.concatenate([np.full(300, 8.0), np.linspace(2.0, 7.9, 700)])
        emp = mc.EmpiricalDistribution.from_values(values)
        assert mc.ks_distance(emp, law.cdf) == pytest.approx(
            brute_force_ks(emp, law.cdf), abs=1e-12
        )

    def test_with_at_infinity_mass(self):
        law = ParetoLaw(1.0)
        emp = mc.EmpiricalDistribution.from_values(
            law.sample(900, substream(5, 0)), count_at_infinity=100
        )
        assert mc.ks_distance(emp, law.cdf) == pytest.approx(
            brute_force_ks(emp, law.cdf), abs=1e-12
        )

    @given(
        n=st.integers(2, 200),
        n_inf=st.integers(0, 30),
        gamma=st.floats(0.3, 4.0),
        seed=st.integers(0, 10_000),
    )
    @settings(max_examples=50, deadline=None)
    def test_formula_equals_sup_on_random_batches(self, n, n_inf, gamma, seed):
        law = ParetoLaw(gamma)
        values = ParetoLaw(1.0).sample(n, substream(seed, 0))
        emp = mc.EmpiricalDistribution.from_values(values, count_at_infinity=n_inf)
        assert mc.ks_distance(emp, law.cdf) == pytest.approx(
            brute_force_ks(emp, law.cdf), abs=1e-12
        )


class TestNegativeControls:
    """Doubling the target index must inflate every experiment's statistic."""

    def test_min_rule_control(self, gamma11, gamma21):
        t, n, seed = 0.01, 50_000, 21
        l1 = sample_marginal(gamma11, t, n, substream(seed, 0), log=True)
        l2 = sample_marginal(gamma21, t, n, substream(seed, 1), log=True)
        values, n_inf = to_neg_t_power(np.logaddexp(l1, l2), t, log=True)
        emp = mc.EmpiricalDistribution.from_values(values, n_inf)
        matched = mc.ks_distance(emp, ParetoLaw(3.0).cdf)
        control = mc.ks_distance(emp, ParetoLaw(6.0).cdf)
        assert control >= 3.0 * matched

    def test_product_rule_control(self, gamma11):
        t, n, seed = 0.01, 50_000, 22
        l1 = sample_marginal(gamma11, t, n, substream(seed, 0), log=True)
        l2 = sample_marginal(gamma11, t, n, substream(seed, 1), log=True)
        values, n_inf = to_neg_t_power(l1 + l2, t, log=True)
        emp = mc.EmpiricalDistribution.from_values(values, n_inf)
        matched = mc.ks_distance(emp, mc.ParetoProductLaw(1.0, 1.0).cdf)
        control = mc.ks_distance(emp, mc.ParetoProductLaw(2.0, 2.0).cdf)
        assert control >= 3.0 * matched

    def test_mixture_control(self, gamma11):
        report, _ = mc.experiment_mixture(gamma11, q=0.3, t=1e-3, n=50_000, seed=23)
        # same samples, target with doubled index in the Pareto component
        rng = substream(23, 0)
        log_l = sample_marginal(gamma11, 1e-3, 50_000, rng, log=True)
        at_one = substream(23, 1).random(50_000) >= 0.3
        values, n_inf = to_neg_t_power(
            np.where(at_one, np.logaddexp(log_l, 0.0), log_l), 1e-3, log=True
        )
        emp = mc.EmpiricalDistribution.from_values(values, n_inf)
        control = mc.ks_distance(emp, mc.ParetoMixtureLaw(0.3, 2.0).cdf)
        assert control >= 3.0 * report.ks_statistic


class TestSpecSpotValues:
    def test_s2_gamma_at_u_e_t_one_thousandth(self, gamma11):
        # t*Phi(e**(1/t)) = t*log(1 + e**(1/t)) -> 1 = -log(1 - Pi_1(e))
        report = criteria.check_s2(
            gamma11.phi, lambda u: pareto_cdf(1.0, u), t_grid=[1e-3], u_grid=[math.e]
        )
        assert report.final <= 1e-2

    def test_gamma_marginal_mass_spot_value(self, gamma11):
        # P(Y_t <= 2**-100) at t = 0.01 sits within half a percent of the
        # Pareto tail value 1/2 (the analytic check behind the MC bound)
        from scipy.special import gammainc

        p = float(gammainc(0.01, 2.0 ** (-100.0)))
        assert p == pytest.approx(0.5, abs=5e-3)

    def test_ol2_lower_bound_vacuous_when_psi_small(self, gamma11):
        # whenever psi(z/x) <= e^-z the lower bound is nonpositive
        z, x = 2.0, 1e-3
        psi = math.exp(-float(gamma11.phi.eval(z / x)))
        assert psi <= math.exp(-z)
        lower = (math.exp(z) * psi - 1.0) / (math.exp(z) - 1.0)
        assert lower <= 0.0 <= float(gamma11.cdf1(x))

    def test_affine_collapse_limit_matches_plain_pareto(self, gamma11):
        # a -> 1, b -> inf: the affine target degenerates to the Pareto law
        law = mc.AffineMinLaw(1.0 + 1e-12, 1e12, 1.0)
        x = np.geomspace(1.0, 1e6, 30)
        np.testing.assert_allclose(law.cdf(x), pareto_cdf(1.0, x), rtol=1e-9)


class TestTiltIndexInvarianceProperty:
    @given(theta=st.floats(0.05, 5.0), gamma=st.floats(0.3, 3.0))
    @settings(max_examples=25, deadline=None)
    def test_tilted_gamma_estimate_stable(self, theta, gamma):
        model = catalog.make_gamma(gamma, 1.0)
        est = criteria.estimate_gamma_s5(transforms.tilt(model, theta).phi)
        assert est.verdict == "converged"
        assert est.gamma_hat == pytest.approx(gamma, abs=0.02)

    @given(theta=st.floats(0.05, 3.0))
    @settings(max_examples=15, deadline=None)
    def test_tilted_dickman_estimate_stable(self, theta):
        model = make_dickman(1.0)
        est = criteria.estimate_gamma_s5(transforms.tilt(model, theta).phi)
        assert est.gamma_hat == pytest.approx(1.0, abs=0.02)
