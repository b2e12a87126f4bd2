"""Empirical verification harness: ECDF/KS machinery and the named experiments.

Each experiment samples a marginal, applies the relevant small-time
transform, and measures the sup-distance between the empirical law and
the predicted limit.  Statistics are reported raw, without p-values:
the limits are approached on a log scale, so the thresholds the callers
assert against are calibrated constants for fixed (t, n), not test
levels.

Zero samples from the compound-Poisson void path transform to the
at-infinity bucket; the KS statistic accounts for that mass explicitly,
and exact-sampler runs assert the bucket stays empty.

Determinism: every experiment derives its generators from (seed, stream
index) substreams, so identical inputs reproduce identical reports
regardless of scheduling.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .core import ExponentialLaw, ParetoLaw, SubordinatorModel, pareto_cdf
from .errors import InvalidParameterError, NumericalFailure, OutOfRangeError
from .simulate import sample_marginal, substream, to_neg_t_power, to_tl

__all__ = [
    "EmpiricalDistribution",
    "KsReport",
    "ks_distance",
    "two_sample_ks",
    "ks_critical_value",
    "two_sample_ks_critical_value",
    "ParetoProductLaw",
    "AffineMinLaw",
    "ParetoMixtureLaw",
    "experiment_pareto_limit",
    "experiment_general_limit",
    "experiment_min_rule",
    "experiment_product_rule",
    "experiment_affine",
    "experiment_mixture",
    "experiment_drift",
    "support_check",
    "estimate_ergodic_functional",
    "check_family_limit",
    "FamilyLimitReport",
    "DriftReport",
    "ErgodicEstimate",
    "export_curve",
    "DEFAULT_T_LIST",
    "DEFAULT_N",
]

DEFAULT_T_LIST = (0.2, 0.1, 0.05, 0.01)
DEFAULT_N = 100_000


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted finite samples plus the count that exceeded every float."""

    values: np.ndarray
    count_at_infinity: int
    n_total: int

    @classmethod
    def from_values(cls, values, count_at_infinity=0):
        arr = np.sort(np.asarray(values, dtype=float))
        return cls(arr, int(count_at_infinity), arr.size + int(count_at_infinity))

    def ecdf(self, x):
        return np.searchsorted(self.values, x, side="right") / self.n_total


def ks_distance(emp: EmpiricalDistribution, cdf):
    """Sup distance between the ECDF and a target CDF.

    Evaluated one-sidedly at every finite order statistic: i/n - F(x_i)
    from the right and F(x_i-) - (i-1)/n from the left, where the left
    limit is taken at the previous representable float so that targets
    with atoms are compared against the correct one-sided values (for
    continuous targets the two coincide and this is the textbook
    statistic).  The at-infinity bucket contributes
    1 - finite/n - (1 - cdf(inf)), the gap left at the far right end.
    """
    if emp.n_total < 1:
        raise InvalidParameterError("need at least one sample")
    n = emp.n_total
    m = emp.values.size
    d = 0.0
    if m:
        f_right = np.asarray(cdf(emp.values), dtype=float)
        f_left = np.asarray(cdf(np.nextafter(emp.values, -np.inf)), dtype=float)
        i = np.arange(1, m + 1)
        d = max(np.max(i / n - f_right), np.max(f_left - (i - 1) / n))
    cdf_inf = float(cdf(np.inf))
    at_inf = (1.0 - m / n) - (1.0 - cdf_inf)
    return float(max(d, at_inf, 0.0))


def two_sample_ks(x, y):
    """Two-sample sup ECDF distance (values only, no at-infinity handling)."""
    xs = np.sort(np.asarray(x, dtype=float))
    ys = np.sort(np.asarray(y, dtype=float))
    both = np.concatenate([xs, ys])
    fx = np.searchsorted(xs, both, side="right") / xs.size
    fy = np.searchsorted(ys, both, side="right") / ys.size
    return float(np.max(np.abs(fx - fy)))


def ks_critical_value(n, level=0.01):
    """Asymptotic one-sample critical value, c(level)/sqrt(n)."""
    coeff = {0.10: 1.224, 0.05: 1.358, 0.01: 1.628}[level]
    return coeff / np.sqrt(n)


def two_sample_ks_critical_value(n1, n2, level=0.01):
    coeff = {0.10: 1.224, 0.05: 1.358, 0.01: 1.628}[level]
    return coeff * np.sqrt((n1 + n2) / (n1 * n2))


@dataclass(frozen=True)
class KsReport:
    model: str
    t: float
    n: int
    target: str
    ks_statistic: float
    seed: int

    def to_dict(self):
        return {
            "model": self.model,
            "t": self.t,
            "n": self.n,
            "target": self.target,
            "ks_statistic": self.ks_statistic,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class ParetoProductLaw:
    """Law of the product of independent Pareto(g1) and Pareto(g2) variables.

    Survival (g1 != g2): (g1 x^{-g2} - g2 x^{-g1}) / (g1 - g2); the equal
    case is its limit x^{-g}(1 + g log x).  Re-derived from the tail
    integral and validated against direct product sampling in the tests.
    """

    gamma1: float
    gamma2: float

    def cdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        g1, g2 = self.gamma1, self.gamma2
        with np.errstate(invalid="ignore", over="ignore"):
            xs = np.maximum(x_arr, 1.0)
            if abs(g1 - g2) < 1e-6:
                g = 0.5 * (g1 + g2)
                surv = xs ** (-g) * (1.0 + g * np.log(xs))
            else:
                surv = (g1 * xs ** (-g2) - g2 * xs ** (-g1)) / (g1 - g2)
        out = np.where(x_arr >= 1.0, 1.0 - surv, 0.0)
        out = np.where(np.isposinf(x_arr), 1.0, out)
        return out if out.ndim else float(out)

    def describe(self):
        return f"ParetoProduct(gamma1={self.gamma1:g},gamma2={self.gamma2:g})"


@dataclass(frozen=True)
class AffineMinLaw:
    """Law of min(a * Pareto(gamma), b): Pareto CDF of x/a below b, then 1."""

    a: float
    b: float
    gamma: float

    def cdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        out = np.where(x_arr >= self.b, 1.0, pareto_cdf(self.gamma, x_arr / self.a))
        return out if out.ndim else float(out)

    def describe(self):
        return f"min({self.a:g}*Pareto({self.gamma:g}),{self.b:g})"


@dataclass(frozen=True)
class ParetoMixtureLaw:
    """Pareto component with weight q plus an atom of mass 1-q at 1."""

    q: float
    gamma: float

    def cdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        out = (1.0 - self.q) * (x_arr >= 1.0) + self.q * pareto_cdf(self.gamma, x_arr)
        return out if out.ndim else float(out)

    def describe(self):
        return f"mixture(q={self.q:g},Pareto({self.gamma:g}))"


def _sample_transformed(model, t, n, rng, cutoff):
    """Log-space marginal batch pushed through the power transform."""
    log_samples = sample_marginal(model, t, n, rng, cutoff=cutoff, log=True)
    values, n_inf = to_neg_t_power(log_samples, t, log=True)
    if model.log_sampler is not None and n_inf:
        raise NumericalFailure(
            "exact sampler produced an at-infinity sample", op="experiment"
        )
    return EmpiricalDistribution.from_values(values, n_inf)


def experiment_pareto_limit(
    model: SubordinatorModel, t_list=DEFAULT_T_LIST, n=DEFAULT_N, seed=0,
    *, cutoff=1e-6, gamma=None,
):
    """KS of the power-transformed marginal against its Pareto limit, per t."""
    target_gamma = model.known_gamma if gamma is None else gamma
    if target_gamma is None:
        raise InvalidParameterError("model has no known index; pass gamma explicitly")
    law = ParetoLaw(target_gamma)
    reports = []
    for k, t in enumerate(t_list):
        emp = _sample_transformed(model, t, n, substream(seed, k), cutoff)
        reports.append(
            KsReport(
                model=model.describe(),
                t=float(t),
                n=int(n),
                target=law.describe(),
                ks_statistic=ks_distance(emp, law.cdf),
                seed=int(seed),
            )
        )
    return reports


def experiment_general_limit(
    model: SubordinatorModel, L, gamma, t_list=DEFAULT_T_LIST, n=DEFAULT_N, seed=0,
    *, cutoff=1e-6, L_log=None,
):
    """KS of t*L(Y_t) against the exponential law with rate gamma, per t."""
    law = ExponentialLaw(gamma)
    reports = []
    for k, t in enumerate(t_list):
        rng = substream(seed, k)
        log_samples = sample_marginal(model, t, n, rng, cutoff=cutoff, log=True)
        values, n_inf = to_tl(log_samples, L, t, log=True, L_log=L_log)
        emp = EmpiricalDistribution.from_values(values, n_inf)
        reports.append(
            KsReport(
                model=model.describe(),
                t=float(t),
                n=int(n),
                target=law.describe(),
                ks_statistic=ks_distance(emp, law.cdf),
                seed=int(seed),
            )
        )
    return reports


def _two_model_transformed(m1, m2, t, n, seed, cutoff, combine):
    l1 = sample_marginal(m1, t, n, substream(seed, 0), cutoff=cutoff, log=True)
    l2 = sample_marginal(m2, t, n, substream(seed, 1), cutoff=cutoff, log=True)
    values, n_inf = to_neg_t_power(combine(l1, l2), t, log=True)
    return EmpiricalDistribution.from_values(values, n_inf)


def experiment_min_rule(m1, m2, t, n=DEFAULT_N, seed=0, *, cutoff=1e-6):
    """Sum of independent marginals, transformed: limit is Pareto(g1 + g2)."""
    if m1.known_gamma is None or m2.known_gamma is None:
        raise InvalidParameterError("both models need known indices")
    emp = _two_model_transformed(m1, m2, t, n, seed, cutoff, np.logaddexp)
    law = ParetoLaw(m1.known_gamma + m2.known_gamma)
    return KsReport(
        model=f"{m1.describe()}+{m2.describe()}",
        t=float(t), n=int(n), target=law.describe(),
        ks_statistic=ks_distance(emp, law.cdf), seed=int(seed),
    )


def experiment_product_rule(m1, m2, t, n=DEFAULT_N, seed=0, *, cutoff=1e-6):
    """Product of independent marginals, transformed: limit is the Pareto product law."""
    if m1.known_gamma is None or m2.known_gamma is None:
        raise InvalidParameterError("both models need known indices")
    emp = _two_model_transformed(m1, m2, t, n, seed, cutoff, lambda a, b: a + b)
    law = ParetoProductLaw(m1.known_gamma, m2.known_gamma)
    return KsReport(
        model=f"{m1.describe()}*{m2.describe()}",
        t=float(t), n=int(n), target=law.describe(),
        ks_statistic=ks_distance(emp, law.cdf), seed=int(seed),
    )


def experiment_affine(model, a, b, t, n=DEFAULT_N, seed=0, *, cutoff=1e-6):
    """KS of (a_t Y_t + b_t)**(-t) against min(a*Pareto, b), a_t = a**(-1/t)."""
    if a <= 1.0 or b <= 1.0:
        raise InvalidParameterError("a and b must exceed 1")
    if model.known_gamma is None:
        raise InvalidParameterError("model needs a known index")
    log_a_t = -np.log(a) / t
    log_b_t = -np.log(b) / t
    if np.exp(log_a_t) == 0.0 or np.exp(log_b_t) == 0.0:
        raise OutOfRangeError("a**(-1/t) underflows; increase t")
    log_y = sample_marginal(model, t, n, substream(seed, 0), cutoff=cutoff, log=True)
    combined = np.logaddexp(log_a_t + log_y, log_b_t)
    values, n_inf = to_neg_t_power(combined, t, log=True)
    emp = EmpiricalDistribution.from_values(values, n_inf)
    law = AffineMinLaw(a, b, model.known_gamma)
    return KsReport(
        model=f"affine(a={a:g},b={b:g},{model.describe()})",
        t=float(t), n=int(n), target=law.describe(),
        ks_statistic=ks_distance(emp, law.cdf), seed=int(seed),
    )


def experiment_mixture(model, q, t, n=DEFAULT_N, seed=0, *, cutoff=1e-6, jump_window=0.05):
    """Start the process at an independent level B (0 with probability q, else 1).

    The transformed statistic converges to a mixture: an atom of mass
    1-q at 1 plus q times the Pareto limit.  Returns the KS report and
    the empirical mass found in the window just below the atom.
    """
    if not (0.0 < q < 1.0):
        raise InvalidParameterError("q must lie in (0, 1)")
    if model.known_gamma is None:
        raise InvalidParameterError("model needs a known index")
    rng = substream(seed, 0)
    log_l = sample_marginal(model, t, n, rng, cutoff=cutoff, log=True)
    at_one = substream(seed, 1).random(n) >= q
    combined = np.where(at_one, np.logaddexp(log_l, 0.0), log_l)
    values, n_inf = to_neg_t_power(combined, t, log=True)
    emp = EmpiricalDistribution.from_values(values, n_inf)
    law = ParetoMixtureLaw(q, model.known_gamma)
    report = KsReport(
        model=f"mixture(q={q:g},{model.describe()})",
        t=float(t), n=int(n), target=law.describe(),
        ks_statistic=ks_distance(emp, law.cdf), seed=int(seed),
    )
    lo, hi = 1.0 - jump_window, 1.0 + 1e-9
    jump_mass = float(np.mean((values >= lo) & (values <= hi)) * values.size / emp.n_total)
    return report, jump_mass


@dataclass(frozen=True)
class DriftReport:
    model: str
    c: float
    t: float
    n: int
    fraction_within: float
    window: float
    seed: int


def experiment_drift(model, c, t, n=DEFAULT_N, seed=0, *, cutoff=1e-6, window=0.05):
    """Mass of (c*t + Y_t)**(-t) inside [1-window, 1+window].

    Drift collapses the limit to the point mass at 1, so the fraction
    should approach one as t shrinks.
    """
    if c <= 0:
        raise InvalidParameterError("drift rate must be positive")
    log_y = sample_marginal(model, t, n, substream(seed, 0), cutoff=cutoff, log=True)
    combined = np.logaddexp(np.log(c) + np.log(t), log_y)
    values, _ = to_neg_t_power(combined, t, log=True)
    inside = np.mean((values >= 1.0 - window) & (values <= 1.0 + window))
    return DriftReport(
        model=f"drift(c={c:g},{model.describe()})",
        c=float(c), t=float(t), n=int(n),
        fraction_within=float(inside), window=float(window), seed=int(seed),
    )


def support_check(samples, delta):
    """Empirical mass below 1 - delta; should vanish as t -> 0."""
    if not (0.0 < delta < 1.0):
        raise InvalidParameterError("delta must lie in (0, 1)")
    if isinstance(samples, EmpiricalDistribution):
        below = np.sum(samples.values < 1.0 - delta)
        return float(below / samples.n_total)
    arr = np.asarray(samples, dtype=float)
    return float(np.mean(arr < 1.0 - delta))


@dataclass(frozen=True)
class ErgodicEstimate:
    value: float
    stderr: float
    t: float
    n: int


def estimate_ergodic_functional(model, f, delta0, t, n, seed=0, *, cutoff=1e-6):
    """Monte Carlo estimate of E f(Y_t) / t, with standard error.

    For bounded continuous f vanishing on [0, delta0] this converges to
    the integral of f against the jump measure.  The cutoff must sit
    strictly below delta0, otherwise the dropped jumps bias the
    functional itself.
    """
    if delta0 <= cutoff:
        raise InvalidParameterError("need delta0 > cutoff, else the truncation biases f")
    rng = substream(seed, 0)
    if model.tail is not None and model.tail.inverse_tail is not None:
        # f ignores everything below delta0 > cutoff, so the truncated
        # path is exact for the functional and much cheaper at large n
        from .simulate import sample_cutoff_cp

        samples = sample_cutoff_cp(model.tail, cutoff, t, rng, n)
    else:
        samples = sample_marginal(model, t, n, rng, cutoff=cutoff)
    vals = np.asarray(f(samples), dtype=float)
    est = float(vals.mean() / t)
    stderr = float(vals.std(ddof=1) / (np.sqrt(n) * t))
    return ErgodicEstimate(value=est, stderr=stderr, t=float(t), n=int(n))


@dataclass(frozen=True)
class FamilyLimitReport:
    t_grid: np.ndarray
    deviations: np.ndarray

    @property
    def final(self):
        return float(self.deviations[-1])


def check_family_limit(family, t_grid=None, u_grid=None):
    """Deterministic check of psi_t(u**(1/t)) against 1 - F*(u) on a grid.

    Works for arbitrary families t -> psi_t (not only powers of one
    transform); requires the family to carry its limit CDF.
    """
    if family.limit_cdf is None:
        raise InvalidParameterError("family carries no limit CDF to compare against")
    t_arr = np.sort(np.asarray([1e-2, 1e-3, 1e-4] if t_grid is None else t_grid, dtype=float))[::-1]
    u_arr = np.asarray(np.geomspace(1.1, 10.0, 12) if u_grid is None else u_grid, dtype=float)
    if np.any(t_arr <= 0):
        raise InvalidParameterError("t grid must be positive")
    target = 1.0 - np.asarray(family.limit_cdf(u_arr), dtype=float)
    log_u = np.log(u_arr)
    deviations = np.empty_like(t_arr)
    for k, t in enumerate(t_arr):
        psi = np.asarray(family.psi_t_log(t, log_u / t), dtype=float)
        deviations[k] = np.max(np.abs(psi - target))
    return FamilyLimitReport(t_grid=t_arr, deviations=deviations)


def export_curve(emp: EmpiricalDistribution, cdf, path):
    """Write the ECDF-vs-target curve as CSV with columns x, ecdf, target."""
    targets = np.asarray(cdf(emp.values), dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "ecdf", "target"])
        for i, (x, tv) in enumerate(zip(emp.values, targets), start=1):
            writer.writerow([repr(float(x)), repr(i / emp.n_total), repr(float(tv))])
