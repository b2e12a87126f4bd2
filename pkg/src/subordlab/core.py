"""Domain types for driftless subordinators and their small-time limit laws.

A subordinator is described here by up to four interchangeable surfaces:
the Laplace exponent ``Phi``, the jump-intensity tail ``nu_bar``, the
time-1 marginal CDF ``F`` and its density ``f``.  This module holds the
container types plus the numerical bridges between those surfaces
(exponent from a jump density, exponent from a tail, Laplace transform
from a CDF).

Everything is evaluated in log-argument space where it matters: the
small-time statistic probes the exponent at ``s = u**(1/t)``, which
overflows any float for ``t`` below about 0.01, so every exponent carries
an ``eval_log`` map taking ``log s`` directly.

All types are immutable after construction and all operations are pure
functions; instances can be shared freely across threads.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import InvalidParameterError, NumericalFailure

__all__ = [
    "LaplaceExponent",
    "LevyTail",
    "SubordinatorModel",
    "ParetoLaw",
    "ExponentialLaw",
    "pareto_cdf",
    "pareto_quantile",
    "phi_from_levy",
    "phi_from_tail",
    "lst_from_cdf",
]

# Largest x with exp(-x) above the float64 subnormal floor; integrands
# weighted by exp(-x) are identically zero past this point.
_EXP_CUTOFF = 745.0


@dataclass(frozen=True)
class LaplaceExponent:
    """Bernstein function Phi with Phi(0) = 0, evaluated via log s.

    ``eval_log`` maps ell = log(s) to Phi(exp(ell)) and must stay accurate
    for ell far beyond log(float_max); it is the representation every
    criterion works through.  ``eval`` is the plain-argument view.
    """

    eval_log: Callable[[np.ndarray], np.ndarray]

    def eval(self, s):
        s_arr = np.asarray(s, dtype=float)
        if np.any(s_arr < 0):
            raise InvalidParameterError("Laplace exponent argument must be >= 0")
        out = np.zeros_like(s_arr)
        pos = s_arr > 0
        if np.any(pos):
            with np.errstate(divide="ignore"):
                out[pos] = self.eval_log(np.log(s_arr[pos]))
        return out if out.ndim else float(out)

    def __call__(self, s):
        return self.eval(s)


@dataclass(frozen=True)
class LevyTail:
    """Upper tail x -> nu((x, inf)) of a Levy measure on (0, inf).

    ``inverse_tail`` is the generalized inverse used by the cutoff
    compound-Poisson sampler; ``support_upper`` is the least x with
    nu_bar(x) = 0 (``inf`` when the measure has unbounded support).
    """

    tail: Callable[[np.ndarray], np.ndarray]
    inverse_tail: Optional[Callable[[np.ndarray], np.ndarray]] = None
    support_upper: float = np.inf

    def __call__(self, x):
        return self.tail(x)


@dataclass(frozen=True)
class SubordinatorModel:
    """A named driftless subordinator plus whatever surfaces it exposes.

    Only the surfaces a model genuinely has are populated; estimators
    dispatch on availability.  ``sampler``/``log_sampler`` draw the
    marginal at time t, the latter returning log(Y_t) so that downstream
    power transforms never underflow.  ``known_gamma`` is the Pareto
    index of the small-time limit when it is known in closed form.
    """

    name: str
    phi: Optional[LaplaceExponent] = None
    tail: Optional[LevyTail] = None
    cdf1: Optional[Callable] = None
    density1: Optional[Callable] = None
    sampler: Optional[Callable] = None
    log_sampler: Optional[Callable] = None
    levy_density: Optional[Callable] = None
    known_gamma: Optional[float] = None
    params: dict = field(default_factory=dict)
    limit_degenerate_at_1: bool = False

    def exposes(self):
        surfaces = []
        for attr in ("phi", "tail", "cdf1", "density1", "sampler"):
            if getattr(self, attr) is not None:
                surfaces.append(attr)
        return tuple(surfaces)

    def describe(self):
        if not self.params or "(" in self.name:
            return self.name
        inner = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.name}({inner})"


def pareto_cdf(gamma, x):
    """CDF of the Pareto law on [1, inf): 1 - x**(-gamma) for x >= 1."""
    if gamma <= 0:
        raise InvalidParameterError("Pareto index must be positive")
    x_arr = np.asarray(x, dtype=float)
    with np.errstate(invalid="ignore"):
        out = np.where(x_arr >= 1.0, -np.expm1(-gamma * np.log(np.maximum(x_arr, 1.0))), 0.0)
    out = np.where(np.isposinf(x_arr), 1.0, out)
    return out if out.ndim else float(out)


def pareto_quantile(gamma, p):
    """Inverse of ``pareto_cdf``: (1-p)**(-1/gamma) on p in [0, 1)."""
    if gamma <= 0:
        raise InvalidParameterError("Pareto index must be positive")
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr < 0) or np.any(p_arr > 1):
        raise InvalidParameterError("probability must lie in [0, 1]")
    if np.any(p_arr == 1.0):
        raise InvalidParameterError("quantile unbounded at p = 1")
    out = np.exp(-np.log1p(-p_arr) / gamma)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ParetoLaw:
    """Pareto limit law on [1, inf) with index gamma."""

    gamma: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise InvalidParameterError("Pareto index must be positive")

    def cdf(self, x):
        return pareto_cdf(self.gamma, x)

    def quantile(self, p):
        return pareto_quantile(self.gamma, p)

    def sample(self, n, rng):
        # inverse transform; 1 - U stays in (0, 1] so no log(0)
        return np.exp(-np.log1p(-rng.random(n)) / self.gamma)

    def describe(self):
        return f"Pareto(gamma={self.gamma:g})"


@dataclass(frozen=True)
class ExponentialLaw:
    """Exponential law with rate gamma, the generalized small-time limit."""

    gamma: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise InvalidParameterError("rate must be positive")

    def cdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        out = np.where(x_arr >= 0.0, -np.expm1(-self.gamma * np.minimum(x_arr, np.inf)), 0.0)
        out = np.where(np.isposinf(x_arr), 1.0, out)
        return out if out.ndim else float(out)

    def quantile(self, p):
        p_arr = np.asarray(p, dtype=float)
        if np.any(p_arr < 0) or np.any(p_arr >= 1):
            raise InvalidParameterError("probability must lie in [0, 1)")
        out = -np.log1p(-p_arr) / self.gamma
        return out if out.ndim else float(out)

    def sample(self, n, rng):
        return rng.exponential(scale=1.0 / self.gamma, size=n)

    def describe(self):
        return f"Exp(gamma={self.gamma:g})"


def _quad_piece(fn, a, b, epsabs, epsrel, op):
    # convergence is judged from the returned error estimate, not the warning
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(fn, a, b, epsabs=epsabs, epsrel=epsrel, limit=200)
    if not np.isfinite(val):
        raise NumericalFailure(f"{op}: quadrature returned non-finite value", op=op)
    return val, err


def phi_from_levy(levy_density, s, *, upper=np.inf, epsabs=1e-12, epsrel=1e-10):
    """Laplace exponent from a Levy density: integral of (1-exp(-s x)) nu'(x) dx.

    The integrand is split at the knee x = 1/s where 1 - exp(-s x) turns
    from linear growth into saturation; the small-argument factor is
    computed as -expm1(-s x), which is exact where the naive difference
    would cancel.  The caller asserts integrability of x nu'(x) near 0.
    """
    if s < 0:
        raise InvalidParameterError("rate s must be >= 0")
    if s == 0:
        return 0.0

    def integrand(x):
        return -np.expm1(-s * x) * levy_density(x)

    knee = 1.0 / s
    total = 0.0
    err_total = 0.0
    cut = min(knee, upper)
    if cut > 0:
        val, err = _quad_piece(integrand, 0.0, cut, epsabs, epsrel, "phi_from_levy")
        total += val
        err_total += err
    if upper > cut:
        hi = upper if np.isfinite(upper) else np.inf
        val, err = _quad_piece(integrand, cut, hi, epsabs, epsrel, "phi_from_levy")
        total += val
        err_total += err
    bound = max(epsabs, epsrel * abs(total)) * 100.0
    if err_total > max(bound, 1e-8 * abs(total)):
        raise NumericalFailure(
            f"phi_from_levy: quadrature error {err_total:.3e} exceeds tolerance",
            op="phi_from_levy",
            achieved=err_total,
        )
    return total


def phi_from_tail(tail: LevyTail, s, *, epsabs=1e-12, epsrel=1e-10):
    """Laplace exponent from the tail: integral of exp(-x) nu_bar(x/s) dx.

    The upper limit is capped where exp(-x) drives the integrand below
    any representable contribution (x = 745, or earlier when the tail's
    support ends at s * support_upper).
    """
    if s < 0:
        raise InvalidParameterError("rate s must be >= 0")
    if s == 0:
        return 0.0

    def integrand(x):
        return np.exp(-x) * float(tail.tail(x / s))

    x_max = _EXP_CUTOFF
    if np.isfinite(tail.support_upper):
        x_max = min(x_max, s * tail.support_upper)
    if x_max <= 0:
        return 0.0
    # the tail factor varies on the x ~ s scale, the exponential on x ~ 1;
    # breaking at both keeps the adaptive pass from overlooking a narrow spike
    breaks = sorted({x_max} | {b for b in (min(s, 1.0), 1.0) if 0.0 < b < x_max})
    total = 0.0
    err = 0.0
    lo = 0.0
    for hi in breaks:
        v, e = _quad_piece(integrand, lo, hi, epsabs, epsrel, "phi_from_tail")
        total += v
        err += e
        lo = hi
    bound = max(epsabs, epsrel * abs(total)) * 100.0
    if err > max(bound, 1e-8 * abs(total)):
        raise NumericalFailure(
            f"phi_from_tail: quadrature error {err:.3e} exceeds tolerance",
            op="phi_from_tail",
            achieved=err,
        )
    return total


def lst_from_cdf(cdf, s, *, epsabs=1e-12, epsrel=1e-10):
    """Laplace-Stieltjes transform of a CDF via psi(s) = s * integral e^{-sx} F(x) dx.

    Substituting u = s x turns this into integral of e^{-u} F(u/s) du,
    a bounded integrand on [0, 745].  Moderate rates only (s <= 1e6);
    far larger rates need the exponent-side representations.
    """
    if s < 0:
        raise InvalidParameterError("rate s must be >= 0")
    if s == 0:
        return 1.0
    if s > 1e6:
        raise InvalidParameterError("lst_from_cdf is restricted to s <= 1e6")

    def integrand(u):
        return np.exp(-u) * float(cdf(u / s))

    total, err = _quad_piece(integrand, 0.0, _EXP_CUTOFF, epsabs, epsrel, "lst_from_cdf")
    if err > max(epsabs, epsrel * abs(total)) * 100.0:
        raise NumericalFailure(
            f"lst_from_cdf: quadrature error {err:.3e} exceeds tolerance",
            op="lst_from_cdf",
            achieved=err,
        )
    return min(max(total, 0.0), 1.0)
