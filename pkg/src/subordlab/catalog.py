"""Constructors for the concrete subordinator models and parametric families.

Each model carries only the surfaces it genuinely has in closed form
(exponent, tail, time-1 CDF/density, exact sampler) together with its
known small-time Pareto index where one exists.  Estimators dispatch on
availability, so a model with only a CDF is still fully usable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy import special as sc

from .core import LaplaceExponent, LevyTail, SubordinatorModel
from .dickman import make_dickman
from .errors import InvalidParameterError

__all__ = [
    "GeneralFamily",
    "ThorinMeasure",
    "make_gamma",
    "make_stable",
    "make_bessel",
    "make_thorin",
    "make_thorin_uniform",
    "make_weibull",
    "make_pareto_type",
    "make_fdist",
    "make_half_cauchy",
    "make_log_power",
    "make_stable_nef",
    "CATALOG",
    "build_model",
]

_EULER = 0.57721566490153286
_ZETA3 = 1.2020569031595943
# moments of (-log x) under the unit exponential on (0, inf)
_NEG_LOG_MOMENTS = (
    1.0,
    _EULER,
    _EULER**2 + math.pi**2 / 6.0,
    _EULER**3 + _EULER * math.pi**2 / 2.0 + 2.0 * _ZETA3,
)


@dataclass(frozen=True)
class GeneralFamily:
    """Parametric family t -> psi_t(u), not necessarily of power form.

    ``psi_t_log`` evaluates psi_t at u = exp(log_u) so the family can be
    probed at u**(1/t) for arbitrarily small t.  ``limit_cdf`` is the
    known limit distribution used for validation, when available.
    """

    name: str
    psi_t: Callable[[float, np.ndarray], np.ndarray]
    psi_t_log: Callable[[float, np.ndarray], np.ndarray]
    limit_cdf: Optional[Callable] = None
    params: dict = None

    def describe(self):
        if not self.params:
            return self.name
        inner = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.name}({inner})"


@dataclass(frozen=True)
class ThorinMeasure:
    """Finite discrete mixing measure: atoms (location y_i >= 0, mass m_i > 0)."""

    locations: tuple
    masses: tuple

    def __post_init__(self):
        if len(self.locations) != len(self.masses) or not self.locations:
            raise InvalidParameterError("need matching, nonempty atom locations and masses")
        if any(m <= 0 for m in self.masses):
            raise InvalidParameterError("atom masses must be positive")
        if any(y < 0 or not np.isfinite(y) for y in self.locations):
            raise InvalidParameterError("atom locations must be finite and >= 0")

    @property
    def total_mass(self):
        return float(sum(self.masses))


def _require_positive(**kwargs):
    for name, value in kwargs.items():
        if not (value > 0) or not np.isfinite(value):
            raise InvalidParameterError(f"{name} must be positive and finite, got {value!r}")


def _gamma_inverse_tail_factory(gamma, lam):
    """Generalized inverse of x -> gamma * E1(lam * x) by safeguarded Newton.

    Seeds from the two asymptotic regimes of E1 and polishes in log-x
    space, where the derivative is simply -gamma * exp(-lam * x).
    """

    def inverse_tail(y):
        y_arr = np.atleast_1d(np.asarray(y, dtype=float))
        target = y_arr / gamma
        # E1(z) ~ -euler - log z near 0, ~ exp(-z)/z at infinity
        z = np.where(target > 1.0, np.exp(-target - _EULER), 1.0)
        big = target <= 1.0
        if np.any(big):
            guess = -np.log(np.maximum(target[big], 1e-300))
            guess = np.maximum(guess, 1e-12)
            z[big] = guess
        u = np.log(z)
        for _ in range(60):
            ez = np.exp(u)
            g = sc.exp1(ez) - target
            step = g / np.exp(-ez)
            step = np.clip(step, -2.0, 2.0)
            u = u + step
            if np.max(np.abs(step)) < 1e-14:
                break
        out = np.exp(u) / lam
        return out if np.asarray(y).ndim else float(out[0])

    return inverse_tail


def make_gamma(gamma, lam):
    """Gamma subordinator: exponent gamma*log(1 + s/lam), marginal Gamma(t*gamma, lam).

    The marginal sampler must stay correct for shapes t*gamma far below 1,
    the regime every small-time experiment lives in.  It therefore draws
    log(Y_t) = log(Gamma(shape+1)) + log(U)/shape - log(lam), using the
    exact boost identity Gamma(a) = Gamma(a+1) * U**(1/a); the linear-space
    equivalent underflows to zero once shape drops below ~0.005.
    """
    _require_positive(gamma=gamma, lam=lam)
    log_lam = math.log(lam)

    def eval_log(ell):
        return gamma * np.logaddexp(0.0, np.asarray(ell, dtype=float) - log_lam)

    def cdf1(x):
        return sc.gammainc(gamma, lam * np.asarray(x, dtype=float))

    def density1(x):
        x_arr = np.asarray(x, dtype=float)
        log_f = (
            (gamma - 1.0) * np.log(x_arr)
            + gamma * log_lam
            - lam * x_arr
            - sc.gammaln(gamma)
        )
        out = np.exp(log_f)
        return out if out.ndim else float(out)

    def tail(x):
        return gamma * sc.exp1(lam * np.asarray(x, dtype=float))

    def levy_density(x):
        x_arr = np.asarray(x, dtype=float)
        return gamma * np.exp(-lam * x_arr) / x_arr

    def log_sampler(t, n, rng):
        shape = t * gamma
        if shape >= 1.0:
            return np.log(rng.gamma(shape, size=n)) - log_lam
        boost = rng.gamma(shape + 1.0, size=n)
        u = 1.0 - rng.random(n)  # in (0, 1], keeps the log finite
        return np.log(boost) + np.log(u) / shape - log_lam

    def sampler(t, n, rng):
        return np.exp(log_sampler(t, n, rng))

    return SubordinatorModel(
        name="gamma",
        phi=LaplaceExponent(eval_log=eval_log),
        tail=LevyTail(tail=tail, inverse_tail=_gamma_inverse_tail_factory(gamma, lam)),
        cdf1=cdf1,
        density1=density1,
        sampler=sampler,
        log_sampler=log_sampler,
        levy_density=levy_density,
        known_gamma=float(gamma),
        params={"gamma": gamma, "lam": lam},
    )


def make_stable(a, alpha):
    """Positive alpha-stable subordinator with exponent a * s**alpha.

    Sampling uses Kanter's exact representation of the one-sided stable
    law S with E exp(-u S) = exp(-u**alpha):

        S = sin(alpha pi V) * sin((1-alpha) pi V)**((1-alpha)/alpha)
            / (sin(pi V)**(1/alpha) * W**((1-alpha)/alpha)),

    V uniform on (0,1) and W unit exponential, then Y_t = (a t)**(1/alpha) S.
    The small-time limit degenerates at 1 (no finite Pareto index), so
    known_gamma is absent.
    """
    _require_positive(a=a)
    if not (0.0 < alpha < 1.0):
        raise InvalidParameterError("stability index must lie in (0, 1)")

    def eval_log(ell):
        with np.errstate(over="ignore"):
            return a * np.exp(alpha * np.asarray(ell, dtype=float))

    ratio = (1.0 - alpha) / alpha

    def log_sampler(t, n, rng):
        v = rng.random(n)
        v = np.where(v == 0.0, 2.0**-53, v)
        w = rng.exponential(size=n)
        w = np.maximum(w, 5e-324)
        log_s = (
            np.log(np.sin(alpha * np.pi * v))
            + ratio * np.log(np.sin((1.0 - alpha) * np.pi * v))
            - np.log(np.sin(np.pi * v)) / alpha
            - ratio * np.log(w)
        )
        return np.log(a * t) / alpha + log_s

    def sampler(t, n, rng):
        return np.exp(log_sampler(t, n, rng))

    return SubordinatorModel(
        name="stable",
        phi=LaplaceExponent(eval_log=eval_log),
        sampler=sampler,
        log_sampler=log_sampler,
        params={"a": a, "alpha": alpha},
    )


def make_bessel():
    """Subordinator with exponent log(1 + s + sqrt(s^2 + 2 s)).

    The conjugate form keeps the value positive and cancellation-free;
    the time-1 density exp(-x) I_1(x) / x is expressed through the
    scaled Bessel function so it survives large x.
    """

    def eval_log(ell):
        ell_arr = np.asarray(ell, dtype=float)
        out = np.empty_like(ell_arr)
        small = ell_arr <= 0.0
        if np.any(small):
            s = np.exp(ell_arr[small])
            out[small] = np.log1p(s + np.sqrt(s * (s + 2.0)))
        if np.any(~small):
            e = np.exp(-ell_arr[~small])
            out[~small] = ell_arr[~small] + np.log(
                2.0 + e + np.expm1(0.5 * np.log1p(2.0 * e))
            )
        return out if out.ndim else float(out)

    def density1(x):
        x_arr = np.asarray(x, dtype=float)
        out = np.where(x_arr > 0, sc.ive(1.0, x_arr) / np.where(x_arr > 0, x_arr, 1.0), 0.5)
        return out if out.ndim else float(out)

    return SubordinatorModel(
        name="bessel",
        phi=LaplaceExponent(eval_log=eval_log),
        density1=density1,
        known_gamma=1.0,
        params={},
    )


def make_thorin(measure: ThorinMeasure):
    """Generalized gamma convolution with a finite discrete Thorin measure.

    Each atom (y, m) contributes a gamma component m*log(1 + s/y); an atom
    at y = 0 would make the jump density non-integrable and is rejected.
    The Pareto index is the total mass.
    """
    if any(y == 0 for y in measure.locations):
        raise InvalidParameterError("Thorin atom at 0 gives a non-integrable jump density")
    locs = np.asarray(measure.locations, dtype=float)
    masses = np.asarray(measure.masses, dtype=float)
    log_locs = np.log(locs)

    def eval_log(ell):
        ell_arr = np.asarray(ell, dtype=float)
        terms = masses * np.logaddexp(0.0, ell_arr[..., None] - log_locs)
        out = terms.sum(axis=-1)
        return out if out.ndim else float(out)

    def tail(x):
        x_arr = np.asarray(x, dtype=float)
        out = (masses * sc.exp1(np.multiply.outer(x_arr, locs))).sum(axis=-1)
        return out if out.ndim else float(out)

    def levy_density(x):
        x_arr = np.asarray(x, dtype=float)
        out = (masses * np.exp(-np.multiply.outer(x_arr, locs))).sum(axis=-1) / x_arr
        return out if out.ndim else float(out)

    return SubordinatorModel(
        name="thorin",
        phi=LaplaceExponent(eval_log=eval_log),
        tail=LevyTail(tail=tail),
        levy_density=levy_density,
        known_gamma=measure.total_mass,
        params={"atoms": tuple(zip(measure.locations, measure.masses))},
    )


def make_thorin_uniform(gamma):
    """Thorin measure uniform on (0, gamma): exponent
    (s+gamma)log(s+gamma) - s log s - gamma log gamma, jump density
    (1 - exp(-gamma x)) / x**2.
    """
    _require_positive(gamma=gamma)
    log_g = math.log(gamma)

    def eval_log(ell):
        ell_arr = np.asarray(ell, dtype=float)
        out = np.empty_like(ell_arr)
        big = ell_arr > 700.0
        if np.any(big):
            out[big] = gamma * (1.0 + ell_arr[big] - log_g)
        rest = ~big
        if np.any(rest):
            e = ell_arr[rest]
            s = np.exp(e)
            # s*log(1 + gamma/s) + gamma*log(s + gamma) - gamma*log(gamma)
            out[rest] = (
                s * np.logaddexp(0.0, log_g - e)
                + gamma * np.logaddexp(log_g, e)
                - gamma * log_g
            )
        return out if out.ndim else float(out)

    def tail(x):
        x_arr = np.asarray(x, dtype=float)
        return -np.expm1(-gamma * x_arr) / x_arr + gamma * sc.exp1(gamma * x_arr)

    def levy_density(x):
        x_arr = np.asarray(x, dtype=float)
        return -np.expm1(-gamma * x_arr) / x_arr**2

    return SubordinatorModel(
        name="thorin_uniform",
        phi=LaplaceExponent(eval_log=eval_log),
        tail=LevyTail(tail=tail),
        levy_density=levy_density,
        known_gamma=float(gamma),
        params={"gamma": gamma},
    )


def make_weibull(gamma):
    """Weibull time-1 marginal F(x) = 1 - exp(-x**gamma); CDF/density only."""
    _require_positive(gamma=gamma)

    def cdf1(x):
        return -np.expm1(-np.asarray(x, dtype=float) ** gamma)

    def density1(x):
        x_arr = np.asarray(x, dtype=float)
        return gamma * x_arr ** (gamma - 1.0) * np.exp(-(x_arr**gamma))

    return SubordinatorModel(
        name="weibull",
        cdf1=cdf1,
        density1=density1,
        known_gamma=float(gamma),
        params={"gamma": gamma},
    )


def make_pareto_type(a):
    """Density a / (1+x)**(a+1); the density is positive at 0, so the index is 1."""
    _require_positive(a=a)

    def cdf1(x):
        return -np.expm1(-a * np.log1p(np.asarray(x, dtype=float)))

    def density1(x):
        return a * np.exp(-(a + 1.0) * np.log1p(np.asarray(x, dtype=float)))

    return SubordinatorModel(
        name="pareto_type",
        cdf1=cdf1,
        density1=density1,
        known_gamma=1.0,
        params={"a": a},
    )


def make_fdist(a, b):
    """Beta-prime style density x**(b-1) (1+x)**(-a-b) / B(a, b); index b."""
    _require_positive(a=a, b=b)
    log_norm = sc.gammaln(a + b) - sc.gammaln(a) - sc.gammaln(b)

    def cdf1(x):
        x_arr = np.asarray(x, dtype=float)
        return sc.betainc(b, a, x_arr / (1.0 + x_arr))

    def density1(x):
        x_arr = np.asarray(x, dtype=float)
        return np.exp(log_norm + (b - 1.0) * np.log(x_arr) - (a + b) * np.log1p(x_arr))

    return SubordinatorModel(
        name="fdist",
        cdf1=cdf1,
        density1=density1,
        known_gamma=float(b),
        params={"a": a, "b": b},
    )


def make_half_cauchy():
    """Cauchy folded onto (0, inf): density (2/pi) / (1 + x^2); index 1."""

    def cdf1(x):
        return (2.0 / np.pi) * np.arctan(np.asarray(x, dtype=float))

    def density1(x):
        return (2.0 / np.pi) / (1.0 + np.asarray(x, dtype=float) ** 2)

    return SubordinatorModel(
        name="half_cauchy",
        cdf1=cdf1,
        density1=density1,
        known_gamma=1.0,
        params={},
    )


def make_log_power(gamma, power=3):
    """Tail gamma * (-log x)**power on (0, 1], the slowly-varying test model.

    This model has no Pareto limit (its tail dominates every -gamma*log x),
    so known_gamma stays empty; it converges instead under the generalized
    statistic t*L(Y_t) with L(x) = (-log x)**power and rate gamma.  The
    exponent is quadrature below s = 1e6 and the exact log-moment
    polynomial above, where the truncated remainder is below 1e-300.
    """
    _require_positive(gamma=gamma)
    if power not in (1, 3):
        raise InvalidParameterError("power must be 1 or 3 (odd, tabulated moments)")

    def tail(x):
        x_arr = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(x_arr < 1.0, gamma * (-np.log(np.minimum(x_arr, 1.0))) ** power, 0.0)
        return out if out.ndim else float(out)

    def inverse_tail(y):
        y_arr = np.asarray(y, dtype=float)
        out = np.exp(-((y_arr / gamma) ** (1.0 / power)))
        return out if out.ndim else float(out)

    def levy_density(x):
        x_arr = np.asarray(x, dtype=float)
        out = np.where(
            x_arr <= 1.0, gamma * power * (-np.log(x_arr)) ** (power - 1) / x_arr, 0.0
        )
        return out if out.ndim else float(out)

    coeffs = [math.comb(power, k) * _NEG_LOG_MOMENTS[k] for k in range(power + 1)]

    def _phi_one(ell):
        if ell >= math.log(1e6):
            return gamma * sum(c * ell ** (power - k) for k, c in enumerate(coeffs))
        s = math.exp(ell)
        hi = min(s, 745.0)  # exp(-x) kills everything beyond
        fn = lambda x: math.exp(-x) * gamma * (ell - math.log(x)) ** power
        cut = min(1.0, hi / 2.0)
        val = integrate.quad(fn, 0.0, cut, limit=200)[0]
        val += integrate.quad(fn, cut, hi, limit=200)[0]
        return val

    def eval_log(ell):
        ell_arr = np.asarray(ell, dtype=float)
        out = np.array([_phi_one(float(e)) for e in np.atleast_1d(ell_arr)])
        return out.reshape(ell_arr.shape) if ell_arr.ndim else float(out[0])

    return SubordinatorModel(
        name="log_power",
        phi=LaplaceExponent(eval_log=eval_log),
        tail=LevyTail(tail=tail, inverse_tail=inverse_tail, support_upper=1.0),
        levy_density=levy_density,
        params={"gamma": gamma, "power": power},
    )


def make_stable_nef(a, theta):
    """Exponential family over the positive stable laws, transform
    exp(-a[(theta+u)^t - theta^t]).  Limit CDF is the unit-shifted
    exponential 1 - exp(-a(x-1)) on x >= 1.
    """
    _require_positive(a=a)
    if theta <= 0:
        raise InvalidParameterError("theta must be positive (theta = 0 loses the monotone transform)")
    log_theta = math.log(theta)

    def psi_t_log(t, log_u):
        lu = np.asarray(log_u, dtype=float)
        lt = np.logaddexp(log_theta, lu)
        out = np.exp(-a * (np.exp(t * lt) - np.exp(t * log_theta)))
        return out if out.ndim else float(out)

    def psi_t(t, u):
        u_arr = np.asarray(u, dtype=float)
        out = np.where(
            u_arr > 0,
            psi_t_log(t, np.log(np.maximum(u_arr, 1e-300))),
            1.0,
        )
        return out if out.ndim else float(out)

    def limit_cdf(x):
        x_arr = np.asarray(x, dtype=float)
        out = np.where(x_arr >= 1.0, -np.expm1(-a * (np.minimum(x_arr, 1e300) - 1.0)), 0.0)
        out = np.where(np.isposinf(x_arr), 1.0, out)
        return out if out.ndim else float(out)

    return GeneralFamily(
        name="stable_nef",
        psi_t=psi_t,
        psi_t_log=psi_t_log,
        limit_cdf=limit_cdf,
        params={"a": a, "theta": theta},
    )


# name -> (factory, parameter schema, exposed surfaces) for the CLI
CATALOG = {
    "gamma": (make_gamma, {"gamma": "float > 0", "lam": "float > 0"},
              ("phi", "tail", "cdf1", "density1", "sampler")),
    "stable": (make_stable, {"a": "float > 0", "alpha": "float in (0,1)"},
               ("phi", "sampler")),
    "bessel": (make_bessel, {}, ("phi", "density1")),
    "thorin_uniform": (make_thorin_uniform, {"gamma": "float > 0"}, ("phi", "tail")),
    "weibull": (make_weibull, {"gamma": "float > 0"}, ("cdf1", "density1")),
    "pareto_type": (make_pareto_type, {"a": "float > 0"}, ("cdf1", "density1")),
    "fdist": (make_fdist, {"a": "float > 0", "b": "float > 0"}, ("cdf1", "density1")),
    "half_cauchy": (make_half_cauchy, {}, ("cdf1", "density1")),
    "dickman": (make_dickman, {"gamma": "float > 0"},
                ("phi", "tail", "density1", "sampler")),
    "log_power": (make_log_power, {"gamma": "float > 0", "power": "1 or 3"},
                  ("phi", "tail")),
}


def build_model(name, params=None):
    """Instantiate a catalog model by name; unknown names raise InvalidParameterError."""
    if name not in CATALOG:
        raise InvalidParameterError(f"unknown model {name!r}; known: {sorted(CATALOG)}")
    factory, _, _ = CATALOG[name]
    return factory(**(params or {}))
