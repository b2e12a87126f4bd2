"""Model algebra: exponential tilting, subordination, independent sums, drift.

Every transform acts at the Laplace-exponent level and returns a fresh
immutable model.  Composed and summed models carry exponents (plus
samplers and tails where they survive the operation); marginal CDFs and
densities do not transform cheaply and are dropped, so criteria
dispatch falls through to the exponent route.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .core import LaplaceExponent, LevyTail, SubordinatorModel
from .criteria import _affine_fit, _DEFAULT_LOG_S
from .errors import DegenerateModelError, InvalidParameterError, UnsupportedModelError

__all__ = ["tilt", "compose_outer", "compose_inner", "add", "add_drift"]


def _require_phi(model):
    if model.phi is None:
        raise UnsupportedModelError(f"model {model.name!r} carries no Laplace exponent")
    return model.phi


def _require_nondegenerate(model):
    phi = _require_phi(model)
    if float(phi.eval(1.0)) < 1e-15 and float(phi.eval(100.0)) < 1e-15:
        raise DegenerateModelError(f"model {model.name!r} is the null subordinator")
    return phi


def tilt(model: SubordinatorModel, theta):
    """Exponential tilting: exponent s -> Phi(theta + s) - Phi(theta).

    The jump measure picks up the factor exp(-theta*x), which leaves the
    log-scale tail behavior (and hence the limit index) untouched.
    theta = 0 is the identity.
    """
    if theta < 0:
        raise InvalidParameterError("tilting parameter must be >= 0")
    if theta == 0:
        return model
    phi = _require_phi(model)
    phi_at_theta = float(phi.eval(theta))
    if not np.isfinite(phi_at_theta):
        raise InvalidParameterError("Phi(theta) must be finite")
    log_theta = math.log(theta)

    def eval_log(ell):
        return phi.eval_log(np.logaddexp(log_theta, np.asarray(ell, dtype=float))) - phi_at_theta

    new_tail = None
    new_density = None
    if model.levy_density is not None:
        base_density = model.levy_density
        upper = model.tail.support_upper if model.tail is not None else np.inf

        def new_density(x):
            x_arr = np.asarray(x, dtype=float)
            return np.exp(-theta * x_arr) * base_density(x_arr)

        def tilted_tail(x):
            x_arr = np.atleast_1d(np.asarray(x, dtype=float))
            hi = upper if np.isfinite(upper) else np.inf
            out = np.array(
                [integrate.quad(new_density, float(v), hi, limit=200)[0] for v in x_arr]
            )
            return out if np.asarray(x).ndim else float(out[0])

        new_tail = LevyTail(tail=tilted_tail, support_upper=upper)

    return SubordinatorModel(
        name=f"tilt({model.describe()},theta={theta:g})",
        phi=LaplaceExponent(eval_log=eval_log),
        tail=new_tail,
        levy_density=new_density,
        known_gamma=model.known_gamma,
        params={"base": model.describe(), "theta": theta},
    )


def _detect_limit(values_fn, w_fn, grid=_DEFAULT_LOG_S):
    """Extrapolated limit of a ratio sequence, or None when it degenerates.

    Only the deepest grid points enter the fit: the ratios here can carry
    power-law corrections that would bias an affine fit over the shallow
    region, while near the limit they are already flat.
    """
    ratios = np.asarray(values_fn(grid), dtype=float)
    if not np.all(np.isfinite(ratios)):
        return None
    if np.all(np.diff(ratios) > 0) and ratios[-1] > 10.0 * max(abs(ratios[0]), 1e-300):
        return None
    deep = slice(-4, None)
    intercept, _ = _affine_fit(np.asarray(w_fn(grid), dtype=float)[deep], ratios[deep])
    if intercept <= 0.01 or (ratios[0] > 0 and ratios[-1] < 0.6 * ratios[0]):
        return None
    return float(intercept)


def _composed(front, back, name, known_gamma):
    front_phi, back_phi = front.phi, back.phi

    def eval_log(ell):
        inner_vals = np.asarray(back_phi.eval_log(np.asarray(ell, dtype=float)), dtype=float)
        return front_phi.eval(inner_vals)

    return SubordinatorModel(
        name=name,
        phi=LaplaceExponent(eval_log=eval_log),
        known_gamma=known_gamma,
        params={"front": front.describe(), "back": back.describe()},
    )


def compose_outer(outer: SubordinatorModel, inner: SubordinatorModel):
    """Time-change the inner process by the outer one: exponent Phi(phi(s)).

    When log(phi(s))/log(s) has a positive limit delta and the outer
    model has a known index gamma, the composition's index is
    gamma * delta; otherwise it is left unknown.
    """
    _require_nondegenerate(outer)
    phi_inner = _require_nondegenerate(inner)
    delta = _detect_limit(
        lambda grid: np.log(np.asarray(phi_inner.eval_log(grid), dtype=float)) / grid,
        lambda grid: 1.0 / grid,
    )
    known = None
    if delta is not None and outer.known_gamma is not None:
        known = outer.known_gamma * delta
    return _composed(
        outer, inner, f"compose_outer({outer.describe()},{inner.describe()})", known
    )


def compose_inner(outer: SubordinatorModel, inner: SubordinatorModel):
    """Run the inner process on the outer one's clock: exponent phi(Phi(s)).

    The index multiplies by delta = limit of phi(s)/s when that limit is
    positive and finite (zero kills the limit and leaves the index
    unknown); the base index comes from the inner model.
    """
    phi_outer = _require_nondegenerate(outer)
    _require_nondegenerate(inner)
    delta = _detect_limit(
        lambda grid: np.asarray(phi_outer.eval_log(grid), dtype=float) / np.exp(grid),
        lambda grid: 1.0 / grid,
    )
    known = None
    if delta is not None and inner.known_gamma is not None:
        known = inner.known_gamma * delta
    return _composed(
        outer, inner, f"compose_inner({outer.describe()},{inner.describe()})", known
    )


def add(m1: SubordinatorModel, m2: SubordinatorModel):
    """Independent sum: exponents add, tails add, samplers add.

    The minimum of independent Pareto limits is Pareto with summed
    indices, so known indices add as well.
    """
    phi1 = _require_nondegenerate(m1)
    phi2 = _require_nondegenerate(m2)

    def eval_log(ell):
        ell_arr = np.asarray(ell, dtype=float)
        return np.asarray(phi1.eval_log(ell_arr), dtype=float) + np.asarray(
            phi2.eval_log(ell_arr), dtype=float
        )

    new_tail = None
    if m1.tail is not None and m2.tail is not None:
        t1, t2 = m1.tail, m2.tail

        def tail(x):
            return np.asarray(t1.tail(x), dtype=float) + np.asarray(t2.tail(x), dtype=float)

        new_tail = LevyTail(tail=tail, support_upper=max(t1.support_upper, t2.support_upper))

    sampler = None
    log_sampler = None
    if m1.sampler is not None and m2.sampler is not None:
        s1, s2 = m1.sampler, m2.sampler

        def sampler(t, n, rng):
            return s1(t, n, rng) + s2(t, n, rng)

    if m1.log_sampler is not None and m2.log_sampler is not None:
        ls1, ls2 = m1.log_sampler, m2.log_sampler

        def log_sampler(t, n, rng):
            return np.logaddexp(ls1(t, n, rng), ls2(t, n, rng))

    known = None
    if m1.known_gamma is not None and m2.known_gamma is not None:
        known = m1.known_gamma + m2.known_gamma

    return SubordinatorModel(
        name=f"add({m1.describe()},{m2.describe()})",
        phi=LaplaceExponent(eval_log=eval_log),
        tail=new_tail,
        sampler=sampler,
        log_sampler=log_sampler,
        known_gamma=known,
        params={"left": m1.describe(), "right": m2.describe()},
    )


def add_drift(model: SubordinatorModel, c):
    """Add deterministic drift c*t: exponent Phi(s) + c*s.

    Drift destroys the power-transform limit (the statistic collapses to
    the point mass at 1), so the known index is cleared and the model is
    flagged as limit-degenerate.
    """
    if c <= 0:
        raise InvalidParameterError("drift rate must be positive")
    phi = _require_phi(model)

    def eval_log(ell):
        ell_arr = np.asarray(ell, dtype=float)
        with np.errstate(over="ignore"):
            return np.asarray(phi.eval_log(ell_arr), dtype=float) + c * np.exp(ell_arr)

    sampler = None
    log_sampler = None
    if model.sampler is not None:
        base = model.sampler

        def sampler(t, n, rng):
            return c * t + base(t, n, rng)

    if model.log_sampler is not None:
        base_log = model.log_sampler

        def log_sampler(t, n, rng):
            return np.logaddexp(math.log(c) + math.log(t), base_log(t, n, rng))

    return SubordinatorModel(
        name=f"drift({model.describe()},c={c:g})",
        phi=LaplaceExponent(eval_log=eval_log),
        sampler=sampler,
        log_sampler=log_sampler,
        params={"base": model.describe(), "c": c},
        limit_degenerate_at_1=True,
    )
