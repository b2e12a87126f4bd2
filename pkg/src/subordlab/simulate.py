"""Marginal samplers and the log-space transforms of the sampled values.

Exact samplers are used whenever a model has one; everything else goes
through the cutoff compound-Poisson construction: jumps below a cutoff
eps are dropped (no drift compensation, since adding drift would change
the model class) and the remaining jumps arrive Poisson(t * nu_bar(eps))
with sizes drawn by inverting the tail.  The dropped mass biases the
mean down by t * integral of x d nu over (0, eps); callers see the bias,
it is never silently absorbed.

Transformed statistics are computed in log space: y**(-t) as
exp(-t*log y), so a sample like exp(1e4) poses no problem, and exact
zeros (possible on the compound-Poisson void path) land in a separate
at-infinity bucket that downstream ECDF comparisons treat as exceeding
every finite threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .catalog import build_model
from .core import SubordinatorModel, LevyTail
from .errors import InvalidParameterError, UnsupportedModelError

__all__ = [
    "RngState",
    "SamplePlan",
    "substream",
    "sample_marginal",
    "sample_cutoff_cp",
    "to_neg_t_power",
    "to_tl",
]


def substream(seed, stream):
    """Independent, reproducible generator for (seed, stream index)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class RngState:
    """Addressable substream: same (seed, stream) always replays the same draws."""

    seed: int
    stream: int = 0

    def generator(self):
        return substream(self.seed, self.stream)


@dataclass(frozen=True)
class SamplePlan:
    """Everything needed to reproduce one marginal sample batch."""

    model: str
    params: dict = field(default_factory=dict)
    t: float = 1.0
    n: int = 1
    cutoff: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParameterError("sample count must be >= 1")
        if not (0.0 < self.cutoff < 1.0):
            raise InvalidParameterError("cutoff must lie in (0, 1)")
        if self.t <= 0:
            raise InvalidParameterError("time must be positive")

    def resolve(self) -> SubordinatorModel:
        return build_model(self.model, self.params)

    def run(self):
        model = self.resolve()
        rng = substream(self.seed, 0)
        return sample_marginal(model, self.t, self.n, rng, cutoff=self.cutoff)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def sample_cutoff_cp(tail: LevyTail, eps, t, rng, n=1):
    """Cutoff compound-Poisson batch: sum of Poisson(t*nu_bar(eps)) jumps above eps.

    Jumps are inverse-transform draws, inverse_tail(U * nu_bar(eps)).
    Exact zeros occur with probability exp(-t*nu_bar(eps)) (the void
    path) and are legitimate samples.  Mean bias vs. the true marginal
    is -t * integral_0^eps x dnu(x).
    """
    if tail.inverse_tail is None:
        raise UnsupportedModelError("tail has no inverse; cannot draw jumps")
    if not (0.0 < eps < tail.support_upper):
        raise InvalidParameterError("cutoff must lie inside the jump support")
    nu_eps = float(tail.tail(eps))
    if not np.isfinite(nu_eps) or nu_eps <= 0:
        raise InvalidParameterError(f"invalid cutoff: nu_bar(eps) = {nu_eps!r}")
    counts = rng.poisson(t * nu_eps, n)
    total = int(counts.sum())
    sums = np.zeros(n)
    if total:
        jumps = np.asarray(tail.inverse_tail(rng.random(total) * nu_eps), dtype=float)
        owner = np.repeat(np.arange(n), counts)
        sums = np.bincount(owner, weights=jumps, minlength=n)
    return sums


def sample_marginal(model: SubordinatorModel, t, n, rng, *, cutoff=1e-6, log=False):
    """Draw n values of Y_t: exact sampler if the model has one, else cutoff CP.

    With ``log=True`` the batch is returned as log(Y_t); exact samplers
    produce it natively (no underflow, no zeros), the compound-Poisson
    path maps its void zeros to -inf.
    """
    if t <= 0:
        raise InvalidParameterError("time must be positive")
    if log and model.log_sampler is not None:
        return model.log_sampler(t, n, rng)
    if model.sampler is not None:
        values = model.sampler(t, n, rng)
    elif model.tail is not None and model.tail.inverse_tail is not None:
        values = sample_cutoff_cp(model.tail, cutoff, t, rng, n)
    else:
        raise UnsupportedModelError(
            f"model {model.name!r} has neither an exact sampler nor an invertible tail"
        )
    if log:
        with np.errstate(divide="ignore"):
            return np.log(values)
    return values


def _split_infinite(values):
    finite = np.isfinite(values)
    return values[finite], int(values.size - finite.sum())


def to_neg_t_power(samples, t, *, log=False):
    """Map y to y**(-t) through exp(-t*log y); returns (finite values, at-infinity count).

    Zero samples (or -inf log samples) have no finite image and are
    counted in the at-infinity bucket instead.
    """
    if t <= 0:
        raise InvalidParameterError("time must be positive")
    arr = np.asarray(samples, dtype=float)
    if log:
        log_y = arr
    else:
        if np.any(arr < 0):
            raise InvalidParameterError("samples must be nonnegative")
        with np.errstate(divide="ignore"):
            log_y = np.log(arr)
    with np.errstate(over="ignore"):
        out = np.exp(-t * log_y)
    return _split_infinite(out)


def to_tl(samples, L, t, *, log=False, L_log=None):
    """Map y to t*L(y) for a decreasing L; returns (finite values, at-infinity count).

    ``L_log``, when given, evaluates L at exp(log y) directly from log y,
    which keeps exact-sampler batches free of spurious underflow.
    """
    if t <= 0:
        raise InvalidParameterError("time must be positive")
    arr = np.asarray(samples, dtype=float)
    if log:
        log_y = arr
    else:
        if np.any(arr < 0):
            raise InvalidParameterError("samples must be nonnegative")
        with np.errstate(divide="ignore"):
            log_y = np.log(arr)
    finite = np.isfinite(log_y)
    n_inf = int(log_y.size - finite.sum())
    if L_log is not None:
        vals = t * np.asarray(L_log(log_y[finite]), dtype=float)
    else:
        vals = t * np.asarray(L(np.exp(log_y[finite])), dtype=float)
    keep = np.isfinite(vals)
    n_inf += int(vals.size - keep.sum())
    return vals[keep], n_inf
