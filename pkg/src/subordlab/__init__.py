"""Small-time limit laboratory for driftless Levy subordinators.

Builds subordinator models from a catalog, estimates the Pareto index of
the power-transformed marginal through four equivalent asymptotic
criteria plus a generalized slowly-varying variant, applies the model
algebra (tilting, subordination, sums, drift), and verifies every limit
statement by seeded Monte Carlo against closed-form targets.
"""

from .core import (
    ExponentialLaw,
    LaplaceExponent,
    LevyTail,
    ParetoLaw,
    SubordinatorModel,
    lst_from_cdf,
    pareto_cdf,
    pareto_quantile,
    phi_from_levy,
    phi_from_tail,
)
from .errors import (
    DegenerateModelError,
    InvalidParameterError,
    NumericalFailure,
    OutOfRangeError,
    SubordlabError,
    UnsupportedModelError,
)

__version__ = "0.1.0"

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
    "SubordlabError",
    "InvalidParameterError",
    "OutOfRangeError",
    "DegenerateModelError",
    "UnsupportedModelError",
    "NumericalFailure",
    "__version__",
]
