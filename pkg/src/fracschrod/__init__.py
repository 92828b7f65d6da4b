"""Heat kernels of the fractional Laplacian with a critical Hardy potential."""

from .constants import DerivedConstants, ProblemParams, derive, solve_beta
from .weights import RadialWeight

__all__ = ["DerivedConstants", "ProblemParams", "RadialWeight", "derive", "solve_beta"]
__version__ = "0.1.0"
