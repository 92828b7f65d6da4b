"""e^{-t Lambda^eps}(x, y) by four methods that check one another.

``evolve_trotter``  Strang splitting on a periodic FFT grid.
``duhamel_picard``  meshfree Picard iteration of the Duhamel formula.
``feynman_kac_mc``  path simulation with a small-ball estimator.
``SectorSolver``    angular-sector spectral solver; handles eps = 0 and
                    points very close to the origin, and is what the
                    verifier uses for its grids.
"""

from .duhamel import DuhamelConfig, DuhamelSolver, PicardError, duhamel_picard
from .eps_limit import MonotonicityError, eps_limit
from .montecarlo import MCConfig, MCResult, feynman_kac_mc, positive_stable, stable_increments, validate_increments
from .sector import RadialSemigroup, SectorConfig, SectorSolver
from .table import KernelTable, TableFormatError, from_bytes, load_table, save_table, to_bytes
from .trotter import PropagatorConfig, PropagatorError, evolve_trotter

__all__ = [
    "DuhamelConfig", "DuhamelSolver", "KernelTable", "MCConfig", "MCResult", "MonotonicityError",
    "PicardError", "PropagatorConfig", "PropagatorError", "RadialSemigroup", "SectorConfig", "SectorSolver",
    "TableFormatError", "duhamel_picard", "eps_limit", "evolve_trotter", "feynman_kac_mc",
    "from_bytes", "load_table", "positive_stable", "save_table", "stable_increments", "to_bytes",
    "validate_increments",
]
