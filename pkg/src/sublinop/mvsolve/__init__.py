"""Two-dimensional grid numerics built on ellipsoid mean values."""
from .grid import (
    BAND,
    INTERIOR,
    OUTSIDE,
    Grid2,
    GridFn,
    annulus_grid,
    band_cells,
    read_csv,
    square_grid,
    write_csv,
)
from .regularize import inf_convolution, mollify, semiconcavity_excess, sup_convolution
from .rules import (
    EllipsoidRule,
    ZFamily,
    build_rule,
    grid_rule,
    mv_excess,
    mv_excess_field,
    pullback_sqrtZ,
)
from .solver import SolveResult, solve_dirichlet

__all__ = [
    "BAND", "INTERIOR", "OUTSIDE", "Grid2", "GridFn", "annulus_grid", "band_cells",
    "read_csv", "square_grid", "write_csv", "inf_convolution", "mollify",
    "semiconcavity_excess", "sup_convolution", "EllipsoidRule", "ZFamily", "build_rule",
    "grid_rule", "mv_excess", "mv_excess_field", "pullback_sqrtZ", "SolveResult",
    "solve_dirichlet",
]
