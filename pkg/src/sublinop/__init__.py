"""Sublinear elliptic operators: convex bodies, apertures, fundamental solutions
and mean-value grid numerics."""
from .convbody import GeneralBody, classify_ellipticity, cone_contains, nested_cones, nondegenerate, support
from .errors import (
    ConvergenceError,
    DimensionError,
    GridError,
    InconsistencyError,
    NotEllipticError,
    SublinopError,
)
from .fundsol import FundamentalSolution, verify_fundamental
from .rotinv import Ball, OrbitHull, aperture, dominative, laplacian, pucci, singleton

__version__ = "0.1.0"
