"""Uniform 2D lattices with interior / boundary-band / outside labels."""
import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

OUTSIDE, BAND, INTERIOR = 0, 1, 2
LABELS = {OUTSIDE: "outside", BAND: "band", INTERIOR: "interior"}
CODES = {name: code for code, name in LABELS.items()}


@dataclass(frozen=True, eq=False)
class Grid2:
    """Nodes ``origin + (i h, j h)`` for ``0 <= i < nx``, ``0 <= j < ny``.

    ``mask[i, j]`` is one of ``INTERIOR``, ``BAND`` (carries Dirichlet data)
    or ``OUTSIDE`` (ignored).
    """

    origin: tuple
    h: float
    mask: np.ndarray

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("grid spacing must be positive")
        mask = np.array(self.mask, dtype=np.int8)
        if mask.ndim != 2:
            raise ValueError("mask must be two-dimensional")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def shape(self):
        return self.mask.shape

    @property
    def interior(self):
        return self.mask == INTERIOR

    @property
    def band(self):
        return self.mask == BAND

    @property
    def active(self):
        return self.mask != OUTSIDE

    def coordinates(self):
        """Arrays ``(X, Y)`` of node coordinates, each of shape ``(nx, ny)``."""
        nx, ny = self.shape
        xs = self.origin[0] + self.h * np.arange(nx)
        ys = self.origin[1] + self.h * np.arange(ny)
        return np.meshgrid(xs, ys, indexing="ij")

    def points(self):
        X, Y = self.coordinates()
        return np.stack([X, Y], axis=-1)

    def with_mask(self, mask):
        return Grid2(self.origin, self.h, mask)

    def node_at(self, x, y):
        i = int(round((x - self.origin[0]) / self.h))
        j = int(round((y - self.origin[1]) / self.h))
        return i, j


@dataclass(frozen=True, eq=False)
class GridFn:
    """Values on a :class:`Grid2`; finite on non-outside nodes, NaN elsewhere."""

    grid: Grid2
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ValueError(f"values shape {values.shape} does not match grid {self.grid.shape}")
        values[~self.grid.active] = np.nan
        if not np.all(np.isfinite(values[self.grid.active])):
            raise ValueError("grid function must be finite on interior and band nodes")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid, f):
        """Sample ``f`` (acting on points of shape ``(..., 2)``) at active nodes."""
        values = np.full(grid.shape, np.nan)
        pts = grid.points()[grid.active]
        values[grid.active] = f(pts)
        return cls(grid, values)

    def __add__(self, other):
        return GridFn(self.grid, self.values + other.values)

    def minimum(self, other):
        return GridFn(self.grid, np.minimum(self.values, other.values))


def _dilate(region, width):
    if width <= 0:
        return region.copy()
    structure = np.ones((2 * width + 1, 2 * width + 1), dtype=bool)
    return ndimage.binary_dilation(region, structure=structure)


def band_cells(eps, h, Lam):
    """Band width in cells: ``ceil(eps sqrt(Lam) / h) + 1``."""
    return int(math.ceil(eps * math.sqrt(Lam) / h - 1e-12)) + 1


def _lattice(half_extent, cells, band):
    h = 2.0 * half_extent / cells
    count = cells + 2 * band + 1
    origin = -half_extent - band * h
    xs = origin + h * np.arange(count)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    return origin, h, X, Y


def _with_band(interior, band):
    mask = np.full(interior.shape, OUTSIDE, dtype=np.int8)
    mask[_dilate(interior, band)] = BAND
    mask[interior] = INTERIOR
    return mask


def square_grid(cells, band, half_extent=1.0):
    """Interior ``max(|x|, |y|) < half_extent`` on ``cells`` cells per side.

    The band holds every non-interior node within ``band`` cells (per axis)
    of an interior node, so any stencil of that reach stays on the grid.
    """
    origin, h, X, Y = _lattice(half_extent, cells, band)
    tol = 1e-9 * h
    interior = np.maximum(np.abs(X), np.abs(Y)) < half_extent - tol
    return Grid2((origin, origin), h, _with_band(interior, band))


def annulus_grid(r_in, r_out, cells, band):
    """Interior ``r_in < |x| < r_out``; spacing ``h = 2 r_out / cells``."""
    if not 0.0 <= r_in < r_out:
        raise ValueError("need 0 <= r_in < r_out")
    origin, h, X, Y = _lattice(r_out, cells, band)
    tol = 1e-9 * h
    r = np.hypot(X, Y)
    interior = (r > r_in + tol) & (r < r_out - tol)
    return Grid2((origin, origin), h, _with_band(interior, band))


def _format(v):
    return repr(float(v))


def write_csv(path, u):
    """Write ``x,y,value,mask`` rows, one per node, in row-major node order."""
    grid = u.grid
    X, Y = grid.coordinates()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "y", "value", "mask"])
        for i in range(grid.shape[0]):
            for j in range(grid.shape[1]):
                writer.writerow([
                    _format(X[i, j]),
                    _format(Y[i, j]),
                    _format(u.values[i, j]),
                    LABELS[int(grid.mask[i, j])],
                ])


def read_csv(path):
    """Inverse of :func:`write_csv`; the lattice is recovered from the coordinates."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"x", "y", "value", "mask"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    x = np.array([float(r["x"]) for r in rows])
    y = np.array([float(r["y"]) for r in rows])
    xs, ys = np.unique(x), np.unique(y)
    steps = np.concatenate([np.diff(xs), np.diff(ys)])
    if steps.size == 0:
        raise ValueError(f"{path}: need at least two distinct coordinates")
    h = float(np.median(steps))
    if np.max(np.abs(steps - h)) > 1e-6 * h:
        raise ValueError(f"{path}: coordinates do not form a uniform lattice")
    origin = (xs[0], ys[0])
    nx = int(round((xs[-1] - xs[0]) / h)) + 1
    ny = int(round((ys[-1] - ys[0]) / h)) + 1
    mask = np.full((nx, ny), OUTSIDE, dtype=np.int8)
    values = np.full((nx, ny), np.nan)
    for line, r in enumerate(rows, start=2):
        i = int(round((float(r["x"]) - origin[0]) / h))
        j = int(round((float(r["y"]) - origin[1]) / h))
        label = r["mask"].strip()
        if label not in CODES:
            raise ValueError(f"{path}:{line}: unknown mask label {label!r}")
        mask[i, j] = CODES[label]
        values[i, j] = float(r["value"])
    return GridFn(Grid2(origin, h, mask), values)
