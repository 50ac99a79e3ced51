"""Ellipsoid averages on grids.

For ``Z > 0`` the ellipsoid ``E_Z(x0, eps) = {y : (y-x0)^T Z^{-1} (y-x0) < eps^2}``
is the image of the disc ``B(0, eps)`` under ``sqrt(Z)``, so a quadrature rule
for the disc pushes forward to one for the ellipsoid.  A supersolution of the
operator with body ``K`` dominates its averages over ``E_Z`` for every
``Z`` in ``K``; for a quadratic ``q(y) = y^T A y / 2`` the excess of the
average over the centre value is ``eps^2 / (2 (n + 2)) * tr(Z A)``.
"""
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .. import symmat as sm
from ..convbody import ELLIPTIC_TOL
from ..errors import DimensionError, GridError, NotEllipticError
from ..rotinv import OrbitHull
from .grid import INTERIOR

DEFAULT_DENSITY = 41
DEFAULT_ROTATIONS = 16
MIN_NODES = 200


@lru_cache(maxsize=16)
def unit_disc_nodes(density):
    """Equal-weight nodes in the open unit disc with exact second moments.

    Start from the centres of the ``density x density`` midpoint lattice on
    ``[-1, 1]^2`` that fall inside the disc, then scale radially so that the
    mean of ``x_1^2`` equals the disc value ``1/4``.  When the scaling would
    push the outermost ring to the circle, the outermost ring is dropped
    first.  Lattice symmetry makes the odd and mixed moments vanish.
    """
    c = (np.arange(density) + 0.5) / density * 2.0 - 1.0
    X, Y = np.meshgrid(c, c, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    r = np.hypot(pts[:, 0], pts[:, 1])
    pts, r = pts[r < 1.0], r[r < 1.0]
    while True:
        scale = math.sqrt(0.25 / np.mean(pts[:, 0] ** 2))
        rmax = r.max()
        if rmax * scale < 1.0:
            break
        keep = r < rmax - 1e-12
        pts, r = pts[keep], r[keep]
    nodes = pts * scale
    nodes.setflags(write=False)
    return nodes


@dataclass(frozen=True, eq=False)
class EllipsoidRule:
    """Equal-weight quadrature for the average over ``E_Z(0, eps)``."""

    Z: np.ndarray
    eps: float
    nodes: np.ndarray
    weights: np.ndarray

    def average(self, f, x0):
        """Average of a pointwise function ``f`` over ``E_Z(x0, eps)``."""
        return float(self.weights @ f(np.asarray(x0, dtype=float) + self.nodes))


def build_rule(Z, eps, density=DEFAULT_DENSITY, allow_singular=False):
    """Push the disc rule forward through ``eps * sqrt(Z)``.

    ``allow_singular`` accepts positive semidefinite ``Z``; the rule then
    averages over the flattened ellipse (the limit of the regular case).
    """
    Z = np.asarray(Z, dtype=float)
    if Z.shape != (2, 2):
        raise DimensionError("ellipsoid rules are two-dimensional")
    if not eps > 0:
        raise ValueError("eps must be positive")
    lam = sm.eigvals(Z)
    if lam[0] <= 1e-12 and not (allow_singular and lam[0] >= -1e-12 and lam[-1] > 1e-12):
        raise NotEllipticError("ellipsoid rules need a positive definite Z")
    unit = unit_disc_nodes(density)
    if unit.shape[0] < MIN_NODES:
        raise ValueError(f"density {density} gives fewer than {MIN_NODES} nodes")
    nodes = eps * unit @ sm.spectral_sqrt(Z)
    weights = np.full(unit.shape[0], 1.0 / unit.shape[0])
    return EllipsoidRule(Z, float(eps), nodes, weights)


def stencil_moments(stencil, h):
    """Second-moment matrix ``sum w d d^T`` of a stencil in physical units."""
    d = np.stack([stencil.di, stencil.dj], axis=1) * h
    return np.einsum("k,ki,kj->ij", stencil.w, d, d)


def grid_rule(Z, eps, h, density=DEFAULT_DENSITY):
    """Rule for ``E_Z(0, eps)`` whose bilinear stencil on spacing ``h`` has exact second moments.

    Bilinear interpolation is exact on affine and ``xy`` terms but adds
    ``f (1 - f) h^2 / 2`` times ``u_xx`` (and ``u_yy``) at a point with
    fractional offset ``f``.  The rule is built for a corrected ``Z'`` chosen
    so that the folded stencil has the second moments ``eps^2 Z / 4`` of the
    true ellipse average; weights stay nonnegative.  Singular ``Z`` is left
    uncorrected, since the correction shrinks ``Z``.  Results are cached.
    """
    Z = np.ascontiguousarray(Z, dtype=float)
    return _grid_rule(Z.tobytes(), float(eps), float(h), int(density))


@lru_cache(maxsize=1024)
def _grid_rule(zbytes, eps, h, density):
    return _match_moments(np.frombuffer(zbytes).reshape(2, 2), eps, h, density)


def _match_moments(Z, eps, h, density, max_iter=50):
    Z = np.asarray(Z, dtype=float)
    rule = build_rule(Z, eps, density, allow_singular=True)
    if sm.eigvals(Z)[0] <= 1e-12:
        return rule
    target = eps**2 * Z / 4.0
    tol = 1e-14 * eps**2 * (1.0 + np.abs(Z).max())
    Zc = Z
    for _ in range(max_iter):
        miss = target - stencil_moments(compile_stencil(rule, h), h)
        if np.abs(miss).max() <= tol:
            return EllipsoidRule(Z, rule.eps, rule.nodes, rule.weights)
        Zc = Zc + 4.0 * miss / eps**2
        if sm.eigvals(Zc)[0] <= 1e-12:
            raise GridError(f"eps = {eps:g} is too small for spacing h = {h:g}")
        rule = build_rule(Zc, eps, density)
    raise GridError("stencil moment matching did not converge")


def rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True, eq=False)
class ZFamily:
    """Rotated diagonal matrices ``R_theta diag(a) R_theta^T`` discretising ``ext K``.

    ``a`` runs over the seeds of a 2D orbit hull and ``theta`` over
    ``k pi / m``.  Seeds with a zero component are skipped unless
    ``include_degenerate`` is set; isotropic seeds give one member.
    """

    members: tuple

    @classmethod
    def from_body(cls, body, m=DEFAULT_ROTATIONS, include_degenerate=False):
        if not isinstance(body, OrbitHull):
            raise TypeError("Z families are built from orbit hull bodies")
        if body.n != 2:
            raise DimensionError("Z families are two-dimensional")
        members = []
        for a in body.seeds:
            if a.min() < -ELLIPTIC_TOL:
                raise NotEllipticError("body has an indefinite seed")
            if a.max() <= ELLIPTIC_TOL:
                continue
            if a.min() <= ELLIPTIC_TOL and not include_degenerate:
                continue
            if abs(a[1] - a[0]) <= ELLIPTIC_TOL * (1.0 + abs(a[1])):
                members.append(np.diag(a))
                continue
            for k in range(m):
                R = rotation(k * math.pi / m)
                members.append(R @ np.diag(a) @ R.T)
        if not members:
            raise NotEllipticError("body has no usable seed for a Z family")
        return cls(tuple(members))

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def rules(self, eps, density=DEFAULT_DENSITY, h=None):
        """One rule per member; with ``h`` the rules are moment-matched to that lattice."""
        if h is None:
            return [build_rule(Z, eps, density, allow_singular=True) for Z in self.members]
        return [grid_rule(Z, eps, h, density) for Z in self.members]

    def max_eigenvalue(self):
        return max(float(sm.eigvals(Z)[-1]) for Z in self.members)


def interpolate(u, pts):
    """Bilinear interpolation of ``u`` at points ``pts`` of shape ``(k, 2)``.

    Raises
    ------
    GridError
        If a point needs a corner node that is outside or off the lattice.
    """
    grid = u.grid
    s = (pts[:, 0] - grid.origin[0]) / grid.h
    t = (pts[:, 1] - grid.origin[1]) / grid.h
    i0 = np.floor(s).astype(int)
    j0 = np.floor(t).astype(int)
    fs, ft = s - i0, t - j0
    nx, ny = grid.shape
    if i0.min() < 0 or j0.min() < 0 or i0.max() + 1 >= nx or j0.max() + 1 >= ny:
        raise GridError("interpolation point off the lattice")
    total = np.zeros(len(pts))
    for di, dj, w in ((0, 0, (1 - fs) * (1 - ft)), (1, 0, fs * (1 - ft)),
                      (0, 1, (1 - fs) * ft), (1, 1, fs * ft)):
        corner = u.values[i0 + di, j0 + dj]
        used = w > 0
        if np.any(~grid.active[i0 + di, j0 + dj] & used):
            raise GridError("stencil escapes the grid: an outside node is needed")
        total += np.where(used, w * np.nan_to_num(corner), 0.0)
    return total


def mv_excess(u, node, family, eps, density=DEFAULT_DENSITY):
    """``max_Z avg_{E_Z(x0, eps)} u - u(x0)`` at an interior node.

    Reference path: each quadrature point is interpolated individually.
    """
    i, j = node
    if u.grid.mask[i, j] != INTERIOR:
        raise GridError(f"node {node} is not an interior node")
    x0 = u.grid.points()[i, j]
    best = -math.inf
    for rule in family.rules(eps, density, h=u.grid.h):
        best = max(best, float(rule.weights @ interpolate(u, x0 + rule.nodes)))
    return best - float(u.values[i, j])


@dataclass(frozen=True)
class Stencil:
    """A rule folded onto grid offsets: ``avg(x_ij) = sum w * u[i + di, j + dj]``."""

    di: np.ndarray
    dj: np.ndarray
    w: np.ndarray

    @property
    def reach(self):
        return int(max(np.abs(self.di).max(), np.abs(self.dj).max()))


def compile_stencil(rule, h):
    """Fold bilinear interpolation weights of a rule into per-offset weights."""
    s = rule.nodes[:, 0] / h
    t = rule.nodes[:, 1] / h
    i0 = np.floor(s).astype(int)
    j0 = np.floor(t).astype(int)
    fs, ft = s - i0, t - j0
    di = np.concatenate([i0, i0 + 1, i0, i0 + 1])
    dj = np.concatenate([j0, j0, j0 + 1, j0 + 1])
    w = np.concatenate([(1 - fs) * (1 - ft), fs * (1 - ft), (1 - fs) * ft, fs * ft])
    w = w * np.tile(rule.weights, 4)
    used = w > 0
    keys, inverse = np.unique(np.stack([di[used], dj[used]], axis=1), axis=0, return_inverse=True)
    folded = np.zeros(len(keys))
    np.add.at(folded, inverse.ravel(), w[used])
    return Stencil(keys[:, 0], keys[:, 1], folded)


def apply_stencil(values, stencil):
    """Stencil average at every node; NaN wherever an outside or missing node is used."""
    nx, ny = values.shape
    r = stencil.reach
    padded = np.full((nx + 2 * r, ny + 2 * r), np.nan)
    padded[r:r + nx, r:r + ny] = values
    out = np.zeros_like(values)
    for di, dj, w in zip(stencil.di, stencil.dj, stencil.w):
        out += w * padded[r + di:r + di + nx, r + dj:r + dj + ny]
    return out


def stencils_for(family, eps, h, density=DEFAULT_DENSITY):
    return [compile_stencil(rule, h) for rule in family.rules(eps, density, h=h)]


def mv_excess_field(u, family, eps, density=DEFAULT_DENSITY, stencils=None):
    """:func:`mv_excess` at every interior node at once.

    Nodes whose stencil reaches an outside node get NaN, so the finite
    entries cover exactly the interior shrunk by the stencil reach.
    """
    if stencils is None:
        stencils = stencils_for(family, eps, u.grid.h, density)
    best = np.full(u.grid.shape, -np.inf)
    for st in stencils:
        best = np.maximum(best, apply_stencil(u.values, st))
    best[np.isneginf(best)] = np.nan
    out = best - u.values
    out[~u.grid.interior] = np.nan
    return out


def pullback_sqrtZ(f, Z):
    """``x -> f(sqrt(Z) x)`` for a pointwise field ``f`` on points ``(..., n)``."""
    Z = np.asarray(Z, dtype=float)
    lam = sm.eigvals(Z)
    if lam[0] <= 1e-12:
        raise NotEllipticError("pullback needs a positive definite Z")
    root = sm.spectral_sqrt(Z)

    def pulled(x):
        return f(np.asarray(x, dtype=float) @ root)

    return pulled
