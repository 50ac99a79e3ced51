"""Dirichlet problems through the ellipsoid mean-value fixed point.

The discrete equation at every interior node ``x`` is

    u(x) = max_Z  avg_{E_Z(x, eps)} u,

with band values held fixed.  Each average is a convex combination of grid
values, so the update is monotone and its fixed point is unique.
"""
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse
from scipy.sparse.linalg import spsolve

from ..convbody import Ellipticity
from ..errors import ConvergenceError, GridError, NotEllipticError
from ..rotinv import OrbitHull, classify
from .grid import GridFn
from .rules import DEFAULT_DENSITY, DEFAULT_ROTATIONS, ZFamily, apply_stencil, stencils_for

logger = logging.getLogger(__name__)

METHODS = ("policy", "gauss-seidel")


@dataclass(frozen=True)
class SolveResult:
    solution: GridFn
    sweeps: int
    final_update: float
    max_mv_excess: float
    method: str

    def report(self):
        return {
            "sweeps": self.sweeps,
            "final_update": self.final_update,
            "max_mv_excess": self.max_mv_excess,
            "method": self.method,
        }


def default_workers():
    """Worker cap from ``SUBLINOP_THREADS`` (0 or unset: one per CPU)."""
    value = int(os.environ.get("SUBLINOP_THREADS", "0") or 0)
    return value if value > 0 else (os.cpu_count() or 1)


def _rule_averages(values, stencils, workers):
    if workers <= 1 or len(stencils) == 1:
        return np.stack([apply_stencil(values, st) for st in stencils])
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return np.stack(list(pool.map(lambda st: apply_stencil(values, st), stencils)))


def check_containment(grid, stencils):
    """Raise if some interior stencil needs an outside node."""
    probe = np.where(grid.active, 0.0, np.nan)
    for st in stencils:
        reached = apply_stencil(probe, st)
        if np.any(np.isnan(reached[grid.interior])):
            raise GridError("stencil escapes the grid: widen the boundary band or shrink eps")


def _policy_matrix(grid, stencils, policy, interior_flat, position):
    """Sparse rows of the averaging operator for a fixed choice of rule per node."""
    ny = grid.shape[1]
    rows, cols, vals = [], [], []
    for r, st in enumerate(stencils):
        chosen = np.nonzero(policy == r)[0]
        if chosen.size == 0:
            continue
        offsets = st.di * ny + st.dj
        rows.append(np.repeat(chosen, offsets.size))
        cols.append((interior_flat[chosen][:, None] + offsets[None, :]).ravel())
        vals.append(np.tile(st.w, chosen.size))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    inner = position[cols]
    is_inner = inner >= 0
    n_inner = interior_flat.size
    M = sparse.csr_matrix((vals[is_inner], (rows[is_inner], inner[is_inner])), shape=(n_inner, n_inner))
    return M, rows[~is_inner], cols[~is_inner], vals[~is_inner]


def _solve_policy(u, grid, stencils, tol, max_sweeps, workers):
    interior = grid.interior
    interior_flat = np.flatnonzero(interior)
    position = np.full(grid.mask.size, -1)
    position[interior_flat] = np.arange(interior_flat.size)
    flat_values = u.ravel()
    policy = None
    update = math.inf
    for sweep in range(1, max_sweeps + 1):
        averages = _rule_averages(u, stencils, workers)[:, interior]
        best = averages.argmax(axis=0)
        if policy is not None:
            # keep the current rule on ties so the iteration cannot cycle
            current = averages[policy, np.arange(policy.size)]
            scale = 1e-13 * (1.0 + np.abs(current))
            best = np.where(averages.max(axis=0) > current + scale, best, policy)
            if np.array_equal(best, policy) and update < tol:
                return sweep - 1, update
        policy = best
        M, brow, bcol, bval = _policy_matrix(grid, stencils, policy, interior_flat, position)
        rhs = np.zeros(interior_flat.size)
        np.add.at(rhs, brow, bval * flat_values[bcol])
        system = sparse.identity(interior_flat.size, format="csr") - M
        new = spsolve(system.tocsc(), rhs)
        update = float(np.max(np.abs(new - flat_values[interior_flat])))
        flat_values[interior_flat] = new
        logger.debug("policy iteration %d: max update %.3e", sweep, update)
    raise ConvergenceError(f"policy iteration did not settle in {max_sweeps} iterations", update, max_sweeps)


def _solve_gauss_seidel(u, grid, stencils, tol, max_sweeps, order):
    """Nonlinear Gauss-Seidel with the exact nodal solve.

    At a node the update ``max_r (a_r + w_r u)`` with self weights
    ``w_r < 1`` has the fixed point ``max_r a_r / (1 - w_r)``.
    """
    ny = grid.shape[1]
    offsets = sorted({(int(i), int(j)) for st in stencils for i, j in zip(st.di, st.dj)})
    index = {off: k for k, off in enumerate(offsets)}
    W = np.zeros((len(stencils), len(offsets)))
    for r, st in enumerate(stencils):
        for i, j, w in zip(st.di, st.dj, st.w):
            W[r, index[(int(i), int(j))]] = w
    centre = index.get((0, 0))
    self_w = W[:, centre].copy() if centre is not None else np.zeros(len(stencils))
    if centre is not None:
        W[:, centre] = 0.0
    flat_offsets = np.array([i * ny + j for i, j in offsets])
    nodes = np.flatnonzero(grid.interior)
    if order == "reverse":
        nodes = nodes[::-1]
    elif order != "forward":
        raise ValueError(f"unknown sweep order {order!r}")
    values = u.ravel()
    denom = 1.0 - self_w
    update = math.inf
    for sweep in range(1, max_sweeps + 1):
        update = 0.0
        for k in nodes:
            new = float(np.max((W @ values[k + flat_offsets]) / denom))
            update = max(update, abs(new - values[k]))
            values[k] = new
        if update < tol:
            return sweep, update
    raise ConvergenceError(f"Gauss-Seidel did not converge in {max_sweeps} sweeps", update, max_sweeps)


def solve_dirichlet(
    grid,
    boundary,
    body,
    eps,
    m_rotations=DEFAULT_ROTATIONS,
    tol=1e-10,
    max_sweeps=None,
    density=DEFAULT_DENSITY,
    method="policy",
    order="forward",
    workers=None,
):
    """Solve ``u(x) = max_Z avg_{E_Z(x, eps)} u`` with ``u = boundary`` on the band.

    Parameters
    ----------
    grid : Grid2
    boundary : GridFn
        Supplies the band values; its interior values are ignored.
    body : OrbitHull
        Uniformly elliptic two-dimensional body.
    eps : float
        Ellipsoid scale.
    method : {"policy", "gauss-seidel"}
        ``"policy"`` alternates exact linear solves for a fixed choice of Z
        per node with greedy re-selection (Howard's algorithm), counting one
        sweep per linear solve.  ``"gauss-seidel"`` sweeps node by node in
        ``order`` ("forward" or "reverse") from the minimum of the band data.

    Returns
    -------
    SolveResult

    Raises
    ------
    NotEllipticError
        If the body is not uniformly elliptic.
    ConvergenceError
        If ``max_sweeps`` is exhausted.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if not isinstance(body, OrbitHull) or body.n != 2:
        raise NotEllipticError("the solver needs a two-dimensional orbit hull body")
    if classify(body).tag is not Ellipticity.UNIFORM:
        raise NotEllipticError("the solver needs a uniformly elliptic body")
    if boundary.grid is not grid and not np.array_equal(boundary.grid.mask, grid.mask):
        raise GridError("boundary data lives on a different grid")
    if max_sweeps is None:
        max_sweeps = 100 if method == "policy" else 100_000
    workers = default_workers() if workers is None else max(1, int(workers))

    family = ZFamily.from_body(body, m_rotations)
    stencils = stencils_for(family, eps, grid.h, density)
    check_containment(grid, stencils)

    u = np.array(boundary.values, dtype=float)
    u[grid.interior] = np.min(u[grid.band])
    if method == "policy":
        sweeps, update = _solve_policy(u, grid, stencils, tol, max_sweeps, workers)
    else:
        sweeps, update = _solve_gauss_seidel(u, grid, stencils, tol, max_sweeps, order)

    averages = _rule_averages(u, stencils, workers)
    residual = np.max(averages, axis=0) - u
    return SolveResult(
        solution=GridFn(grid, u),
        sweeps=sweeps,
        final_update=float(update),
        max_mv_excess=float(np.max(np.abs(residual[grid.interior]))),
        method=method,
    )
