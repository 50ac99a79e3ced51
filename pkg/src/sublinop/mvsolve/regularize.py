"""Quadratic-penalty envelopes and mollification of grid functions."""
import numpy as np

from ..errors import GridError
from .grid import BAND, OUTSIDE, GridFn

INF_METHODS = ("separable", "direct")


def _axis_inf(values, h, eps_c, axis):
    """``min_k values[k] + ((i - k) h)^2 / (2 eps_c)`` along one axis."""
    count = values.shape[axis]
    d = h * np.arange(count)
    penalty = (d[:, None] - d[None, :]) ** 2 / (2.0 * eps_c)
    moved = np.moveaxis(values, axis, -1)
    # out[..., i] = min_k moved[..., k] + penalty[k, i]
    out = np.min(moved[..., :, None] + penalty, axis=-2)
    return np.moveaxis(out, -1, axis)


def inf_convolution(u, eps_c, method="separable"):
    """``u_eps(x) = min_y u(y) + |x - y|^2 / (2 eps_c)`` over non-outside nodes ``y``.

    The squared distance splits into per-axis terms, so two one-dimensional
    passes give the same minimum as the direct search over all pairs.
    Outside nodes enter as ``+inf`` and keep NaN in the result.
    """
    if not eps_c > 0:
        raise ValueError("eps_c must be positive")
    grid = u.grid
    active = grid.active
    values = np.where(active, u.values, np.inf)
    if method == "separable":
        out = _axis_inf(_axis_inf(values, grid.h, eps_c, 0), grid.h, eps_c, 1)
    elif method == "direct":
        pts = grid.points()[active]
        vals = values[active]
        out = np.full(grid.shape, np.nan)
        d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
        out[active] = np.min(vals[None, :] + d2 / (2.0 * eps_c), axis=1)
    else:
        raise ValueError(f"method must be one of {INF_METHODS}")
    return GridFn(grid, np.where(active, out, np.nan))


def sup_convolution(u, eps_c, method="separable"):
    """``u^eps(x) = max_y u(y) - |x - y|^2 / (2 eps_c)``."""
    neg = inf_convolution(GridFn(u.grid, -u.values), eps_c, method)
    return GridFn(u.grid, -neg.values)


def second_differences(u):
    """Central second difference quotients along each axis (NaN where undefined)."""
    v, h = u.values, u.grid.h
    dxx = np.full(v.shape, np.nan)
    dyy = np.full(v.shape, np.nan)
    dxx[1:-1, :] = (v[2:, :] - 2.0 * v[1:-1, :] + v[:-2, :]) / h**2
    dyy[:, 1:-1] = (v[:, 2:] - 2.0 * v[:, 1:-1] + v[:, :-2]) / h**2
    return dxx, dyy


def semiconcavity_excess(u, eps_c):
    """Largest axis second difference minus ``1 / eps_c`` (``<= 0`` for an inf-convolution)."""
    dxx, dyy = second_differences(u)
    return float(np.nanmax(np.concatenate([dxx.ravel(), dyy.ravel()]))) - 1.0 / eps_c


def bump_kernel(radius, h):
    """Normalized weights of ``exp(-1 / (1 - |y / r|^2))`` on lattice offsets with ``|y| < r``."""
    reach = int(np.ceil(radius / h))
    k = np.arange(-reach, reach + 1)
    di, dj = np.meshgrid(k, k, indexing="ij")
    s = (h * np.hypot(di, dj) / radius) ** 2
    inside = s < 1.0
    w = np.zeros(s.shape)
    w[inside] = np.exp(-1.0 / (1.0 - s[inside]))
    return w / w.sum(), reach


def mollify(u, kernel_radius):
    """Convolve with the normalized bump of radius ``kernel_radius``.

    Interior nodes must have their whole kernel support on active nodes.
    Band nodes whose support leaves the grid become outside; the rest keep
    their label, so the result lives on a shrunk grid.

    Raises
    ------
    GridError
        If ``kernel_radius < 2h`` or an interior node's support escapes
        (the band is too thin).
    """
    grid = u.grid
    if kernel_radius < 2.0 * grid.h * (1.0 - 1e-12):
        raise GridError("kernel radius must be at least 2h")
    w, reach = bump_kernel(kernel_radius, grid.h)
    nx, ny = grid.shape
    padded = np.full((nx + 2 * reach, ny + 2 * reach), np.nan)
    padded[reach:reach + nx, reach:reach + ny] = u.values
    out = np.zeros(grid.shape)
    for a, b in zip(*np.nonzero(w)):
        out += w[a, b] * padded[a:a + nx, b:b + ny]
    lost = np.isnan(out) & grid.active
    if np.any(lost & grid.interior):
        raise GridError("band too thin for the mollifier radius")
    mask = np.array(grid.mask)
    mask[lost] = OUTSIDE
    assert not np.any((mask == BAND) & np.isnan(out))
    shrunk = grid.with_mask(mask)
    return GridFn(shrunk, np.where(shrunk.active, out, np.nan))
