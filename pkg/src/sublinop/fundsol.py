"""Radial fundamental solutions and pointwise residual checks.

For ``2 <= p <= inf`` the function ``w_{n,p}`` solves every rotationally
invariant sublinear elliptic equation whose body cone aperture is ``p``,
away from the origin.  Its Hessian at ``x != 0`` is

    |x|^(-alpha) * ((alpha - 1) xh xh^T - (I - xh xh^T)),   xh = x / |x|,

with ``alpha`` dual to ``p``; the eigenvalue vector is
``|x|^(-alpha) * (-1, ..., -1, alpha - 1)``.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import rotinv
from .errors import DimensionError

LOG_BRANCH_TOL = 1e-9
ANNULUS = (0.1, 10.0)


@dataclass(frozen=True)
class FundamentalSolution:
    n: int
    p: float

    def __post_init__(self):
        if self.n < 2:
            raise DimensionError("fundamental solutions need n >= 2")
        if not self.p >= 2.0:
            raise ValueError(f"fundamental solutions are defined for p in [2, inf], got {self.p}")

    @property
    def alpha(self):
        return rotinv.alpha_from_p(self.n, self.p)

    @property
    def is_log(self):
        return not math.isinf(self.p) and abs(self.p - self.n) <= LOG_BRANCH_TOL

    def radial(self, r):
        """``W_{n,p}(r)`` with the pole value at ``r = 0``."""
        r = np.asarray(r, dtype=float)
        n, p = self.n, self.p
        with np.errstate(divide="ignore"):
            if math.isinf(p):
                return -r
            if self.is_log:
                return -np.log(r)
            expo = (p - n) / (p - 1.0)
            out = -(p - 1.0) / (p - n) * np.power(r, expo)
        # r = 0: +inf when p < n, 0 when p > n
        return np.where(r == 0.0, math.inf if p < n else 0.0, out)

    def value(self, x):
        """Evaluate at points ``x`` of shape ``(..., n)``."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise DimensionError(f"points must have {self.n} coordinates")
        return self.radial(np.linalg.norm(x, axis=-1))

    __call__ = value

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise DimensionError(f"points must have {self.n} coordinates")
        r = np.linalg.norm(x, axis=-1)
        if np.any(r == 0.0):
            raise ValueError("the Hessian is undefined at the origin")
        xh = x / r[..., None]
        proj = xh[..., :, None] * xh[..., None, :]
        a = self.alpha
        return r[..., None, None] ** (-a) * ((a - 1.0) * proj - (np.eye(self.n) - proj))

    def hessian_spectrum(self):
        """``(-1, ..., -1, alpha - 1)``, the Hessian eigenvalues at ``|x| = 1``."""
        lam = -np.ones(self.n)
        lam[-1] = self.alpha - 1.0
        return lam


@dataclass(frozen=True)
class ResidualReport:
    p: float
    alpha: float
    max_residual: float
    at_spectrum: float
    scale_spread: float
    samples: int


def sample_annulus(rng, n, samples, r_min=ANNULUS[0], r_max=ANNULUS[1]):
    directions = rng.normal(size=(samples, n))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = rng.uniform(r_min, r_max, size=samples)
    return directions * radii[:, None]


def verify_fundamental(body, samples=100, seed=0, p=None):
    """Check ``F(H w_{n,p}) = 0`` at random points of the annulus ``0.1 <= |x| <= 10``.

    ``p`` defaults to the body cone aperture of ``body``.  Reports the max
    absolute residual, ``F`` at the radial spectrum ``(-1, ..., -1, alpha-1)``
    and the spread of ``|residual| * |x|^alpha`` (constant by homogeneity).
    """
    if p is None:
        p = rotinv.aperture(body).p
    w = FundamentalSolution(body.n, p)
    rng = np.random.default_rng(seed)
    x = sample_annulus(rng, body.n, samples)
    residual = body.evaluate(w.hessian(x))
    at_spectrum = float(body.evaluate_spectrum(w.hessian_spectrum()))
    scaled = residual * np.linalg.norm(x, axis=1) ** w.alpha
    return ResidualReport(
        p=p,
        alpha=w.alpha,
        max_residual=float(np.max(np.abs(residual))),
        at_spectrum=at_spectrum,
        scale_spread=float(np.ptp(scaled)),
        samples=samples,
    )
