"""Convex bodies in S(n) given as convex hulls of finitely many generators.

A sublinear operator ``F`` is the support function of its body ``K``::

    F(X) = max_{Y in K} tr(YX)

and for ``K = con(generators)`` the maximum is attained at a generator.
Redundant generators are harmless and are never pruned.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import nnls

from . import symmat as sm
from .errors import DimensionError

ELLIPTIC_TOL = 1e-10
CONE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class GeneralBody:
    """Convex hull of a nonempty list of symmetric ``n x n`` generators."""

    generators: np.ndarray

    def __post_init__(self):
        G = np.array(self.generators, dtype=float)
        if G.ndim == 2:
            G = G[None]
        if G.ndim != 3 or G.shape[0] == 0 or G.shape[1] != G.shape[2]:
            raise DimensionError(f"generators must have shape (m, n, n), got {G.shape}")
        sm.check_dimension(G.shape[1])
        if not np.all(np.isfinite(G)):
            raise ValueError("generator entries must be finite")
        G = 0.5 * (G + np.swapaxes(G, -1, -2))
        G.setflags(write=False)
        object.__setattr__(self, "generators", G)

    @property
    def n(self):
        return self.generators.shape[1]

    def __len__(self):
        return self.generators.shape[0]

    def __call__(self, X):
        return support(self, X)


def _check_same_n(n, X):
    if np.shape(X)[-2:] != (n, n):
        raise DimensionError(f"expected {n}x{n} matrices, got shape {np.shape(X)}")


def support(body, X):
    """Evaluate the support function ``max_i tr(G_i X)``.

    ``X`` may be a single matrix or a stack of shape ``(..., n, n)``.
    """
    X = np.asarray(X, dtype=float)
    _check_same_n(body.n, X)
    values = np.einsum("gij,...ji->...g", body.generators, X)
    return values.max(axis=-1)


def minkowski(a, A, b, B):
    """Body of ``a F_A + b F_B`` for ``a, b >= 0``: all sums ``a G_i + b H_j``."""
    if a < 0 or b < 0:
        raise ValueError("Minkowski coefficients must be non-negative")
    if A.n != B.n:
        raise DimensionError(f"dimension mismatch: {A.n} vs {B.n}")
    sums = a * A.generators[:, None] + b * B.generators[None, :]
    return GeneralBody(sums.reshape(-1, A.n, A.n))


def negate(A):
    """Body of ``X -> F_A(-X)``."""
    return GeneralBody(-A.generators)


def singleton(Y):
    return GeneralBody(np.asarray(Y, dtype=float)[None])


class Ellipticity(str, Enum):
    NOT_ELLIPTIC = "not-elliptic"
    DEGENERATE = "degenerate"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class EllipticityClass:
    """Ellipticity tag plus the extreme eigenvalues found among the generators.

    ``lam`` and ``Lam`` are clamped at zero and only meaningful when the
    operator is elliptic.
    """

    tag: Ellipticity
    lam: float
    Lam: float

    @property
    def elliptic(self):
        return self.tag is not Ellipticity.NOT_ELLIPTIC


def classify_ellipticity(A):
    # PSD and PD matrices form convex sets, so checking the generators is enough.
    lam = sm.eigvals(A.generators)
    lo, hi = float(lam[:, 0].min()), float(lam[:, -1].max())
    if lo > ELLIPTIC_TOL:
        tag = Ellipticity.UNIFORM
    elif lo >= -ELLIPTIC_TOL:
        tag = Ellipticity.DEGENERATE
    else:
        tag = Ellipticity.NOT_ELLIPTIC
    return EllipticityClass(tag, max(lo, 0.0), max(hi, 0.0))


def nondegenerate(A):
    """True iff ``F(-I) < 0``; for an elliptic body, iff ``0`` is not in the body.

    ``F(-I) = -min tr(Y)`` over the body, and a linear function attains its
    minimum over a hull at a generator.  Rotationally invariant bodies are
    accepted as well.
    """
    if isinstance(A, GeneralBody):
        return bool(np.trace(A.generators, axis1=1, axis2=2).min() > ELLIPTIC_TOL)
    from .rotinv import min_trace

    return bool(min_trace(A) > ELLIPTIC_TOL)


@dataclass(frozen=True)
class ConeMembershipReport:
    inside: bool
    residual: float
    weights: np.ndarray


def _svec(X):
    """Isometric coordinates of S(n) in R^N, N = n(n+1)/2 (Frobenius norm preserved)."""
    X = np.asarray(X, dtype=float)
    n = X.shape[-1]
    iu = np.triu_indices(n)
    scale = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))
    return X[..., iu[0], iu[1]] * scale


def cone_contains(A, X, tol=CONE_TOL):
    """Test whether ``X`` lies in the body cone ``{tZ : Z in K, t >= 0}``.

    Solves the non-negative least squares problem ``min ||sum t_i G_i - X||``
    over ``t >= 0``; ``X`` is inside when the residual is at most
    ``tol * (1 + ||X||)``.
    """
    X = np.asarray(X, dtype=float)
    _check_same_n(A.n, X)
    M = _svec(A.generators).T
    b = _svec(X)
    weights, _ = nnls(M, b, maxiter=50 * M.shape[1])
    residual = float(np.linalg.norm(M @ weights - b))
    inside = residual <= tol * (1.0 + float(np.linalg.norm(b)))
    return ConeMembershipReport(inside, residual, weights)


@dataclass(frozen=True)
class NestingReport:
    """Outcome of ``C_F subset C_G``; ``witness`` indexes a generator of F outside ``C_G``."""

    nested: bool
    witness: int | None
    residual: float
    reports: tuple

    def __bool__(self):
        return self.nested


def nesting_report(F, G, tol=CONE_TOL):
    if F.n != G.n:
        raise DimensionError(f"dimension mismatch: {F.n} vs {G.n}")
    reports = tuple(cone_contains(G, Y, tol) for Y in F.generators)
    witness = next((i for i, r in enumerate(reports) if not r.inside), None)
    worst = max(r.residual for r in reports)
    residual = reports[witness].residual if witness is not None else worst
    return NestingReport(witness is None, witness, residual, reports)


def nested_cones(F, G, tol=CONE_TOL):
    """True iff the body cone of F is contained in the body cone of G.

    A cone generated by a set lies inside a convex cone iff every generator
    does.  By duality this is the statement that every supersolution of
    ``G = 0`` is a supersolution of ``F = 0``.
    """
    return nesting_report(F, G, tol).nested
