"""Rotationally invariant sublinear operators.

A rotationally invariant operator depends on ``X`` only through its ascending
eigenvalue vector ``lam(X)``, and its body is determined by a
permutation-symmetric convex body ``kappa`` in R^n::

    F(X) = max_{y in kappa} y^T lam(X)

Two shapes of ``kappa`` are supported: the convex hull of the permutation
orbits of finitely many seed vectors (:class:`OrbitHull`) and the closed ball
around the all-ones vector (:class:`Ball`).  Seeds are stored sorted; every
evaluation pairs them with the sorted eigenvalues (rearrangement inequality)
instead of enumerating permutations.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import symmat as sm
from .convbody import ELLIPTIC_TOL, Ellipticity, EllipticityClass, GeneralBody
from .errors import DimensionError, InconsistencyError, NotEllipticError

DEDUP_TOL = 1e-10
PHI_INV_MAX_N = 5
BALL_STARTS = 32
BALL_MIN_STEP = 1e-12


def _check_matrix(n, X):
    X = np.asarray(X, dtype=float)
    if X.shape[-2:] != (n, n):
        raise DimensionError(f"expected {n}x{n} matrices, got shape {X.shape}")
    return X


def _dedup_rows(rows, tol=DEDUP_TOL):
    kept = []
    for r in rows:
        if not any(np.max(np.abs(r - k)) <= tol for k in kept):
            kept.append(r)
    return np.array(kept)


@dataclass(frozen=True, eq=False)
class OrbitHull:
    """``kappa = con{P a : P a permutation, a a seed}``.

    ``kind`` and ``params`` record the named family a body was built from
    (``"pucci"``, ``"dominative"``, ``"singleton"``); they affect reporting
    and input validation only.
    """

    seeds: np.ndarray
    kind: str = "rotinv"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        S = np.array(self.seeds, dtype=float)
        if S.ndim == 1:
            S = S[None]
        if S.ndim != 2 or S.shape[0] == 0:
            raise DimensionError(f"seeds must have shape (m, n), got {S.shape}")
        sm.check_dimension(S.shape[1])
        if not np.all(np.isfinite(S)):
            raise ValueError("seed entries must be finite")
        S = np.sort(S, axis=1)
        S.setflags(write=False)
        object.__setattr__(self, "seeds", S)

    @property
    def n(self):
        return self.seeds.shape[1]

    def evaluate(self, X):
        lam = sm.eigvals(_check_matrix(self.n, X))
        return self.evaluate_spectrum(lam)

    def evaluate_spectrum(self, lam):
        """``max_a a . lam`` for ascending eigenvalue vectors ``lam``."""
        return np.max(np.asarray(lam, dtype=float) @ self.seeds.T, axis=-1)

    __call__ = evaluate

    def eigenvalue_bounds(self):
        return float(self.seeds.min()), float(self.seeds.max())


@dataclass(frozen=True, eq=False)
class Ball:
    """``kappa`` is the closed ball of radius ``delta`` around ``(1, ..., 1)``.

    The operator is ``F(X) = tr X + delta * |lam(X)|``.
    """

    n: int
    delta: float
    kind: str = "ball"

    def __post_init__(self):
        sm.check_dimension(self.n)
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"ball radius must lie in [0, 1], got {self.delta}")

    @property
    def params(self):
        return {"delta": self.delta}

    def evaluate(self, X):
        lam = sm.eigvals(_check_matrix(self.n, X))
        return self.evaluate_spectrum(lam)

    def evaluate_spectrum(self, lam):
        lam = np.asarray(lam, dtype=float)
        return lam.sum(axis=-1) + self.delta * np.sqrt(np.sum(lam * lam, axis=-1))

    __call__ = evaluate

    def eigenvalue_bounds(self):
        return 1.0 - self.delta, 1.0 + self.delta


def pucci(n, lam, Lam):
    """Pucci maximal operator: the cube ``[lam, Lam]^n`` up to permutation.

    Its sorted vertices are the ``n + 1`` step vectors
    ``(lam, ..., lam, Lam, ..., Lam)``.
    """
    if not 0.0 <= lam <= Lam:
        raise ValueError(f"need 0 <= lambda <= Lambda, got {lam}, {Lam}")
    sm.check_dimension(n)
    seeds = [np.r_[np.full(n - k, lam), np.full(k, Lam)] for k in range(n + 1)]
    return OrbitHull(seeds, kind="pucci", params={"lambda": lam, "Lambda": Lam})


def dominative(n, p):
    """Dominative p-Laplacian, ``1 <= p <= inf``.

    The seed is ``(1, ..., 1, p - 1)`` for finite p and ``(0, ..., 0, 1)``
    for ``p = inf``.
    """
    sm.check_dimension(n)
    p = float(p)
    if not p >= 1.0:
        raise ValueError(f"dominative exponent must satisfy p >= 1, got {p}")
    if math.isinf(p):
        seed = np.zeros(n)
        seed[-1] = 1.0
    else:
        seed = np.ones(n)
        seed[-1] = 1.0 + (p - 2.0)
    return OrbitHull(seed, kind="dominative", params={"p": p})


def singleton(a):
    """Operator ``X -> a_up . lam(X)`` generated by a single orbit."""
    a = np.asarray(a, dtype=float)
    return OrbitHull(a, kind="singleton", params={"a": np.sort(a).tolist()})


def laplacian(n):
    return singleton(np.ones(n))


def pucci_eval(lam, Lam, X):
    """``Lam tr X+ - lam tr X-``."""
    if not 0.0 <= lam <= Lam:
        raise ValueError(f"need 0 <= lambda <= Lambda, got {lam}, {Lam}")
    pos, neg = sm.positive_part_trace(X)
    return Lam * pos - lam * neg


def singleton_eval(a, X):
    """``a . lam(X)`` for an ascending vector ``a``."""
    a = np.asarray(a, dtype=float)
    if np.any(np.diff(a) < 0):
        raise ValueError("singleton generator must be sorted ascending")
    return sm.eigvals(X) @ a


def dominative_direct(p, X):
    """Dominative p-Laplacian from its defining eigenvalue formula."""
    lam = sm.eigvals(X)
    if math.isinf(p):
        return lam[..., -1]
    extreme = lam[..., 0] if p <= 2 else lam[..., -1]
    return (p - 2.0) * extreme + lam.sum(axis=-1)


def ball_direct(delta, X):
    X = np.asarray(X, dtype=float)
    return np.trace(X, axis1=-2, axis2=-1) + delta * sm.frobenius_norm(X)


def minkowski(a, A, b, B):
    """Orbit hull of ``a kappa_A + b kappa_B`` for ``a, b >= 0``.

    Since both support functions pair their seeds with the same sorted
    argument, the sum is generated by the pairwise sums of sorted seeds.
    """
    if a < 0 or b < 0:
        raise ValueError("Minkowski coefficients must be non-negative")
    if A.n != B.n:
        raise DimensionError(f"dimension mismatch: {A.n} vs {B.n}")
    sums = a * A.seeds[:, None, :] + b * B.seeds[None, :, :]
    return OrbitHull(sums.reshape(-1, A.n))


def negate(A):
    """Orbit hull of ``-kappa_A``, the body of ``X -> F_A(-X)``."""
    return OrbitHull(-A.seeds)


def classify(body):
    lo, hi = body.eigenvalue_bounds()
    if lo > ELLIPTIC_TOL:
        tag = Ellipticity.UNIFORM
    elif lo >= -ELLIPTIC_TOL:
        tag = Ellipticity.DEGENERATE
    else:
        tag = Ellipticity.NOT_ELLIPTIC
    return EllipticityClass(tag, max(lo, 0.0), max(hi, 0.0))


def min_trace(body):
    """``min tr Y`` over the body, so that ``F(-I) = -min_trace(body)``."""
    if isinstance(body, Ball):
        return body.n - body.delta * math.sqrt(body.n)
    return float(body.seeds.sum(axis=1).min())


def phi(K, assume_symmetric=False):
    """Map a finite seed of a rotation-symmetric body in S(n) to R^n.

    Each generator is replaced by its sorted eigenvalue vector.  The caller
    asserts that ``K`` is meant as the seed of a rotation-closed body; the
    map is undefined otherwise and no symmetry detection is attempted.
    """
    if not assume_symmetric:
        raise ValueError("phi needs assume_symmetric=True: the generator set must seed a symmetric body")
    return OrbitHull(_dedup_rows(sm.eigvals(K.generators)))


def phi_inv_representative(body):
    """Diagonal slice ``{diag(P a)}`` of the matrix body of an orbit hull.

    Cone inclusions between rotationally invariant bodies are decided by
    their eigenvalue vectors, so this finite family suffices for
    :func:`sublinop.convbody.nested_cones`.
    """
    if not isinstance(body, OrbitHull):
        raise TypeError("only orbit hulls have a finite representative")
    if body.n > PHI_INV_MAX_N:
        raise DimensionError(f"permutation expansion limited to n <= {PHI_INV_MAX_N}")
    perms = sm.permutation_matrices(body.n)
    points = np.einsum("pij,sj->spi", perms, body.seeds).reshape(-1, body.n)
    return GeneralBody(sm.diag_matrix(_dedup_rows(points)))


@dataclass(frozen=True)
class ApertureReport:
    """Solution cone aperture ``alpha``, body cone aperture ``p`` and the
    scaling ``c`` with ``c F_p <= F``; ``argmin`` attains ``alpha``."""

    alpha: float
    p: float
    c: float
    argmin: np.ndarray


def p_from_alpha(n, alpha):
    """Dual exponent with ``(alpha - 1)(p - 1) = n - 1``; ``inf`` at ``alpha = 1``."""
    if alpha <= 1.0 + 1e-12:
        return math.inf
    return (n + alpha - 2.0) / (alpha - 1.0)


def alpha_from_p(n, p):
    if math.isinf(p):
        return 1.0
    return 1.0 + (n - 1.0) / (p - 1.0)


def p_vector(n, p):
    """``(1, ..., 1, p - 1)`` for finite p, ``(0, ..., 0, 1)`` for ``p = inf``."""
    return dominative(n, p).seeds[0]


def _trace_ratio(y):
    return y.sum(axis=-1) / y.max(axis=-1)


def _check_elliptic(body):
    if isinstance(body, OrbitHull):
        if body.seeds.min() < -ELLIPTIC_TOL:
            raise NotEllipticError("aperture needs an elliptic body (non-negative seeds)")
        if np.all(np.abs(body.seeds) <= ELLIPTIC_TOL):
            raise NotEllipticError("aperture is undefined for the trivial body {0}")
        if body.kind == "dominative" and body.params["p"] < 2.0:
            raise ValueError("aperture of a dominative body needs p >= 2")


def _ball_argmin(n, delta):
    """Minimise ``sum(y) / max(y)`` on the sphere ``|y - 1| = delta``.

    Projected gradient descent from 32 deterministic starts, halving the step
    until the objective decreases; a start ends once the step falls below
    ``1e-12``.  The largest coordinate is taken with ties broken by index,
    which makes the objective smooth along each descent path.
    """
    ones = np.ones(n)
    if delta == 0.0:
        return ones

    def objective(u):
        return _trace_ratio(ones + delta * u)

    def gradient(u):
        y = ones + delta * u
        k = int(np.argmax(y))
        s, m = y.sum(), y[k]
        g = delta * (m * ones - s * np.eye(n)[k]) / (m * m)
        return g - (g @ u) * u

    rng = np.random.default_rng(0)
    starts = rng.normal(size=(BALL_STARTS, n))
    best_u, best_val = None, math.inf
    for u in starts:
        u = u / np.linalg.norm(u)
        val = objective(u)
        step = 1.0
        while step >= BALL_MIN_STEP:
            g = gradient(u)
            if not np.any(g):
                break
            trial = u - step * g
            trial /= np.linalg.norm(trial)
            trial_val = objective(trial)
            if trial_val < val:
                u, val = trial, trial_val
                step *= 2.0
            else:
                step *= 0.5
        if val < best_val:
            best_u, best_val = u, val
    return ones + delta * best_u


def aperture(body):
    """Solution cone aperture ``alpha = min_{z in kappa} sum(z) / max(z)`` and its dual.

    For an orbit hull the ratio is quasi-concave on the non-negative orthant
    (``sum(y) - alpha max(y)`` is concave), so the minimum sits at a vertex,
    i.e. at a seed.  Zero seeds are skipped: the ratio is scale invariant.
    """
    _check_elliptic(body)
    n = body.n
    if isinstance(body, Ball):
        z = _ball_argmin(n, body.delta)
    else:
        seeds = body.seeds[body.seeds.max(axis=1) > ELLIPTIC_TOL]
        z = seeds[int(np.argmin(_trace_ratio(seeds)))]
    alpha = float(_trace_ratio(z))
    p = p_from_alpha(n, alpha)
    if math.isinf(p):
        c = float(z.max())
    else:
        c = float(z.sum() / (n + p - 2.0))
    return ApertureReport(alpha, p, c, np.array(z))


def minimal_dominative_bound(body, checks=100, seed=0):
    """Largest-aperture dominative minorant: ``c F_p(X) <= F(X)`` for all X.

    The result is self-verified: ``c * p_vector`` must be majorized by the
    aperture minimiser, and the inequality is spot-checked at ``checks``
    random matrices.
    """
    report = aperture(body)
    n, c, p = body.n, report.c, report.p
    if not sm.majorizes(c * p_vector(n, p), report.argmin):
        raise InconsistencyError("c * p-vector is not majorized by the aperture minimiser")
    rng = np.random.default_rng(seed)
    X = sm.random_symmat(rng, n, size=checks)
    lam = sm.eigvals(X)
    lower = c * dominative(n, p).evaluate_spectrum(lam)
    upper = body.evaluate_spectrum(lam)
    slack = 1e-9 * (1.0 + np.abs(upper))
    if np.any(lower > upper + slack):
        raise InconsistencyError("c F_p exceeds F at a sampled matrix")
    return c, p
