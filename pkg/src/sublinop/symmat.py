"""Small dense symmetric matrices and eigenvalue vectors.

Matrices are plain ``numpy`` arrays of shape ``(n, n)`` (or stacks of them,
shape ``(..., n, n)``) with ``2 <= n <= 8``.  The eigen-decomposition is a
cyclic Jacobi method vectorised over stacks, so results are reproducible bit
for bit and need no LAPACK call.
"""
import itertools
from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError, DimensionError

N_MIN, N_MAX = 2, 8

JACOBI_SWEEP_CAP = 100
JACOBI_REL_TOL = 1e-12
MAJORIZATION_RTOL = 1e-10


class Spectrum(NamedTuple):
    """Ascending eigenvalues and the orthogonal frame of eigenvectors.

    ``frame[..., :, i]`` is the unit eigenvector for ``eigenvalues[..., i]``.
    """

    eigenvalues: np.ndarray
    frame: np.ndarray


def symmat(entries, n=None):
    """Build a symmetric matrix from nested rows or a flat row-major sequence.

    The result is symmetrised as ``(X + X^T) / 2`` so that entry ``[i, j]``
    equals entry ``[j, i]`` exactly.
    """
    X = np.array(entries, dtype=float)
    if X.ndim == 1:
        if n is None:
            n = int(round(np.sqrt(X.size)))
        if X.size != n * n:
            raise DimensionError(f"expected {n * n} entries for n={n}, got {X.size}")
        X = X.reshape(n, n)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise DimensionError(f"matrix must be square, got shape {X.shape}")
    check_dimension(X.shape[0])
    if not np.all(np.isfinite(X)):
        raise ValueError("matrix entries must be finite")
    return 0.5 * (X + X.T)


def check_dimension(n):
    if not N_MIN <= n <= N_MAX:
        raise DimensionError(f"dimension n={n} outside supported range [{N_MIN}, {N_MAX}]")
    return n


def _check_square(X):
    if X.ndim < 2 or X.shape[-1] != X.shape[-2]:
        raise DimensionError(f"expected square matrices, got shape {X.shape}")


def eigh(X):
    """Eigen-decomposition of a symmetric matrix (or a stack of them).

    Cyclic Jacobi: sweeps over all pairs ``p < q`` in row order, zeroing
    ``X[p, q]`` with a plane rotation, until the off-diagonal Frobenius norm
    falls below ``1e-12 * ||X||``.

    Raises
    ------
    ConvergenceError
        If some matrix is not diagonalised after 100 sweeps.
    """
    X = np.asarray(X, dtype=float)
    _check_square(X)
    n = X.shape[-1]
    batch_shape = X.shape[:-2]
    A = X.reshape(-1, n, n).copy()
    V = np.broadcast_to(np.eye(n), A.shape).copy()
    scale = np.sqrt(np.einsum("bij,bij->b", A, A))
    pairs = list(itertools.combinations(range(n), 2))
    offmask = ~np.eye(n, dtype=bool)

    for _ in range(JACOBI_SWEEP_CAP):
        off = _off_diagonal_norm(A, offmask)
        active = off > JACOBI_REL_TOL * scale
        if not active.any():
            break
        for p, q in pairs:
            apq = A[:, p, q]
            rot = active & (apq != 0.0)
            if not rot.any():
                continue
            theta = np.zeros_like(apq)
            theta[rot] = (A[rot, q, q] - A[rot, p, p]) / (2.0 * apq[rot])
            sign = np.where(theta >= 0.0, 1.0, -1.0)
            t = np.where(rot, sign / (np.abs(theta) + np.sqrt(theta * theta + 1.0)), 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            c_, s_ = c[:, None], s[:, None]
            # A <- J^T A J with J = [[c, s], [-s, c]] in the (p, q) plane
            colp, colq = A[:, :, p].copy(), A[:, :, q].copy()
            A[:, :, p] = c_ * colp - s_ * colq
            A[:, :, q] = s_ * colp + c_ * colq
            rowp, rowq = A[:, p, :].copy(), A[:, q, :].copy()
            A[:, p, :] = c_ * rowp - s_ * rowq
            A[:, q, :] = s_ * rowp + c_ * rowq
            A[rot, p, q] = 0.0
            A[rot, q, p] = 0.0
            vp, vq = V[:, :, p].copy(), V[:, :, q].copy()
            V[:, :, p] = c_ * vp - s_ * vq
            V[:, :, q] = s_ * vp + c_ * vq
    else:
        off = _off_diagonal_norm(A, offmask)
        if np.any(off > JACOBI_REL_TOL * scale):
            raise ConvergenceError(
                f"Jacobi iteration did not converge in {JACOBI_SWEEP_CAP} sweeps",
                residual=float(off.max()),
                iterations=JACOBI_SWEEP_CAP,
            )

    w = np.einsum("bii->bi", A)
    order = np.argsort(w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    V = np.take_along_axis(V, order[:, None, :], axis=-1)
    return Spectrum(w.reshape(batch_shape + (n,)), V.reshape(batch_shape + (n, n)))


def _off_diagonal_norm(A, offmask):
    return np.sqrt(np.sum(A[:, offmask] ** 2, axis=-1))


def eigvals(X):
    """Ascending eigenvalues of ``X``."""
    return eigh(X).eigenvalues


def inner(X, Y):
    """Trace inner product ``tr(XY)``; broadcasts over leading axes."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape[-2:] != Y.shape[-2:]:
        raise DimensionError(f"dimension mismatch: {X.shape[-2:]} vs {Y.shape[-2:]}")
    return np.einsum("...ij,...ji->...", X, Y)


def frobenius_norm(X):
    return np.sqrt(inner(X, X))


def operator_norm(X):
    """``max(|lambda_1|, |lambda_n|)``, the spectral norm of a symmetric matrix."""
    lam = eigvals(X)
    return np.maximum(np.abs(lam[..., 0]), np.abs(lam[..., -1]))


def sort_ascending(x):
    return np.sort(np.asarray(x, dtype=float), axis=-1)


def majorizes(x, y, rtol=MAJORIZATION_RTOL):
    """Return True iff ``x`` is majorized by ``y`` (written x < y).

    The tail sums of the ascending rearrangements must satisfy
    ``sum(x_up[k:]) <= sum(y_up[k:])`` for every ``k`` and the totals must
    agree; both comparisons allow ``rtol * (1 + |sum(y)|)`` slack.
    """
    x = sort_ascending(x)
    y = sort_ascending(y)
    if x.shape != y.shape:
        raise DimensionError(f"length mismatch: {x.shape} vs {y.shape}")
    tol = rtol * (1.0 + np.abs(y.sum(axis=-1)))
    tails_x = np.cumsum(x[..., ::-1], axis=-1)
    tails_y = np.cumsum(y[..., ::-1], axis=-1)
    partial_ok = np.all(tails_x[..., :-1] <= tails_y[..., :-1] + tol[..., None], axis=-1)
    total_ok = np.abs(tails_x[..., -1] - tails_y[..., -1]) <= tol
    result = partial_ok & total_ok
    return bool(result) if np.ndim(result) == 0 else result


def rearrangement_max(x, y):
    """``(x_up)^T (y_up)``: the largest value of ``x^T P y`` over permutations P."""
    return np.sum(sort_ascending(x) * sort_ascending(y), axis=-1)


def positive_part_trace(X):
    """Return ``(tr X+, tr X-)`` from the decomposition ``X = X+ - X-``."""
    lam = eigvals(X)
    return np.clip(lam, 0.0, None).sum(axis=-1), np.clip(-lam, 0.0, None).sum(axis=-1)


def diag_of(X):
    """Vector of diagonal entries."""
    return np.einsum("...ii->...i", np.asarray(X, dtype=float))


def diag_matrix(x):
    x = np.asarray(x, dtype=float)
    return x[..., :, None] * np.eye(x.shape[-1])


def spectral_sqrt(Z):
    """Symmetric square root of a positive semidefinite matrix."""
    lam, Q = eigh(Z)
    if np.any(lam < -1e-12 * (1.0 + np.abs(lam).max())):
        raise ValueError("square root needs a positive semidefinite matrix")
    return (Q * np.sqrt(np.clip(lam, 0.0, None))[..., None, :]) @ np.swapaxes(Q, -1, -2)


def permutation_matrices(n):
    """All ``n!`` permutation matrices, as an array of shape ``(n!, n, n)``."""
    eye = np.eye(n)
    return np.array([eye[list(perm)] for perm in itertools.permutations(range(n))])


def random_symmat(rng, n, size=None, scale=1.0):
    """Symmetric matrices with independent Gaussian entries above the diagonal."""
    shape = (n, n) if size is None else (size, n, n)
    G = rng.normal(scale=scale, size=shape)
    return 0.5 * (G + np.swapaxes(G, -1, -2))


def random_orthogonal(rng, n, size=None, rotations=None):
    """Random orthogonal matrices built as products of plane (Givens) rotations."""
    count = 1 if size is None else size
    rotations = rotations or 3 * n * n
    Q = np.broadcast_to(np.eye(n), (count, n, n)).copy()
    for _ in range(rotations):
        p, q = rng.choice(n, size=2, replace=False)
        phi = rng.uniform(0.0, 2.0 * np.pi, size=count)
        c, s = np.cos(phi)[:, None], np.sin(phi)[:, None]
        rowp, rowq = Q[:, p, :].copy(), Q[:, q, :].copy()
        Q[:, p, :] = c * rowp - s * rowq
        Q[:, q, :] = s * rowp + c * rowq
    return Q[0] if size is None else Q
