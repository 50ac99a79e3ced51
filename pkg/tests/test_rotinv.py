import math

import numpy as np
import pytest

from sublinop import rotinv
from sublinop import symmat as sm
from sublinop.convbody import GeneralBody, nondegenerate
from sublinop.errors import DimensionError, NotEllipticError


@pytest.fixture
def rng():
    return np.random.default_rng(31)


def _orbit_eval_brute(seeds, X):
    """max over every permuted seed of (P a) . lam(X), eigenvalues from LAPACK."""
    lam = np.linalg.eigvalsh(X)
    n = len(lam)
    return max(float(np.dot(P @ a, lam)) for a in seeds for P in sm.permutation_matrices(n))


def test_orbit_hull_matches_permutation_enumeration(rng):
    for n in (2, 3, 4):
        body = rotinv.OrbitHull(rng.normal(size=(3, n)))
        for X in sm.random_symmat(rng, n, size=10):
            assert body(X) == pytest.approx(_orbit_eval_brute(body.seeds, X), abs=1e-11)


def test_orbit_hull_agrees_with_its_diagonal_slice_on_diagonals(rng):
    body = rotinv.pucci(3, 1.0, 2.5)
    slice_ = rotinv.phi_inv_representative(body)
    for d in rng.normal(size=(10, 3)):
        assert body(np.diag(d)) == pytest.approx(slice_(np.diag(d)), abs=1e-12)


def test_named_evaluations():
    X = np.diag([2.0, -1.0])
    assert rotinv.pucci(2, 1.0, 3.0)(X) == pytest.approx(5.0)
    assert rotinv.dominative(2, 4.0)(np.diag([1.0, 2.0])) == pytest.approx(7.0)
    assert rotinv.dominative(2, math.inf)(X) == pytest.approx(2.0)
    assert rotinv.laplacian(3)(np.diag([1.0, 2.0, 3.0])) == pytest.approx(6.0)
    assert rotinv.singleton_eval([1.0, 3.0, 4.0], np.diag([3.0, 1.0, 2.0])) == pytest.approx(1 + 6 + 12)
    with pytest.raises(ValueError):
        rotinv.singleton_eval([3.0, 1.0], X)


def test_ball_eval_matches_direct(rng):
    ball = rotinv.Ball(3, 0.4)
    X = sm.random_symmat(rng, 3, size=20)
    np.testing.assert_allclose(ball(X), rotinv.ball_direct(0.4, X), atol=1e-12)
    with pytest.raises(ValueError):
        rotinv.Ball(2, 1.5)


def test_aperture_examples():
    rep = rotinv.aperture(rotinv.pucci(2, 1.0, 3.0))
    assert (rep.alpha, rep.p, rep.c) == pytest.approx((4 / 3, 4.0, 1.0))
    rep = rotinv.aperture(rotinv.singleton([1.0, 3.0, 4.0]))
    assert (rep.alpha, rep.p, rep.c) == pytest.approx((2.0, 3.0, 2.0))
    np.testing.assert_array_equal(rep.argmin, [1.0, 3.0, 4.0])
    assert math.isinf(rotinv.aperture(rotinv.dominative(3, math.inf)).p)
    assert rotinv.aperture(rotinv.laplacian(3)).p == pytest.approx(2.0)


def test_aperture_rejections():
    with pytest.raises(NotEllipticError):
        rotinv.aperture(rotinv.OrbitHull([[-1.0, 1.0]]))
    with pytest.raises(NotEllipticError):
        rotinv.aperture(rotinv.OrbitHull([[0.0, 0.0]]))
    with pytest.raises(ValueError):
        rotinv.aperture(rotinv.dominative(2, 1.5))


def test_exponent_duality():
    for n in (2, 3, 5):
        for p in (2.0, 3.0, 7.5):
            a = rotinv.alpha_from_p(n, p)
            assert (a - 1) * (p - 1) == pytest.approx(n - 1)
            assert rotinv.p_from_alpha(n, a) == pytest.approx(p)
        assert math.isinf(rotinv.p_from_alpha(n, 1.0))
        assert rotinv.alpha_from_p(n, math.inf) == 1.0


def test_minimal_dominative_bound(rng):
    for body in (rotinv.pucci(3, 1.0, 4.0), rotinv.singleton([1.0, 3.0, 4.0]), rotinv.Ball(3, 0.5)):
        c, p = rotinv.minimal_dominative_bound(body)
        X = sm.random_symmat(rng, 3, size=200)
        assert np.all(c * rotinv.dominative(3, p)(X) <= body(X) + 1e-9)


def test_ball_aperture_is_a_minimum(rng):
    ball = rotinv.Ball(3, 0.5)
    alpha = rotinv.aperture(ball).alpha
    u = rng.normal(size=(5000, 3))
    y = 1.0 + 0.5 * u / np.linalg.norm(u, axis=1, keepdims=True)
    assert np.all(y.sum(axis=1) / y.max(axis=1) >= alpha - 1e-9)


def test_phi_roundtrip_and_assertion():
    body = rotinv.pucci(3, 1.0, 2.0)
    rep = rotinv.phi_inv_representative(body)
    with pytest.raises(ValueError):
        rotinv.phi(rep)
    back = rotinv.phi(rep, assume_symmetric=True)
    assert {tuple(s) for s in back.seeds} == {tuple(s) for s in body.seeds}
    with pytest.raises(DimensionError):
        rotinv.phi_inv_representative(rotinv.laplacian(6))


def test_minkowski_support_additivity(rng):
    A, B = rotinv.OrbitHull(rng.normal(size=(2, 3))), rotinv.pucci(3, 0.5, 2.0)
    S = rotinv.minkowski(1.5, A, 2.0, B)
    X = sm.random_symmat(rng, 3, size=30)
    np.testing.assert_allclose(S(X), 1.5 * A(X) + 2.0 * B(X), atol=1e-12)
    np.testing.assert_allclose(rotinv.negate(A)(X), A(-X), atol=1e-12)


def test_classify_and_nondegenerate():
    assert rotinv.classify(rotinv.pucci(2, 0.0, 1.0)).tag.value == "degenerate"
    assert rotinv.classify(rotinv.dominative(2, 3.0)).tag.value == "uniform"
    assert rotinv.classify(rotinv.OrbitHull([[-1.0, 2.0]])).tag.value == "not-elliptic"
    assert not nondegenerate(rotinv.pucci(2, 0.0, 1.0))
    assert nondegenerate(rotinv.dominative(2, math.inf))
    assert rotinv.min_trace(rotinv.Ball(4, 1.0)) == pytest.approx(2.0)
    assert isinstance(rotinv.phi_inv_representative(rotinv.laplacian(2)), GeneralBody)
