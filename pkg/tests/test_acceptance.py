"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line
that the terminal summary prints (see conftest.py)."""
import math
import time

import numpy as np
import pytest

from sublinop import rotinv
from sublinop import symmat as sm
from sublinop.convbody import GeneralBody, nested_cones, nesting_report, nondegenerate
from sublinop.fundsol import FundamentalSolution, sample_annulus, verify_fundamental
from sublinop.mvsolve import (
    GridFn,
    ZFamily,
    annulus_grid,
    band_cells,
    inf_convolution,
    mollify,
    mv_excess,
    mv_excess_field,
    semiconcavity_excess,
    solve_dirichlet,
    square_grid,
)

SLACK = 1e-8
DIMS = (2, 3, 4, 5)
TRIALS = 1000


def majorization_violation(x, y):
    """How far ``x`` is from being majorized by ``y``: positive part of the
    worst top-k partial sum excess, and the total mismatch."""
    xd = -np.sort(-x, axis=-1)
    yd = -np.sort(-y, axis=-1)
    px, py = np.cumsum(xd, axis=-1), np.cumsum(yd, axis=-1)
    partial = np.max(px[..., :-1] - py[..., :-1], axis=-1, initial=0.0)
    total = np.abs(px[..., -1] - py[..., -1])
    return np.maximum(np.maximum(partial, 0.0), total)


def random_bodies(rng, n):
    """One body of every kind in dimension n."""
    lam = rng.uniform(0.0, 2.0)
    return [
        GeneralBody(sm.random_symmat(rng, n, size=4)),
        rotinv.OrbitHull(rng.normal(size=(3, n))),
        rotinv.pucci(n, lam, lam + rng.uniform(0.0, 3.0)),
        rotinv.dominative(n, rng.uniform(1.0, 12.0)),
        rotinv.dominative(n, math.inf),
        rotinv.singleton(rng.normal(size=n)),
        rotinv.Ball(n, rng.uniform(0.0, 1.0)),
    ]


def test_criterion_1_structural_inequalities(record):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = {"schur": 0.0, "ky-fan": 0.0, "von-neumann": 0.0, "sublinear": 0.0,
             "homogeneous": 0.0, "rotation": 0.0}
    for n in DIMS:
        X = sm.random_symmat(rng, n, size=TRIALS)
        Y = sm.random_symmat(rng, n, size=TRIALS)
        lx, ly = sm.eigvals(X), sm.eigvals(Y)
        worst["schur"] = max(worst["schur"], majorization_violation(sm.diag_of(X), lx).max())
        worst["ky-fan"] = max(worst["ky-fan"], majorization_violation(sm.eigvals(X + Y), lx + ly).max())
        worst["von-neumann"] = max(worst["von-neumann"], (sm.inner(X, Y) - np.sum(lx * ly, axis=-1)).max())

        t = rng.uniform(0.01, 10.0, size=TRIALS)
        Q = sm.random_orthogonal(rng, n, size=TRIALS)
        QXQ = Q @ X @ np.swapaxes(Q, -1, -2)
        for body in random_bodies(rng, n):
            fx, fy = body(X), body(Y)
            scale = 1.0 + np.abs(fx) + np.abs(fy)
            worst["sublinear"] = max(worst["sublinear"], ((body(X + Y) - fx - fy) / scale).max())
            worst["homogeneous"] = max(worst["homogeneous"],
                                       (np.abs(body(t[:, None, None] * X) - t * fx) / (1 + t * np.abs(fx))).max())
            if not isinstance(body, GeneralBody):
                worst["rotation"] = max(worst["rotation"], (np.abs(body(QXQ) - fx) / (1 + np.abs(fx))).max())
    elapsed = time.perf_counter() - start
    ok = all(v <= SLACK for v in worst.values()) and elapsed < 10.0
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f"; {elapsed:.1f}s"
    record(1, "structural inequality suites", ok, detail)
    assert ok, detail


def test_criterion_2_closed_forms(record):
    errors = {}
    flat = rotinv.singleton([1.0, 3.0, 4.0])
    ap = rotinv.aperture(flat)
    errors["singleton p"] = abs(ap.p - 3.0)
    errors["singleton c"] = abs(ap.c - 2.0)
    w = FundamentalSolution(3, ap.p)
    assert w.is_log
    rng = np.random.default_rng(2)
    x = sample_annulus(rng, 3, 100)
    errors["log residual"] = float(np.max(np.abs(flat(w.hessian(x)))))
    for delta in (0.1, 0.5, 0.9):
        s = math.sqrt((3.0 - delta**2) / 2.0)
        c_ref = (3.0 - delta**2 - delta * s) / 3.0
        p_ref = (3.0 - delta**2 + 2.0 * delta * s) / (3.0 - delta**2 - delta * s) + 1.0
        ball = rotinv.aperture(rotinv.Ball(3, delta))
        errors[f"ball {delta} c"] = abs(ball.c - c_ref)
        errors[f"ball {delta} p"] = abs(ball.p - p_ref)
    dom = {}
    for p in (2.0, 3.0, 10.0, math.inf):
        got = rotinv.aperture(rotinv.dominative(3, p)).p
        dom[p] = 0.0 if (math.isinf(p) and math.isinf(got)) else abs(got - p)
    ok = (errors["singleton p"] <= 1e-12 and errors["singleton c"] <= 1e-12
          and errors["log residual"] <= 1e-9
          and all(v <= 1e-6 for k, v in errors.items() if k.startswith("ball"))
          and all(v <= 1e-9 for v in dom.values()))
    detail = f"max ball error {max(v for k, v in errors.items() if k.startswith('ball')):.1e}, " \
             f"log residual {errors['log residual']:.1e}, dominative {max(dom.values()):.1e}"
    record(2, "closed-form regressions", ok, detail)
    assert ok, (errors, dom)


def test_criterion_3_operator_identities(record):
    rng = np.random.default_rng(3)
    worst_pucci = worst_dom = 0.0
    for k in range(TRIALS):
        n = DIMS[k % len(DIMS)]
        X = sm.random_symmat(rng, n, scale=rng.uniform(0.1, 5.0))
        lam = rng.uniform(0.0, 2.0)
        Lam = lam + rng.uniform(0.0, 4.0)
        worst_pucci = max(worst_pucci, abs(rotinv.pucci_eval(lam, Lam, X) - rotinv.pucci(n, lam, Lam)(X)))
        p = rng.uniform(1.0, 2.0) if k % 2 else rng.uniform(2.0, 20.0)
        worst_dom = max(worst_dom, abs(rotinv.dominative(n, p)(X) - rotinv.dominative_direct(p, X)))
    for n in DIMS:
        X = sm.random_symmat(rng, n, size=50)
        worst_dom = max(worst_dom, np.abs(rotinv.dominative(n, math.inf)(X) - rotinv.dominative_direct(math.inf, X)).max())

    exact = True
    for n in DIMS:
        X = sm.random_symmat(rng, n, size=200)
        lap, top = rotinv.laplacian(n), rotinv.dominative(n, math.inf)
        for p in (1.0, 1.25, 1.5, 1.9, 2.0, 2.5, 3.0, 7.0, 10.0):
            if p >= 2.0:
                shifted = rotinv.minkowski(1.0, lap, p - 2.0, top)
            else:
                shifted = rotinv.minkowski(1.0, lap, 2.0 - p, rotinv.negate(top))
            exact &= bool(np.array_equal(shifted(X), rotinv.dominative(n, p)(X)))
    ok = worst_pucci <= 1e-9 and worst_dom <= 1e-9 and exact
    detail = f"pucci {worst_pucci:.1e}, dominative {worst_dom:.1e}, minkowski exact {exact}"
    record(3, "operator identity equivalences", ok, detail)
    assert ok, detail


FUNDSOL_BODIES = [
    ("dominative 2", lambda n: rotinv.dominative(n, 2.0)),
    ("dominative 3", lambda n: rotinv.dominative(n, 3.0)),
    ("dominative 7", lambda n: rotinv.dominative(n, 7.0)),
    ("dominative inf", lambda n: rotinv.dominative(n, math.inf)),
    ("pucci(1,2)", lambda n: rotinv.pucci(n, 1.0, 2.0)),
    ("pucci(1,4)", lambda n: rotinv.pucci(n, 1.0, 4.0)),
    ("singleton(1,3,4)", lambda n: rotinv.singleton([1.0, 3.0, 4.0])),
    ("ball 0.5", lambda n: rotinv.Ball(n, 0.5)),
]


def test_criterion_4_fundamental_solutions(record):
    start = time.perf_counter()
    worst_spec = worst_res = 0.0
    checked = 0
    for name, make in FUNDSOL_BODIES:
        for n in (2, 3):
            if name.startswith("singleton") and n == 2:
                continue  # the flat body is three-dimensional
            rep = verify_fundamental(make(n), samples=100, seed=4)
            worst_spec = max(worst_spec, abs(rep.at_spectrum))
            worst_res = max(worst_res, rep.max_residual)
            checked += 1
    elapsed = time.perf_counter() - start
    ok = worst_spec <= 1e-8 and worst_res <= 1e-8 and elapsed < 5.0
    detail = f"{checked} cases, F(spectrum) {worst_spec:.1e}, residual {worst_res:.1e}, {elapsed:.2f}s"
    record(4, "fundamental solutions annihilated", ok, detail)
    assert ok, detail


def test_criterion_5_nesting_chain(record):
    verdicts = []
    for n in (2, 3):
        for p, q in ((2.0, 3.0), (3.0, 10.0)):
            chain = [
                rotinv.OrbitHull(rotinv.dominative(n, 2.0).seeds / n),
                rotinv.OrbitHull(rotinv.dominative(n, p).seeds / (n + p - 2.0)),
                rotinv.OrbitHull(rotinv.dominative(n, q).seeds / (n + q - 2.0)),
                rotinv.dominative(n, math.inf),
            ]
            slices = [rotinv.phi_inv_representative(b) for b in chain]
            for a, b in zip(range(3), range(1, 4)):
                verdicts.append(nested_cones(slices[a], slices[b]))
                if np.array_equal(chain[a].seeds, chain[b].seeds):
                    continue  # p = 2 makes the first link an equality
                back = nesting_report(slices[b], slices[a])
                verdicts.append(not back.nested and back.witness is not None and back.residual > 1e-8)
    ok = all(verdicts)
    record(5, "nesting chain", ok, f"{sum(verdicts)}/{len(verdicts)} checks")
    assert ok


def test_criterion_6_quadratic_exactness(record):
    rng = np.random.default_rng(6)
    bodies = {"laplacian": rotinv.laplacian(2), "pucci(1,3)": rotinv.pucci(2, 1.0, 3.0),
              "dominative 4": rotinv.dominative(2, 4.0)}
    worst = 0.0
    As = sm.random_symmat(rng, 2, size=50, scale=2.0)
    for body in bodies.values():
        family = ZFamily.from_body(body, 32)
        Lam = body.eigenvalue_bounds()[1]
        for eps in (0.05, 0.025):
            h = eps / 4.0
            grid = square_grid(8, band_cells(eps, h, Lam), half_extent=eps)
            node = grid.node_at(0.0, 0.0)
            for A in As:
                u = GridFn.from_function(grid, lambda x: 0.5 * np.einsum("...i,ij,...j->...", x, A, x))
                got = mv_excess(u, node, family, eps, density=41) / eps**2
                want = float(body(A)) / 8.0
                worst = max(worst, abs(got - want) / (1.0 + sm.frobenius_norm(A)))
    ok = worst <= 5e-3
    record(6, "mean-value quadratic exactness", ok, f"max scaled error {worst:.2e} (tol 5e-3)")
    assert ok


def _annulus_level(cells, k, body, w):
    h = 2.0 / cells
    eps = k * h
    grid = annulus_grid(0.25, 1.0, cells, band_cells(eps, h, body.eigenvalue_bounds()[1]))
    return grid, eps, GridFn.from_function(grid, w)


def test_criterion_7_solver_convergence(record):
    start = time.perf_counter()
    body = rotinv.dominative(2, 3.0)
    w = FundamentalSolution(2, 3.0)
    errors = []
    for cells, k in ((64, 8), (128, 4), (256, 2)):
        grid, eps, g = _annulus_level(cells, k, body, w)
        sol = solve_dirichlet(grid, g, body, eps)
        diff = np.abs(sol.solution.values - g.values)[grid.interior]
        errors.append(float(diff.max() / np.abs(g.values[grid.interior]).max()))

    grid, eps, g1 = _annulus_level(64, 8, body, w)
    lifted = GridFn.from_function(grid, lambda x: np.maximum(w(x), -1.5 + 0.3 * x[..., 0]))
    tol = 1e-10
    u1 = solve_dirichlet(grid, g1, body, eps, tol=tol).solution.values
    u2 = solve_dirichlet(grid, lifted, body, eps, tol=tol).solution.values
    gap = float(np.max((u1 - u2)[grid.interior]))
    elapsed = time.perf_counter() - start

    monotone = errors[0] > errors[1] > errors[2]
    ok = monotone and errors[-1] < 5e-2 and gap <= 10 * tol and elapsed < 120.0
    detail = "errors " + ", ".join(f"{e:.2e}" for e in errors) + f"; comparison gap {gap:.1e}; {elapsed:.0f}s"
    record(7, "solver convergence and comparison", ok, detail)
    assert ok, detail


def test_criterion_8_regularization(record):
    rng = np.random.default_rng(8)
    grid = square_grid(24, 2)
    u = GridFn(grid, np.where(grid.active, rng.normal(size=grid.shape), np.nan))
    active = grid.active
    below = monotone = semiconcave = True
    for eps in (0.2, 0.1, 0.05):
        ue = inf_convolution(u, eps).values
        uh = inf_convolution(u, eps / 2.0).values
        below &= bool(np.all(ue[active] <= u.values[active] + 1e-12))
        monotone &= bool(np.all(uh[active] >= ue[active] - 1e-12))
        semiconcave &= semiconcavity_excess(GridFn(grid, ue), eps) <= 1e-9

    body = rotinv.dominative(2, 3.0)
    w = FundamentalSolution(2, 3.0)
    family = ZFamily.from_body(body, 16)
    cells = 48
    h = 2.0 / cells
    eps = 4.0 * h
    radius = 3.0 * h
    grid = square_grid(cells, band_cells(eps, h, 3.0) + int(math.ceil(radius / h)))
    u1 = GridFn.from_function(grid, lambda x: w(x - np.array([1.6, 0.0])))
    u2 = GridFn.from_function(grid, lambda x: w(x - np.array([-1.5, 0.7])))
    tol = 1e-12
    sum_excess = float(np.nanmax(mv_excess_field(u1 + u2, family, eps)))
    smooth = mollify(u1, radius)
    field = mv_excess_field(smooth, family, eps)
    covered = int(np.isfinite(field).sum())
    moll_excess = float(np.nanmax(field))

    ok = below and monotone and semiconcave and sum_excess <= tol and moll_excess <= tol and covered > 0
    detail = (f"inf-conv below {below}, monotone {monotone}, semiconcave {semiconcave}; "
              f"sum excess {sum_excess:.1e}; mollified excess {moll_excess:.1e} on {covered} nodes")
    record(8, "regularization and superposition", ok, detail)
    assert ok, detail


def _random_elliptic_body(rng, n):
    kind = rng.integers(4)
    if kind == 0:
        seeds = np.abs(rng.normal(size=(rng.integers(1, 4), n)))
        if rng.random() < 0.4:
            seeds = np.vstack([seeds, np.zeros(n)])
        return rotinv.OrbitHull(seeds)
    if kind == 1:
        lam = 0.0 if rng.random() < 0.4 else rng.uniform(0.0, 2.0)
        return rotinv.pucci(n, lam, lam + rng.uniform(0.1, 3.0))
    if kind == 2:
        return rotinv.Ball(n, rng.uniform(0.0, 1.0))
    G = rng.normal(size=(rng.integers(1, 4), n, n))
    G = G @ np.swapaxes(G, -1, -2)
    if rng.random() < 0.4:
        G = np.concatenate([G, np.zeros((1, n, n))])
    return GeneralBody(G)


def test_criterion_9_nondegeneracy(record):
    checks = [not nondegenerate(rotinv.pucci(2, 0.0, 1.0))]
    uniform = [rotinv.laplacian(2), rotinv.pucci(2, 1.0, 3.0), rotinv.pucci(3, 1.0, 4.0),
               rotinv.dominative(2, 3.0), rotinv.dominative(3, 4.0), rotinv.singleton([1.0, 3.0, 4.0]),
               rotinv.Ball(3, 0.5), rotinv.Ball(2, 0.9)]
    checks += [nondegenerate(b) for b in uniform]
    rng = np.random.default_rng(9)
    agree = 0
    for _ in range(200):
        body = _random_elliptic_body(rng, int(rng.integers(2, 6)))
        value = float(body(-np.eye(body.n)))
        agree += nondegenerate(body) == (value < -1e-10)
    ok = all(checks) and agree == 200
    record(9, "non-degeneracy predicate", ok, f"named bodies {sum(checks)}/{len(checks)}, random {agree}/200")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
