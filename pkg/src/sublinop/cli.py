"""Command-line interface: ``sublinop <subcommand> ...``.

Exit codes: 0 success, 2 invalid input, 3 an iteration failed to converge.
"""
import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from . import fundsol, rotinv
from . import symmat as sm
from .bodyspec import SpecError, load_body
from .convbody import GeneralBody, classify_ellipticity, nesting_report, nondegenerate
from .errors import ConvergenceError, SublinopError
from .mvsolve import grid as gridmod
from .mvsolve import regularize
from .mvsolve.solver import METHODS, solve_dirichlet

log = logging.getLogger("sublinop")

EXIT_OK, EXIT_INVALID, EXIT_CONVERGENCE = 0, 2, 3
ASYMMETRY_TOL = 1e-12


class UsageError(Exception):
    pass


def _json_value(x):
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, np.ndarray):
        return [_json_value(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_json_value(v) for v in x]
    if isinstance(x, dict):
        return {k: _json_value(v) for k, v in x.items()}
    if isinstance(x, np.integer):
        return int(x)
    return x


def _emit(report, as_json, out=None):
    out = out or sys.stdout
    if as_json:
        out.write(json.dumps(_json_value(report), indent=2) + "\n")
        return
    for key, value in _json_value(report).items():
        out.write(f"{key:>16}: {value}\n")


def _class_of(body):
    if isinstance(body, GeneralBody):
        return classify_ellipticity(body)
    return rotinv.classify(body)


def cmd_analyze(args):
    body = load_body(args.spec)
    cls = _class_of(body)
    report = {"kind": getattr(body, "kind", "general"), "n": body.n, "class": cls.tag.value}
    if not cls.elliptic:
        report["notice"] = "not elliptic: constants and apertures omitted"
        _emit(report, args.json)
        return EXIT_OK
    f_minus_i = float(body(-np.eye(body.n)))
    report.update({
        "lambda": cls.lam,
        "Lambda": cls.Lam,
        "F_minus_I": f_minus_i,
        "nondegenerate": nondegenerate(body),
    })
    if isinstance(body, GeneralBody):
        report["notice"] = "general body: apertures need rotational invariance and are omitted"
    else:
        try:
            ap = rotinv.aperture(body)
        except ValueError as exc:
            report["notice"] = f"aperture omitted: {exc}"
        else:
            report.update({"alpha": ap.alpha, "p": ap.p, "c": ap.c, "argmin": ap.argmin})
    _emit(report, args.json)
    return EXIT_OK


def _parse_matrix(text, n):
    try:
        values = [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--matrix: cannot parse {text!r} as comma-separated numbers") from None
    if len(values) != n * n:
        raise UsageError(f"--matrix: expected {n * n} entries for n={n}, got {len(values)}")
    X = np.array(values).reshape(n, n)
    if not np.all(np.isfinite(X)):
        raise UsageError("--matrix: entries must be finite")
    asym = float(np.max(np.abs(X - X.T)))
    if asym > ASYMMETRY_TOL:
        log.warning("matrix is not symmetric (max |X - X^T| = %.3g); using (X + X^T)/2", asym)
    return sm.symmat(X)


def cmd_eval(args):
    body = load_body(args.spec)
    X = _parse_matrix(args.matrix, body.n)
    print(f"{float(body(X)):.12g}")
    return EXIT_OK


def _generators(body):
    if isinstance(body, GeneralBody):
        return body
    if isinstance(body, rotinv.Ball):
        raise UsageError("ball bodies have no finite generator set for nesting tests")
    return rotinv.phi_inv_representative(body)


def cmd_nest(args):
    F, G = load_body(args.spec_f), load_body(args.spec_g)
    if F.n != G.n:
        raise UsageError(f"dimension mismatch: {F.n} vs {G.n}")
    gf, gg = _generators(F), _generators(G)
    rep = nesting_report(gf, gg)
    report = {"nested": rep.nested, "residual": rep.residual}
    if not rep.nested:
        report["witness_index"] = rep.witness
        report["witness"] = gf.generators[rep.witness]
    _emit(report, args.json)
    return EXIT_OK


def cmd_fundsol_check(args):
    body = load_body(args.spec)
    if isinstance(body, GeneralBody):
        raise UsageError("fundsol-check needs a rotationally invariant body")
    if args.samples < 1:
        raise UsageError("--samples must be positive")
    rep = fundsol.verify_fundamental(body, samples=args.samples, seed=args.seed)
    _emit({
        "p": rep.p,
        "alpha": rep.alpha,
        "max_residual": rep.max_residual,
        "F_at_spectrum": rep.at_spectrum,
        "samples": rep.samples,
        "seed": args.seed,
    }, args.json)
    return EXIT_OK


def _boundary_function(spec, body):
    """Pointwise boundary data, which is also the exact solution, and its label."""
    if spec == "fundsol":
        p = rotinv.aperture(body).p
        return fundsol.FundamentalSolution(2, p), f"w_2,{p:g}"
    if spec.startswith("affine:"):
        try:
            a, b, c = (float(v) for v in spec[len("affine:"):].split(","))
        except ValueError:
            raise UsageError("--boundary affine:a,b,c needs three numbers") from None
        return (lambda x: a * x[..., 0] + b * x[..., 1] + c), "affine"
    return None, None


def cmd_solve(args):
    body = load_body(args.spec)
    if not isinstance(body, rotinv.OrbitHull) or body.n != 2:
        raise UsageError("solve needs a two-dimensional orbit hull body (pucci, dominative, singleton, rotinv)")
    cls = rotinv.classify(body)
    if cls.tag.value != "uniform":
        raise UsageError(f"solve needs a uniformly elliptic body, got class {cls.tag.value!r}")
    exact, label = _boundary_function(args.boundary, body)
    if label and label.startswith("w_") and (args.domain != "annulus" or args.rin <= 0):
        raise UsageError("fundsol boundary data needs an annulus with rin > 0 (the pole is at the origin)")

    if exact is None:
        try:
            data = gridmod.read_csv(args.boundary)
        except OSError as exc:
            raise UsageError(f"cannot read boundary file {args.boundary}: {exc.strerror}") from None
        grid, boundary = data.grid, data
        eps = args.eps if args.eps is not None else 4.0 * grid.h
    else:
        if args.grid < 4:
            raise UsageError("--grid must be at least 4")
        half = args.rout
        h = 2.0 * half / args.grid
        eps = args.eps if args.eps is not None else 4.0 * h
        band = gridmod.band_cells(eps, h, cls.Lam)
        if args.domain == "square":
            grid = gridmod.square_grid(args.grid, band, half_extent=half)
        else:
            if not 0.0 <= args.rin < args.rout:
                raise UsageError("--rin must satisfy 0 <= rin < rout")
            grid = gridmod.annulus_grid(args.rin, args.rout, args.grid, band)
        boundary = gridmod.GridFn.from_function(grid, exact)

    result = solve_dirichlet(
        grid, boundary, body, eps,
        m_rotations=args.rot, tol=args.tol, max_sweeps=args.max_sweeps,
        density=args.density, method=args.method,
    )
    report = result.report()
    report.update({"h": grid.h, "eps": eps, "interior_nodes": int(grid.interior.sum())})
    if exact is not None:
        diff = np.abs(result.solution.values - boundary.values)[grid.interior]
        scale = float(np.max(np.abs(boundary.values[grid.interior])))
        report["exact"] = label
        report["max_error"] = float(diff.max())
        report["relative_error"] = float(diff.max() / scale) if scale > 0 else float(diff.max())
    if args.out:
        gridmod.write_csv(args.out, result.solution)
    _emit(report, True)
    return EXIT_OK


def cmd_convolve(args):
    try:
        u = gridmod.read_csv(args.input)
    except OSError as exc:
        raise UsageError(f"cannot read {args.input}: {exc.strerror}") from None
    if not args.eps > 0:
        raise UsageError("--eps must be positive")
    report = {"mode": args.mode, "eps": args.eps}
    if args.mode == "mollify":
        out = regularize.mollify(u, args.eps)
        report["dropped_nodes"] = int(u.grid.active.sum() - out.grid.active.sum())
    else:
        if args.mode == "inf":
            out = regularize.inf_convolution(u, args.eps)
            excess = regularize.semiconcavity_excess(out, args.eps)
            report["second_difference_bound"] = "max second difference <= 1/eps"
        else:
            out = regularize.sup_convolution(u, args.eps)
            excess = regularize.semiconcavity_excess(gridmod.GridFn(out.grid, -out.values), args.eps)
            report["second_difference_bound"] = "min second difference >= -1/eps"
        report["bound_excess"] = excess
        report["bound_holds"] = bool(excess <= 1e-9)
    gridmod.write_csv(args.out, out)
    _emit(report, True)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="sublinop", description="Sublinear elliptic operator toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="ellipticity, constants and apertures of a body")
    p.add_argument("spec", help="JSON body file or inline JSON")
    p.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("eval", help="evaluate F(X)")
    p.add_argument("spec")
    p.add_argument("--matrix", required=True, help="row-major entries, comma separated")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("nest", help="test body cone inclusion C_F in C_G")
    p.add_argument("spec_f")
    p.add_argument("spec_g")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_nest)

    p = sub.add_parser("fundsol-check", help="residual of the radial fundamental solution")
    p.add_argument("spec")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_fundsol_check)

    p = sub.add_parser("solve", help="Dirichlet problem through the mean-value fixed point")
    p.add_argument("spec")
    p.add_argument("--domain", choices=("square", "annulus"), default="annulus")
    p.add_argument("--rin", type=float, default=0.25, help="inner radius (annulus)")
    p.add_argument("--rout", type=float, default=1.0, help="outer radius, or square half width")
    p.add_argument("--grid", type=int, default=64, help="cells across the domain diameter")
    p.add_argument("--eps", type=float, default=None, help="ellipsoid scale (default 4h)")
    p.add_argument("--rot", type=int, default=16, help="rotation count m")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-sweeps", type=int, default=None)
    p.add_argument("--density", type=int, default=41, help="disc quadrature lattice size")
    p.add_argument("--method", choices=METHODS, default="policy")
    p.add_argument("--boundary", default="fundsol", help="fundsol | affine:a,b,c | file.csv")
    p.add_argument("--out", help="write the solution grid as CSV")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("convolve", help="inf/sup convolution or mollification of a grid CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--mode", choices=("inf", "sup", "mollify"), required=True)
    p.add_argument("--eps", type=float, required=True, help="penalty eps, or kernel radius for mollify")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_convolve)
    return parser


def _check_threads():
    raw = os.environ.get("SUBLINOP_THREADS", "0")
    try:
        if int(raw) < 0:
            raise ValueError
    except ValueError:
        raise UsageError(f"SUBLINOP_THREADS must be a non-negative integer, got {raw!r}") from None


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INVALID
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        _check_threads()
        return args.func(args)
    except ConvergenceError as exc:
        sys.stderr.write(json.dumps({"error": str(exc), "last_update": _json_value(exc.residual),
                                     "iterations": exc.iterations}) + "\n")
        return EXIT_CONVERGENCE
    except (UsageError, SpecError, SublinopError, ValueError) as exc:
        sys.stderr.write(f"sublinop: error: {exc}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
