"""Command-line front end.

Every subcommand reads measures from CSV (``d`` coordinates then a weight per
row, optional header) or JSON (``{"dim", "points", "weights"}``) files and
writes a JSON document (or CSV with ``--format csv``) to ``--out`` or stdout.

Exit codes: 0 success, 1 negative answer (order violated, equality fails,
check fails), 2 input error (the error class name goes to stderr),
3 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings

import numpy as np

from . import analysis, costs, dual, linprog, order, simplex, wot
from .errors import (
    BarycentricOTError,
    IterationLimit,
    NoConvergence,
    NotConverged,
    NumericBreakdown,
    OrderViolated,
)
from .measures import DiscreteMeasure, read_measure, to_csv

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_NONCONVERGENCE = 0, 1, 2, 3
# OrderViolated can only come from completing an approximate projection
CONVERGENCE_ERRORS = (NotConverged, NoConvergence, IterationLimit, NumericBreakdown, OrderViolated)


class MissingField(BarycentricOTError, ValueError):
    """A solution file handed to ``plot-data`` lacks a required entry."""


class UsageError(BarycentricOTError, ValueError):
    pass


# ---------------------------------------------------------------------------
# serialisation


def _plain(obj):
    """Convert numpy containers and scalars to plain Python objects."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _format_number(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits."""

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(k)}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            if all(not isinstance(v, (dict, list)) for v in o):
                return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
            return "[\n" + ",\n".join(pad + enc(v, level + 1) for v in o) + "\n" + end + "]"
        if isinstance(o, bool) or o is None or isinstance(o, (str, int)):
            return json.dumps(o)
        if isinstance(o, float):
            return _format_number(o)
        raise TypeError(f"cannot serialise {type(o).__name__}")

    return enc(_plain(obj), 0) + "\n"


def _scalar_csv(payload: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k, v in _plain(payload).items():
        if isinstance(v, (dict, list)):
            continue
        w.writerow([k, _format_number(v) if isinstance(v, float) else v])
    return buf.getvalue()


def _measure_json(m: DiscreteMeasure) -> dict:
    return m.to_dict()


def _emit(args, payload: dict, csv_text: str | None = None) -> None:
    if args.format == "csv":
        text = csv_text if csv_text is not None else _scalar_csv(payload)
    else:
        text = dumps(payload)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# helpers


def _need(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required for '{args.command}'")


def _load_pair(args):
    _need(args, "mu", "nu")
    return read_measure(args.mu), read_measure(args.nu)


def _solve(args, mu, nu) -> wot.WotSolution:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return wot.solve_barycentric(mu, nu, tol=args.tol, max_iters=args.max_iters, seed=args.seed)


# ---------------------------------------------------------------------------
# subcommands


def cmd_project(args) -> int:
    mu, nu = _load_pair(args)
    sol = _solve(args, mu, nu)
    base = {
        "value": sol.value,
        "fw_gap": sol.fw_gap,
        "converged": sol.converged,
        "iterations": sol.iterations,
        "mu": _measure_json(mu),
        "nu": _measure_json(nu),
        "barycenters": sol.barycenters,
    }
    if not sol.converged:
        _emit(args, base)
        print("NotConverged: Frank-Wolfe gap above tolerance", file=sys.stderr)
        return EXIT_NONCONVERGENCE

    proj = wot.extract_projection(sol)
    f = dual.build_dual_potential(sol)
    cert = dual.certificate(sol, f)
    kernel = order.build_martingale_coupling(proj.measure, nu)
    chain = order.compose_chain(mu, proj.map_points, kernel, proj.assignment)
    chain_bary = np.linalg.norm(chain.barycenters() - proj.map_points, axis=1)

    tol = analysis.default_check_tol(mu, nu)
    checks = {
        "c2_monotone": analysis.check_c2_monotonicity(sol.plan, tol).to_dict(),
        "lipschitz": analysis.check_map_regularity(mu.points, sol.barycenters, mu.weights, tol).to_dict(),
    }
    if mu.dim == 1 and order.check_icx_order_1d(mu, nu).holds:
        checks["submartingale"] = analysis.check_submartingale_1d(mu, nu, sol).to_dict()

    payload = {
        **base,
        "plan": sol.plan.matrix,
        "mu_bar": _measure_json(proj.measure),
        "assignment": proj.assignment,
        "martingale_kernel": kernel.kernel,
        "dual_gap": cert["gap"],
        "dual_certified": cert["certified"],
        "dual_potential": cert["pieces"],
        "chain": {
            "matrix": chain.matrix,
            "marginal_residual": chain.marginal_residual(),
            "barycenter_residual": float(chain_bary.max()),
        },
        "checks": checks,
    }
    _emit(args, payload, to_csv(proj.measure))
    if not cert["certified"]:
        print(f"NotConverged: duality gap {cert['gap']:.3e} above tolerance", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def cmd_solve(args) -> int:
    mu, nu = _load_pair(args)
    sol = _solve(args, mu, nu)
    _emit(args, {"value": sol.value, "fw_gap": sol.fw_gap, "converged": sol.converged})
    return EXIT_OK if sol.converged else EXIT_NONCONVERGENCE


def cmd_w2(args) -> int:
    mu, nu = _load_pair(args)
    value, plan, (u, v) = linprog.w2_squared(mu, nu)
    _emit(args, {"w2_squared": value, "w2": math.sqrt(value), "plan": plan.matrix, "u": u, "v": v})
    return EXIT_OK


def cmd_check_order(args) -> int:
    mu, nu = _load_pair(args)
    if args.relation == "convex":
        cert = order.check_convex_order(mu, nu)
    elif args.relation == "icx":
        cert = order.check_icx_order_1d(mu, nu)
    else:
        cert = order.check_stochastic_order_1d(mu, nu)
    _emit(args, cert.to_dict())
    return EXIT_OK if cert.holds else EXIT_NEGATIVE


def cmd_simplex(args) -> int:
    _need(args, "mu", "simplex")
    mu = read_measure(args.mu)
    inst = simplex.SimplexInstance.from_measure(read_measure(args.simplex))
    res = simplex.simplex_projection_measure(mu, inst, tol=args.tol or 1e-8)
    payload = {
        "value": res.value,
        "translation": res.translation,
        "map_points": res.projection.map_points,
        "mu_bar": _measure_json(res.projection.measure),
        "phi_at_atoms": res.phi_values,
        "gradient_error": res.gradient_error,
    }
    _emit(args, payload, to_csv(res.projection.measure))
    return EXIT_OK


def _plan_from_file(path, mu, nu) -> linprog.TransportPlan:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    matrix = payload.get("plan", payload.get("matrix")) if isinstance(payload, dict) else payload
    if matrix is None:
        raise MissingField("plan file needs a 'plan' or 'matrix' entry")
    return linprog.TransportPlan(mu, nu, np.asarray(matrix, dtype=float))


def cmd_monotone_check(args) -> int:
    mu, nu = _load_pair(args)
    if args.plan is not None:
        plan = _plan_from_file(args.plan, mu, nu)
    else:
        sol = _solve(args, mu, nu)
        if not sol.converged:
            print("NotConverged: Frank-Wolfe gap above tolerance", file=sys.stderr)
            return EXIT_NONCONVERGENCE
        plan = sol.plan
    tol = analysis.default_check_tol(mu, nu)
    c2 = analysis.check_c2_monotonicity(plan, tol)
    reg = analysis.check_map_regularity(mu.points, plan.barycenters(), mu.weights, tol)
    _emit(args, {"passed": c2.passed and reg.passed, "c2_monotone": c2.to_dict(), "lipschitz": reg.to_dict()})
    return EXIT_OK if c2.passed and reg.passed else EXIT_NEGATIVE


def cmd_compare(args) -> int:
    mu, nu = _load_pair(args)
    kw = {"max_iters": args.max_iters, "seed": args.seed}
    if args.tol is not None:
        kw["tol"] = args.tol
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rep = analysis.check_equality_w2_t2(mu, nu, **kw)
    _emit(args, rep.to_dict())
    return EXIT_OK if rep.passed else EXIT_NEGATIVE


def cmd_lambda(args) -> int:
    mu, nu = _load_pair(args)
    _need(args, "lam")
    kw = {"max_iters": args.max_iters, "seed": args.seed}
    if args.tol is not None:
        kw["tol"] = args.tol
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = costs.solve_lambda(mu, nu, args.lam, **kw)
    payload = {"lambda": args.lam, "value": res.value, "plan": res.plan}
    if res.reduction is not None:
        payload["constant"] = res.reduction.constant
        payload["scaled_mu"] = _measure_json(res.reduction.scaled_measure)
    _emit(args, payload)
    return EXIT_OK


def _load_solution(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if not text.strip():
        raise MissingField("solution file is empty")
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MissingField(f"solution file is not JSON: {exc}") from None
    if not isinstance(payload, dict):
        raise MissingField("solution file must hold a JSON object")
    for key in ("mu", "barycenters", "mu_bar"):
        if key not in payload:
            raise MissingField(f"solution file lacks '{key}'")
    for key in ("points", "weights"):
        for owner in ("mu", "mu_bar"):
            if not isinstance(payload[owner], dict) or key not in payload[owner]:
                raise MissingField(f"'{owner}' lacks '{key}'")
    return payload


def cmd_plot_data(args) -> int:
    if args.input is not None:
        payload = _load_solution(args.input)
        X = np.asarray(payload["mu"]["points"], dtype=float)
        w = np.asarray(payload["mu"]["weights"], dtype=float)
        B = np.asarray(payload["barycenters"], dtype=float).reshape(X.shape)
        bar_pts = np.asarray(payload["mu_bar"]["points"], dtype=float)
        bar_w = np.asarray(payload["mu_bar"]["weights"], dtype=float)
    else:
        mu, nu = _load_pair(args)
        sol = _solve(args, mu, nu)
        if not sol.converged:
            print("NotConverged: Frank-Wolfe gap above tolerance", file=sys.stderr)
            return EXIT_NONCONVERGENCE
        proj = wot.extract_projection(sol)
        X, w, B = mu.points, mu.weights, sol.barycenters
        bar_pts, bar_w = proj.measure.points, proj.measure.weights

    d = X.shape[1]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["kind"] + [f"x{k}" for k in range(d)] + [f"b{k}" for k in range(d)] + ["weight"])
    for x, b, wi in zip(X, B, w):
        writer.writerow(["arrow"] + [_format_number(float(c)) for c in (*x, *b)] + [_format_number(float(wi))])
    for p, wi in zip(bar_pts, bar_w):
        writer.writerow(["mu_bar"] + [""] * d + [_format_number(float(c)) for c in p] + [_format_number(float(wi))])
    text = buf.getvalue()
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return EXIT_OK


COMMANDS = {
    "project": (cmd_project, "projection of mu onto the convex-order ball of nu, with certificates"),
    "solve": (cmd_solve, "barycentric transport cost only"),
    "w2": (cmd_w2, "exact squared 2-Wasserstein distance"),
    "check-order": (cmd_check_order, "convex, increasing convex or stochastic order"),
    "simplex": (cmd_simplex, "closed-form projection when nu sits on simplex vertices"),
    "monotone-check": (cmd_monotone_check, "c2-monotonicity and map regularity of a plan"),
    "compare": (cmd_compare, "test W2^2(mu, nu) == barycentric cost"),
    "lambda": (cmd_lambda, "c_lambda weak transport cost"),
    "plot-data": (cmd_plot_data, "CSV of displacement arrows and projected atoms"),
}


def _positive(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="barycentric-ot", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--mu", help="source measure file (.csv or .json)")
        p.add_argument("--nu", help="target measure file (.csv or .json)")
        p.add_argument("--tol", type=_positive, default=None, help="solver tolerance")
        p.add_argument("--max-iters", type=int, default=100_000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", "--output", dest="out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        if name == "check-order":
            p.add_argument("--relation", choices=("convex", "icx", "stochastic"), default="convex")
        if name == "simplex":
            p.add_argument("--simplex", help="vertices of the simplex with the weights of nu")
        if name == "lambda":
            p.add_argument("--lambda", dest="lam", type=float, default=None)
        if name == "monotone-check":
            p.add_argument("--plan", default=None, help="JSON file with a 'plan' matrix to check")
        if name == "plot-data":
            p.add_argument("--input", default=None, help="JSON output of 'project'")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    handler = COMMANDS[args.command][0]
    try:
        return handler(args)
    except CONVERGENCE_ERRORS as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (BarycentricOTError, ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
