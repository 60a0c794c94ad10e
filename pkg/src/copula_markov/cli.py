"""Command-line front end.

Exit codes: 0 property holds / success, 1 property fails, 2 input error,
3 non-convergence.  All output on stdout is JSON (sorted keys), CSV files
are written where requested; identical invocations produce byte-identical
output.  The environment variable COPULA_GRID_CAP overrides the lcm
refinement cap of the product.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import algebra, metrics, monotonicity
from .algebra import (
    DEFAULT_RESOLUTION,
    DecompositionError,
    NotStochasticallyIncreasingError,
    extract_pi_ordinal_structure,
    iterate_to_limit,
    markov_product,
    quadrature_markov_product,
)
from .core import CopulaError, DomainError, GridCopula
from .serialize import load_copula, save_copula


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def _fail(message: str) -> int:
    sys.stderr.write(f"error: {message}\n")
    return 2


def cmd_check(args) -> int:
    c = load_copula(args.spec)
    tol = args.tol
    prop = args.property
    if prop in ("si1", "si2", "sd1", "sd2"):
        component = int(prop[-1])
        verdict = monotonicity.check_si(c, component=component, tol=tol)
        holds = verdict.si if prop.startswith("si") else verdict.sd
        payload = verdict.to_json()
    elif prop == "idempotent":
        verdict = algebra.is_idempotent(c, tol=tol, resolution=args.resolution)
        holds = verdict.idempotent
        payload = verdict.to_json()
    elif prop in ("pqd", "nqd"):
        verdict = monotonicity.check_quadrant_dependence(c, tol=tol)
        holds = verdict.pqd if prop == "pqd" else verdict.nqd
        payload = verdict.to_json()
    elif prop == "complete-dependence":
        verdict = monotonicity.check_complete_dependence(c, tol=tol)
        holds = verdict.completely_dependent
        payload = verdict.to_json()
    else:  # pragma: no cover - argparse restricts the choices
        raise DomainError(f"unknown property {prop}")
    payload = {"property": prop, "holds": bool(holds), **payload}
    _emit(payload)
    return 0 if holds else 1


def cmd_product(args) -> int:
    a = load_copula(args.spec_a)
    b = load_copula(args.spec_b)
    result = markov_product(a, b, resolution=args.resolution)
    save_copula(result, args.out)
    summary = {"out": args.out}
    if isinstance(result, GridCopula):
        summary["resolution"] = result.n
    if args.oracle:
        if not isinstance(result, GridCopula):
            summary["oracle_max_discrepancy"] = 0.0
        else:
            # smallest multiple of the resolution accepted by the oracle
            panels = args.panels or result.n * max(1, -(-8 // result.n))
            quad = quadrature_markov_product(a, b, panels)
            axis = np.arange(result.n + 1) / result.n
            worst = 0.0
            for i, u in enumerate(axis):
                row = np.asarray(quad(u, axis))
                worst = max(worst, float(np.max(np.abs(row - result.corner_cdf()[i, :]))))
            summary["oracle_panels"] = panels
            summary["oracle_max_discrepancy"] = worst
    _emit(summary)
    return 0


def cmd_iterate(args) -> int:
    c = load_copula(args.spec)
    try:
        report = iterate_to_limit(
            c,
            tol=args.tol,
            max_iter=args.max_iter,
            resolution=args.resolution,
            interval_tol=args.interval_tol,
        )
    except NotStochasticallyIncreasingError as exc:
        _emit({"error": "not stochastically increasing", **exc.verdict.to_json()})
        return 1
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        with open(os.path.join(args.out_dir, "report.json"), "w", encoding="utf-8") as fh:
            json.dump(report.to_json(), fh, sort_keys=True)
            fh.write("\n")
        with open(os.path.join(args.out_dir, "steps.csv"), "w", encoding="utf-8") as fh:
            fh.write("step,d_inf_gap,d1_gap\n")
            for step, dinf_gap, d1_gap in report.steps:
                fh.write(f"{step},{dinf_gap:.17g},{d1_gap:.17g}\n")
    _emit(report.to_json())
    return 0 if report.converged else 3


def cmd_derivative_trace(args) -> int:
    c = load_copula(args.spec)
    m = args.points
    if m < 1:
        raise DomainError("points must be >= 1")
    x = (np.arange(m) + 0.5) / m
    if args.component == 1:
        values = np.asarray(c.partial_derivative(1, x, args.at))
        header = "u,dC"
    else:
        values = np.asarray(c.partial_derivative(2, args.at, x))
        header = "v,dC"
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for xi, yi in zip(x, values):
            fh.write(f"{xi:.17g},{yi:.17g}\n")
    _emit({"out": args.out, "points": m, "component": args.component, "at": args.at})
    return 0


def cmd_decompose(args) -> int:
    c = load_copula(args.spec)
    try:
        decomposition = extract_pi_ordinal_structure(c, tol=args.tol)
    except (DomainError, DecompositionError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    _emit(decomposition.to_json())
    return 0


def cmd_metric(args) -> int:
    a = load_copula(args.spec_a)
    if args.metric == "sobolev-diag":
        value = metrics.sobolev_diagonal(a)
        n_nodes = 1025
        b_name = None
    else:
        if not args.spec_b:
            raise DomainError(f"metric {args.metric} needs two specs")
        b = load_copula(args.spec_b)
        if args.metric == "dinf":
            value = metrics.d_inf(a, b)
            n_nodes = metrics.AUDIT_POINTS
        else:
            value = metrics.d1_metric(a, b)
            n_nodes = 512
        b_name = args.spec_b
    _emit(
        {
            "metric": args.metric,
            "value": value,
            "n_nodes": n_nodes,
            "copula_a": args.spec_a,
            "copula_b": b_name,
        }
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="copula-markov",
        description="Algebra of bivariate copulas under the Markov product.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="test a property of a copula spec")
    p.add_argument("spec", help="spec file (.json) or checkerboard matrix (.csv)")
    p.add_argument(
        "--property",
        required=True,
        choices=[
            "si1",
            "si2",
            "sd1",
            "sd2",
            "idempotent",
            "pqd",
            "nqd",
            "complete-dependence",
        ],
    )
    p.add_argument("--tol", type=float, default=1e-9, help="tolerance (default 1e-9)")
    p.add_argument(
        "--resolution",
        type=int,
        default=DEFAULT_RESOLUTION,
        help="grid resolution for closed-form inputs (default 128)",
    )
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("product", help="Markov product of two specs")
    p.add_argument("spec_a")
    p.add_argument("spec_b")
    p.add_argument("--out", "-o", required=True, help="output spec (.json or .csv)")
    p.add_argument(
        "--oracle",
        action="store_true",
        help="cross-check the matrix path against midpoint quadrature",
    )
    p.add_argument(
        "--panels",
        type=int,
        default=0,
        help="quadrature panel count (default: the result resolution)",
    )
    p.add_argument("--resolution", type=int, default=DEFAULT_RESOLUTION)
    p.set_defaults(func=cmd_product)

    p = sub.add_parser("iterate", help="iterate a copula to its idempotent limit")
    p.add_argument("spec")
    p.add_argument(
        "--tol", type=float, default=1e-8, help="stopping sup gap (default 1e-8)"
    )
    p.add_argument("--max-iter", type=int, default=200, help="default 200")
    p.add_argument(
        "--interval-tol",
        type=float,
        default=1e-6,
        help="diagonal fixed-point tolerance (default 1e-6)",
    )
    p.add_argument(
        "--resolution",
        type=int,
        default=DEFAULT_RESOLUTION,
        help="grid resolution for closed-form inputs (default 128)",
    )
    p.add_argument("--out-dir", help="write report.json and steps.csv here")
    p.set_defaults(func=cmd_iterate)

    p = sub.add_parser(
        "derivative-trace", help="tabulate a partial derivative along one axis"
    )
    p.add_argument("spec")
    p.add_argument("--component", type=int, choices=[1, 2], default=1)
    p.add_argument(
        "--at",
        type=float,
        required=True,
        help="fixed value of the other coordinate",
    )
    p.add_argument("--points", type=int, default=300, help="trace rows (default 300)")
    p.add_argument("--out", "-o", required=True, help="output CSV")
    p.set_defaults(func=cmd_derivative_trace)

    p = sub.add_parser(
        "decompose", help="interval family of an idempotent copula's diagonal"
    )
    p.add_argument("spec")
    p.add_argument(
        "--tol",
        type=float,
        default=1e-6,
        help="diagonal fixed-point tolerance (default 1e-6)",
    )
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("metric", help="distance or functional between specs")
    p.add_argument("spec_a")
    p.add_argument("spec_b", nargs="?", default=None)
    p.add_argument(
        "--metric", required=True, choices=["dinf", "d1", "sobolev-diag"]
    )
    p.set_defaults(func=cmd_metric)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CopulaError, OSError, ValueError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    raise SystemExit(main())
