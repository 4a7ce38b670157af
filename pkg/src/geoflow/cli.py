"""Command-line front end.

Machine-readable JSON goes to stdout, human summaries to stderr.
Exit codes: 0 success, 1 failed checks, 2 bad input (unknown scenario,
metric or malformed values), 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import chart, frame, lie, scenarios
from .errors import GeoflowError, InputError
from .expr import kundt_from_expressions
from .integrator import IntegratorConfig, integrate, max_drift, write_csv

EXIT_OK, EXIT_CHECKS, EXIT_INPUT, EXIT_IO = 0, 1, 2, 3


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="geoflow", description="Geodesic flows, completeness and blow-up certification.")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="list scenarios")

    r = sub.add_parser("run", help="run a scenario (or 'all')")
    r.add_argument("name")
    r.add_argument("--out", type=Path, help="write the JSON report here instead of stdout")
    r.add_argument("--csv", type=Path, metavar="DIR", help="write one CSV per trajectory into DIR")
    r.add_argument("--rel-tol", type=float)
    r.add_argument("--abs-tol", type=float)
    r.add_argument("--overrides", type=json.loads, default=None, metavar="JSON",
                   help='scenario overrides, e.g. \'{"v0": 3}\'')

    i = sub.add_parser("integrate", help="integrate one ad-hoc geodesic")
    i.add_argument("--system", required=True, choices=["euler-arnold", "chart", "frame"])
    i.add_argument("--algebra", default="aff-r", help="built-in algebra name or JSON definition file")
    i.add_argument("--metric", default="flat3", help=f"one of {sorted(chart.BUILTIN_METRICS)} or kundt")
    i.add_argument("--structure", default="reeb")
    i.add_argument("--y0", type=_floats, required=True,
                   help="initial state; chart: position then velocity; frame: x,y,b or x,y,a,b")
    i.add_argument("--t-max", type=float, required=True)
    i.add_argument("--rel-tol", type=float)
    i.add_argument("--abs-tol", type=float)
    i.add_argument("--alpha", type=float, default=1.0)
    i.add_argument("--beta", type=float, default=0.0)
    i.add_argument("--kundt-n", type=int, default=1, help="transverse dimension of the kundt metric")
    i.add_argument("--kundt-H", default="0", help="expression for H(u, v, x1..xn)")
    i.add_argument("--kundt-W", action="append", help="expression for W_i (repeat n times)")
    i.add_argument("--kundt-h", action="append", help="expression for h_ij, row-major (repeat n*n times)")
    i.add_argument("--csv", type=Path, metavar="FILE")
    i.add_argument("--out", type=Path)

    sub.add_parser("validate", help="run construction-time validation of every built-in")
    return p


def _config(args) -> IntegratorConfig:
    changes = {}
    if args.rel_tol is not None:
        changes["rel_tol"] = args.rel_tol
    if args.abs_tol is not None:
        changes["abs_tol"] = args.abs_tol
    return IntegratorConfig().replace(**changes)


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text + "\n")
    else:
        out.write_text(text + "\n")


def _cmd_list(args) -> int:
    for sc in scenarios.registry():
        print(f"{sc.name}\t{sc.paper_ref}")
    return EXIT_OK


def _cmd_run(args) -> int:
    names = [s.name for s in scenarios.registry()] if args.name == "all" else [args.name]
    if not isinstance(args.overrides or {}, dict):
        raise InputError("--overrides must be a JSON object")
    overrides = dict(args.overrides or {})
    if args.rel_tol is not None:
        overrides["rel_tol"] = args.rel_tol
    if args.abs_tol is not None:
        overrides["abs_tol"] = args.abs_tol
    if args.name != "all":
        scenarios.get(args.name)
    reports = []
    for name in names:
        # only integrator settings apply across the whole registry
        ov = overrides if args.name != "all" else {k: v for k, v in overrides.items() if k in scenarios.CONFIG_KEYS}
        rep = scenarios.run(name, ov)
        reports.append(rep)
        status = "PASS" if rep.passed else "FAIL: " + "; ".join(rep.failures())
        print(f"{name}: {status}", file=sys.stderr)
        if args.csv is not None:
            args.csv.mkdir(parents=True, exist_ok=True)
            for k, traj in enumerate(rep.trajectories):
                write_csv(traj, args.csv / f"{name}-{k}.csv")
    payload = reports[0].to_dict() if args.name != "all" else [r.to_dict() for r in reports]
    _emit(json.dumps(payload, indent=2, allow_nan=False), args.out)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECKS


def _load_algebra(name: str) -> lie.MetricLieAlgebra:
    if name in lie.BUILTIN_ALGEBRAS:
        return lie.builtin_algebra(name)
    if Path(name).suffix == ".json":
        return lie.load_algebra(name)
    raise InputError(f"unknown algebra {name!r}; choose from {sorted(lie.BUILTIN_ALGEBRAS)} or a .json file")


def _setup_integration(args):
    y0 = np.asarray(args.y0, dtype=float)
    if args.system == "euler-arnold":
        mla = _load_algebra(args.algebra)
        if y0.size != mla.dim:
            raise InputError(f"--y0 needs {mla.dim} values for this algebra")
        q = mla.form.matrix
        return mla.field(), y0, None, {"energy": lambda y: float(y @ q @ y)}, {"algebra": args.algebra}
    if args.system == "chart":
        if args.metric == "kundt":
            m = kundt_from_expressions(args.kundt_n, args.kundt_H, args.kundt_W, args.kundt_h)
        else:
            m = chart.builtin_metric(args.metric)
        if y0.size != 2 * m.dim:
            raise InputError(f"--y0 needs {2 * m.dim} values (position then velocity)")
        if not m.domain(y0[: m.dim]):
            raise InputError("initial position is outside the metric's domain")
        monitors = {"energy": chart.energy_monitor(m)}
        for name, V in chart.killing_fields(args.metric).items():
            monitors[f"clairaut {name}"] = chart.clairaut_monitor(m, V)
        if args.metric == "kundt":
            monitors["u-velocity"] = lambda y: float(y[m.dim])
        return chart.geodesic_field(m), y0, chart.geodesic_domain(m), monitors, {"metric": args.metric}
    fr = frame.builtin_structure(args.structure)
    if y0.size == 3:
        y0 = frame.ReducedState.null(y0[0], y0[1], y0[2], args.alpha, args.beta).to_array()
    elif y0.size != 4:
        raise InputError("--y0 for the frame system is x,y,b or x,y,a,b")
    field = frame.reduced_field(fr, args.alpha, args.beta)
    monitors = {"constraint": frame.constraint_monitor(args.alpha, args.beta)}
    return field, y0, None, monitors, {"structure": args.structure, "alpha": args.alpha, "beta": args.beta}


def _cmd_integrate(args) -> int:
    if not (args.t_max > 0 and math.isfinite(args.t_max)):
        raise InputError("--t-max must be positive and finite")
    config = _config(args)
    field, y0, domain, monitors, described = _setup_integration(args)
    traj = integrate(field, y0, args.t_max, config=config, domain=domain, monitors=monitors)
    report = {
        "system": args.system,
        **described,
        "config": config.to_dict(),
        "t_max": args.t_max,
        "initial": y0.tolist(),
        "verdict": traj.verdict.to_dict(),
        "final_state": traj.final_state.tolist(),
        "steps": len(traj) - 1,
        "drifts": {n: max_drift(traj, n) for n in traj.monitors},
    }
    if args.csv is not None:
        write_csv(traj, args.csv)
    print(f"{args.system}: {traj.verdict!r}", file=sys.stderr)
    _emit(json.dumps(scenarios.jsonable(report), indent=2, allow_nan=False), args.out)
    return EXIT_OK


def validation_summary() -> dict:
    """Construct every built-in and collect its validation residuals."""
    out = {}
    for name in lie.BUILTIN_ALGEBRAS:
        mla = lie.builtin_algebra(name)
        out[f"algebra {name}"] = {"jacobi": lie.jacobi_residual(mla.algebra.structure_constants),
                                  "signature": list(mla.form.signature())}
    for name in chart.BUILTIN_METRICS:
        m = chart.builtin_metric(name)
        out[f"metric {name}"] = {"dg_fd_error": m.check_derivatives()}
        for fname, V in chart.killing_fields(name).items():
            rng = np.random.default_rng(0)
            worst = max(float(np.max(np.abs(chart.killing_residual(m, V, p)))) for p in m.sample_points(20, rng))
            out[f"metric {name}"][f"killing {fname}"] = worst
    for name in frame.BUILTIN_STRUCTURES:
        fr = frame.builtin_structure(name)
        res = frame.frame_consistency_residuals(fr, (0.7, 0.2))
        out[f"structure {name}"] = {**fr.check(), **res}
    return out


def _cmd_validate(args) -> int:
    summary = validation_summary()
    for key in summary:
        print(f"{key}: ok", file=sys.stderr)
    print(json.dumps(scenarios.jsonable(summary), indent=2))
    return EXIT_OK


_COMMANDS = {"list": _cmd_list, "run": _cmd_run, "integrate": _cmd_integrate, "validate": _cmd_validate}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except GeoflowError as exc:
        # validation failures of built-ins surface as invariant violations
        code = EXIT_INPUT if isinstance(exc, InputError) else EXIT_CHECKS
        print(f"geoflow: error: {exc}", file=sys.stderr)
        return code
    except OSError as exc:
        print(f"geoflow: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
