"""Command-line front end.

Exit codes: 0 on success, 2 for bad input (schema, flags, missing cells),
3 when a computation fails on valid input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .cells import IDENTIFICATION_CELLS, read_cell_csv
from .empirical import ALL_CELLS, Cell, as_cell
from .errors import ComputationError, InputError, TriplexError
from .estimators import MLE_TAGS, EstimatorKind, estimate
from .identification import (
    joint_counterfactual_grid,
    partial_bounds_cic,
    partial_bounds_triple,
    triple_changes_counterfactual_cdf,
)
from .inference import bootstrap_ci, plugin_variance
from .parametric import FAMILIES
from .simlab import SPECS, relative_bias_experiment
from .transport import PUSHFORWARD_CELLS, PointCloud, triple_changes_pushforward

SCHEMA_VERSION = 1
ESTIMATORS = ("did", "ddd", "cic-emp", "cic-mle", "ccc-emp", "ccc-mle")


def parse_grid(text: str) -> np.ndarray:
    """``lo:hi:steps`` -> ``steps`` evenly spaced points."""
    parts = text.split(":")
    if len(parts) != 3:
        raise InputError(f"--grid must look like lo:hi:steps, got {text!r}")
    try:
        lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise InputError(f"--grid must look like lo:hi:steps, got {text!r}") from None
    if steps < 1 or not (np.isfinite(lo) and np.isfinite(hi)) or hi < lo:
        raise InputError(f"--grid needs finite lo <= hi and steps >= 1, got {text!r}")
    return np.linspace(lo, hi, steps)


def _csv_list(text: str) -> list[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if np.isfinite(x) else None


def _emit(args, payload: dict, rows: list[dict] | None = None) -> None:
    """Write ``payload`` as JSON, or ``rows`` (default: the payload) as CSV."""
    if args.format == "json":
        text = json.dumps({"schema_version": SCHEMA_VERSION, **payload}, indent=2) + "\n"
    else:
        rows = rows if rows is not None else [{k: v for k, v in payload.items() if not isinstance(v, (dict, list))}]
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else [], lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _kind(args) -> EstimatorKind:
    tag = args.estimator.upper().replace("-", "_")
    if tag in MLE_TAGS:
        return EstimatorKind(tag, args.family or "gaussian")
    if args.family:
        raise InputError(f"--family applies only to the MLE estimators, not {args.estimator}")
    return EstimatorKind(tag)


def _family_label(kind: EstimatorKind):
    if kind.family is None or isinstance(kind.family, str):
        return kind.family
    return {str(c): f for c, f in kind.family}


def _required_cells(kind: EstimatorKind, state: int):
    if kind.tag in ("DID", "CIC_EMP", "CIC_MLE"):
        return [Cell(state, d, t) for d in (0, 1) for t in (0, 1)]
    return list(ALL_CELLS)


def _joint_rows(data, args, grid0, grid1):
    pairs = data.panel(1, 1)
    table = data.table
    table.require(IDENTIFICATION_CELLS)
    marginal = lambda y: triple_changes_counterfactual_cdf(table, y)  # noqa: E731
    joint = joint_counterfactual_grid(pairs, marginal, grid0, grid1, table[Cell(1, 1, 0)])
    return [
        {"y0": float(a), "y1": float(b), "joint_cdf": float(joint[i, j])}
        for i, a in enumerate(grid0)
        for j, b in enumerate(grid1)
    ]


def cmd_estimate(args) -> None:
    kind = _kind(args)
    data = read_cell_csv(args.data, required=_required_cells(kind, args.state))
    table = data.table
    point = estimate(table, kind, args.state)
    report = {
        "estimator": kind.name,
        "family": _family_label(kind),
        "tau_hat": float(point.tau_hat),
        "se": None,
        "ci_lo": None,
        "ci_hi": None,
        "B": int(args.bootstrap),
        "level": float(args.level),
        "n_per_cell": point.n_per_cell,
        "seed": int(args.seed),
    }
    if kind.tag == "CCC_EMP":
        try:
            report["se"] = _num(plugin_variance(table).se)
        except ComputationError:
            report["se"] = None
    if args.bootstrap:
        boot = bootstrap_ci(table, kind, B=args.bootstrap, level=args.level, seed=args.seed, state=args.state)
        report["ci_lo"], report["ci_hi"] = boot.lo, boot.hi
        report["bootstrap_failures"] = boot.failures
        if boot.normal_lo is not None:
            report["normal_lo"], report["normal_hi"] = boot.normal_lo, boot.normal_hi
    rows = None
    if args.joint:
        if args.grid is None:
            raise InputError("--joint needs --grid lo:hi:steps")
        grid0 = parse_grid(args.grid)
        grid1 = parse_grid(args.grid1) if args.grid1 else grid0
        report["joint"] = _joint_rows(data, args, grid0, grid1)
        rows = report["joint"]
    _emit(args, report, rows)


def cmd_bounds(args) -> None:
    grid = parse_grid(args.grid)
    if args.design == "triple":
        data = read_cell_csv(args.data, required=IDENTIFICATION_CELLS)
        res = partial_bounds_triple(data.table, grid, args.eps, args.delta)
    else:
        s = args.state
        data = read_cell_csv(args.data, required=[Cell(s, 0, 0), Cell(s, 0, 1), Cell(s, 1, 0)])
        t = data.table
        res = partial_bounds_cic(t[Cell(s, 0, 0)], t[Cell(s, 0, 1)], t[Cell(s, 1, 0)], grid, args.eps, args.delta)
    lower, upper = np.atleast_1d(res.lower), np.atleast_1d(res.upper)
    rows = [{"y": float(y), "lower": float(lo), "upper": float(hi)} for y, lo, hi in zip(grid, lower, upper)]
    _emit(args, {"design": args.design, "eps": args.eps, "delta": args.delta, "rows": rows}, rows)


def cmd_joint(args) -> None:
    data = read_cell_csv(args.data, required=IDENTIFICATION_CELLS)
    grid0 = parse_grid(args.grid)
    grid1 = parse_grid(args.grid1) if args.grid1 else grid0
    rows = _joint_rows(data, args, grid0, grid1)
    _emit(args, {"rows": rows}, rows)


def cmd_variance(args) -> None:
    data = read_cell_csv(args.data, required=ALL_CELLS)
    rep = plugin_variance(data.table)
    d = rep.as_dict()
    rows = [
        {"component": name, "cell": d["V_cells"][name], "V": v, "p_weight": d["p_weights"][d["V_cells"][name]]}
        for name, v in d["V"].items()
    ]
    _emit(args, d, rows)


def cmd_simulate(args) -> None:
    specs = _csv_list(args.spec)
    for name in specs:
        if name not in SPECS:
            raise InputError(f"unknown spec {name!r}; choose from {sorted(SPECS)}")
    estimators = _csv_list(args.estimators)
    for name in estimators:
        if name.lower() not in ESTIMATORS:
            raise InputError(f"unknown estimator {name!r}; choose from {ESTIMATORS}")
    try:
        n_grid = [int(n) for n in _csv_list(args.n_grid)]
    except ValueError:
        raise InputError(f"--n-grid must be comma-separated integers, got {args.n_grid!r}") from None
    if args.reps < 1:
        raise InputError("--reps must be at least 1")
    report = relative_bias_experiment(specs, estimators, n_grid, args.reps, seed=args.seed)
    text = report.to_json() + "\n" if args.format == "json" else report.to_csv()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def read_cloud(path) -> PointCloud:
    """One point per line, coordinates separated by commas or whitespace."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    points = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.replace(",", " ").split()
        try:
            points.append([float(f) for f in fields])
        except ValueError:
            raise InputError(f"{path}, line {lineno}: cannot parse {line!r} as numbers") from None
        if len(points[-1]) != len(points[0]):
            raise InputError(f"{path}, line {lineno}: expected {len(points[0])} coordinates, got {len(points[-1])}")
    if not points:
        raise InputError(f"{path}: no points")
    return PointCloud(np.asarray(points))


def _cloud_paths(args) -> dict:
    paths = {}
    if args.clouds:
        root = Path(args.clouds)
        for cell in PUSHFORWARD_CELLS:
            found = sorted(root.glob(f"{cell}.*"))
            if found:
                paths[cell] = found[0]
    for spec in args.cloud or []:
        key, sep, path = spec.partition("=")
        if not sep:
            raise InputError(f"--cloud expects CELL=PATH, got {spec!r}")
        paths[as_cell(key.strip())] = Path(path)
    missing = [str(c) for c in PUSHFORWARD_CELLS if c not in paths]
    if missing:
        raise InputError(f"missing point clouds for {', '.join(missing)}")
    return paths


def cmd_ot(args) -> None:
    clouds = {cell: read_cloud(path) for cell, path in _cloud_paths(args).items()}
    out = triple_changes_pushforward(clouds, method=args.method, reg=args.reg)
    if args.format == "json":
        text = json.dumps({"schema_version": SCHEMA_VERSION, "method": args.method, "points": out.points.tolist()}) + "\n"
    else:
        text = "".join(",".join(repr(float(v)) for v in row) + "\n" for row in out.points)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="triplex", description="Distributional triple-changes estimation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt="json"):
        p.add_argument("--format", choices=("json", "csv"), default=fmt)
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--seed", type=int, default=0)

    def data_arg(p):
        p.add_argument("--data", required=True, metavar="CSV", help="rows s,d,t,y[,id]")

    p = sub.add_parser("estimate", help="point estimate of the ATT with bootstrap CI")
    data_arg(p)
    p.add_argument("--estimator", choices=ESTIMATORS, default="ccc-emp")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--state", type=int, choices=(0, 1), default=1, help="state used by did and cic")
    p.add_argument("--bootstrap", type=int, default=1000, metavar="B", help="replicates; 0 disables")
    p.add_argument("--level", type=float, default=0.90)
    p.add_argument("--joint", action="store_true", help="also report the joint CDF of (Y0, Y1) on --grid")
    p.add_argument("--grid", metavar="LO:HI:STEPS")
    p.add_argument("--grid1", metavar="LO:HI:STEPS", help="grid for the treated outcome (defaults to --grid)")
    common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bounds", help="partial-identification bounds on the counterfactual CDF")
    data_arg(p)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--grid", required=True, metavar="LO:HI:STEPS")
    p.add_argument("--design", choices=("triple", "cic"), default="triple")
    p.add_argument("--state", type=int, choices=(0, 1), default=1)
    common(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("joint", help="joint CDF of untreated and treated outcomes from a linked panel")
    data_arg(p)
    p.add_argument("--grid", required=True, metavar="LO:HI:STEPS")
    p.add_argument("--grid1", metavar="LO:HI:STEPS")
    common(p)
    p.set_defaults(func=cmd_joint)

    p = sub.add_parser("variance", help="plug-in asymptotic variance of the triple-changes estimator")
    data_arg(p)
    common(p)
    p.set_defaults(func=cmd_variance)

    p = sub.add_parser("simulate", help="relative-bias Monte Carlo on a synthetic mechanism")
    p.add_argument("--spec", default="linear", help="comma-separated: " + ", ".join(sorted(SPECS)))
    p.add_argument("--estimators", default="did,ddd,cic-emp,ccc-emp")
    p.add_argument("--n-grid", default="1000,4000")
    p.add_argument("--reps", type=int, default=50)
    common(p, fmt="csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ot", help="multivariate counterfactual cloud by optimal transport")
    p.add_argument("--clouds", metavar="DIR", help="directory holding s0d0t0.* ... s1d1t0.*")
    p.add_argument("--cloud", action="append", metavar="CELL=PATH")
    p.add_argument("--method", choices=("exact", "sinkhorn"), default="exact")
    p.add_argument("--reg", type=float)
    common(p, fmt="csv")
    p.set_defaults(func=cmd_ot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if hasattr(args, "level") and not 0 < args.level < 1:
            raise InputError(f"--level must lie in (0, 1), got {args.level}")
        args.func(args)
    except InputError as exc:
        print(f"triplex: error: {exc}", file=sys.stderr)
        return 2
    except TriplexError as exc:
        print(f"triplex: computation failed: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
