"""Command-line front end.

Subcommands:

* ``simulate``   — run one Monte Carlo ensemble from a JSON config (plus
                   ``--set key=value`` overrides) and emit CSV + JSON sidecar.
* ``bounds``     — evaluate a named bound, optionally swept over one
                   parameter to CSV.
* ``reproduce``  — emit the data tables behind the reference figures.
* ``schedule``   — print the minimal-measurement schedule for a confidence
                   level.

Exit codes: 0 success, 2 usage or configuration error, 3 runtime or domain
error.  The default output directory is ``$ATFE_OUTPUT_DIR`` or the current
directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import bounds as bounds_mod
from .adaptive import schedule_nu_min, schedule_s1
from .errors import AtfeError, UsageError
from .harness import (
    FIGURE_IDS,
    plan_from_dict,
    plan_to_dict,
    reproduce_figure,
    run_ensemble,
    write_sidecar,
    write_summary_csv,
)

_SWEEPABLE = ("nu", "n", "t", "total_time", "delta_omega", "confidence", "s", "s1")


def _output_dir(args) -> Path:
    raw = args.output_dir or os.environ.get("ATFE_OUTPUT_DIR") or "."
    path = Path(raw)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _parse_set(pairs) -> dict:
    out = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise UsageError(f"--set expects key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _cmd_simulate(args) -> int:
    data = {}
    if args.config:
        try:
            data.update(json.loads(Path(args.config).read_text()))
        except FileNotFoundError:
            raise UsageError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}") from None
    data.update(_parse_set(args.set))
    if args.seed is not None:
        data["seed"] = args.seed
    tag = str(data.pop("tag", "run"))
    plan = plan_from_dict(data)
    summary = run_ensemble(plan, workers=args.workers)
    out = _output_dir(args)
    csv_path = write_summary_csv(summary, out / f"simulate_{tag}.csv")
    sidecar = write_sidecar(
        out / f"simulate_{tag}.json", plan.config.seed, {tag: plan_to_dict(plan)}, [csv_path]
    )
    if args.verbose:
        for i, nu in enumerate(summary.nu):
            print(f"nu={nu} holevo_var={summary.holevo_var[i]:.6g}")
    print(csv_path)
    print(sidecar)
    return 0


def _bound_params(args) -> dict:
    params = {}
    for key in _SWEEPABLE:
        value = getattr(args, key if key != "n" else "n_qubits")
        if value is not None:
            params[key] = value
    return params


def _cmd_bounds(args) -> int:
    params = _bound_params(args)
    if args.sweep:
        name, lo, hi, count = args.sweep
        if name not in _SWEEPABLE:
            raise UsageError(f"cannot sweep {name!r}; choose from {_SWEEPABLE}")
        try:
            lo, hi, count = float(lo), float(hi), int(count)
        except ValueError:
            raise UsageError(f"--sweep expects numeric LO HI COUNT, got {args.sweep[1:]}") from None
        if count < 1:
            raise UsageError("--sweep COUNT must be >= 1")
        values = np.linspace(lo, hi, count)
        rows = []
        extra_keys = []
        for v in values:
            params[name] = int(round(v)) if name in ("s", "nu") and v == int(v) else float(v)
            result = bounds_mod.evaluate_bound_query(bounds_mod.BoundQuery(args.kind, dict(params)))
            extra_keys = [k for k in result if k != "value"]
            rows.append((params[name], result))
        out = _output_dir(args)
        path = out / f"bounds_{args.kind}.csv"
        header = [name, "value"] + extra_keys
        lines = [",".join(header)]
        for v, result in rows:
            cells = [format(float(v), ".12g"), format(float(result["value"]), ".12g")]
            cells += [format(float(result[k]), ".12g") for k in extra_keys]
            lines.append(",".join(cells))
        path.write_text("\n".join(lines) + "\n")
        print(path)
        return 0
    result = bounds_mod.evaluate_bound_query(bounds_mod.BoundQuery(args.kind, params))
    print(format(float(result["value"]), ".6g"))
    for key, value in result.items():
        if key != "value":
            print(f"{key} = {float(value):.6g}")
    return 0


def _cmd_reproduce(args) -> int:
    out = _output_dir(args)
    files = reproduce_figure(
        args.figure, out, seed=args.seed if args.seed is not None else 1,
        workers=args.workers, dense_tail=args.dense_tail,
    )
    for f in files:
        print(f)
    return 0


def _cmd_schedule(args) -> int:
    s1 = schedule_s1(args.confidence, args.n_qubits)
    max_strategy = args.max_strategy or s1.exact + 5
    print("i,nu_min,t_product,t_ghz")
    for i in range(1, max_strategy + 1):
        t_prod = i / 4.0
        t_ghz = i / (4.0 * args.n_qubits)
        print(f"{i},{schedule_nu_min(i, args.confidence, args.n_qubits)},{t_prod:.6g},{t_ghz:.6g}")
    print(f"S1_exact = {s1.exact}")
    print(f"S1_analytic = {s1.analytic:.6g}")
    print(f"S1_analytic_rounded = {round(s1.analytic)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="atfe",
        description="Adaptive-time frequency estimation: simulation, bounds, schedules.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte Carlo ensemble")
    sim.add_argument("--config", help="JSON config file with flat plan keys")
    sim.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    sim.add_argument("--output-dir")
    sim.add_argument("--seed", type=int, help="master seed override")
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("-v", "--verbose", action="store_true")
    sim.set_defaults(func=_cmd_simulate)

    bnd = sub.add_parser("bounds", help="evaluate analytic bounds")
    bnd.add_argument("--kind", required=True, choices=sorted(bounds_mod._BOUND_KINDS))
    bnd.add_argument("--nu", type=float)
    bnd.add_argument("--n", dest="n_qubits", type=int)
    bnd.add_argument("--t", type=float)
    bnd.add_argument("--total-time", dest="total_time", type=float)
    bnd.add_argument("--delta-omega", dest="delta_omega", type=float)
    bnd.add_argument("--confidence", type=float)
    bnd.add_argument("--s", type=int)
    bnd.add_argument("--s1", type=float)
    bnd.add_argument("--sweep", nargs=4, metavar=("PARAM", "LO", "HI", "COUNT"))
    bnd.add_argument("--output-dir")
    bnd.set_defaults(func=_cmd_bounds)

    rep = sub.add_parser("reproduce", help="emit reference-figure data tables")
    rep.add_argument("figure", choices=FIGURE_IDS)
    rep.add_argument("--output-dir")
    rep.add_argument("--seed", type=int)
    rep.add_argument("--workers", type=int, default=1)
    rep.add_argument("--dense-tail", action="store_true",
                     help="re-estimate the no-update tail points with 10x trials (fig3)")
    rep.set_defaults(func=_cmd_reproduce)

    sch = sub.add_parser("schedule", help="print the minimal-measurement schedule")
    sch.add_argument("--confidence", type=float, required=True)
    sch.add_argument("--n", dest="n_qubits", type=int, default=1)
    sch.add_argument("--max-strategy", type=int)
    sch.set_defaults(func=_cmd_schedule)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AtfeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
