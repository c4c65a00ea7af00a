"""Command line entry point: ``roughtransport run|list|matrix``.

Exit codes: 0 when every assertion passes, 1 when at least one fails,
2 for scenario or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .applicability import render_table
from .errors import ParseError
from .runner import RunOptions, run_scenario
from .scenarios import BUILTIN_IDS, builtin, list_scenarios, resolve

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2

# builtin scenarios whose classify stages make up the cross-theory table
MATRIX_SCENARIOS = ("hs-sign", "pr-neg-sign", "lo-heaviside-shadow", "bj-moving-jump",
                    "dpl-2d-holder", "energy-smooth")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="roughtransport",
        description="Generalized solutions of transport equations with rough coefficients.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a builtin scenario, a scenario file, or 'all'")
    run.add_argument("scenario", help="builtin id, path to a scenario JSON file, or 'all'")
    run.add_argument("--out", default=None, help="output directory (default: runs)")
    run.add_argument("--tol", type=float, default=None,
                     help="absolute quadrature tolerance for pairings (default 1e-10)")
    run.add_argument("--eps-min", type=float, default=None,
                     help="drop ladder rungs below this epsilon")
    run.add_argument("--jobs", type=int, default=None, help="worker threads (default 1)")
    run.add_argument("--emit-plots", action="store_true", default=None,
                     help="also write plot-ready CSV tables")
    run.add_argument("--config", default=None,
                     help="JSON file with option values; it overrides the flags")

    sub.add_parser("list", help="list builtin scenarios")
    matrix = sub.add_parser("matrix", help="print the scenario-by-theory verdict table")
    matrix.add_argument("--json", action="store_true", help="emit the matrices as JSON")
    return parser


def _options(args):
    flags = {"out": args.out, "tol": args.tol, "eps_min": args.eps_min, "jobs": args.jobs,
             "emit_plots": args.emit_plots}
    values = {k: v for k, v in flags.items() if v is not None}
    if args.config:
        try:
            config = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(config, dict):
            raise ParseError("config must be a JSON object")
        values.update({k.replace("-", "_"): v for k, v in config.items()})
    return RunOptions.from_mapping(values)


def _summary_line(report):
    mark = "PASS" if report.passed else "FAIL"
    return f"{mark}  {report.scenario:<22} {len(report.checks) - len(report.failed)}/{len(report.checks)} assertions"


def cmd_run(args, out=None):
    out = out or sys.stdout
    opts = _options(args)
    refs = list(BUILTIN_IDS) if args.scenario == "all" else [args.scenario]
    scenarios = [resolve(r) for r in refs]
    if opts.jobs > 1 and len(scenarios) > 1:
        with ThreadPoolExecutor(opts.jobs) as pool:
            reports = list(pool.map(lambda s: run_scenario(s, opts), scenarios))
    else:
        reports = [run_scenario(s, opts) for s in scenarios]
    for rep in reports:
        print(_summary_line(rep), file=out)
        for stage in rep.stages:
            for c in stage.checks:
                if not c.passed:
                    print(f"      {stage.name}: {c.name} measured {c.measured!r} "
                          f"{c.comparator} {c.expected if c.comparator == '==' else c.tolerance!r}",
                          file=out)
    print(f"reports written under {Path(opts.out).resolve()}", file=out)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED


def cmd_list(out=None):
    out = out or sys.stdout
    rows = list_scenarios()
    width = max(len(i) for i, _ in rows)
    for sid, desc in rows:
        print(f"{sid:<{width}}  {desc}", file=out)
    return EXIT_OK


def theory_matrices(opts=None):
    opts = opts or RunOptions()
    mats = []
    for sid in MATRIX_SCENARIOS:
        sc = builtin(sid)
        sc.stages = [s for s in sc.stages if s["kind"] == "classify"]
        mats.extend(run_scenario(sc, opts, write=False).matrices)
    return mats


def cmd_matrix(args, out=None):
    out = out or sys.stdout
    mats = theory_matrices()
    if args.json:
        print(json.dumps([m.to_json() for m in mats], indent=2, sort_keys=True), file=out)
    else:
        print(render_table(mats), file=out)
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "list":
            return cmd_list()
        return cmd_matrix(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
