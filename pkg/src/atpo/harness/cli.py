"""Command-line interface.

Subcommands:
    solve        build and cache the configured task library
    run          run a single experiment config
    sweep        run the configured parameter sweep
    bound-check  re-verify the loss bound on stored trace files
    export       rebuild the CSV outputs from a stored results.json

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..agent import verify_bound
from ..mdp import ConvergenceError, ModelError
from ..serialize import FormatError
from .config import ConfigError, load_config
from .runner import (
    TrialResult,
    export_results,
    export_timings,
    export_trace,
    load_trace,
    run_experiment,
    solve_library,
    trials_rows,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _add_common(parser):
    parser.add_argument("--config", required=True, help="experiment config (JSON)")
    parser.add_argument("--out-dir", default="results", help="output directory")
    parser.add_argument("--cache-dir", default="cache", help="model cache directory")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")


def _load(args):
    config = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    return config


def _results_json(results):
    # wall-clock figures live in timings.csv; everything here is deterministic
    drop = ("trace", "entropies", "decision_seconds_mean")
    return [
        {k: v for k, v in asdict(r).items() if k not in drop}
        | {"entropies": [float(e) for e in r.entropies]}
        for r in results
    ]


def _run_and_export(config, args, sweep):
    if sweep and config.sweep.axis == "none":
        raise ConfigError("config has no sweep axis; use the run subcommand")
    if not sweep and config.sweep.axis != "none":
        raise ConfigError("config declares a sweep; use the sweep subcommand")
    out = Path(args.out_dir)
    results, solved = run_experiment(config, cache_root=args.cache_dir)
    export_results(results, out)
    export_timings(results, solved, out)
    for r in results:
        if r.trace is not None and len(r.trace):
            export_trace(r, out)
    payload = _results_json(results)
    (out / "results.json").write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
    held = [
        r
        for r in results
        if r.bound_point_holds is not None
    ]
    if held:
        ok = sum(r.bound_point_holds and r.bound_uniform_holds for r in held)
        print(f"bound held on {ok}/{len(held)} recorded trials")
    print(f"{len(results)} trials -> {out}")
    return EXIT_OK


def cmd_solve(args):
    config = _load(args)
    solved = solve_library(config.domain, config.solver, cache_root=args.cache_dir)
    for task, seconds in zip(solved.tasks, solved.setup_seconds):
        print(f"{task.entry.label}: |X|={task.entry.pomdp.num_states} setup={seconds:.2f}s")
    print(f"cache key {solved.cache_key} ({len(solved.tasks)} tasks)")
    return EXIT_OK


def cmd_run(args):
    return _run_and_export(_load(args), args, sweep=False)


def cmd_sweep(args):
    return _run_and_export(_load(args), args, sweep=True)


def cmd_bound_check(args):
    trace_dir = Path(args.traces)
    files = sorted(trace_dir.glob("*.csv"))
    if not files:
        print(f"no trace files under {trace_dir}", file=sys.stderr)
        return EXIT_CONFIG
    total = held = 0
    for path in files:
        trace = load_trace(path)
        k = len(trace.task_labels)
        point = np.zeros(k)
        point[trace.target_index] = 1.0
        rp = verify_bound(trace, point)
        ru = verify_bound(trace, np.full(k, 1.0 / k))
        total += 1
        ok = rp.holds and ru.holds
        held += ok
        print(f"{path.name}: point={'ok' if rp.holds else 'VIOLATED'} uniform={'ok' if ru.holds else 'VIOLATED'}")
    print(f"bound held on {held}/{total} traces")
    return EXIT_OK if held == total else EXIT_RUNTIME


def cmd_export(args):
    src = Path(args.results)
    if not src.exists():
        print(f"results file not found: {src}", file=sys.stderr)
        return EXIT_CONFIG
    docs = json.loads(src.read_text())
    results = [TrialResult(**{k: v for k, v in doc.items()}, trace=None) for doc in docs]
    export_results(results, args.out_dir)
    print(f"exported {len(results)} trials -> {args.out_dir}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="atpo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="build and cache the task library")
    _add_common(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("run", help="run a single experiment config")
    _add_common(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("sweep", help="run the configured parameter sweep")
    _add_common(p)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("bound-check", help="re-verify the loss bound on stored traces")
    p.add_argument("--traces", required=True, help="directory of exported trace CSVs")
    p.set_defaults(fn=cmd_bound_check)

    p = sub.add_parser("export", help="rebuild CSVs from a stored results.json")
    p.add_argument("--results", required=True, help="path to results.json")
    p.add_argument("--out-dir", default="results", help="output directory")
    p.set_defaults(fn=cmd_export)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ModelError, ConvergenceError, FormatError, OSError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
