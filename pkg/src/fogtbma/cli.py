"""Command line front end.

Four subcommands: ``snr-sweep``, ``required-snr`` and ``roc`` run the
matching sweep from a JSON experiment spec and emit CSV; ``validate``
checks a spec and reports every violation.  Exit codes: 0 success, 2
configuration problem, 3 unrecoverable numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .config import ConfigError
from .experiments import (BudgetGrid, RocSweep, SnrSweep, csv_text,
                          debug_capture, load_spec, run_required_snr,
                          run_roc, run_snr_sweep)
from .gamp import NonFiniteStateError, write_trace_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_RUNNERS = {
    "snr-sweep": (run_snr_sweep, SnrSweep, "snr_sweep"),
    "required-snr": (run_required_snr, BudgetGrid, "budget_grid"),
    "roc": (run_roc, RocSweep, "roc"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fogtbma",
        description="Monte Carlo simulator for semantics-aware grant-free "
                    "access with quantize- and detect-and-forward fronthaul",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    runs = (
        ("snr-sweep", "error rates versus SNR per scheme and bit budget"),
        ("required-snr", "smallest SNR meeting a target error rate per "
                         "(budget, codeword length)"),
        ("roc", "false-positive / false-negative curve over the "
                "decision-threshold grid"),
    )
    for name, help_text in runs:
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True,
                        help="JSON experiment spec")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the spec's master seed")
        sp.add_argument("--trials", type=int, default=None,
                        help="override evaluation trials per point")
        sp.add_argument("--out", default=None,
                        help="CSV output path (default: stdout)")
        sp.add_argument("--debug-trace", action="store_true",
                        help="also dump a trial JSONL and a decoder "
                             "iteration trace CSV next to --out")
    vp = sub.add_parser("validate", help="check a spec and list violations")
    vp.add_argument("--config", required=True, help="JSON experiment spec")
    return parser


def _load(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _debug_paths(out: str | None):
    stem = "fogtbma_debug"
    if out:
        stem = out[: -len(".csv")] if out.endswith(".csv") else out
    return stem + ".trials.jsonl", stem + ".gamp_trace.csv"


def _write_debug(spec, args) -> None:
    system = spec.system
    if isinstance(spec.sweep, SnrSweep) and spec.sweep.snr_db:
        system = replace(system, snr_db=float(spec.sweep.snr_db[0]))
    records, trace_rows = debug_capture(spec, system)
    trials_path, trace_path = _debug_paths(args.out)
    with open(trials_path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")
    write_trace_csv(trace_path, trace_rows)
    print(f"debug trace: {trials_path}, {trace_path}", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        data = _load(args.config)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        spec = load_spec(data)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        report = spec.validate()
        print(report)
        return EXIT_OK if report.ok else EXIT_CONFIG

    if args.seed is not None:
        spec = replace(spec, master_seed=args.seed)
    if args.trials is not None:
        spec = replace(spec, trials=args.trials)
    report = spec.validate()
    if not report.ok:
        print(report, file=sys.stderr)
        return EXIT_CONFIG

    runner, sweep_cls, sweep_key = _RUNNERS[args.command]
    if not isinstance(spec.sweep, sweep_cls):
        print(f"config error: {args.command} needs a sweep.{sweep_key} block",
              file=sys.stderr)
        return EXIT_CONFIG

    try:
        columns, rows = runner(spec)
        text = csv_text(columns, rows)
        if args.debug_trace:
            _write_debug(spec, args)
    except (NonFiniteStateError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
