"""The ``bench`` command line: run experiments and generate config files.

    bench run --config exp1.json [--paper-scale] [--jobs 4] [--out report.json] [--format json|csv|md]
    bench gen-config --preset exp1 [--out exp1.json]

Exit codes: 0 on success, 2 on configuration or usage errors, 3 when some
replicates failed (the report is still written). The BENCH_SEED environment
variable overrides the config's master seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import harness
from .errors import InvalidInputError, UsageError

_FORMAT_ALIASES = {"json": "json", "csv": "csv", "md": "markdown_table"}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bench",
        description="Replicated novelty-detection experiments with optional attacks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the experiment described by a config file")
    run.add_argument("--config", required=True, type=Path, help="JSON experiment config")
    run.add_argument(
        "--paper-scale", action="store_true",
        help="use the full-size profile (n=5000, m=1000, k=4000, m0=900; fixed attack sizes scale with m)",
    )
    run.add_argument("--jobs", type=int, default=1, help="parallel replicate workers")
    run.add_argument("--out", type=Path, help="output path (default: stdout)")
    run.add_argument("--format", choices=sorted(_FORMAT_ALIASES), default="json")

    gen = sub.add_parser("gen-config", help="write a ready-made experiment config")
    gen.add_argument("--preset", required=True, choices=harness.PRESETS)
    gen.add_argument("--out", type=Path, help="output path (default: <preset>.json)")
    return parser


def _load_config(path: Path) -> harness.ExperimentConfig:
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    cfg = harness.config_from_dict(doc)
    seed_override = os.environ.get("BENCH_SEED")
    if seed_override is not None:
        try:
            cfg = replace(cfg, master_seed=int(seed_override))
        except ValueError as exc:
            raise UsageError(f"BENCH_SEED must be an integer, got {seed_override!r}") from exc
    return cfg


def _cmd_run(args) -> int:
    cfg = _load_config(args.config)
    if args.paper_scale:
        cfg = harness.with_paper_scale(cfg)
    if args.jobs < 1:
        raise UsageError(f"--jobs must be >= 1, got {args.jobs}")
    report = harness.run_experiment(cfg, jobs=args.jobs)
    blob = harness.emit_report(report, _FORMAT_ALIASES[args.format])
    if args.out is None:
        sys.stdout.buffer.write(blob)
        sys.stdout.buffer.flush()
    else:
        args.out.write_bytes(blob)
        print(f"wrote {args.out}")
    if report.partial:
        failed = sum(rec.failed for rec in report.records)
        print(f"{failed} of {len(report.records)} replicates failed", file=sys.stderr)
        return 3
    return 0


def _cmd_gen_config(args) -> int:
    cfg = harness.preset_config(args.preset)
    out = args.out if args.out is not None else Path(f"{args.preset}.json")
    out.write_text(json.dumps(harness.config_to_dict(cfg), indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_gen_config(args)
    except (UsageError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
