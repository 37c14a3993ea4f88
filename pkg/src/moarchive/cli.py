"""Command line entry point: ``moarchive run|compare|classify``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .core import UsageError
from .experiments import ExperimentConfig, classify, compare, render_matrix, run_experiment, write_classify


class _Parser(argparse.ArgumentParser):
    # exit status 2 is reserved for property violations
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="moarchive", description="Bounded multi-objective archivers and their properties.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("run", "run archivers over a sequence and check properties"),
        ("compare", "compare final quality of several archivers"),
        ("classify", "estimate the archiver property matrix"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, required=name != "classify", help="experiment config (JSON)")
        p.add_argument("--out", type=Path, help="output directory (default: config 'out' or ./out)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--fail-on-violation", action="store_true", help="exit with status 2 if any violation is found")
    return parser


def _load(args) -> ExperimentConfig:
    if args.config is not None:
        cfg = ExperimentConfig.load(args.config, require_source=args.command != "classify")
    else:
        cfg = ExperimentConfig.from_dict({"schema_version": 1}, require_source=False)
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2**64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        cfg.seed = args.seed
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        out = args.out if args.out is not None else cfg.base / cfg.out
        if args.command == "run":
            report = run_experiment(cfg, out)
            violations = report["violations"]
            for name, rec in report["archivers"].items():
                bad = [p for p, r in rec["checks"].items() if not r["held"]]
                print(f"{name}: {rec['violation_count']} violation(s)" + (f" [{', '.join(bad)}]" if bad else ""))
        elif args.command == "compare":
            report = compare(cfg, out)
            print((out / "compare.txt").read_text(encoding="utf-8"), end="")
            violations = sum(sum(r["violations"].values()) for r in report["archivers"].values())
        else:
            report = classify(cfg.classify, seed=cfg.seed)
            write_classify(report, out)
            print(render_matrix(report), end="")
            violations = sum(c["status"] == "violated" for row in report["matrix"].values() for c in row.values())
    except (UsageError, OSError, json.JSONDecodeError) as exc:
        print(f"moarchive: error: {exc}", file=sys.stderr)
        return 1
    if args.fail_on_violation and violations:
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
