"""Command-line interface: synth / index / detect / eval subcommands."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .errors import FormatError, InvalidInputError, UndefinedMetricError
from .pipeline import PipelineConfig, cmd_detect, cmd_eval, cmd_index, cmd_synth, load_config


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="locdet",
        description="Object-level change detection driven by self-localization rank fusion.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, required=True, help="pipeline config JSON")
        p.add_argument("--seed", type=int, default=None, help="override the configured seed")
        p.add_argument("--out", type=Path, default=None, help="override the output directory")

    p_synth = sub.add_parser("synth", help="generate the synthetic dataset")
    common(p_synth)

    p_index = sub.add_parser("index", help="build and persist the reference database")
    common(p_index)

    p_detect = sub.add_parser("detect", help="run detection over every manifest sample")
    common(p_detect)
    p_detect.add_argument("--method", default=None, help="run a single fusion method")

    p_eval = sub.add_parser("eval", help="evaluate persisted detections")
    common(p_eval)
    p_eval.add_argument("--method", default=None, help="evaluate a single method")
    p_eval.add_argument(
        "--roc-neg-max",
        type=float,
        default=None,
        help="restrict the sweep to one negative-ceiling value",
    )
    return parser


def _configure(args: argparse.Namespace) -> PipelineConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise InvalidInputError(f"--seed must be non-negative, got {args.seed}")
        cfg.seed = args.seed
        cfg.synth = replace(cfg.synth, seed=args.seed)
    if args.out is not None:
        cfg.out_dir = args.out
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _configure(args)
        if args.command == "synth":
            manifest = cmd_synth(cfg)
            print(f"dataset written: {manifest}")
        elif args.command == "index":
            dbs = cmd_index(cfg)
            sizes = ", ".join(f"{name}: {len(db)} entries" for name, db in sorted(dbs.items()))
            print(f"indexed {sizes} -> {cfg.out_dir}")
        elif args.command == "detect":
            ok, failed = cmd_detect(cfg, method=args.method)
            print(f"detected {ok} samples, {failed} failed -> {cfg.out_dir}")
            if failed:
                return 1
        elif args.command == "eval":
            report = cmd_eval(cfg, method=args.method, roc_neg_max=args.roc_neg_max)
            sys.stdout.write(report.to_csv())
            print(f"report written: {cfg.out_dir / 'report.csv'}")
    except (InvalidInputError, FormatError, UndefinedMetricError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
