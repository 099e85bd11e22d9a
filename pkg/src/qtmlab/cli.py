"""qtm command line: sweep runners for every engine module.

    qtm <subcommand> [--config FILE] [--preset NAME] [--seed S] [--out DIR]
                     [--jobs K] [--check]

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 acceptance
check failure (only with --check).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .runner import (EXPERIMENTS, CheckFailure, ConfigError, ExperimentConfig,
                     NumericalError, load_config, run_experiment)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qtm",
        description="many-body quantum thermal machine experiments",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, exp in sorted(EXPERIMENTS.items()):
        p = sub.add_parser(name, help=f"run the {name} sweep")
        p.add_argument("--config", type=Path, default=None,
                       help="JSON config file (schema_version, params, ...)")
        p.add_argument("--preset", default=None,
                       help=f"named preset; one of {sorted(exp.presets) or '[]'}")
        p.add_argument("--seed", type=int, default=None, help="master RNG seed")
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--jobs", type=int, default=None, help="parallel workers")
        p.add_argument("--check", action="store_true",
                       help="evaluate acceptance checks; exit 4 on failure")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = ExperimentConfig(subcommand=args.subcommand, params={})
    try:
        if args.config is not None:
            file_cfg = load_config(args.config)
            if "subcommand" in file_cfg and file_cfg["subcommand"] != args.subcommand:
                raise ConfigError(
                    f"config is for {file_cfg['subcommand']!r}, "
                    f"invoked as {args.subcommand!r}"
                )
            cfg.params = dict(file_cfg.get("params", {}))
            cfg.seed = int(file_cfg.get("seed", cfg.seed))
            cfg.out_dir = Path(file_cfg.get("out", cfg.out_dir))
            cfg.jobs = int(file_cfg.get("jobs", cfg.jobs))
            cfg.preset = file_cfg.get("preset", cfg.preset)
            cfg.check = bool(file_cfg.get("check", cfg.check))
        if args.preset is not None:
            cfg.preset = args.preset
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out_dir = args.out
        if args.jobs is not None:
            cfg.jobs = args.jobs
        if args.check:
            cfg.check = True
        return run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, RuntimeError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except CheckFailure as exc:
        print(f"check failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
