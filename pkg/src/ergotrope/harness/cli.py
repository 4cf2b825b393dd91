"""``ergotrope <experiment> --config PATH [--seed N] [--jobs K] [--out DIR]``.

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .config import EXPERIMENTS, ConfigError, load_config
from .experiments import run

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ergotrope", description="Finite-volume ergodic operator experiments")
    sub = p.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="key = value config file")
        s.add_argument("--seed", type=int, default=None, help="override the master seed")
        s.add_argument("--jobs", type=int, default=None, help="worker processes")
        s.add_argument("--out", default="results", help="output directory")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.experiment)
        if args.seed is not None and args.seed < 0:
            raise ConfigError(["--seed: must be >= 0"])
        if args.jobs is not None and args.jobs < 1:
            raise ConfigError(["--jobs: must be >= 1"])
    except ConfigError as err:
        print(err, file=sys.stderr)
        return EXIT_CONFIG
    except OSError as err:
        print(f"cannot read config: {err}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        man = run(cfg, args.out, args.seed, args.jobs)
    except Exception as err:  # noqa: BLE001 - reported and mapped to the exit code
        print(f"run failed: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    for name, digest in man.files.items():
        print(f"{name}  {digest}")
    print(f"manifest.json written to {args.out} ({man.wall_clock:.1f} s)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
