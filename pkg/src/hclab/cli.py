"""Command-line entry point.

    hclab <experiment> --config <path> [--force] [--threads N] [--out DIR]

Experiments: generate, bp-run, pd-curve, free-energy, phase-diagram,
mu-profile, exhaustive, verify-bounds, gaussian-check.  Exit codes:
0 ok, 2 config error, 3 guard violation, 4 numerical divergence.
"""

from __future__ import annotations

import argparse
import sys

from .config import EXPERIMENTS, load_config
from .errors import ConfigError, GuardError, NumericalDivergence
from .experiments import run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hclab",
        description="Hidden dense-subgraph experiments: graph sampling, belief "
        "propagation, population dynamics, and phase diagrams.",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS, help="experiment to run")
    parser.add_argument("--config", required=True, help="configuration file")
    parser.add_argument("--force", action="store_true",
                        help="recompute even on a cache hit")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker processes for parameter sweeps")
    parser.add_argument("--out", default=".", help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.experiment)
        files = run(cfg, out_dir=args.out, threads=max(1, args.threads),
                    force=args.force)
    except ConfigError as exc:
        print(f"hclab: config error: {exc}", file=sys.stderr)
        return 2
    except GuardError as exc:
        print(f"hclab: guard violation: {exc}", file=sys.stderr)
        return 3
    except NumericalDivergence as exc:
        print(f"hclab: numerical divergence: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"hclab: {exc}", file=sys.stderr)
        return 1
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
