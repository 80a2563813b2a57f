"""Command-line entry point: ``ethlab run <config.json>``.

Exit codes: 0 success, 1 numerical failure, 2 configuration error,
3 OTOC estimator unresolved.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .experiments import ConfigError, load_config, resolve_output_dir, run_experiment
from .otoc import EstimatorUnresolvedError

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG, EXIT_UNRESOLVED = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ethlab", description="Run thermalization and control experiments.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one scenario from a JSON config (or a run manifest)")
    run.add_argument("config")
    run.add_argument("--out", help="output directory (overrides $ETHLAB_OUT and the config)")
    run.add_argument("--seed", type=int, help="override the master seed")
    run.add_argument("--realizations", type=int, help="override the number of realizations")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.realizations is not None:
            cfg.realizations = args.realizations
        cfg.validate()
        out = resolve_output_dir(cfg, args.out)
        summary = run_experiment(cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EstimatorUnresolvedError as exc:
        print(f"estimator unresolved: {exc}", file=sys.stderr)
        return EXIT_UNRESOLVED
    except (ArithmeticError, RuntimeError, ValueError, MemoryError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"{cfg.scenario}: wrote {out}")
    for key in ("late_time_mean_survival", "diagonal_ensemble_survival", "max_sector_leak"):
        if key in summary:
            print(f"  {key} = {summary[key]:.6g}")
    return EXIT_OK
