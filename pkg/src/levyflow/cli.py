"""Command line entry point: ``levyflow <experiment> --config FILE``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import Experiment, Profile, build_config, load_document
from .errors import ConfigError, DomainError, FitError, RenderError, SamplerFailure, VerificationFailure

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_VERIFY = 4


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="levyflow", description="Tracer transport driven by stable, tempered and truncated jump noise.")
    p.add_argument("experiment", choices=[e.value for e in Experiment])
    p.add_argument("--config", type=Path, help="YAML or JSON run configuration (optional for verify)")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--out", type=Path, help="override output_dir")
    p.add_argument("--profile", choices=[pr.value for pr in Profile], help="fill unset sizes from a preset")
    p.add_argument("--workers", type=int, help="worker threads (capped by LEVYFLOW_THREADS)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        doc = {}
        if args.config is not None:
            doc = load_document(args.config.read_text(encoding="utf-8"))
        elif args.experiment != Experiment.VERIFY.value:
            raise ConfigError("--config is required for this experiment")
        cfg = build_config(doc, experiment=args.experiment, profile=args.profile, seed=args.seed,
                           output_dir=str(args.out) if args.out is not None else None)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    from .experiments import run_experiment

    try:
        result = run_experiment(cfg, workers=args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SamplerFailure, DomainError, FitError, RenderError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except VerificationFailure as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for line in result.report:
        print(line)
    print(f"wrote {len(result.files) + 1} files to {result.output_dir}")
    return result.status


if __name__ == "__main__":
    sys.exit(main())
