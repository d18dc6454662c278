"""Command-line experiment runner.

    fraclap --config configs/acceptance.ini --out results --seed 7
    fraclap --list-experiments
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from fraclap.config import DESCRIPTIONS, EXPERIMENTS, ConfigError, parse_config, with_overrides
from fraclap.experiments import checks_csv, run, summary_text
from fraclap.extension import convergence_csv


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fraclap", description="Run fractional-Laplacian experiments.")
    p.add_argument("--config", type=Path, help="INI experiment configuration")
    p.add_argument("--out", type=Path, help="output directory (overrides [run] out)")
    p.add_argument("--seed", type=_seed, help="seed for randomised checks (overrides [run] seed)")
    p.add_argument("--list-experiments", action="store_true", help="print experiment names and exit")
    p.add_argument("--verbose", action="store_true", help="log progress to stderr")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.list_experiments:
        for name in EXPERIMENTS:
            print(f"{name:<9} {DESCRIPTIONS[name]}")
        return 0
    if args.config is None:
        parser.error("--config is required unless --list-experiments is given")
    try:
        config = parse_config(args.config.read_text())
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    config = with_overrides(config, out=str(args.out) if args.out else None, seed=args.seed)
    if not config.experiments:
        return 0

    result = run(config)
    out = Path(config.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, rows in result.rows.items():
            if rows:
                (out / f"{name}.csv").write_text(convergence_csv(rows))
        (out / "checks.csv").write_text(checks_csv(result.checks))
        summary = summary_text(config, result)
        (out / "summary.txt").write_text(summary)
    except OSError as exc:
        print(f"cannot write results: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(summary)
    for err in result.errors:
        print(err, file=sys.stderr)
    return 0 if result.ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
