"""``evaluate`` command: run the pipeline from a config file and write reports.

Exit status is 0 on success, 1 when at least one region failed and 2 when
the configuration or an input file could not be loaded.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .curves import Mode
from .exceptions import ConfigError, EpiEvalError, ParseError
from .io import load_config

logger = logging.getLogger("epieval")

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2


def _formats(text: str) -> tuple[str, ...]:
    out = tuple(f.strip().lower() for f in text.split(",") if f.strip())
    bad = [f for f in out if f not in ("csv", "json", "svg")]
    if bad or not out:
        raise argparse.ArgumentTypeError(f"formats must be drawn from csv,json,svg (got {text!r})")
    return out


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed {text!r} is not an integer") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evaluate", description="Rank epidemic forecasting methods against observed curves.")
    p.add_argument("--config", required=True, help="INI-style run configuration")
    p.add_argument("--mode", choices=[m.value for m in Mode], help="override [evaluation] mode")
    p.add_argument("--region", action="append", dest="regions", metavar="ID", help="evaluate only this region (repeatable)")
    p.add_argument("--out", help="override [output] directory")
    p.add_argument("--format", type=_formats, dest="formats", help="comma-separated subset of csv,json,svg")
    p.add_argument("--seed", type=_seed, help="override [stochastic] seed")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    from .pipeline import run_pipeline, write_csv, write_json
    from .plots import emit_plots

    try:
        cfg = load_config(args.config)
        cfg = cfg.with_overrides(
            mode=Mode.parse(args.mode) if args.mode else None,
            regions=tuple(args.regions) if args.regions else None,
            output_dir=args.out,
            formats=args.formats,
            seed=args.seed,
        )
        bundle = run_pipeline(cfg)
    except (ConfigError, ParseError, EpiEvalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if "csv" in cfg.formats:
            write_csv(bundle, cfg.output_dir)
        if "json" in cfg.formats:
            write_json(bundle, cfg.output_dir)
        if "svg" in cfg.formats:
            emit_plots(bundle, cfg.output_dir)
    except OSError as exc:
        print(f"error: cannot write reports: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    for rid, why in bundle.failures.items():
        print(f"region {rid} failed: {why}", file=sys.stderr)
    return EXIT_PARTIAL if bundle.failures else EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
