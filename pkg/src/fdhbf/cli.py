"""Command-line entry point: ``fdhbf run`` and ``fdhbf sweep``."""

import argparse
import logging
import os
import sys

from .exceptions import ConfigError, NumericFailure
from .simulation import PRESETS, SweepSpec, SystemConfig, emit_csv, preset, run_sweep

log = logging.getLogger("fdhbf")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def build_parser():
    p = argparse.ArgumentParser(prog="fdhbf", description="Full-duplex hybrid beamforming simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run trials at a single configuration")
    run.add_argument("--config", help="JSON config file")
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--threads", type=int, default=1)
    run.add_argument("--out", required=True, help="output CSV path")

    sw = sub.add_parser("sweep", help="run a figure preset sweep")
    sw.add_argument("--config", help="JSON config file")
    sw.add_argument("--preset", required=True, choices=sorted(PRESETS))
    sw.add_argument("--trials", type=int)
    sw.add_argument("--seed", type=int)
    sw.add_argument("--threads", type=int, default=1)
    sw.add_argument("--out", required=True, help="output CSV path")
    return p


def load_config(args, environ=None):
    """Config file, then ``FDX_SEED``, then command-line flags."""
    environ = os.environ if environ is None else environ
    cfg = SystemConfig.from_json(args.config) if args.config else SystemConfig()
    env_seed = environ.get("FDX_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError as exc:
            raise ConfigError(f"FDX_SEED must be an integer, got {env_seed!r}") from exc
        cfg = _replace(cfg, seed=seed)
    if args.seed is not None:
        cfg = _replace(cfg, seed=args.seed)
    if args.trials is not None:
        cfg = _replace(cfg, trials=args.trials)
    return cfg


def _replace(cfg, **values):
    return cfg.with_values(**values)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = load_config(args)
        if args.command == "sweep":
            cfg, spec = preset(args.preset, cfg)
        else:
            spec = SweepSpec()
        log.info("running %d point(s) x %d trial(s)", len(spec), cfg.trials)
        records = run_sweep(cfg, spec, threads=args.threads)
        emit_csv(records, args.out, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
