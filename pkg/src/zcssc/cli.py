"""Command-line entry point: simulate, sweep, verify, vectors."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .codec import make_test_vector, write_test_vectors
from .errors import CapacityError, ConfigError, ParameterError
from .sim import emit_results, load_config, results_to_csv, run_campaign, sweep
from .verify import run_checks

log = logging.getLogger("zcssc")

EXIT_CONFIG = 2
EXIT_CAPACITY = 3


def _emit(results, out):
    if out:
        emit_results(results, out)
        log.info("wrote %d row(s) to %s", len(results), out)
    else:
        sys.stdout.write(results_to_csv(results))


def cmd_simulate(args):
    cfg = load_config(args.config, args.override)
    _emit([run_campaign(cfg)], args.out)


def cmd_sweep(args):
    cfg = load_config(args.config, args.override)
    values = [v for v in args.values.split(",") if v.strip()]
    try:
        results = sweep(cfg, args.axis, values)
    except ParameterError as e:
        raise ConfigError(str(e)) from None
    _emit(results, args.out)


def cmd_verify(args):
    return 0 if run_checks() else 1


def default_vectors():
    rng = np.random.default_rng(2024)
    vecs = []
    for alpha in (1.0, 0.5):
        for m in range(64):
            bits = [(m >> (5 - i)) & 1 for i in range(6)]
            vecs.append(make_test_vector(11, 2, 6, alpha, bits))
        for _ in range(16):
            vecs.append(make_test_vector(331, 2, 30, alpha, rng.integers(0, 2, 30)))
    return vecs


def cmd_vectors(args):
    vecs = default_vectors()
    write_test_vectors(args.emit, vecs)
    log.info("wrote %d vectors to %s", len(vecs), args.emit)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zcssc", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one Monte-Carlo campaign")
    s.add_argument("--config", required=True)
    s.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    s.add_argument("--out", help="results file (.csv or .json); stdout CSV if omitted")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="run one campaign per value of a config key")
    s.add_argument("--config", required=True)
    s.add_argument("--axis", required=True)
    s.add_argument("--values", required=True, help="comma separated")
    s.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("verify", help="run the analytic/oracle self-checks")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("vectors", help="write codec test vectors")
    s.add_argument("--emit", required=True, metavar="FILE")
    s.set_defaults(func=cmd_vectors)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args) or 0
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as e:
        print(f"capacity error: {e}", file=sys.stderr)
        return EXIT_CAPACITY


if __name__ == "__main__":
    sys.exit(main())
