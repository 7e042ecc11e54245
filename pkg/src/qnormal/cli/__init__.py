"""Command-line front end.

    qnormal {decompose,evolve,suppress,historian,lattice,sweep}
            [--config PATH] [--seed N] [--hbar X] [--out DIR]
            [--format csv|json] [--strict]

Exit codes: 0 success, 1 a reported check failed under ``--strict``,
2 invalid input or configuration, 3 numerical failure.
"""

import argparse
import logging
import sys
import time

from ..errors import InputError, NumericalError
from .config import MODES, ScenarioConfig, parse_config
from .instances import RandomSpec, generate_random_hamiltonian, random_instance
from .runner import RunReport, report_json, run, write_outputs

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("qnormal")


def build_parser():
    parser = argparse.ArgumentParser(prog="qnormal", description=__doc__.splitlines()[0])
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", metavar="PATH", help="JSON scenario file")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--hbar", type=float)
    parser.add_argument("--out", metavar="DIR", help="directory for report.json and trace files")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--strict", action="store_true", default=None,
                        help="exit nonzero when any reported check fails")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    start = time.perf_counter()
    try:
        text = ""
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        cfg = parse_config(text, {"mode": args.mode, "seed": args.seed, "hbar": args.hbar,
                                  "path": args.out, "format": args.format, "strict": args.strict})
        report, rows = run(cfg)
        if cfg.path is not None:
            write_outputs(cfg, report, rows)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except InputError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    sys.stdout.write(report_json(report))
    # timing stays out of the files so reruns are byte-identical
    log.info("wall time %.3f s", time.perf_counter() - start)
    for c in report["checks"]:
        if not c["passed"]:
            print(f"check failed: {c['name']} = {c['value']!r} (tolerance {c['tolerance']!r})",
                  file=sys.stderr)
    if cfg.strict and not report.passed:
        return EXIT_CHECK_FAILED
    return EXIT_OK


__all__ = ["ScenarioConfig", "RandomSpec", "RunReport", "parse_config", "run", "main",
           "generate_random_hamiltonian", "random_instance"]
