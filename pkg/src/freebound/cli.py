"""Command-line front end: ``freebound {solve,verify-example,analyze,report}``."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import load_config
from .errors import ParseError, ValidationError


def _set_threads(n: int | None) -> None:
    if not n:
        return
    try:
        import numba

        numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))
    except (ImportError, ValueError):
        pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freebound", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "solve": "solve the penalized coupled system and dump u, v and diagnostics",
        "verify-example": "check the closed-form example's residuals on two grids",
        "analyze": "free-boundary and exponent measurements (solving first if the config asks)",
        "report": "verify, solve and analyze, then write a pass/fail summary",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="experiment configuration file")
        p.add_argument("--out", default=None, help="output directory (overrides [output] directory)")
        p.add_argument("--threads", type=int, default=None, help="worker threads for compiled kernels")
        p.add_argument("--seedless", action="store_true",
                       help="assert that no random numbers are used (always true; recorded in the summary)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config)
    except (ParseError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    _set_threads(args.threads)
    from .pipeline import run

    notes = ["seedless: no random number generator is used anywhere in the pipeline"] if args.seedless else []
    result = run(cfg, args.out, mode=args.command, notes=notes)
    sys.stdout.write(result.summary())
    return 1 if result.failed else 0


if __name__ == "__main__":
    sys.exit(main())
