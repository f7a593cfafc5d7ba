"""``verify``: run zoo suites or scenario documents and print a report."""

from __future__ import annotations

import argparse
import sys

from .errors import ParseError, SchemaError, SingularMetric, WeylTwistError
from .runner import RunConfig, render_json, render_text, run
from .zoo import SUITES

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def _threads(text):
    if text == "auto":
        return text
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("threads must be >= 1 or 'auto'")
    return n


def _positive(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("points must be >= 1")
    return n


def _seed(text):
    n = int(text, 0)
    if not 0 <= n < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return n


def build_parser():
    p = argparse.ArgumentParser(
        prog="verify",
        description="Evaluate geometric residual checks on seeded sample points.")
    p.add_argument("--suite", choices=sorted(SUITES) + ["all"],
                   help="zoo suite to run (default: flat unless --scenario is given)")
    p.add_argument("--scenario", metavar="PATH", help="JSON scenario document")
    p.add_argument("--points", type=_positive, default=64)
    p.add_argument("--seed", type=_seed, default=42)
    p.add_argument("--tol", type=float, default=None,
                   help="override every scenario's tolerance")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--threads", type=_threads, default=1, help="integer or 'auto'")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    suite = args.suite if args.suite or args.scenario else "flat"
    try:
        cfg = RunConfig(suite=suite, scenario_path=args.scenario, points=args.points,
                        seed=args.seed, tol=args.tol, format=args.format, threads=args.threads)
        report, code = run(cfg)
    except (SchemaError, ParseError, SingularMetric, OSError) as exc:
        print(f"verify: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (WeylTwistError, ValueError, KeyError) as exc:
        print(f"verify: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    out = render_json(report) if cfg.format == "json" else render_text(report)
    sys.stdout.write(out)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
