#!/usr/bin/python
import argparse
import json
import logging
import sys

from agent_utilities.base_utilities import get_logger
from agent_utilities.core.config import setting
from agent_utilities.core.exceptions import MissingParameterError, ParameterError
from pydantic import ValidationError

from sasaki_tube_verify import __version__
from sasaki_tube_verify.catalog import list_manifolds, load_manifold, serialize_manifold
from sasaki_tube_verify.exceptions import GeometryError, InvariantViolation
from sasaki_tube_verify.hermitian_analysis import gh_classify
from sasaki_tube_verify.reports import (
    classification_table,
    export_classification,
    summary_lines,
)
from sasaki_tube_verify.verification_models import SUITES, SuiteConfig
from sasaki_tube_verify.verification_suites import run_suite

NAME = "sasaki-tube-verify"
EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

logger = get_logger(__name__)


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=NAME,
        description="Verify Sasaki, Kaehler-tube and Gray-Hervella identities on chart manifolds.",
    )
    parser.add_argument("--version", action="version", version=f"{NAME} {__version__}")
    parser.add_argument(
        "--log-level",
        default=setting("SASAKI_TUBE_LOG_LEVEL", "INFO"),
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Root log level (default: SASAKI_TUBE_LOG_LEVEL or INFO)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="Run a verification suite")
    verify.add_argument("--manifold", required=True, help="Catalog name or manifest path")
    verify.add_argument("--suite", default="all", help=f"One of {', '.join(SUITES)}")
    verify.add_argument("--tol", type=float, default=None)
    verify.add_argument("--geodesic-tol", type=float, default=None)
    verify.add_argument("--parallel-tol", type=float, default=None)
    verify.add_argument("--flat-tol", type=float, default=None)
    verify.add_argument("--samples", type=int, default=None)
    verify.add_argument("--seed", type=int, default=None)
    verify.add_argument("--epsilon", type=float, default=None, help="Tube radius override")
    verify.add_argument("--out", default=None, help="Report path")
    verify.add_argument("--format", default="json", choices=["json", "csv"])

    manifolds = sub.add_parser("manifolds", help="Inspect the manifold catalog")
    manifolds_sub = manifolds.add_subparsers(dest="action", required=True)
    manifolds_sub.add_parser("list", help="List built-in manifolds")
    show = manifolds_sub.add_parser("show", help="Print a manifest")
    show.add_argument("name")

    classify = sub.add_parser("classify", help="Gray-Hervella classification")
    classify.add_argument("--manifold", required=True)
    classify.add_argument("--tol", type=float, default=1e-6)
    classify.add_argument("--points", type=int, default=20)
    classify.add_argument("--vectors", type=int, default=10)
    classify.add_argument("--seed", type=int, default=0)
    classify.add_argument("--out", default=None, help="JSON report path")
    return parser


def _verify(args: argparse.Namespace) -> int:
    options = {
        key: value
        for key, value in {
            "tol": args.tol,
            "geodesic_tol": args.geodesic_tol,
            "parallel_tol": args.parallel_tol,
            "flat_tol": args.flat_tol,
            "samples": args.samples,
            "seed": args.seed,
            "epsilon": args.epsilon,
            "out": args.out,
        }.items()
        if value is not None
    }
    config = SuiteConfig(manifold=args.manifold, suite=args.suite, format=args.format, **options)
    report = run_suite(config)
    for line in summary_lines(report):
        print(line)
    return EXIT_PASS if report.passed else EXIT_FAIL


def _manifolds(args: argparse.Namespace) -> int:
    if args.action == "list":
        for entry in list_manifolds():
            acs = "acs" if entry.has_acs else "-"
            print(f"{entry.name:<16} dim {entry.dimension:<3} {acs:<4} {entry.description}")
    else:
        print(serialize_manifold(load_manifold(args.name)), end="")
    return EXIT_PASS


def _classify(args: argparse.Namespace) -> int:
    m = load_manifold(args.manifold)
    report = gh_classify(
        m, points=args.points, vectors=args.vectors, tol=args.tol, seed=args.seed
    )
    for line in classification_table(report):
        print(line)
    if args.out:
        export_classification(report, args.out)
    else:
        logger.debug(json.dumps(report.to_json_document()))
    return EXIT_PASS


COMMANDS = {"verify": _verify, "manifolds": _manifolds, "classify": _classify}


def main(argv: list[str] | None = None) -> int:
    parser = create_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[logging.StreamHandler()],
    )
    print(f"{NAME} v{__version__}", file=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (ParameterError, MissingParameterError, ValidationError) as exc:
        print(f"Configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"Manifold invariants violated: {exc}", file=sys.stderr)
        for violation in exc.violations[:10]:
            print(f"  {violation}", file=sys.stderr)
        return EXIT_CONFIG
    except GeometryError as exc:
        print(f"Geometry error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
