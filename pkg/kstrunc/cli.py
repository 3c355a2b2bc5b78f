# SPDX-License-Identifier: MIT

"""Command-line entry point.

Exit codes: 0 when everything passes, 1 on an invariant violation, 2 on a
configuration or report error, 3 when a solver does not converge.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import math
import sys
from fractions import Fraction
from typing import TYPE_CHECKING

from .config import load_config, parse_rational
from .core.errors import (
    ConfigError,
    DumpFormatError,
    HypothesisViolationError,
    InvalidExponentError,
    InvariantViolationError,
    IterationLimitError,
    ReportError,
    RunError,
)
from .core.typings import Task
from .harness import run_experiment
from .regime import classify, stampacchia_verify, stampacchia_zero
from .report import emit_report

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _exponent(value: str) -> Fraction | float:
    if value.strip().lower() in ("inf", "infinity"):
        return math.inf
    return parse_rational(value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kstrunc",
        description="Truncated Keller-Segel solver and verification harness.",
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="log solver detail"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    exponents = commands.add_parser("exponents", help="classify f in L^m")
    exponents.add_argument("--N", type=int, required=True, metavar="<int>")
    exponents.add_argument("--m", required=True, metavar="<rational|inf>")

    for task in Task:
        sub = commands.add_parser(task.value, help=f"{task.value} an experiment")
        sub.add_argument("--config", required=True, metavar="<path>")

    demo = commands.add_parser("stampacchia", help="zero of a level function")
    demo.add_argument("--M", type=float, required=True, metavar="<float>")
    demo.add_argument("--delta", type=float, required=True, metavar="<float>")
    demo.add_argument("--gamma", type=float, required=True, metavar="<float>")
    demo.add_argument("--psi0", type=float, required=True, metavar="<float>")
    demo.add_argument(
        "--family",
        choices=("power", "decay"),
        default="power",
        help="psi0 max(0, 1 - h)^exponent, or the nonvanishing psi0 / (1 + h)",
    )
    demo.add_argument("--exponent", type=float, default=1.5, metavar="<float>")
    demo.add_argument("--h-max", type=float, default=None, metavar="<float>")
    demo.add_argument("--samples", type=int, default=201, metavar="<int>")
    return parser


def demo_family(
    family: str, psi0: float, exponent: float
) -> Callable[[float], float]:
    """A nonincreasing level function for the Stampacchia demo.

    Args:
        family (str): ``power`` or ``decay``.
        psi0 (float): The value at 0.
        exponent (float): The power of the ``power`` family.

    Returns:
        Callable[[float], float]: The function.
    """
    if family == "decay":
        return lambda h: psi0 / (1.0 + h)
    return lambda h: psi0 * max(0.0, 1.0 - h) ** exponent


def _print_table(rows: Sequence[tuple[str, str]]) -> None:
    width = max(len(name) for name, _ in rows)
    for name, value in rows:
        print(f"{name:<{width}}  {value}")  # noqa: T201


def cmd_exponents(args: argparse.Namespace) -> int:
    report = classify(_exponent(args.m), args.N)
    _print_table(report.table())
    print(json.dumps(report.to_document(), sort_keys=True))  # noqa: T201
    return EXIT_OK


def cmd_stampacchia(args: argparse.Namespace) -> int:
    # parameters outside the lemma are a usage error here, not a failed check
    stampacchia_zero(args.M, args.delta, args.gamma, args.psi0)
    sampler = demo_family(args.family, args.psi0, args.exponent)
    h_max = args.h_max
    if h_max is None:
        h_max = 1.0 if args.family == "power" else 10.0
    report = stampacchia_verify(
        sampler, args.M, args.delta, args.gamma, h_max, args.samples
    )
    _print_table(
        [
            ("hypothesis_holds", str(report.hypothesis_holds)),
            ("worst_ratio", f"{report.worst_ratio:.6g}"),
            ("d", f"{report.d:.12g}"),
            ("psi(d)", f"{report.psi_at_d:.3e}"),
            ("zero_reached", str(report.zero_reached)),
        ]
    )
    if report.hypothesis_holds and not report.zero_reached:
        raise InvariantViolationError(["stampacchia_zero"])
    return EXIT_OK


def cmd_task(args: argparse.Namespace) -> int:
    task = Task(args.command)
    config = load_config(args.config)
    results = asyncio.run(run_experiment(config, task))
    written = emit_report(results, config.output_dir)

    for result in results:
        status = "ok" if result.passed else "FAILED"
        print(f"{result.scenario_id}: {status}")  # noqa: T201
    print(f"{len(written)} files in {config.output_dir}")  # noqa: T201

    failures = [
        f"{result.scenario_id}/{check.name}"
        for result in results
        for check in result.checks
        if not check.passed
    ]
    if failures:
        raise InvariantViolationError(failures)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command line.

    Args:
        argv (Sequence[str] | None, optional): Arguments, defaults to sys.argv.

    Returns:
        int: The exit code.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT
    )

    handlers = {"exponents": cmd_exponents, "stampacchia": cmd_stampacchia}
    handler = handlers.get(args.command, cmd_task)
    try:
        return handler(args)
    except InvariantViolationError as e:
        logger.error("%s", e)  # noqa: TRY400
        return EXIT_INVARIANT
    except (
        ConfigError,
        ReportError,
        DumpFormatError,
        InvalidExponentError,
        HypothesisViolationError,
    ) as e:
        logger.error("%s", e)  # noqa: TRY400
        return EXIT_CONFIG
    except (RunError, IterationLimitError) as e:
        logger.error("%s", e)  # noqa: TRY400
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
