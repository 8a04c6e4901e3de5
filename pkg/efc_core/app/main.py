"""
efc-loop: модель системы обратной связи по полю ошибки.

Точка входа командной строки: прогоны контура, отклик на ступеньку,
выгрузка матрицы, самопроверка линии и замер задержки.
"""
from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from efc_core.app.cli import commands
from efc_core.app.config.config import get_settings
from efc_core.app.models.errors import FeedbackError

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="efc-loop", description="Error-field correction feedback loop simulator")
    parser.add_argument("--print-defaults", action="store_true", help="print the default configuration and exit")
    parser.add_argument("--seed", type=int, default=None, help="override the top-level seed")
    parser.add_argument(
        "--log-level",
        type=str.upper,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=None,
        help="logging level (default: EFC_LOG_LEVEL or INFO)",
    )
    sub = parser.add_subparsers(dest="command")

    run = sub.add_parser("run", help="run the closed loop and write the trace CSV")
    run.add_argument("-c", "--config", required=True)
    run.add_argument("-o", "--output", required=True)
    run.add_argument("--concurrent", action="store_true", help="run the two boards as concurrent tasks")
    run.add_argument("overrides", nargs="*", metavar="key=value")
    run.set_defaults(handler=commands.cmd_run)

    step = sub.add_parser("step-response", help="unit step disturbance on a single channel")
    step.add_argument("-c", "--config", required=True)
    step.add_argument("--channel", type=int, required=True)
    step.add_argument("-o", "--output", required=True)
    step.set_defaults(handler=commands.cmd_step_response)

    matrix = sub.add_parser("matrix", help="mutual inductance matrix tools")
    matrix_sub = matrix.add_subparsers(dest="matrix_command", required=True)
    dump = matrix_sub.add_parser("dump", help="write the 16x16 matrix as CSV (henries)")
    dump.add_argument("-o", "--output", required=True)
    dump.add_argument("-c", "--config", default=None)
    dump.set_defaults(handler=commands.cmd_matrix_dump)

    link = sub.add_parser("link", help="frame codec tools")
    link_sub = link.add_subparsers(dest="link_command", required=True)
    selftest = link_sub.add_parser("selftest", help="encode a sample frame and check the codec")
    selftest.set_defaults(handler=commands.cmd_link_selftest)

    bench = sub.add_parser(
        "bench", help="measure digital pipeline latency per sample; exit 1 when p99 exceeds bench.budget"
    )
    bench.add_argument("-c", "--config", required=True)
    bench.add_argument("--iterations", type=int, default=None)
    bench.set_defaults(handler=commands.cmd_bench)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(level=(args.log_level or get_settings().log_level).upper(), format=LOG_FORMAT)

    if args.print_defaults:
        return commands.cmd_print_defaults(args)
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("error: a subcommand is required", file=sys.stderr)
        return 2

    try:
        return args.handler(args)
    except FeedbackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
