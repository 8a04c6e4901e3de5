"""Обработчики подкоманд CLI. Каждый возвращает код выхода."""
from __future__ import annotations

import argparse
import csv
import logging
from pathlib import Path
from typing import List

from efc_core.app.cli.summary import emit_summary, max_divergence
from efc_core.app.config.loader import format_defaults, parse_config
from efc_core.app.correction.mutual import build_mutual_matrix
from efc_core.app.handlers.latency import measure_pipeline_latency
from efc_core.app.handlers.loop import run_closed_loop, run_step_response
from efc_core.app.handlers.trace import Trace
from efc_core.app.link.frame import FRAME_LEN, crc16_ccitt_false, decode_frame, encode_frame
from efc_core.app.models.dto import LoopConfig
from efc_core.app.models.errors import FeedbackError

logger = logging.getLogger(__name__)

CRC_CHECK_INPUT = b"123456789"
CRC_CHECK_VALUE = 0x29B1
SELFTEST_PAYLOAD = [-32768, -4096, -256, -1, 0, 1, 255, 4095, 32767, 1000, -1000, 12345, -12345, 7, -7, 0]


def _load(args: argparse.Namespace) -> LoopConfig:
    overrides: List[str] = list(getattr(args, "overrides", None) or [])
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return parse_config(args.config, overrides)


def _write_traces(trace: Trace, out: str | Path) -> str:
    """Пишет трассу (или пару трасс режима both) и возвращает текст сводки."""
    out = Path(out)
    if trace.companion is None:
        trace.write_csv(out)
        return emit_summary(trace)

    fixed_path = out.with_name(f"{out.stem}.fixed.csv")
    float_path = out.with_name(f"{out.stem}.float.csv")
    trace.write_csv(fixed_path)
    trace.companion.write_csv(float_path)
    return (
        f"[fixed] {fixed_path}\n{emit_summary(trace)}"
        f"[float] {float_path}\n{emit_summary(trace.companion)}"
        f"max |i_fixed - i_float|: {max_divergence(trace, trace.companion):.6e} A\n"
    )


def cmd_print_defaults(args: argparse.Namespace) -> int:
    print(format_defaults(), end="")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = _load(args)
    trace = run_closed_loop(config, concurrent=args.concurrent)
    print(_write_traces(trace, args.output), end="")
    return 0


def cmd_step_response(args: argparse.Namespace) -> int:
    config = _load(args)
    trace = run_step_response(config, args.channel)
    print(_write_traces(trace, args.output), end="")
    return 0


def cmd_matrix_dump(args: argparse.Namespace) -> int:
    if args.config:
        c = _load(args).correction
        matrix = build_mutual_matrix(c.diag, c.off1, c.off2)
    else:
        matrix = build_mutual_matrix()
    path = Path(args.output)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        for row in matrix.entries:
            writer.writerow(repr(float(x)) for x in row)
    logger.info("[CORRECTION] %dx%d matrix written to %s", matrix.n, matrix.n, path)
    return 0


def link_selftest() -> List[str]:
    """Проверки кодека; возвращает список найденных проблем (пустой, если всё в порядке)."""
    problems = []
    if crc16_ccitt_false(CRC_CHECK_INPUT) != CRC_CHECK_VALUE:
        problems.append("CRC check value mismatch")

    frame = encode_frame(SELFTEST_PAYLOAD, 0x5A)
    print(f"frame ({len(frame)} bytes): {frame.hex(' ')}")
    if len(frame) != FRAME_LEN:
        problems.append(f"frame length {len(frame)}")
    decoded = decode_frame(frame)
    if decoded.seq != 0x5A or list(decoded.payload) != SELFTEST_PAYLOAD:
        problems.append("round trip mismatch")

    for bit in range(8, (FRAME_LEN - 2) * 8):
        corrupted = bytearray(frame)
        corrupted[bit // 8] ^= 1 << (bit % 8)
        try:
            decode_frame(bytes(corrupted))
        except FeedbackError:
            continue
        problems.append(f"corruption at bit {bit} not detected")
    return problems


def cmd_link_selftest(args: argparse.Namespace) -> int:
    problems = link_selftest()
    for problem in problems:
        print(f"FAIL: {problem}")
    print("link selftest: " + ("FAILED" if problems else "OK"))
    return 1 if problems else 0


def cmd_bench(args: argparse.Namespace) -> int:
    config = _load(args)
    report = measure_pipeline_latency(config, args.iterations)
    print(report.to_text())
    # bench.budget задаёт порог; p99 выше порога даёт код 1
    return 0 if report.within_budget else 1
