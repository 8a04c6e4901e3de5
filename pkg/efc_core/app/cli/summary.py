"""
Сводка по трассе: пиковая ошибка, шаг установления, остаток, потери, переполнения.

Ошибка канала равна току объекта (уставка 0). Всё считается только по
колонкам трассы, поэтому сводку можно восстановить из CSV.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import List

import numpy as np

from efc_core.app.handlers.trace import Trace
from efc_core.app.models.errors import InputDomainError

SETTLE_FRACTION = 0.01


@dataclass(frozen=True)
class ChannelSummary:
    channel: int
    peak: float
    settling_step: int
    residual: float


@dataclass(frozen=True)
class TraceSummary:
    steps: int
    frames_lost: int
    overflow_count: int
    channels: List[ChannelSummary]


def settling_step(error: np.ndarray, fraction: float = SETTLE_FRACTION) -> int:
    """Первый шаг, после которого |error| держится ниже fraction от пика."""
    magnitude = np.abs(np.asarray(error, dtype=np.float64))
    peak = float(magnitude.max(initial=0.0))
    if peak == 0.0:
        return 0
    above = np.flatnonzero(magnitude >= fraction * peak)
    return int(above[-1]) + 1


def summarize(trace: Trace) -> TraceSummary:
    if len(trace) == 0:
        raise InputDomainError("cannot summarize an empty trace")
    currents = trace.matrix("currents")
    channels = [
        ChannelSummary(
            channel=ch,
            peak=float(np.max(np.abs(currents[:, ch]))),
            settling_step=settling_step(currents[:, ch]),
            residual=float(abs(currents[-1, ch])),
        )
        for ch in range(currents.shape[1])
    ]
    return TraceSummary(
        steps=len(trace),
        frames_lost=trace[-1].frames_lost,
        overflow_count=int(np.count_nonzero(trace.column("ovf"))),
        channels=channels,
    )


def emit_summary(trace: Trace) -> str:
    s = summarize(trace)
    lines = [
        f"steps: {s.steps}",
        f"frames lost: {s.frames_lost}",
        f"overflow count: {s.overflow_count}",
        f"{'ch':>3} {'peak [A]':>14} {'settling step':>14} {'residual [A]':>14}",
    ]
    lines.extend(
        f"{c.channel:>3} {c.peak:>14.6e} {c.settling_step:>14d} {c.residual:>14.6e}" for c in s.channels
    )
    return "\n".join(lines) + "\n"


def summarize_csv(path: str | Path) -> str:
    return emit_summary(Trace.read_csv(path))


def max_divergence(a: Trace, b: Trace) -> float:
    """Наибольшее расхождение токов двух трасс одинаковой длины, А."""
    if len(a) != len(b):
        raise InputDomainError(f"traces differ in length: {len(a)} vs {len(b)}")
    return float(np.max(np.abs(a.matrix("currents") - b.matrix("currents")), initial=0.0))
