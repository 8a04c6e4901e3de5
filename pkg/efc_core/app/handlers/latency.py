"""
Замер времени цифровой части конвейера на одну выборку.

Меряется только то, что в железе делают ПЛИС и плата катушек:
АЦП-квантование -> коррекция -> PID -> кодирование кадра -> декодирование ->
отображение в коды ЦАП. Объект и аналоговые модели в замер не входят.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from efc_core.app.config.config import get_settings
from efc_core.app.handlers.loop import SampleBoard
from efc_core.app.link.frame import decode_frame, encode_frame
from efc_core.app.models.dto import LoopConfig, LoopMode
from efc_core.app.models.errors import InputDomainError
from efc_core.app.models.vectors import N_CHANNELS
from efc_core.app.signal.chain import adc_quantize_array, words_to_dac_codes

logger = logging.getLogger(__name__)

WARMUP_ITERATIONS = 1000


@dataclass(frozen=True)
class LatencyReport:
    mode: str
    iterations: int
    mean: float
    p99: float
    std: float
    minimum: float
    maximum: float
    budget: float

    @property
    def within_budget(self) -> bool:
        return self.p99 <= self.budget

    def to_text(self) -> str:
        verdict = "within" if self.within_budget else "OVER"
        return (
            f"mode={self.mode} iterations={self.iterations}\n"
            f"mean={self.mean * 1e6:.3f} us  p99={self.p99 * 1e6:.3f} us  std={self.std * 1e6:.3f} us\n"
            f"min={self.minimum * 1e6:.3f} us  max={self.maximum * 1e6:.3f} us\n"
            f"budget={self.budget * 1e6:.3f} us ({verdict} budget)"
        )


def measure_pipeline_latency(config: LoopConfig, iterations: Optional[int] = None) -> LatencyReport:
    if iterations is None:
        iterations = config.bench.iterations or get_settings().bench_iterations
    if iterations < 1:
        raise InputDomainError(f"iterations must be positive, got {iterations}")
    mode = LoopMode.FLOAT if config.mode == LoopMode.FLOAT else LoopMode.FIXED
    board = SampleBoard(config, mode, np.random.default_rng(config.seed))

    # входы генерируются до замера
    rng = np.random.default_rng(config.seed)
    inputs = rng.uniform(-0.5, 0.5, size=(WARMUP_ITERATIONS + iterations, N_CHANNELS)) * config.adc.full_scale
    samples = np.empty(iterations, dtype=np.int64)

    for i, volts in enumerate(inputs):
        start = time.perf_counter_ns()
        codes = adc_quantize_array(volts, config.adc)
        _, _, words, _ = board.compute(codes)
        frame = decode_frame(encode_frame(words, i & 0xFF))
        words_to_dac_codes(frame.words())
        elapsed = time.perf_counter_ns() - start
        if i >= WARMUP_ITERATIONS:
            samples[i - WARMUP_ITERATIONS] = elapsed

    seconds = samples * 1e-9
    report = LatencyReport(
        mode=mode.value,
        iterations=iterations,
        mean=float(np.mean(seconds)),
        p99=float(np.percentile(seconds, 99)),
        std=float(np.std(seconds)),
        minimum=float(np.min(seconds)),
        maximum=float(np.max(seconds)),
        budget=config.latency_budget,
    )
    logger.info(
        "[BENCH] %d iterations: mean=%.3g s p99=%.3g s budget=%.3g s",
        iterations,
        report.mean,
        report.p99,
        report.budget,
    )
    return report
