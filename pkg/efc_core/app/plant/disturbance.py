"""
Источники поля ошибки: напряжение, наводимое в каждом из 16 каналов.

Все генераторы являются детерминированными функциями времени (и seed для
случайных фаз синусоиды).
"""
from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Protocol

import numpy as np

from efc_core.app.models.dto import DisturbanceConfig, DisturbanceKind, broadcast
from efc_core.app.models.errors import ConfigurationError
from efc_core.app.models.vectors import N_CHANNELS

logger = logging.getLogger(__name__)

CSV_HEADER = ["t"] + [f"ch{i}" for i in range(N_CHANNELS)]


class Disturbance(Protocol):
    def __call__(self, t: float) -> np.ndarray: ...


class NoDisturbance:
    def __call__(self, t: float) -> np.ndarray:
        return np.zeros(N_CHANNELS)


class StepDisturbance:
    __slots__ = ("amplitude", "onset")

    def __init__(self, amplitude: np.ndarray, onset: float = 0.0) -> None:
        self.amplitude = np.asarray(amplitude, dtype=np.float64)
        self.onset = onset

    def __call__(self, t: float) -> np.ndarray:
        return self.amplitude.copy() if t >= self.onset else np.zeros(N_CHANNELS)


class RampDisturbance:
    """Линейный рост от onset до amplitude за ramp_time, дальше полка."""

    __slots__ = ("amplitude", "onset", "ramp_time")

    def __init__(self, amplitude: np.ndarray, onset: float, ramp_time: float) -> None:
        self.amplitude = np.asarray(amplitude, dtype=np.float64)
        self.onset = onset
        self.ramp_time = ramp_time

    def __call__(self, t: float) -> np.ndarray:
        frac = min(max((t - self.onset) / self.ramp_time, 0.0), 1.0)
        return self.amplitude * frac


class SinusoidDisturbance:
    __slots__ = ("amplitude", "frequency", "phase", "onset")

    def __init__(self, amplitude: np.ndarray, frequency: float, phase: np.ndarray, onset: float = 0.0) -> None:
        self.amplitude = np.asarray(amplitude, dtype=np.float64)
        self.frequency = frequency
        self.phase = np.broadcast_to(np.asarray(phase, dtype=np.float64), (N_CHANNELS,))
        self.onset = onset

    def __call__(self, t: float) -> np.ndarray:
        if t < self.onset:
            return np.zeros(N_CHANNELS)
        return self.amplitude * np.sin(2.0 * np.pi * self.frequency * (t - self.onset) + self.phase)


class FileDisturbance:
    """Табличный источник: между строками удержание, до первой строки ноль."""

    __slots__ = ("times", "values")

    def __init__(self, times: np.ndarray, values: np.ndarray) -> None:
        self.times = times
        self.values = values

    def __call__(self, t: float) -> np.ndarray:
        idx = int(np.searchsorted(self.times, t, side="right")) - 1
        if idx < 0:
            return np.zeros(N_CHANNELS)
        return self.values[idx].copy()


def load_disturbance_csv(path: str | Path) -> FileDisturbance:
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
    except OSError as exc:
        raise ConfigurationError(f"cannot read disturbance file {path}: {exc}", key="plant.disturbance.path") from exc

    if not rows or [h.strip() for h in rows[0]] != CSV_HEADER:
        raise ConfigurationError(
            f"{path}: header must be {','.join(CSV_HEADER)}", key="plant.disturbance.path"
        )
    try:
        data = np.array([[float(x) for x in row] for row in rows[1:] if row], dtype=np.float64)
    except ValueError as exc:
        raise ConfigurationError(f"{path}: {exc}", key="plant.disturbance.path") from exc

    if data.size == 0:
        data = np.empty((0, N_CHANNELS + 1))
    if data.shape[1] != N_CHANNELS + 1 or not np.all(np.isfinite(data)):
        raise ConfigurationError(f"{path}: every row needs {N_CHANNELS + 1} finite values", key="plant.disturbance.path")
    if np.any(np.diff(data[:, 0]) < 0):
        raise ConfigurationError(f"{path}: time column must be nondecreasing", key="plant.disturbance.path")

    logger.info("[PLANT] Loaded %d disturbance rows from %s", len(data), path)
    return FileDisturbance(times=data[:, 0].copy(), values=data[:, 1:].copy())


def build_disturbance(cfg: DisturbanceConfig, rng: np.random.Generator | None = None) -> Disturbance:
    amplitude = broadcast(cfg.amplitude)
    if cfg.kind == DisturbanceKind.NONE:
        return NoDisturbance()
    if cfg.kind == DisturbanceKind.STEP:
        return StepDisturbance(amplitude, cfg.onset)
    if cfg.kind == DisturbanceKind.RAMP:
        return RampDisturbance(amplitude, cfg.onset, cfg.ramp_time)
    if cfg.kind == DisturbanceKind.SINUSOID:
        if cfg.random_phase:
            rng = rng if rng is not None else np.random.default_rng(0)
            phase = rng.uniform(0.0, 2.0 * np.pi, N_CHANNELS)
        else:
            phase = np.full(N_CHANNELS, cfg.phase)
        return SinusoidDisturbance(amplitude, cfg.frequency, phase, cfg.onset)
    return load_disturbance_csv(cfg.path)
