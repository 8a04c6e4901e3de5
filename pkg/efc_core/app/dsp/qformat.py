"""
Целочисленная арифметика в Q-формате для тракта «как в ПЛИС».

Все функции работают с numpy int64: произведения 16-битных данных на
32-битные коэффициенты и суммы из нескольких таких произведений в int64
помещаются без переполнения.
"""
from __future__ import annotations

import math
from typing import Tuple

import numpy as np

from efc_core.app.models.errors import ConfigurationError


def int_range(bits: int) -> Tuple[int, int]:
    return -(1 << (bits - 1)), (1 << (bits - 1)) - 1


def to_fixed(value: float, frac_bits: int, total_bits: int, *, key: str) -> int:
    """
    Квантует коэффициент в знаковый Q(total-frac).frac с округлением к чётному.

    Непредставимое значение вызывает ConfigurationError.
    """
    if not math.isfinite(value):
        raise ConfigurationError(f"{key}={value!r} is not finite", key=key)
    raw = round(value * (1 << frac_bits))
    lo, hi = int_range(total_bits)
    if not lo <= raw <= hi:
        raise ConfigurationError(
            f"{key}={value!r} is not representable in Q{total_bits - frac_bits}.{frac_bits}",
            key=key,
        )
    return int(raw)


def from_fixed(raw: int, frac_bits: int) -> float:
    return raw / (1 << frac_bits)


def round_shift(acc: np.ndarray, shift: int) -> np.ndarray:
    """Арифметический сдвиг вправо с округлением half-to-even."""
    acc = np.asarray(acc, dtype=np.int64)
    q = acc >> shift
    r = acc & ((1 << shift) - 1)
    half = 1 << (shift - 1)
    up = (r > half) | ((r == half) & ((q & 1) == 1))
    return q + up.astype(np.int64)


def saturate(values: np.ndarray, bits: int) -> Tuple[np.ndarray, np.ndarray]:
    """Насыщение до знакового bits-битного слова; вторым элементом идёт маска срабатываний."""
    lo, hi = int_range(bits)
    values = np.asarray(values, dtype=np.int64)
    mask = (values < lo) | (values > hi)
    return np.clip(values, lo, hi), mask
