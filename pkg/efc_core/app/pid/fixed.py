"""
PID в целочисленном тракте: три множителя с коэффициентами Q16.16.

Вход: код ошибки в единицах АЦП. Выход: 16-битное слово ЦАП.
Масштаб in_lsb/out_lsb вшит в коэффициенты: аккумулятор хранит выход
в кодах ЦАП с 16 дробными битами, состояние держит широкий аккумулятор.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from efc_core.app.dsp.qformat import int_range, round_shift, to_fixed
from efc_core.app.models.dto import PidGains
from efc_core.app.models.errors import ConfigurationError, InputDomainError
from efc_core.app.pid.controller import PidCoefficients, PidState

logger = logging.getLogger(__name__)

GAIN_FRAC_BITS = 16
GAIN_BITS = 32
WORD_BITS = 16

Code = Union[int, np.ndarray]


def _i64(x: object) -> np.ndarray:
    return np.asarray(x, dtype=np.int64)


@dataclass(frozen=True)
class FixedPidGains:
    c0: Code
    c1: Code
    c2: Code
    out_min_code: Code
    out_max_code: Code

    @property
    def acc_min(self) -> Code:
        return _i64(self.out_min_code) << GAIN_FRAC_BITS

    @property
    def acc_max(self) -> Code:
        return _i64(self.out_max_code) << GAIN_FRAC_BITS

    @classmethod
    def stack(cls, gains: Sequence["FixedPidGains"]) -> "FixedPidGains":
        return cls(*(np.array([getattr(g, f) for g in gains], dtype=np.int64) for f in
                     ("c0", "c1", "c2", "out_min_code", "out_max_code")))


def quantize_gains(g: PidGains, in_lsb: float, out_lsb: float, *, channel: int | None = None) -> FixedPidGains:
    """Переводит Kp/Ti/Td в три коэффициента Q16.16 в единицах «код выхода на код входа»."""
    c = PidCoefficients.from_gains(g)
    scale = in_lsb / out_lsb
    prefix = "pid" if channel is None else f"pid.channels.{channel}"

    quantized = [
        to_fixed(c.kp * a * scale, GAIN_FRAC_BITS, GAIN_BITS, key=f"{prefix}.c{i}")
        for i, a in enumerate((c.a0, c.a1, c.a2))
    ]

    lo, hi = int_range(WORD_BITS)
    out_min_code = max(math.ceil(g.output_min / out_lsb), lo)
    out_max_code = min(math.floor(g.output_max / out_lsb), hi)
    if out_min_code > out_max_code:
        raise ConfigurationError(
            f"{prefix}.output_min: output clamp is narrower than one DAC code", key=f"{prefix}.output_min"
        )

    logger.debug("[PID] %s quantized to c0=%d c1=%d c2=%d", prefix, *quantized)
    return FixedPidGains(*quantized, out_min_code=out_min_code, out_max_code=out_max_code)


def pid_step_fixed(state: PidState, e_k: Code, g_q: FixedPidGains) -> Tuple[Code, PidState]:
    e = np.asarray(e_k, dtype=np.int64)
    lo, hi = int_range(WORD_BITS)
    if np.any(e < lo) or np.any(e > hi):
        raise InputDomainError(f"PID error code outside the signed 16-bit range: {e_k!r}")

    acc = (
        _i64(state.u_k1)
        + _i64(g_q.c0) * e
        + _i64(g_q.c1) * _i64(state.e_k1)
        + _i64(g_q.c2) * _i64(state.e_k2)
    )
    acc = np.clip(acc, g_q.acc_min, g_q.acc_max)
    out = round_shift(acc, GAIN_FRAC_BITS)

    if np.ndim(out) == 0:
        return int(out), PidState(int(e), int(state.e_k1), int(acc), state.step_count + 1)
    return out, PidState(e, _i64(state.e_k1), acc, state.step_count + 1)
