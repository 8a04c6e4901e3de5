"""
Дискретный PID в инкрементной (скоростной) форме.

u_k = u_{k-1} + Kp·[(1 + Δt/Ti + Td/Δt)·e_k + (−1 − 2Td/Δt)·e_{k-1} + (Td/Δt)·e_{k-2}]

Функции работают и со скалярами (один канал), и с numpy-векторами
(банк из 16 независимых регуляторов): арифметика поэлементная, поэтому
банк даёт ровно те же числа, что 16 скалярных вызовов.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Sequence, Tuple, Union

import numpy as np

from efc_core.app.models.dto import PidGains
from efc_core.app.models.errors import InputDomainError

logger = logging.getLogger(__name__)

Number = Union[float, int, np.ndarray]


@dataclass(frozen=True)
class PidState:
    e_k1: Number = 0.0
    e_k2: Number = 0.0
    # в целочисленном тракте: широкий аккумулятор Q16.16 в кодах выхода
    u_k1: Number = 0.0
    step_count: int = 0

    @classmethod
    def zeros(cls, n: int | None = None, *, dtype: type = np.float64) -> "PidState":
        if n is None:
            zero = dtype(0)
            return cls(zero, zero, zero, 0)
        return cls(np.zeros(n, dtype), np.zeros(n, dtype), np.zeros(n, dtype), 0)


@dataclass(frozen=True)
class PidCoefficients:
    """Коэффициенты разностного уравнения при e_k, e_{k-1}, e_{k-2} (без Kp)."""

    kp: Number
    a0: Number
    a1: Number
    a2: Number
    output_min: Number
    output_max: Number

    @classmethod
    def from_gains(cls, g: PidGains) -> "PidCoefficients":
        ratio_d = g.td / g.dt
        return cls(
            kp=g.kp,
            a0=1.0 + g.dt / g.ti + ratio_d,
            a1=-1.0 - 2.0 * ratio_d,
            a2=ratio_d,
            output_min=g.output_min,
            output_max=g.output_max,
        )

    @classmethod
    def stack(cls, gains: Sequence[PidGains]) -> "PidCoefficients":
        parts = [cls.from_gains(g) for g in gains]
        return cls(*(np.array([getattr(p, f) for p in parts]) for f in
                     ("kp", "a0", "a1", "a2", "output_min", "output_max")))


def pid_step(
        state: PidState,
        e_k: Number,
        g: Union[PidGains, PidCoefficients],
) -> Tuple[Number, PidState]:
    if not np.all(np.isfinite(e_k)):
        raise InputDomainError(f"PID error input must be finite, got {e_k!r}")
    c = PidCoefficients.from_gains(g) if isinstance(g, PidGains) else g

    u_raw = state.u_k1 + c.kp * (c.a0 * e_k + c.a1 * state.e_k1 + c.a2 * state.e_k2)
    # anti-windup: в историю попадает уже ограниченный выход
    u_k = np.clip(u_raw, c.output_min, c.output_max)
    if np.ndim(u_k) == 0:
        u_k = float(u_k)
    return u_k, PidState(e_k, state.e_k1, u_k, state.step_count + 1)


def pid_reset(state: PidState) -> PidState:
    return replace(
        state,
        e_k1=state.e_k1 * 0,
        e_k2=state.e_k2 * 0,
        u_k1=state.u_k1 * 0,
        step_count=0,
    )
