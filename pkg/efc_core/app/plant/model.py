"""
Синтетический объект управления: 16 контуров вихревых токов медной оболочки.

L·di/dt + R·i = u + d(t), где L та же матрица взаимной индукции, что и в
коррекции. Интегрирование неявным методом Эйлера:

    (L/Δt + R)·i_{k+1} = L/Δt·i_k + u_{k+1} + d(t_{k+1})

Матрица системы симметрична и положительно определена, поэтому
разложение Холецкого считается один раз на весь прогон.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from efc_core.app.correction.mutual import MutualMatrix, build_mutual_matrix
from efc_core.app.models.dto import LoopConfig, broadcast
from efc_core.app.models.errors import ConfigurationError, InputDomainError, InternalError
from efc_core.app.models.vectors import N_CHANNELS, ChannelVector, Unit
from efc_core.app.plant.disturbance import Disturbance, NoDisturbance, build_disturbance

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlantState:
    currents: np.ndarray
    time: float = 0.0

    @classmethod
    def zeros(cls, n: int = N_CHANNELS) -> "PlantState":
        return cls(np.zeros(n), 0.0)


@dataclass(frozen=True)
class PlantParams:
    resistance: np.ndarray
    inductance: MutualMatrix
    sense_gain: float = 0.1
    disturbance: Disturbance = NoDisturbance()

    def __post_init__(self) -> None:
        resistance = np.broadcast_to(np.asarray(self.resistance, dtype=np.float64), (self.inductance.n,))
        if np.any(resistance <= 0) or not np.all(np.isfinite(resistance)):
            raise ConfigurationError("plant resistance must be positive and finite", key="plant.resistance")
        object.__setattr__(self, "resistance", resistance)


def build_plant_params(config: LoopConfig, rng: np.random.Generator | None = None) -> PlantParams:
    section = config.plant
    return PlantParams(
        resistance=broadcast(section.resistance),
        inductance=build_mutual_matrix(config.correction.diag, config.correction.off1, config.correction.off2),
        sense_gain=section.sense_gain,
        disturbance=build_disturbance(section.disturbance, rng),
    )


class RLPlant:
    """Шаг объекта с заранее разложенной матрицей системы."""

    __slots__ = ("params", "dt", "_l_over_dt", "_factor")

    def __init__(self, params: PlantParams, dt: float) -> None:
        if not dt > 0:
            raise InputDomainError(f"plant step requires dt > 0, got {dt!r}")
        self.params = params
        self.dt = dt
        self._l_over_dt = params.inductance.entries / dt
        try:
            self._factor = scipy.linalg.cho_factor(self._l_over_dt + np.diag(params.resistance))
        except np.linalg.LinAlgError as exc:
            raise ConfigurationError(f"plant system matrix is not positive definite: {exc}", key="correction") from exc

    def step(self, state: PlantState, applied: ChannelVector | np.ndarray) -> PlantState:
        u = applied.values if isinstance(applied, ChannelVector) else np.asarray(applied, dtype=np.float64)
        t_next = state.time + self.dt
        rhs = self._l_over_dt @ state.currents + u + self.params.disturbance(t_next)
        currents = scipy.linalg.cho_solve(self._factor, rhs, check_finite=False)
        if not np.all(np.isfinite(currents)):
            raise InternalError(f"plant solve produced non-finite currents at t={t_next!r}")
        return PlantState(currents, t_next)


def plant_step(state: PlantState, applied: ChannelVector | np.ndarray, params: PlantParams, dt: float) -> PlantState:
    return RLPlant(params, dt).step(state, applied)


def sense(state: PlantState, params: PlantParams) -> ChannelVector:
    return ChannelVector(params.sense_gain * state.currents, Unit.VOLTS)
