from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterator

import numpy as np

from efc_core.app.models.errors import InputDomainError

# 16 поясов Роговского вокруг вертикального зазора
N_CHANNELS = 16


class Unit(str, Enum):
    VOLTS = "volts"
    AMPS = "amps"
    DIMENSIONLESS = "dimensionless"


@dataclass(frozen=True, slots=True)
class ChannelVector:
    """
    Упорядоченный набор из 16 значений, одна выборка по всем каналам.

    Массив копируется и замораживается.
    """

    values: np.ndarray
    unit_tag: Unit = Unit.VOLTS

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=np.float64)
        if arr.shape != (N_CHANNELS,):
            raise InputDomainError(f"ChannelVector needs {N_CHANNELS} values, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InputDomainError("ChannelVector values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "unit_tag", Unit(self.unit_tag))

    @classmethod
    def zeros(cls, unit_tag: Unit = Unit.VOLTS) -> "ChannelVector":
        return cls(np.zeros(N_CHANNELS), unit_tag)

    def __len__(self) -> int:
        return N_CHANNELS

    def __iter__(self) -> Iterator[float]:
        return iter(self.values.tolist())

    def __getitem__(self, idx: int) -> float:
        return float(self.values[idx])
