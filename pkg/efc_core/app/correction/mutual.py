"""
Матрица взаимной индукции 16 поясов Роговского и коррекция по ней.

Измеренная матрица симметрична и циркулянтна: диагональ, первые и вторые
соседи по кругу, остальное ноль. Поэтому хватает трёх параметров.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from efc_core.app.models.dto import CorrectionParams
from efc_core.app.models.errors import InputDomainError
from efc_core.app.models.vectors import ChannelVector

logger = logging.getLogger(__name__)

DEFAULT_DIAG = 620e-6
DEFAULT_OFF1 = -7e-6
DEFAULT_OFF2 = -1.67e-6
MIN_SIZE = 5


@dataclass(frozen=True)
class MutualMatrix:
    entries: np.ndarray
    diag: float
    off1: float
    off2: float

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def build_mutual_matrix(
        diag: float = DEFAULT_DIAG,
        off1: float = DEFAULT_OFF1,
        off2: float = DEFAULT_OFF2,
        n: int = 16,
) -> MutualMatrix:
    if n < MIN_SIZE:
        raise InputDomainError(f"mutual matrix needs n >= {MIN_SIZE}, got {n}")

    column = np.zeros(n)
    column[0] = diag
    column[1] = column[n - 1] = off1
    column[2] = column[n - 2] = off2

    # столбец симметричен по кругу -> циркулянт симметричен
    entries = scipy.linalg.circulant(column)
    entries.setflags(write=False)
    return MutualMatrix(entries=entries, diag=diag, off1=off1, off2=off2)


def correct(u_in: ChannelVector, matrix: MutualMatrix, params: CorrectionParams) -> ChannelVector:
    """U_out = v · unit_scale · M · (U_in ⊙ βR + α0); α0 прибавляется до матрицы."""
    if matrix.n != len(u_in.values):
        raise InputDomainError(f"matrix is {matrix.n}x{matrix.n}, input has {len(u_in.values)} channels")
    inner = u_in.values * params.beta_array + params.alpha_array
    out = (params.v * params.unit_scale) * (matrix.entries @ inner)
    return ChannelVector(out, u_in.unit_tag)
