"""
Коррекция в целочисленном тракте.

Каждый выходной канал есть сумма пяти произведений (полосы -2..2) 16-битных
кодов АЦП на коэффициенты Q2.30. βR входного пути и общий множитель
v·unit_scale вшиты в коэффициенты при квантовании, α0 в постоянное
смещение аккумулятора. Нулевые элементы матрицы не умножаются.
Аккумулятор 48 бит, одно округление (half-to-even) в конце.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from efc_core.app.correction.mutual import MutualMatrix
from efc_core.app.dsp.qformat import int_range, round_shift, saturate, to_fixed
from efc_core.app.models.dto import CorrectionParams
from efc_core.app.models.errors import InputDomainError

logger = logging.getLogger(__name__)

BAND_OFFSETS = (-2, -1, 0, 1, 2)
COEF_FRAC_BITS = 30
COEF_BITS = 32
ACC_BITS = 48
DATA_BITS = 16


@dataclass(frozen=True)
class FixedCorrection:
    """Квантованная матрица вместе с квантованными α0/βR/v."""

    taps: np.ndarray  # (n, 5) int64, Q2.30
    index: np.ndarray  # (n, 5) номера входных каналов для каждой полосы
    bias: np.ndarray  # (n,) int64, вклад α0 в единицах выходного кода << 30

    @property
    def n(self) -> int:
        return self.taps.shape[0]


@dataclass(frozen=True)
class FixedCorrectionResult:
    codes: np.ndarray
    # sticky: хотя бы один канал насытился в аккумуляторе или на выходе
    overflow: bool
    overflow_mask: np.ndarray


def quantize_correction(matrix: MutualMatrix, params: CorrectionParams, lsb: float) -> FixedCorrection:
    n = matrix.n
    if len(params.beta_r) != n:
        raise InputDomainError(f"params have {len(params.beta_r)} channels, matrix has {n}")

    entries = matrix.entries
    band_mask = np.zeros((n, n), dtype=bool)
    index = np.empty((n, len(BAND_OFFSETS)), dtype=np.int64)
    for i in range(n):
        for b, off in enumerate(BAND_OFFSETS):
            index[i, b] = (i + off) % n
            band_mask[i, index[i, b]] = True
    if np.any(entries[~band_mask] != 0):
        raise InputDomainError("fixed-point correction supports only the 5-band circulant matrix")

    gain = params.v * params.unit_scale
    beta = params.beta_array
    taps = np.empty_like(index)
    for i in range(n):
        for b in range(len(BAND_OFFSETS)):
            j = index[i, b]
            taps[i, b] = to_fixed(
                gain * entries[i, j] * beta[j],
                COEF_FRAC_BITS,
                COEF_BITS,
                key=f"correction.tap[{i}][{j}]",
            )

    # α0 в кодах АЦП на выходе, с 30 дробными битами как у аккумулятора
    bias_codes = gain * (entries @ params.alpha_array) / lsb
    bias = np.array(
        [to_fixed(x, COEF_FRAC_BITS, ACC_BITS, key="correction.alpha0") for x in bias_codes],
        dtype=np.int64,
    )

    logger.debug(
        "[CORRECTION] Quantized taps: diag=%d off1=%d off2=%d (Q2.30)",
        taps[0, 2],
        taps[0, 3],
        taps[0, 4],
    )
    return FixedCorrection(taps=taps, index=index, bias=bias)


def correct_fixed(u_in: np.ndarray, m_q: FixedCorrection) -> FixedCorrectionResult:
    codes = np.asarray(u_in, dtype=np.int64)
    if codes.shape != (m_q.n,):
        raise InputDomainError(f"expected {m_q.n} codes, got shape {codes.shape}")
    lo, hi = int_range(DATA_BITS)
    if np.any(codes < lo) or np.any(codes > hi):
        raise InputDomainError("input code outside the signed 16-bit range")

    acc = (m_q.taps * codes[m_q.index]).sum(axis=1) + m_q.bias
    acc, acc_ovf = saturate(acc, ACC_BITS)
    out, out_ovf = saturate(round_shift(acc, COEF_FRAC_BITS), DATA_BITS)
    mask = acc_ovf | out_ovf
    return FixedCorrectionResult(codes=out, overflow=bool(mask.any()), overflow_mask=mask)
