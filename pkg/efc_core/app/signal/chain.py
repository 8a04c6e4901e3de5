"""
Аналоговый и смешанный тракт: пояс Роговского -> двухкаскадный усилитель ->
16-битный биполярный АЦП; 16-битный ЦАП -> усилитель мощности.

Все функции чистые. Скалярные варианты соответствуют операциям модели,
векторные (*_array) работают сразу по 16 каналам в контуре.
"""
from __future__ import annotations

import math

import numpy as np

from efc_core.app.dsp.qformat import int_range
from efc_core.app.models.dto import AdcConfig, DacConfig
from efc_core.app.models.errors import ConfigurationError, InputDomainError
from efc_core.app.models.vectors import ChannelVector

ADC_CODE_MIN, ADC_CODE_MAX = int_range(16)
DAC_CODE_MIN, DAC_CODE_MAX = 0, (1 << 16) - 1
# ЦАП в смещённом двоичном коде: слово 0 <-> код 32768 <-> 0 В
DAC_MIDSCALE = 1 << 15


def amplify(raw: ChannelVector, cfg: AdcConfig) -> ChannelVector:
    return ChannelVector(raw.values * cfg.total_gain, raw.unit_tag)


def add_noise(vec: ChannelVector, std: float, rng: np.random.Generator) -> ChannelVector:
    if std <= 0:
        return vec
    return ChannelVector(vec.values + rng.normal(0.0, std, size=vec.values.shape), vec.unit_tag)


def adc_quantize_array(volts: np.ndarray, cfg: AdcConfig) -> np.ndarray:
    # mid-tread, округление half-away-from-zero, насыщение на рельсах
    scaled = np.asarray(volts, dtype=np.float64) / cfg.lsb
    if np.any(np.isnan(scaled)):
        raise InputDomainError("ADC input is NaN")
    codes = np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)
    return np.clip(codes, ADC_CODE_MIN, ADC_CODE_MAX).astype(np.int64)


def adc_quantize(v: float, cfg: AdcConfig) -> int:
    return int(adc_quantize_array(np.asarray([v]), cfg)[0])


def truncate_word(codes: np.ndarray, word_bits: int) -> np.ndarray:
    """Оставляет старшие word_bits бит кода (слово прошивки уже 16 бит)."""
    drop = 16 - word_bits
    if drop <= 0:
        return codes
    return (np.asarray(codes, dtype=np.int64) >> drop) << drop


def _check_adc_codes(codes: np.ndarray) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.int64)
    if np.any(codes < ADC_CODE_MIN) or np.any(codes > ADC_CODE_MAX):
        raise InputDomainError("ADC code outside [-32768, 32767]")
    return codes


def adc_dequantize_array(codes: np.ndarray, cfg: AdcConfig) -> np.ndarray:
    return _check_adc_codes(codes) * cfg.lsb


def adc_dequantize(code: int, cfg: AdcConfig) -> float:
    return float(adc_dequantize_array(np.asarray([code]), cfg)[0])


def dac_codes_to_voltages(codes: np.ndarray, cfg: DacConfig) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.int64)
    if np.any(codes < DAC_CODE_MIN) or np.any(codes > DAC_CODE_MAX):
        raise InputDomainError("DAC code outside [0, 65535]")
    return cfg.out_min + codes * ((cfg.out_max - cfg.out_min) / (1 << 16))


def dac_code_to_voltage(code: int, cfg: DacConfig) -> float:
    return float(dac_codes_to_voltages(np.asarray([code]), cfg)[0])


def voltages_to_words(volts: np.ndarray, cfg: DacConfig) -> np.ndarray:
    """Выход регулятора (В) -> знаковое слово кадра с шагом ЦАП."""
    words = np.rint(np.asarray(volts, dtype=np.float64) / cfg.lsb)
    return np.clip(words, ADC_CODE_MIN, ADC_CODE_MAX).astype(np.int64)


def words_to_dac_codes(words: np.ndarray) -> np.ndarray:
    return np.asarray(words, dtype=np.int64) + DAC_MIDSCALE


def power_amp(v: float, cfg: DacConfig) -> float:
    if cfg.amp_gain_v == 0:
        raise ConfigurationError("amp_gain_v must be non-zero", key="dac.amp_gain_v")
    if not math.isfinite(v):
        raise InputDomainError("power amplifier input must be finite")
    return v / cfg.amp_gain_v


def power_amp_vector(vec: ChannelVector, cfg: DacConfig) -> ChannelVector:
    if cfg.amp_gain_v == 0:
        raise ConfigurationError("amp_gain_v must be non-zero", key="dac.amp_gain_v")
    return ChannelVector(vec.values / cfg.amp_gain_v, vec.unit_tag)
