"""
Модели конфигурации контура обратной связи.

Каждая секция плоского конфига (adc.*, dac.*, correction.*, pid.*, plant.*,
link.*, bench.*) описана отдельной pydantic-моделью. Инварианты проверяются
валидаторами, лишние ключи запрещены (extra=forbid).
"""
from __future__ import annotations

import math
from enum import Enum
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import AfterValidator, BaseModel, Field, ValidationError, field_validator, model_validator

from efc_core.app.models.vectors import N_CHANNELS

ADC_CODES = 1 << 15
DAC_CODES = 1 << 16


def _check_vector(value: VectorValue) -> VectorValue:
    values = value if isinstance(value, list) else [value]
    if isinstance(value, list) and len(value) != N_CHANNELS:
        raise ValueError(f"expected a scalar or {N_CHANNELS} values, got {len(value)}")
    if not all(math.isfinite(x) for x in values):
        raise ValueError("values must be finite")
    return value


# Скаляр (раздаётся на все каналы) или ровно 16 значений
VectorValue = Annotated[Union[float, List[float]], AfterValidator(_check_vector)]


def broadcast(value: VectorValue) -> np.ndarray:
    if isinstance(value, (list, tuple)):
        return np.array(value, dtype=np.float64)
    return np.full(N_CHANNELS, float(value))


class LoopMode(str, Enum):
    FLOAT = "float"
    FIXED = "fixed"
    BOTH = "both"


class AdcConfig(BaseModel):
    """Тракт сбора: двухкаскадный усилитель + 16-битный биполярный SAR АЦП."""

    full_scale: float = Field(10.0, gt=0)
    bits: Literal[16] = 16
    stage1_gain: float = Field(10.0, gt=0)
    stage2_gain: float = Field(2.0, gt=0)
    # ширина слова в прошивке; при < 16 младшие биты кода отбрасываются
    word_bits: int = Field(16, ge=12, le=16)
    # два 8-канальных АЦП на 16 поясов
    bank_size: int = Field(8, ge=1, le=N_CHANNELS)
    noise_std: float = Field(0.0, ge=0)

    @field_validator("bank_size")
    @classmethod
    def validate_bank_size(cls, v: int) -> int:
        if N_CHANNELS % v:
            raise ValueError(f"bank_size must divide {N_CHANNELS}")
        return v

    @property
    def lsb(self) -> float:
        return self.full_scale / ADC_CODES

    @property
    def total_gain(self) -> float:
        return self.stage1_gain * self.stage2_gain

    model_config = {"extra": "forbid", "frozen": True, "allow_inf_nan": False}


class DacConfig(BaseModel):
    bits: Literal[16] = 16
    out_min: float = -5.0
    out_max: float = 5.0
    # v: обратная величина коэффициента усиления усилителя мощности
    amp_gain_v: float = 0.1

    @field_validator("amp_gain_v")
    @classmethod
    def validate_amp_gain(cls, v: float) -> float:
        if v == 0:
            raise ValueError("amp_gain_v must be non-zero")
        return v

    @model_validator(mode="after")
    def validate_range(self) -> "DacConfig":
        if not self.out_min < self.out_max:
            raise ValueError("out_min must be below out_max")
        return self

    @property
    def lsb(self) -> float:
        return (self.out_max - self.out_min) / DAC_CODES

    model_config = {"extra": "forbid", "frozen": True, "allow_inf_nan": False}


class CorrectionParams(BaseModel):
    """Параметры формулы взаимоиндукционной коррекции: α0, βR, v и масштаб единиц."""

    alpha0: Tuple[float, ...]
    beta_r: Tuple[float, ...]
    v: float
    unit_scale: float = Field(..., gt=0)

    @field_validator("alpha0", "beta_r", mode="before")
    @classmethod
    def broadcast_scalar(cls, v: object) -> object:
        if isinstance(v, (int, float)):
            return (float(v),) * N_CHANNELS
        if isinstance(v, np.ndarray):
            return tuple(float(x) for x in v)
        return v

    @field_validator("alpha0", "beta_r")
    @classmethod
    def validate_length(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if len(v) != N_CHANNELS:
            raise ValueError(f"expected {N_CHANNELS} values, got {len(v)}")
        return v

    @field_validator("beta_r")
    @classmethod
    def validate_beta(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if any(x == 0 for x in v):
            raise ValueError("beta_r entries must be non-zero")
        return v

    @field_validator("v")
    @classmethod
    def validate_v(cls, v: float) -> float:
        if v == 0:
            raise ValueError("v must be non-zero")
        return v

    @property
    def alpha_array(self) -> np.ndarray:
        return np.array(self.alpha0, dtype=np.float64)

    @property
    def beta_array(self) -> np.ndarray:
        return np.array(self.beta_r, dtype=np.float64)

    model_config = {"extra": "forbid", "frozen": True, "allow_inf_nan": False}


class CorrectionSection(BaseModel):
    # измеренная матрица, Гн: диагональ и две полосы соседей
    diag: float = Field(620e-6, gt=0)
    off1: float = -7e-6
    off2: float = -1.67e-6
    alpha0: VectorValue = 0.0
    beta_r: VectorValue = 1.0
    # None -> dac.amp_gain_v
    v: Optional[float] = None
    # None -> 1 / diag
    unit_scale: Optional[float] = Field(None, gt=0)

    @field_validator("beta_r")
    @classmethod
    def validate_beta(cls, v: VectorValue) -> VectorValue:
        values = v if isinstance(v, list) else [v]
        if any(x == 0 for x in values):
            raise ValueError("beta_r entries must be non-zero")
        return v

    @field_validator("v")
    @classmethod
    def validate_v(cls, v: Optional[float]) -> Optional[float]:
        if v == 0:
            raise ValueError("v must be non-zero")
        return v

    def params(self, dac: DacConfig) -> CorrectionParams:
        return CorrectionParams(
            alpha0=broadcast(self.alpha0),
            beta_r=broadcast(self.beta_r),
            v=dac.amp_gain_v if self.v is None else self.v,
            unit_scale=1.0 / self.diag if self.unit_scale is None else self.unit_scale,
        )

    model_config = {"extra": "forbid", "frozen": True, "allow_inf_nan": False}


class PidGains(BaseModel):
    """
    Коэффициенты дискретного PID одного канала.

    ti = inf отключает интегральную составляющую (Δt/Ti -> 0).
    """

    kp: float = 1.5
    ti: float = Field(math.inf, gt=0)
    td: float = Field(0.0, ge=0)
    dt: float = Field(1e-5, gt=0)
    output_min: float = -5.0
    output_max: float = 5.0

    @field_validator("kp", "td", "dt", "output_min", "output_max")
    @classmethod
    def validate_finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("must be finite")
        return v

    @model_validator(mode="after")
    def validate_clamp(self) -> "PidGains":
        if not self.output_min < self.output_max:
            raise ValueError("output_min must be below output_max")
        return self

    model_config = {"extra": "forbid", "frozen": True}


class PidOverride(BaseModel):
    kp: Optional[float] = None
    ti: Optional[float] = Field(None, gt=0)
    td: Optional[float] = Field(None, ge=0)
    output_min: Optional[float] = None
    output_max: Optional[float] = None

    @field_validator("kp", "td", "output_min", "output_max")
    @classmethod
    def validate_finite(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not math.isfinite(v):
            raise ValueError("must be finite")
        return v

    model_config = {"extra": "forbid", "frozen": True}


class PidSection(BaseModel):
    kp: float = 1.5
    ti: float = Field(1e-3, gt=0)
    td: float = Field(0.0, ge=0)
    output_min: float = -5.0
    output_max: float = 5.0
    # pid.channels.<N>.<поле> перекрывает общий набор для канала N
    channels: Dict[int, PidOverride] = Field(default_factory=dict)

    @field_validator("kp", "td", "output_min", "output_max")
    @classmethod
    def validate_finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("must be finite")
        return v

    @field_validator("channels")
    @classmethod
    def validate_channels(cls, v: Dict[int, PidOverride]) -> Dict[int, PidOverride]:
        for ch in v:
            if not 0 <= ch < N_CHANNELS:
                raise ValueError(f"channel {ch} is outside 0..{N_CHANNELS - 1}")
        return v

    @model_validator(mode="after")
    def validate_clamps(self) -> "PidSection":
        for ch in range(N_CHANNELS):
            lo, hi = self._merged(ch)["output_min"], self._merged(ch)["output_max"]
            if not lo < hi:
                raise ValueError(f"channel {ch}: output_min must be below output_max")
        return self

    def _merged(self, channel: int) -> dict:
        base = {
            "kp": self.kp,
            "ti": self.ti,
            "td": self.td,
            "output_min": self.output_min,
            "output_max": self.output_max,
        }
        override = self.channels.get(channel)
        if override is not None:
            base.update(override.model_dump(exclude_none=True))
        return base

    def gains_for(self, channel: int, dt: float) -> PidGains:
        return PidGains(dt=dt, **self._merged(channel))

    model_config = {"extra": "forbid", "frozen": True}


class LinkModel(BaseModel):
    """RS-485 между платами: битрейт, фиксированная задержка, вероятность потери кадра."""

    bitrate: float = Field(40e6, gt=0)
    fixed_latency: float = Field(0.0, ge=0)
    drop_seed: Optional[int] = Field(None, ge=0)
    drop_prob: float = Field(0.0, ge=0, lt=1)

    model_config = {"extra": "forbid", "frozen": True, "allow_inf_nan": False}


class DisturbanceKind(str, Enum):
    NONE = "none"
    STEP = "step"
    RAMP = "ramp"
    SINUSOID = "sinusoid"
    FILE = "file"


class DisturbanceConfig(BaseModel):
    kind: DisturbanceKind = DisturbanceKind.STEP
    amplitude: VectorValue = 1.0
    onset: float = Field(0.0, ge=0)
    ramp_time: float = Field(1e-3, gt=0)
    frequency: float = Field(1e3, ge=0)
    phase: float = 0.0
    random_phase: bool = False
    path: Optional[str] = None

    @model_validator(mode="after")
    def validate_path(self) -> "DisturbanceConfig":
        if self.kind == DisturbanceKind.FILE and not self.path:
            raise ValueError("path is required when kind='file'")
        return self

    model_config = {"extra": "forbid", "frozen": True, "allow_inf_nan": False}


class PlantSection(BaseModel):
    # R выбрано так, что L/R = 100·dt при dt = 10 мкс
    resistance: VectorValue = 0.62
    sense_gain: float = Field(0.1, gt=0)
    disturbance: DisturbanceConfig = Field(default_factory=DisturbanceConfig)

    @field_validator("resistance")
    @classmethod
    def validate_resistance(cls, v: VectorValue) -> VectorValue:
        values = v if isinstance(v, list) else [v]
        if any(x <= 0 for x in values):
            raise ValueError("resistance must be positive")
        return v

    model_config = {"extra": "forbid", "frozen": True, "allow_inf_nan": False}


class BenchConfig(BaseModel):
    # None -> EFC_BENCH_ITERATIONS
    iterations: Optional[int] = Field(None, ge=1)
    # None -> dt
    budget: Optional[float] = Field(None, gt=0)

    model_config = {"extra": "forbid", "frozen": True, "allow_inf_nan": False}


class LoopConfig(BaseModel):
    dt: float = Field(1e-5, gt=0)
    n_steps: int = Field(2000, ge=1)
    mode: LoopMode = LoopMode.FIXED
    seed: int = Field(0, ge=0)

    adc: AdcConfig = Field(default_factory=AdcConfig)
    dac: DacConfig = Field(default_factory=DacConfig)
    correction: CorrectionSection = Field(default_factory=CorrectionSection)
    pid: PidSection = Field(default_factory=PidSection)
    plant: PlantSection = Field(default_factory=PlantSection)
    link: LinkModel = Field(default_factory=LinkModel)
    bench: BenchConfig = Field(default_factory=BenchConfig)

    @model_validator(mode="after")
    def validate_derived(self) -> "LoopConfig":
        # производные модели (коррекция, PID по каналам) проверяются здесь же
        try:
            self.correction_params()
            self.gains()
        except ValidationError as exc:
            err = exc.errors()[0]
            field = ".".join(str(part) for part in err["loc"])
            raise ValueError(f"{exc.title}.{field}: {err['msg']}") from None
        return self

    def gains(self) -> List[PidGains]:
        return [self.pid.gains_for(ch, self.dt) for ch in range(N_CHANNELS)]

    def correction_params(self) -> CorrectionParams:
        return self.correction.params(self.dac)

    @property
    def latency_budget(self) -> float:
        return self.dt if self.bench.budget is None else self.bench.budget

    model_config = {"extra": "forbid", "frozen": True, "allow_inf_nan": False}
