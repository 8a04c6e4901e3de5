"""
Замкнутый контур: объект -> пояса -> усилитель -> АЦП -> коррекция -> PID ->
кадр -> линия -> кадр -> ЦАП -> усилитель мощности -> объект.

Две платы моделируются отдельными объектами. Плата сбора (SampleBoard)
превращает выборку в кадр, плата катушек (CoilBoard) принимает кадры и
держит выход ЦАП. Задержка контура задаётся явно: управление, посчитанное
по измерению шага k, попадает на катушки на шаге k + ceil(задержка линии / dt) + 1.
"""
from __future__ import annotations

import asyncio
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from efc_core.app.correction.fixed import correct_fixed, quantize_correction
from efc_core.app.correction.mutual import build_mutual_matrix, correct
from efc_core.app.dsp.qformat import int_range
from efc_core.app.handlers.trace import Trace, TraceRecord
from efc_core.app.link.frame import FrameDecoder, encode_frame
from efc_core.app.link.transport import Delivery, LinkChannel, serialization_delay
from efc_core.app.models.dto import DisturbanceKind, LoopConfig, LoopMode
from efc_core.app.models.errors import InputDomainError
from efc_core.app.models.vectors import N_CHANNELS, ChannelVector, Unit
from efc_core.app.pid.controller import PidCoefficients, PidState, pid_step
from efc_core.app.pid.fixed import FixedPidGains, pid_step_fixed, quantize_gains
from efc_core.app.plant.model import PlantState, RLPlant, build_plant_params, sense
from efc_core.app.signal.chain import (
    DAC_MIDSCALE,
    adc_dequantize_array,
    adc_quantize_array,
    add_noise,
    amplify,
    dac_codes_to_voltages,
    power_amp_vector,
    truncate_word,
    voltages_to_words,
    words_to_dac_codes,
)

logger = logging.getLogger(__name__)

# (шаг, коды АЦП) -> коды АЦП; точка вмешательства в измерение
MeasurementTap = Callable[[int, np.ndarray], np.ndarray]

SETPOINT = 0.0
_WORD_MIN, _WORD_MAX = int_range(16)


def loop_delay_steps(config: LoopConfig) -> int:
    """Число шагов между измерением и применением управления по нему."""
    link_delay = config.link.fixed_latency + serialization_delay(config.link)
    return math.ceil(link_delay / config.dt - 1e-9) + 1


def derive_streams(config: LoopConfig) -> Dict[str, np.random.Generator]:
    """Независимые потоки для потерь в линии, шума АЦП и фаз возмущения из одного seed."""
    children = np.random.SeedSequence(config.seed).spawn(3)
    return {name: np.random.default_rng(seq) for name, seq in zip(("link", "noise", "disturbance"), children)}


@dataclass(frozen=True)
class SampleResult:
    adc_codes: np.ndarray
    corrected: np.ndarray
    pid_outputs: np.ndarray
    words: np.ndarray
    frame: bytes
    overflow: bool


class SampleBoard:
    """Плата сбора и вычислений: АЦП, коррекция, 16 регуляторов, кодер кадра."""

    def __init__(
            self,
            config: LoopConfig,
            mode: LoopMode,
            noise_rng: np.random.Generator,
            measurement_tap: Optional[MeasurementTap] = None,
    ) -> None:
        if mode == LoopMode.BOTH:
            raise InputDomainError("a sample board runs a single arithmetic path")
        self.config = config
        self.mode = mode
        self.noise_rng = noise_rng
        self.measurement_tap = measurement_tap

        self.matrix = build_mutual_matrix(config.correction.diag, config.correction.off1, config.correction.off2)
        self.params = config.correction_params()
        gains = config.gains()
        if mode == LoopMode.FIXED:
            self.m_q = quantize_correction(self.matrix, self.params, config.adc.lsb)
            self.g_q = FixedPidGains.stack(
                [quantize_gains(g, config.adc.lsb, config.dac.lsb, channel=ch) for ch, g in enumerate(gains)]
            )
            self.pid_state = PidState.zeros(N_CHANNELS, dtype=np.int64)
        else:
            self.coefficients = PidCoefficients.stack(gains)
            self.pid_state = PidState.zeros(N_CHANNELS)

    def digitize(self, step: int, coil_voltages: ChannelVector) -> np.ndarray:
        amplified = add_noise(amplify(coil_voltages, self.config.adc), self.config.adc.noise_std, self.noise_rng)
        codes = truncate_word(adc_quantize_array(amplified.values, self.config.adc), self.config.adc.word_bits)
        if self.measurement_tap is not None:
            codes = np.asarray(self.measurement_tap(step, codes.copy()), dtype=np.int64)
        return codes

    def compute(self, codes: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, bool]:
        """Коды АЦП -> (скорректированное В, выход PID В, слова кадра, переполнение)."""
        adc, dac = self.config.adc, self.config.dac
        if self.mode == LoopMode.FIXED:
            result = correct_fixed(codes, self.m_q)
            # 0 - (-32768) не помещается в слово
            error = np.clip(-result.codes, _WORD_MIN, _WORD_MAX)
            overflow = result.overflow or bool(np.any(result.codes == _WORD_MIN))
            words, self.pid_state = pid_step_fixed(self.pid_state, error, self.g_q)
            return result.codes * adc.lsb, words * dac.lsb, words, overflow

        corrected = correct(ChannelVector(adc_dequantize_array(codes, adc)), self.matrix, self.params)
        u, self.pid_state = pid_step(self.pid_state, SETPOINT - corrected.values, self.coefficients)
        return corrected.values, np.asarray(u), voltages_to_words(u, dac), False

    def process(self, step: int, coil_voltages: ChannelVector) -> SampleResult:
        codes = self.digitize(step, coil_voltages)
        corrected, pid_outputs, words, overflow = self.compute(codes)
        if overflow:
            logger.debug("[CORRECTION] Saturation at step %d", step)
        return SampleResult(
            adc_codes=codes,
            corrected=corrected,
            pid_outputs=pid_outputs,
            words=words,
            frame=encode_frame(words, step & 0xFF),
            overflow=overflow,
        )


class CoilBoard:
    """Плата управления катушками: приём кадров, удержание выхода ЦАП, усилитель мощности."""

    def __init__(self, config: LoopConfig) -> None:
        self.config = config
        self.decoder = FrameDecoder()
        self.dac_codes = np.full(N_CHANNELS, DAC_MIDSCALE, dtype=np.int64)
        self._pending: Dict[int, Delivery] = {}

    @property
    def frames_lost(self) -> int:
        d = self.decoder
        return d.lost + d.framing_errors + d.integrity_errors

    def schedule(self, delivery: Delivery, sent_step: int) -> None:
        delay = delivery.arrival_time - sent_step * self.config.dt
        apply_step = sent_step + math.ceil(delay / self.config.dt - 1e-9) + 1
        self._pending[apply_step] = delivery

    @property
    def in_flight(self) -> List[Delivery]:
        """Кадры, ещё не дошедшие до платы к концу прогона (в frames_lost не входят)."""
        return [self._pending[step] for step in sorted(self._pending)]

    def actuate(self, step: int) -> ChannelVector:
        delivery = self._pending.pop(step, None)
        if delivery is not None:
            if delivery.dropped:
                # кадр не пришёл в свой слот: потеря учитывается сразу
                self.decoder.mark_missing()
            else:
                frame = self.decoder.feed(delivery.frame)
                if frame is not None:
                    self.dac_codes = words_to_dac_codes(frame.words())
        # потерянный кадр: ЦАП держит прежний код
        dac_v = ChannelVector(dac_codes_to_voltages(self.dac_codes, self.config.dac), Unit.VOLTS)
        return power_amp_vector(dac_v, self.config.dac)


class LoopRunner:
    """Один прогон одного арифметического тракта."""

    def __init__(
            self,
            config: LoopConfig,
            mode: LoopMode,
            measurement_tap: Optional[MeasurementTap] = None,
    ) -> None:
        streams = derive_streams(config)
        self.config = config
        self.mode = mode
        self.params = build_plant_params(config, streams["disturbance"])
        self.plant = RLPlant(self.params, config.dt)
        self.state = PlantState.zeros()
        self.sample = SampleBoard(config, mode, streams["noise"], measurement_tap)
        self.coil = CoilBoard(config)
        self.link = LinkChannel(config.link, streams["link"])
        self.trace = Trace(mode=mode.value)

    def advance(self, step: int, applied: ChannelVector) -> Delivery:
        """Объект, измерение и расчёт на шаге step; возвращает кадр в линии."""
        self.state = self.plant.step(self.state, applied)
        coil_voltages = sense(self.state, self.params)
        result = self.sample.process(step, coil_voltages)
        delivery = self.link.transmit(result.frame, step * self.config.dt)
        self.trace.append(
            TraceRecord(
                step=step,
                time=self.state.time,
                currents=self.state.currents,
                coil_voltages=coil_voltages.values,
                adc_codes=result.adc_codes,
                corrected=result.corrected,
                pid_outputs=result.pid_outputs,
                dac_codes=self.coil.dac_codes.copy(),
                applied=applied.values,
                frames_lost=self.coil.frames_lost,
                overflow=result.overflow,
            )
        )
        return delivery

    def run(self) -> Trace:
        for step in range(self.config.n_steps):
            applied = self.coil.actuate(step)
            delivery = self.advance(step, applied)
            self.coil.schedule(delivery, step)
        self._log_done()
        return self.trace

    async def run_concurrent(self) -> Trace:
        """
        Платы как две задачи asyncio.

        Очереди на один элемент: в полёте не больше одного кадра, и порядок
        операций совпадает с последовательным прогоном.
        """
        to_plant: asyncio.Queue = asyncio.Queue(maxsize=1)
        to_coil: asyncio.Queue = asyncio.Queue(maxsize=1)

        async def coil_stage() -> None:
            for step in range(self.config.n_steps):
                await to_plant.put(self.coil.actuate(step))
                self.coil.schedule(await to_coil.get(), step)

        async def sample_stage() -> None:
            for step in range(self.config.n_steps):
                applied = await to_plant.get()
                await to_coil.put(self.advance(step, applied))

        await asyncio.gather(coil_stage(), sample_stage())
        self._log_done()
        return self.trace

    def _log_done(self) -> None:
        last = self.trace[-1]
        logger.info(
            "[LOOP] %s run finished: %d steps, frames lost=%d, in flight=%d, max |i|=%.6g A",
            self.mode.value,
            len(self.trace),
            last.frames_lost,
            len(self.coil.in_flight),
            float(np.max(np.abs(self.trace.matrix("currents")))),
        )


def _log_setup(config: LoopConfig) -> None:
    logger.info(
        "[LOOP] dt=%g s, n_steps=%d, mode=%s, loop delay=%d steps, ADC banks=%d x %d channels",
        config.dt,
        config.n_steps,
        config.mode.value,
        loop_delay_steps(config),
        N_CHANNELS // config.adc.bank_size,
        config.adc.bank_size,
    )


def _modes(config: LoopConfig) -> list[LoopMode]:
    if config.mode == LoopMode.BOTH:
        return [LoopMode.FIXED, LoopMode.FLOAT]
    return [config.mode]


def _pair(traces: list[Trace]) -> Trace:
    primary = traces[0]
    if len(traces) > 1:
        primary.companion = traces[1]
    return primary


def run_closed_loop(
        config: LoopConfig,
        *,
        concurrent: bool = False,
        measurement_tap: Optional[MeasurementTap] = None,
) -> Trace:
    """
    Прогон контура на config.n_steps шагов.

    В режиме both возвращается целочисленная трасса, плавающая лежит
    в её поле companion.
    """
    if concurrent:
        return asyncio.run(run_closed_loop_async(config, measurement_tap=measurement_tap))
    _log_setup(config)
    return _pair([LoopRunner(config, mode, measurement_tap).run() for mode in _modes(config)])


async def run_closed_loop_async(
        config: LoopConfig,
        *,
        measurement_tap: Optional[MeasurementTap] = None,
) -> Trace:
    _log_setup(config)
    traces = []
    for mode in _modes(config):
        traces.append(await LoopRunner(config, mode, measurement_tap).run_concurrent())
    return _pair(traces)


def step_response_config(config: LoopConfig, channel: int) -> LoopConfig:
    if not 0 <= channel < N_CHANNELS:
        raise InputDomainError(f"channel must be in 0..{N_CHANNELS - 1}, got {channel}")
    amplitude = [0.0] * N_CHANNELS
    amplitude[channel] = 1.0
    data = config.model_dump()
    data["plant"]["disturbance"].update(kind=DisturbanceKind.STEP, amplitude=amplitude)
    return LoopConfig.model_validate(data)


def run_step_response(config: LoopConfig, channel: int, *, concurrent: bool = False) -> Trace:
    """Единичная ступенька возмущения только в канале channel."""
    return run_closed_loop(step_response_config(config, channel), concurrent=concurrent)
