import numpy as np
import pytest
from pydantic import ValidationError

from efc_core.app.models.dto import AdcConfig, DacConfig
from efc_core.app.models.errors import ConfigurationError, InputDomainError
from efc_core.app.models.vectors import N_CHANNELS, ChannelVector, Unit
from efc_core.app.signal.chain import (
    adc_dequantize,
    adc_dequantize_array,
    adc_quantize,
    adc_quantize_array,
    amplify,
    dac_code_to_voltage,
    dac_codes_to_voltages,
    power_amp,
    power_amp_vector,
    truncate_word,
    voltages_to_words,
    words_to_dac_codes,
)


@pytest.fixture()
def adc() -> AdcConfig:
    return AdcConfig()


@pytest.fixture()
def dac() -> DacConfig:
    return DacConfig()


def test_channel_vector_rejects_wrong_length_and_non_finite() -> None:
    with pytest.raises(InputDomainError, match="16 values"):
        ChannelVector(np.zeros(15))
    with pytest.raises(InputDomainError, match="finite"):
        ChannelVector(np.full(N_CHANNELS, np.nan))
    with pytest.raises(InputDomainError, match="finite"):
        ChannelVector(np.full(N_CHANNELS, np.inf))


def test_channel_vector_is_read_only() -> None:
    vec = ChannelVector(np.arange(N_CHANNELS, dtype=float), Unit.AMPS)
    assert vec.unit_tag is Unit.AMPS
    assert vec[3] == 3.0
    with pytest.raises(ValueError):
        vec.values[0] = 1.0


@pytest.mark.parametrize(
    ("stage1", "stage2", "v_in", "expected"),
    [
        (10.0, 2.0, 0.0, 0.0),
        (1.0, 1.0, 0.37, 0.37),
        (10.0, 5.0, 0.01, 0.5),
    ],
)
def test_amplify_multiplies_by_gain_product(stage1: float, stage2: float, v_in: float, expected: float) -> None:
    cfg = AdcConfig(stage1_gain=stage1, stage2_gain=stage2)
    out = amplify(ChannelVector(np.full(N_CHANNELS, v_in), Unit.VOLTS), cfg)
    assert out.unit_tag is Unit.VOLTS
    np.testing.assert_allclose(out.values, expected, rtol=1e-12, atol=0)


def test_amplify_is_linear(adc: AdcConfig) -> None:
    rng = np.random.default_rng(1)
    x, y = rng.normal(size=N_CHANNELS), rng.normal(size=N_CHANNELS)
    a, b = 0.3, -1.7
    lhs = amplify(ChannelVector(a * x + b * y), adc).values
    rhs = a * amplify(ChannelVector(x), adc).values + b * amplify(ChannelVector(y), adc).values
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize(
    ("volts", "code"),
    [
        (0.0, 0),
        (5.0, 16384),
        (10.0, 32767),
        (25.0, 32767),
        (-10.0, -32768),
        (-25.0, -32768),
        # mid-tread, половина LSB округляется от нуля
        (0.5 * 10.0 / 32768, 1),
        (-0.5 * 10.0 / 32768, -1),
        (0.49 * 10.0 / 32768, 0),
    ],
)
def test_adc_quantize_examples(adc: AdcConfig, volts: float, code: int) -> None:
    assert adc_quantize(volts, adc) == code


def test_adc_quantize_saturates_on_infinity(adc: AdcConfig) -> None:
    assert adc_quantize(np.inf, adc) == 32767
    assert adc_quantize(-np.inf, adc) == -32768
    with pytest.raises(InputDomainError):
        adc_quantize(np.nan, adc)


def test_adc_quantize_is_monotone(adc: AdcConfig) -> None:
    volts = np.sort(np.random.default_rng(2).uniform(-12.0, 12.0, 10_000))
    codes = adc_quantize_array(volts, adc)
    assert np.all(np.diff(codes) >= 0)


def test_adc_round_trip_within_half_lsb(adc: AdcConfig) -> None:
    volts = np.random.default_rng(3).uniform(-adc.full_scale, adc.full_scale - adc.lsb / 2, 10_000)
    back = adc_dequantize_array(adc_quantize_array(volts, adc), adc)
    assert np.max(np.abs(back - volts)) <= adc.lsb / 2 + 1e-15


def test_adc_dequantize_examples(adc: AdcConfig) -> None:
    assert adc_dequantize(0, adc) == 0.0
    assert adc_dequantize(32767, adc) == pytest.approx(32767 * 10.0 / 32768, rel=1e-15)
    with pytest.raises(InputDomainError):
        adc_dequantize(40000, adc)


def test_truncate_word_drops_low_bits() -> None:
    codes = np.array([0x7FFF, -1, 0x1234, -32768])
    np.testing.assert_array_equal(truncate_word(codes, 12), [0x7FF0, -16, 0x1230, -32768])
    np.testing.assert_array_equal(truncate_word(codes, 16), codes)


@pytest.mark.parametrize(
    ("code", "volts"),
    [
        (0, -5.0),
        (32768, 0.0),
        (65535, -5.0 + 65535 * 10.0 / 65536),
    ],
)
def test_dac_code_to_voltage_examples(dac: DacConfig, code: int, volts: float) -> None:
    assert dac_code_to_voltage(code, dac) == volts


def test_dac_map_is_affine(dac: DacConfig) -> None:
    volts = dac_codes_to_voltages(np.arange(0, 65536), dac)
    assert np.all(np.diff(volts) > 0)
    np.testing.assert_allclose(np.diff(volts), dac.lsb, rtol=0, atol=1e-12)


@pytest.mark.parametrize("code", [-1, 65536])
def test_dac_code_out_of_range(dac: DacConfig, code: int) -> None:
    with pytest.raises(InputDomainError, match="DAC code"):
        dac_code_to_voltage(code, dac)


def test_words_map_to_offset_binary(dac: DacConfig) -> None:
    words = voltages_to_words(np.array([0.0, 2.5, -5.0, 7.0, -7.0]), dac)
    np.testing.assert_array_equal(words, [0, 16384, -32768, 32767, -32768])
    np.testing.assert_array_equal(words_to_dac_codes(words), [32768, 49152, 0, 65535, 0])


@pytest.mark.parametrize(
    ("gain", "v_in", "expected"),
    [
        (0.1, 0.0, 0.0),
        (1.0, 2.5, 2.5),
        (0.02, 0.1, 5.0),
    ],
)
def test_power_amp_examples(gain: float, v_in: float, expected: float) -> None:
    assert power_amp(v_in, DacConfig(amp_gain_v=gain)) == pytest.approx(expected, rel=1e-12)


def test_power_amp_zero_gain_is_configuration_error() -> None:
    broken = DacConfig.model_construct(amp_gain_v=0.0)
    with pytest.raises(ConfigurationError, match="amp_gain_v"):
        power_amp(1.0, broken)
    with pytest.raises(ConfigurationError):
        power_amp_vector(ChannelVector.zeros(), broken)


def test_power_amp_rejects_non_finite(dac: DacConfig) -> None:
    with pytest.raises(InputDomainError):
        power_amp(float("inf"), dac)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"full_scale": 0.0},
        {"stage1_gain": -1.0},
        {"bits": 12},
        {"bank_size": 3},
        {"word_bits": 10},
    ],
)
def test_adc_config_invariants(kwargs: dict) -> None:
    with pytest.raises(ValidationError):
        AdcConfig(**kwargs)


@pytest.mark.parametrize("kwargs", [{"out_min": 5.0, "out_max": -5.0}, {"amp_gain_v": 0.0}])
def test_dac_config_invariants(kwargs: dict) -> None:
    with pytest.raises(ValidationError):
        DacConfig(**kwargs)
