import math

import numpy as np
import pytest
from pydantic import ValidationError

from efc_core.app.models.dto import PidGains, PidSection
from efc_core.app.models.errors import InputDomainError
from efc_core.app.pid.controller import PidCoefficients, PidState, pid_reset, pid_step

DT = 1e-5


def _gains(**kwargs) -> PidGains:
    values = {"kp": 1.5, "ti": 1e-3, "td": 0.0, "dt": DT, "output_min": -1e9, "output_max": 1e9}
    values.update(kwargs)
    return PidGains(**values)


def _run(errors, g, state: PidState | None = None):
    state = state or PidState()
    coefficients = PidCoefficients.from_gains(g)
    outputs = []
    for e in errors:
        u, state = pid_step(state, e, coefficients)
        outputs.append(u)
    return np.array(outputs), state


def positional(errors: np.ndarray, g: PidGains) -> np.ndarray:
    """Позиционная форма с интегралом по прямоугольникам назад."""
    previous = np.concatenate([[0.0], errors[:-1]])
    integral = np.cumsum(errors)
    return g.kp * errors + (g.kp / g.ti) * g.dt * integral + g.kp * g.td * (errors - previous) / g.dt


def test_fresh_state_is_zero() -> None:
    state = PidState()
    assert (state.e_k1, state.e_k2, state.u_k1, state.step_count) == (0.0, 0.0, 0.0, 0)


def test_zero_errors_hold_previous_output() -> None:
    u, state = pid_step(PidState(0.0, 0.0, 1.25, 7), 0.0, _gains(td=2e-5))
    assert u == 1.25
    assert state.step_count == 8


def test_pure_p_constant_error() -> None:
    g = _gains(kp=2.0, ti=math.inf)
    outputs, _ = _run([0.3] * 10, g)
    assert outputs[0] == 2.0 * 0.3
    assert np.all(outputs == outputs[0])


def test_first_step_without_derivative_is_exact() -> None:
    g = _gains(kp=1.7, ti=3.3e-4)
    e = 0.123
    u, _ = pid_step(PidState(), e, g)
    assert u == g.kp * ((1 + g.dt / g.ti) * e)


def test_state_shifts_history() -> None:
    g = _gains()
    _, s1 = pid_step(PidState(), 1.0, g)
    u2, s2 = pid_step(s1, 2.0, g)
    assert (s2.e_k1, s2.e_k2, s2.u_k1, s2.step_count) == (2.0, 1.0, u2, 2)


def test_velocity_form_matches_positional_oracle() -> None:
    rng = np.random.default_rng(30)
    for _ in range(20):
        g = _gains(
            kp=rng.uniform(0.1, 3.0),
            ti=rng.uniform(1e-4, 1e-2),
            td=rng.uniform(0.0, 5e-5),
        )
        errors = rng.normal(size=10_000)
        outputs, _ = _run(errors, g)
        np.testing.assert_allclose(outputs, positional(errors, g), rtol=0, atol=1e-9)


def test_output_clamped_and_stored_clamped() -> None:
    g = _gains(kp=10.0, output_min=-5.0, output_max=5.0)
    rng = np.random.default_rng(31)
    state = PidState()
    for e in rng.normal(scale=2.0, size=2000):
        u, state = pid_step(state, e, g)
        assert -5.0 <= u <= 5.0
        assert state.u_k1 == u


def test_anti_windup_recovers_immediately() -> None:
    g = _gains(kp=1.0, output_min=-1.0, output_max=1.0)
    state = PidState()
    for _ in range(100):
        u, state = pid_step(state, 10.0, g)
    assert u == 1.0
    u, state = pid_step(state, -10.0, g)
    assert u < 1.0


def test_pure_p_homogeneity() -> None:
    g = _gains(kp=0.8, ti=math.inf)
    errors = np.random.default_rng(32).normal(size=1000)
    base, _ = _run(errors, g)
    scaled, _ = _run(2.0 * errors, g)
    np.testing.assert_allclose(scaled, 2.0 * base, rtol=1e-12, atol=0)


def test_deterministic() -> None:
    g = _gains(td=3e-5)
    errors = np.random.default_rng(33).normal(size=500)
    a, _ = _run(errors, g)
    b, _ = _run(errors, g)
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("e", [math.nan, math.inf, -math.inf])
def test_non_finite_error_rejected(e: float) -> None:
    with pytest.raises(InputDomainError, match="finite"):
        pid_step(PidState(), e, _gains())


def test_reset_zeroes_state() -> None:
    state = PidState(0.4, -0.2, 3.0, 17)
    assert pid_reset(state) == PidState()


def test_step_after_reset_pure_p() -> None:
    g = _gains(kp=2.0, ti=math.inf)
    _, state = _run([0.5, -0.7, 0.9], g)
    u, _ = pid_step(pid_reset(state), 1.0, g)
    assert u == 2.0


def test_reset_then_replay_matches_fresh_controller() -> None:
    g = _gains(td=2e-5)
    errors = np.random.default_rng(34).normal(size=300)
    fresh, _ = _run(errors, g)
    _, used = _run(errors[::-1], g)
    replay, _ = _run(errors, g, pid_reset(used))
    np.testing.assert_array_equal(fresh, replay)


def test_bank_matches_scalar_controllers() -> None:
    section = PidSection(channels={3: {"kp": 0.5}, 9: {"td": 1e-5, "ti": 5e-4}})
    gains = [section.gains_for(ch, DT) for ch in range(16)]
    errors = np.random.default_rng(35).normal(scale=0.2, size=(200, 16))

    state = PidState.zeros(16)
    bank = PidCoefficients.stack(gains)
    bank_out = []
    for row in errors:
        u, state = pid_step(state, row, bank)
        bank_out.append(u)
    bank_out = np.array(bank_out)

    for ch in range(16):
        scalar, _ = _run(errors[:, ch], gains[ch])
        np.testing.assert_array_equal(bank_out[:, ch], scalar)


def test_bank_reset_keeps_shape() -> None:
    state = PidState(np.ones(16), np.ones(16), np.ones(16), 4)
    reset = pid_reset(state)
    assert reset.u_k1.shape == (16,)
    assert not reset.u_k1.any()
    assert reset.step_count == 0


@pytest.mark.parametrize(
    "kwargs",
    [
        {"dt": 0.0},
        {"ti": 0.0},
        {"td": -1e-6},
        {"output_min": 5.0, "output_max": -5.0},
        {"kp": math.nan},
    ],
)
def test_gain_invariants(kwargs: dict) -> None:
    with pytest.raises(ValidationError):
        _gains(**kwargs)


def test_per_channel_override_and_bad_channel() -> None:
    section = PidSection(kp=1.0, channels={2: {"kp": 4.0}})
    assert section.gains_for(2, DT).kp == 4.0
    assert section.gains_for(3, DT).kp == 1.0
    with pytest.raises(ValidationError, match="outside"):
        PidSection(channels={16: {"kp": 1.0}})
