import math

import pytest

from efc_core.app.config.config import get_settings
from efc_core.app.handlers.latency import measure_pipeline_latency
from efc_core.app.models.dto import LoopConfig
from efc_core.app.models.errors import InputDomainError


@pytest.mark.parametrize("mode", ["fixed", "float", "both"])
def test_report_is_positive_and_finite(mode: str) -> None:
    report = measure_pipeline_latency(LoopConfig(mode=mode), iterations=2000)
    assert report.iterations == 2000
    assert report.mode == ("float" if mode == "float" else "fixed")
    for value in (report.mean, report.p99, report.maximum):
        assert value > 0 and math.isfinite(value)
    assert report.minimum <= report.mean <= report.maximum
    assert report.minimum <= report.p99 <= report.maximum
    assert report.std >= 0


def test_budget_defaults_to_sample_period() -> None:
    report = measure_pipeline_latency(LoopConfig(dt=2e-5), iterations=500)
    assert report.budget == 2e-5


def test_generous_budget_is_met() -> None:
    config = LoopConfig.model_validate({"bench": {"budget": 1.0}})
    report = measure_pipeline_latency(config, iterations=1000)
    assert report.within_budget
    assert "within budget" in report.to_text()


def test_iterations_from_config_then_settings(monkeypatch: pytest.MonkeyPatch) -> None:
    config = LoopConfig.model_validate({"bench": {"iterations": 300}})
    assert measure_pipeline_latency(config).iterations == 300

    monkeypatch.setenv("EFC_BENCH_ITERATIONS", "250")
    get_settings.cache_clear()
    try:
        assert measure_pipeline_latency(LoopConfig()).iterations == 250
    finally:
        get_settings.cache_clear()


def test_zero_iterations_rejected() -> None:
    with pytest.raises(InputDomainError):
        measure_pipeline_latency(LoopConfig(), iterations=0)
