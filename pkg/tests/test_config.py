"""
Tests for run configuration, logging setup and in-memory tracing.
"""
import logging

import pytest

from utils.config import DEFAULT_SEED, load_config
from utils.errors import UsageError
from utils.log import configure_logging
import utils.tracing
from utils.tracing import TRACES, add_trace_event, export_traces, reset_traces, span_summary, trace_span


@pytest.fixture(autouse=True)
def clean_env(monkeypatch, tmp_path):
    for name in ("BACKMAP_SEED", "BACKMAP_FRAME_CAP", "BACKMAP_THREADS", "BACKMAP_CONFIG", "BACKMAP_TRACING", "LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    # keep a stray .env in the working directory out of the picture
    monkeypatch.chdir(tmp_path)


class TestLoadConfig:
    """Defaults, YAML, environment and explicit overrides."""

    def test_defaults(self):
        config = load_config()
        assert config.seed == DEFAULT_SEED == 123
        assert config.frame_cap == 500
        assert config.loss_weights.zeta == 3.0
        assert config.bond_tolerance == 0.4

    def test_yaml_file(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("seed: 9\nloss_weights:\n  zeta: 0.0\n")
        config = load_config(str(path))
        assert config.seed == 9
        assert config.loss_weights.zeta == 0.0

    def test_environment_beats_file(self, tmp_path, monkeypatch):
        path = tmp_path / "run.yaml"
        path.write_text("seed: 9\n")
        monkeypatch.setenv("BACKMAP_SEED", "11")
        assert load_config(str(path)).seed == 11

    def test_overrides_beat_environment(self, monkeypatch):
        monkeypatch.setenv("BACKMAP_THREADS", "2")
        assert load_config(overrides={"threads": 6, "log_level": None}).threads == 6

    def test_invalid_value(self):
        with pytest.raises(UsageError):
            load_config(overrides={"frame_cap": 0})

    def test_missing_file(self, tmp_path):
        with pytest.raises(UsageError):
            load_config(str(tmp_path / "absent.yaml"))

    def test_non_mapping_file(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(UsageError):
            load_config(str(path))


def test_configure_logging_keeps_one_handler():
    root = logging.getLogger()
    before = len(root.handlers)
    configure_logging("DEBUG")
    configure_logging("WARNING")
    assert len(root.handlers) in (before, before + 1)
    assert root.level == logging.WARNING


def test_fallback_spans_are_recorded():
    reset_traces()
    with trace_span("unit.ok", {"frames": 2}):
        pass
    with pytest.raises(RuntimeError):
        with trace_span("unit.fail"):
            raise RuntimeError("boom")
    statuses = {entry["op"]: entry["status"] for entry in TRACES.values()}
    assert statuses == {"unit.ok": "ok", "unit.fail": "error"}
    assert '"frames": "2"' in export_traces()


def test_fallback_spans_nest_and_carry_events():
    reset_traces()
    with trace_span("cli.fit.train", {"epochs": 1}) as outer:
        with trace_span("train.epoch", {"epoch": 0}) as inner:
            add_trace_event("epoch.loss", {"recon": 0.5})
    assert inner["parent"] is not None
    assert outer["parent"] is None
    assert inner["events"] == [{"name": "epoch.loss", "attributes": {"recon": "0.5"}}]
    assert outer["events"] == []


def test_span_summary():
    reset_traces()
    for _ in range(3):
        with trace_span("frame"):
            pass
    with pytest.raises(ValueError):
        with trace_span("frame"):
            raise ValueError("bad frame")
    summary = span_summary()
    assert summary["frame"]["count"] == 4
    assert summary["frame"]["errors"] == 1
    assert summary["frame"]["mean_ms"] >= 0.0


def test_recorded_spans_are_capped(monkeypatch):
    reset_traces()
    monkeypatch.setattr(utils.tracing, "MAX_TRACES", 3)
    for index in range(5):
        with trace_span("frame", {"index": index}):
            pass
    assert len(TRACES) == 3
    assert [entry["attributes"]["index"] for entry in TRACES.values()] == ["2", "3", "4"]
    assert span_summary()["frame"]["count"] == 5
