"""Tests for config loading and dotted overrides."""
import json

import pytest

from src.osad.config import load_config
from src.osad.errors import InvalidInputError
from utils.config import apply_overrides


def test_defaults_without_file(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = load_config()
    assert cfg.rate_hz == 200.0
    assert (cfg.gap, cfg.min_len, cfg.learn_samples) == (20, 50, 2000)
    assert cfg.cusum.alpha == 1e-4
    assert cfg.design.require_two_tap


def test_overrides_reach_nested_sections():
    data = apply_overrides({"cusum": {"alpha": 0.01}}, ["cusum.delta=2", "workdir=out", "subjects=[\"s01\"]"])
    assert data == {"cusum": {"alpha": 0.01, "delta": 2}, "workdir": "out", "subjects": ["s01"]}


def test_override_format_is_checked():
    with pytest.raises(ValueError):
        apply_overrides({}, ["no-equals-sign"])
    with pytest.raises(ValueError):
        apply_overrides({"workdir": "x"}, ["workdir.sub=1"])


def test_file_then_overrides(tmp_path):
    path = tmp_path / "osad.json"
    path.write_text(json.dumps({"seed": 3, "intervals": {"gap_s": 0.2}}))
    cfg = load_config(str(path), ["seed=5"])
    assert cfg.seed == 5
    assert cfg.gap == 40


def test_invalid_values_become_invalid_input(tmp_path):
    with pytest.raises(InvalidInputError):
        load_config(None, ["cusum.alpha=2"])
    with pytest.raises(InvalidInputError):
        load_config(None, ["pattern.source=period"])
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InvalidInputError):
        load_config(str(bad))


def test_missing_explicit_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(str(tmp_path / "absent.json"))
