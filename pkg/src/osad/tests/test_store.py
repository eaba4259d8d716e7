"""Tests for the model store and the CSV codecs."""
import numpy as np
import pytest

from src.osad.core.designer import design_residual
from src.osad.core.detector import AlertInterval
from src.osad.core.evaluation import LabelSet
from src.osad.core.model import TimeSeries
from src.osad.errors import ArtifactError, ArtifactFormatError, NonFiniteError
from src.osad.tests.systems import random_system
from utils.series import (
    read_alerts,
    read_labels,
    read_matrix,
    read_seed,
    read_series,
    write_alerts,
    write_labels,
    write_matrix,
    write_series,
)
from utils.store import dumps_model, load_model, loads_model, save_model, subject_names, write_manifest


# --- model files ---

def test_model_file_is_exact(tmp_path):
    model = random_system(3)
    path = tmp_path / "s01" / "model.model"
    save_model(path, model, seed=7)
    stored = load_model(path)
    assert np.array_equal(stored.model.A, model.A)
    assert np.array_equal(stored.model.C, model.C)
    assert stored.seed == 7
    assert stored.design is None


def test_design_travels_with_model(golden_model, golden_pattern):
    design = design_residual(golden_model, golden_pattern, require_two_tap=True)
    stored = loads_model(dumps_model(golden_model, None, design))
    assert stored.seed is None
    assert stored.design.feedback == "left"
    assert np.array_equal(stored.design.W, design.W)
    assert np.array_equal(stored.design.F, design.F)


def test_edited_model_fails_hash(golden_model):
    text = dumps_model(golden_model, seed=1).replace("0.5 0.29999999999999999", "0.5 0.3")
    with pytest.raises(ArtifactFormatError, match="hash"):
        loads_model(text)


def test_bad_header_reports_line(golden_model):
    with pytest.raises(ArtifactFormatError) as exc:
        loads_model("something else\n" + dumps_model(golden_model))
    assert exc.value.line == 1


def test_missing_model_is_artifact_error(tmp_path):
    with pytest.raises(ArtifactError):
        load_model(tmp_path / "missing.model")


def test_manifest_lists_subjects(tmp_path):
    write_manifest(tmp_path, {"subjects": ["s01", "s02"], "seed": 7})
    assert subject_names(tmp_path) == ["s01", "s02"]
    assert subject_names(tmp_path, ["s02"]) == ["s02"]
    with pytest.raises(ArtifactError):
        subject_names(tmp_path / "nowhere")


# --- series ---

def test_series_file_is_exact(tmp_path):
    samples = np.random.default_rng(0).normal(size=(30, 3))
    write_series(tmp_path / "series.csv", TimeSeries(samples), seed=11)
    back = read_series(tmp_path / "series.csv", 200.0)
    assert np.array_equal(back.samples, samples)
    assert back.channel_names == ("ch1", "ch2", "ch3")
    assert read_seed(tmp_path / "series.csv") == 11


def test_series_errors_name_the_line(tmp_path):
    path = tmp_path / "series.csv"
    path.write_text("t,a,b\n0,1.0,2.0\n1,1.0,oops\n")
    with pytest.raises(ArtifactFormatError) as exc:
        read_series(path, 200.0)
    assert exc.value.line == 3

    path.write_text("t,a\n0,1.0\n2,1.0\n")
    with pytest.raises(ArtifactFormatError, match="expected t = 1"):
        read_series(path, 200.0)


def test_series_rejects_non_finite(tmp_path):
    path = tmp_path / "series.csv"
    path.write_text("t,a\n0,1.0\n1,nan\n")
    with pytest.raises(NonFiniteError) as exc:
        read_series(path, 200.0)
    assert exc.value.index == 1


# --- labels, alerts, matrices ---

def test_labels_file(tmp_path):
    labels = {"pattern": LabelSet(((10, 20), (40, 60)), "pattern"), "other": LabelSet(((70, 90),), "other")}
    write_labels(tmp_path / "labels.csv", labels, seed=3)
    assert read_labels(tmp_path / "labels.csv") == labels


def test_labels_reject_unknown_class(tmp_path):
    path = tmp_path / "labels.csv"
    path.write_text("class,start,end\nspindle,1,5\n")
    with pytest.raises(ArtifactFormatError) as exc:
        read_labels(path)
    assert exc.value.line == 2


def test_alerts_file(tmp_path):
    alerts = [AlertInterval(5, 60, "all_anomalies", 12.5), AlertInterval(8, 40, "selective", 3.25)]
    write_alerts(tmp_path / "alerts.csv", alerts)
    back = read_alerts(tmp_path / "alerts.csv")
    assert back["all_anomalies"] == alerts[:1]
    assert back["selective"] == alerts[1:]


def test_matrix_file(tmp_path):
    M = np.random.default_rng(1).normal(size=(4, 2))
    write_matrix(tmp_path / "pattern.csv", M, seed=2)
    assert np.array_equal(read_matrix(tmp_path / "pattern.csv"), M)
    (tmp_path / "ragged.csv").write_text("1,2\n3\n")
    with pytest.raises(ArtifactFormatError):
        read_matrix(tmp_path / "ragged.csv")
