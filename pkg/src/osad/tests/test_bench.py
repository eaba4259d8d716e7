"""Tests for the synthetic bench and the cross-subject transfer grid built on it."""
import numpy as np
import pytest

from src.osad.bench import BenchConfig, generate_bench
from src.osad.core.designer import design_residual, pattern_from_observed
from src.osad.core.evaluation import SubjectCase, transfer_grid
from src.osad.errors import InvalidInputError


def _events(subject):
    return sorted(iv for labels in subject.labels.values() for iv in labels.intervals)


# --- generation ---

def test_bench_is_deterministic():
    a = generate_bench(BenchConfig(), seed=7)
    b = generate_bench(BenchConfig(), seed=7)
    for x, y in zip(a, b):
        assert np.array_equal(x.series.samples, y.series.samples)
        assert x.labels == y.labels
    c = generate_bench(BenchConfig(), seed=8)
    assert not np.array_equal(a[0].series.samples, c[0].series.samples)


def test_bench_layout():
    cfg = BenchConfig()
    subjects = generate_bench(cfg, seed=1)
    assert [s.name for s in subjects] == ["s01", "s02", "s03"]
    for s in subjects:
        assert s.series.samples.shape == (12000, 6)
        assert len(s.labels["pattern"]) == 10
        assert len(s.labels["other"]) == 3
        assert (s.pattern_signature.T @ s.other_signature).item() == pytest.approx(0.0, abs=1e-12)
    spectra = [np.sort(np.angle(np.linalg.eigvals(s.model.A))) for s in subjects]
    assert not np.allclose(spectra[0], spectra[1])


def test_events_follow_lead_in_and_spacing():
    cfg = BenchConfig()
    for s in generate_bench(cfg, seed=3):
        events = _events(s)
        assert events[0][0] >= cfg.lead_in_s * 200
        for (_, end), (start, _) in zip(events, events[1:]):
            assert start - end >= cfg.min_spacing_s * 200
        assert events[-1][1] <= 12000 - cfg.min_spacing_s * 200


def test_event_durations_in_range():
    for s in generate_bench(BenchConfig(), seed=4):
        assert all(100 <= b - a <= 200 for a, b in s.labels["pattern"].intervals)
        assert all(60 <= b - a <= 100 for a, b in s.labels["other"].intervals)


def test_quiet_bench_has_no_labels():
    subjects = generate_bench(BenchConfig(n_subjects=1, n_pattern_events=0, n_other_events=0), seed=5)
    assert len(subjects[0].labels["pattern"]) == 0
    assert len(subjects[0].labels["other"]) == 0


def test_events_that_do_not_fit_are_rejected():
    with pytest.raises(InvalidInputError):
        generate_bench(BenchConfig(duration_s=20.0), seed=6)


def test_process_noise_changes_only_the_background():
    quiet = generate_bench(BenchConfig(n_subjects=1), seed=9)[0]
    noisy = generate_bench(BenchConfig(n_subjects=1, process_noise_std=0.02), seed=9)[0]
    assert quiet.labels == noisy.labels
    assert not np.array_equal(quiet.series.samples, noisy.series.samples)


# --- transfer grid ---

def _cases(cfg: BenchConfig, seed: int):
    cases = []
    for s in generate_bench(cfg, seed):
        design = design_residual(s.model, pattern_from_observed(s.model, s.pattern_signature), require_two_tap=True)
        cases.append(SubjectCase(s.name, s.model, design, s.series, s.labels, s.pattern_signature))
    return cases


def test_identical_subjects_transfer_without_loss():
    grid = transfer_grid(_cases(BenchConfig(subject_spread=0.0), seed=11))
    np.testing.assert_allclose(grid.recall, np.tile(np.diag(grid.recall), (3, 1)), atol=1e-12)
    np.testing.assert_allclose(grid.averaged_recall, np.diag(grid.recall), atol=0.01)


def test_heterogeneous_subjects_lose_recall_across_models():
    cfg = BenchConfig(
        subject_spread=0.8,
        modulus=0.995,
        process_noise_std=0.03,
        pattern_amplitude=0.15,
        n_other_events=0,
    )
    grid = transfer_grid(_cases(cfg, seed=12))
    diagonal, off = grid.diagonal_mean(), grid.off_diagonal_mean()
    averaged = float(np.mean(grid.averaged_recall))
    assert diagonal > off
    assert off <= averaged <= diagonal


def test_grid_needs_two_subjects():
    with pytest.raises(InvalidInputError):
        transfer_grid(_cases(BenchConfig(n_subjects=1), seed=13))
