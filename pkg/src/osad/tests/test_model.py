"""Tests for the LDS types, simulation and error signals in core/model.py."""
import numpy as np
import pytest

from src.osad.core.model import (
    DisturbanceSignal,
    ErrorTrace,
    LdsModel,
    PatternMatrix,
    TimeSeries,
    Trajectory,
    compute_errors,
    one_step_errors,
    simulate_lds,
    threshold_anomalies,
    to_observer_basis,
)
from src.osad.errors import InvalidInputError, NonFiniteError
from src.osad.tests.systems import random_system


# --- types ---

def test_time_series_defaults_and_window():
    ts = TimeSeries(np.arange(10.0))
    assert ts.n_samples == 10
    assert ts.n_channels == 1
    assert ts.channel_names == ("ch1",)
    assert ts.rate_hz == 200.0
    assert ts.window(2, 5).samples.ravel().tolist() == [2.0, 3.0, 4.0]


def test_time_series_rejects_non_finite_with_index():
    samples = np.zeros((5, 2))
    samples[3, 1] = np.nan
    with pytest.raises(NonFiniteError) as exc:
        TimeSeries(samples)
    assert exc.value.index == 3


def test_time_series_rejects_bad_rate():
    with pytest.raises(InvalidInputError):
        TimeSeries(np.zeros((3, 1)), rate_hz=0.0)


def test_model_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        LdsModel(A=np.eye(2), C=np.eye(3))


def test_stability_is_recorded_not_enforced():
    model = LdsModel(A=[[1.5]], C=[[1.0]])
    assert model.spectral_radius == pytest.approx(1.5)
    assert not model.is_stable


def test_observer_basis_gives_identity_c():
    model = random_system(3)
    aligned = to_observer_basis(model)
    np.testing.assert_allclose(aligned.C, np.eye(6), atol=1e-12)
    np.testing.assert_allclose(
        np.sort_complex(np.linalg.eigvals(aligned.A)),
        np.sort_complex(np.linalg.eigvals(model.A)),
        atol=1e-10,
    )


def test_disturbance_active_intervals():
    d = DisturbanceSignal.from_events(20, 1, [(3, np.ones(4)), (10, [0.0, 2.0, 2.0])])
    assert d.active_intervals == ((3, 7), (11, 13))


def test_disturbance_event_outside_range():
    with pytest.raises(InvalidInputError):
        DisturbanceSignal.from_events(5, 1, [(3, np.ones(4))])


# --- simulation ---

def test_simulation_noise_free_follows_dynamics():
    model = random_system(1)
    series, X = simulate_lds(model, np.ones(6), 200)
    Y = series.samples
    residual = Y[1:] - X[:-1] @ (model.C @ model.A).T
    assert np.max(np.abs(residual)) <= 1e-12 * max(1.0, np.max(np.abs(Y)))


def test_simulation_is_deterministic():
    model = random_system(2)
    a, _ = simulate_lds(model, np.ones(6), 100, noise_std=0.1, seed=5)
    b, _ = simulate_lds(model, np.ones(6), 100, noise_std=0.1, seed=5)
    assert np.array_equal(a.samples, b.samples)


def test_disturbance_superposition():
    model = random_system(4)
    P = PatternMatrix(np.eye(6)[:, :2])
    d = DisturbanceSignal.from_events(300, 2, [(50, np.ones((30, 2))), (150, -np.ones((10, 2)))])
    x0 = np.linspace(-1, 1, 6)
    clean, _ = simulate_lds(model, x0, 300, noise_std=0.05, seed=9)
    disturbed, _ = simulate_lds(model, x0, 300, pattern=P, disturbance=d, noise_std=0.05, seed=9)
    alone, _ = simulate_lds(model, np.zeros(6), 300, pattern=P, disturbance=d)
    diff = disturbed.samples - clean.samples
    np.testing.assert_allclose(diff, alone.samples, atol=1e-10 * np.max(np.abs(disturbed.samples)))


def test_disturbance_requires_pattern():
    model = random_system(0)
    with pytest.raises(InvalidInputError):
        simulate_lds(model, np.zeros(6), 10, disturbance=DisturbanceSignal(np.zeros((10, 1))))


# --- errors ---

def test_compute_errors_matches_observation_map():
    model = random_system(6)
    series, X = simulate_lds(model, np.ones(6), 100)
    estimate_x = 0.9 * X
    estimate = Trajectory(estimate_x, estimate_x @ model.C.T)
    err = compute_errors(Trajectory(X, series), estimate)
    np.testing.assert_allclose(err.observed_err, err.latent_err @ model.C.T, atol=1e-12)


def test_threshold_anomalies():
    observed = np.zeros((10, 2))
    observed[5] = [3.0, 4.0]
    err = ErrorTrace(np.zeros((10, 2)), observed)
    assert threshold_anomalies(err, 4.9) == [5]
    assert threshold_anomalies(err, 5.1) == []
    assert threshold_anomalies(ErrorTrace(np.zeros((10, 2)), np.zeros((10, 2))), 0.1) == []


def test_one_step_errors_vanish_on_model_data():
    model = random_system(8)
    series, _ = simulate_lds(model, np.ones(6), 300)
    e = one_step_errors(model, series)
    np.testing.assert_array_equal(e[0], series.samples[0])
    assert np.max(np.abs(e[1:])) <= 1e-10 * np.max(np.abs(series.samples))
