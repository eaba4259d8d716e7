"""Tests for subspace identification and the rank sweep."""
import warnings

import numpy as np
import pytest
from scipy import linalg

from src.osad.core.model import LdsModel, TimeSeries, simulate_lds
from src.osad.core.sysid import IdentificationConfig, block_hankel, identify, one_step_rmse, rank_sweep
from src.osad.errors import InsufficientDataError, InvalidInputError, RankDeficiencyWarning
from src.osad.tests.systems import random_orthogonal


def _rank4_system(seed: int) -> LdsModel:
    """Stable 4-state system with a known spectrum, seen through 6 orthonormal channels."""
    rng = np.random.default_rng(seed)
    rot = 0.8 * np.array([[np.cos(0.4), -np.sin(0.4)], [np.sin(0.4), np.cos(0.4)]])
    J = linalg.block_diag(rot, [[0.9]], [[-0.6]])
    T = np.eye(4) + 0.3 * rng.normal(size=(4, 4))
    A = T @ J @ np.linalg.inv(T)
    C = random_orthogonal(rng, 6)[:, :4]
    return LdsModel(A=A, C=C)


def _sorted_eigs(A: np.ndarray) -> np.ndarray:
    return np.sort_complex(np.round(np.linalg.eigvals(A), 12))


# --- hankel ---

def test_block_hankel_layout():
    Y = np.arange(10.0).reshape(5, 2)
    H = block_hankel(Y, 2)
    j = 4
    assert H.shape == (4, j)
    np.testing.assert_allclose(H * np.sqrt(j), np.vstack([Y[:4].T, Y[1:5].T]))


# --- identify ---

def test_constant_series_rank_one():
    series, _ = simulate_lds(LdsModel(A=[[1.0]], C=[[1.0]]), [1.0], 100)
    model = identify(series, IdentificationConfig(rank=1, hankel_rows=10))
    assert one_step_rmse(model, series) <= 1e-10


def test_two_mode_system_recovers_eigenvalues():
    truth = LdsModel(A=np.diag([0.9, 0.5]), C=np.eye(2))
    series, _ = simulate_lds(truth, [1.0, 1.0], 100)
    model = identify(series, IdentificationConfig(rank=2, hankel_rows=10))
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(model.A).real), [0.5, 0.9], atol=1e-6)

    reduced = identify(series, IdentificationConfig(rank=1, hankel_rows=10))
    assert one_step_rmse(reduced, series) > one_step_rmse(model, series)


@pytest.mark.parametrize("method", ["subspace", "spectral"])
def test_rank4_spectrum_recovered(method):
    truth = _rank4_system(11)
    series, _ = simulate_lds(truth, np.ones(4), 400)
    model = identify(series, IdentificationConfig(rank=4, hankel_rows=10, method=method))
    np.testing.assert_allclose(_sorted_eigs(model.A), _sorted_eigs(truth.A), atol=1e-6)
    assert model.numerical_rank == 4


def test_identified_model_round_trips_on_its_own_output():
    truth = _rank4_system(14)
    series, _ = simulate_lds(truth, np.ones(4), 400)
    model = identify(series, IdentificationConfig(rank=4, hankel_rows=10))
    resimulated, _ = simulate_lds(model, np.ones(4), 400)
    assert one_step_rmse(model, resimulated) <= 1e-8
    again = identify(resimulated, IdentificationConfig(rank=4, hankel_rows=10))
    np.testing.assert_allclose(_sorted_eigs(again.A), _sorted_eigs(model.A), atol=1e-6)


@pytest.mark.parametrize("method", ["subspace", "spectral"])
def test_identification_is_reproducible(method):
    series, _ = simulate_lds(_rank4_system(15), np.ones(4), 400, noise_std=0.01, seed=3)
    cfg = IdentificationConfig(rank=4, hankel_rows=10, method=method)
    first, second = identify(series, cfg), identify(series, cfg)
    np.testing.assert_array_equal(first.A, second.A)
    np.testing.assert_array_equal(first.C, second.C)
    np.testing.assert_array_equal(_sorted_eigs(first.A), _sorted_eigs(second.A))


def test_rank_sweep_reaches_zero_at_true_rank():
    truth = _rank4_system(12)
    series, _ = simulate_lds(truth, np.ones(4), 400)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficiencyWarning)
        sweep = dict(rank_sweep(series, 6))
    assert sweep[4] <= 1e-8
    for rank in (1, 2, 3):
        assert sweep[rank] >= sweep[4] - 1e-8
    assert sweep[1] > sweep[4]
    assert sweep[5] == pytest.approx(sweep[4], abs=1e-8)
    assert sweep[6] == pytest.approx(sweep[4], abs=1e-8)


def test_excess_rank_warns_and_keeps_dimension():
    truth = _rank4_system(13)
    series, _ = simulate_lds(truth, np.ones(4), 400)
    with pytest.warns(RankDeficiencyWarning):
        model = identify(series, IdentificationConfig(rank=6, hankel_rows=10))
    assert model.n == 6
    assert model.numerical_rank == 4


def test_rank_bounds():
    series = TimeSeries(np.random.default_rng(0).normal(size=(100, 2)))
    with pytest.raises(InvalidInputError):
        identify(series, IdentificationConfig(rank=21, hankel_rows=10))
    with pytest.raises(InsufficientDataError):
        identify(series.window(0, 20), IdentificationConfig(rank=2, hankel_rows=10))
    with pytest.raises(InvalidInputError):
        rank_sweep(series, 0)


# --- rmse ---

def test_zero_model_on_ones_has_unit_rmse():
    series = TimeSeries(np.ones(50))
    assert one_step_rmse(LdsModel(A=[[0.0]], C=[[1.0]]), series) == pytest.approx(1.0)
