"""Subspace identification of (A, C) from an observation record.

The block-Hankel matrix of outputs is factored by SVD; the rank-truncated
left factor is the extended observability matrix, C is its top block row and
A solves the shift-invariance equation in the least-squares sense.

    cfg = IdentificationConfig(rank=6, hankel_rows=10, method="subspace")
    model = identify(series, cfg)
    one_step_rmse(model, series)
"""
import warnings
from typing import List, Literal, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy import linalg
from sklearn.preprocessing import StandardScaler
from sklearn.utils.extmath import svd_flip

from src.osad.core.model import LdsModel, TimeSeries, one_step_errors
from src.osad.errors import InsufficientDataError, InvalidInputError, RankDeficiencyWarning

SV_RTOL = 1e-10
COLUMN_FLOOR = 1e-6

Method = Literal["subspace", "spectral"]


class IdentificationConfig(BaseModel):
    rank: int = Field(default=6, ge=1, description="Target state dimension n.")
    hankel_rows: int = Field(default=10, ge=2, description="Block rows of the stacked observation matrix.")
    method: Method = Field(default="subspace", description="subspace, or spectral (whitened Hankel).")


def block_hankel(Y: np.ndarray, block_rows: int) -> np.ndarray:
    """(block_rows*m) x j Hankel matrix of outputs, j = N - block_rows + 1, scaled by 1/sqrt(j)."""
    N, m = Y.shape
    j = N - block_rows + 1
    H = np.empty((block_rows * m, j))
    for i in range(block_rows):
        H[i * m:(i + 1) * m] = Y[i:i + j].T
    return H / np.sqrt(j)


def _whiten(H: np.ndarray, Y: np.ndarray, block_rows: int) -> Tuple[np.ndarray, np.ndarray]:
    # Row weights are per channel so every block row keeps the same scaling.
    channel_scale = StandardScaler(with_mean=False).fit(Y).scale_
    row_scale = np.tile(channel_scale, block_rows)
    Hw = H / row_scale[:, None]
    norms = np.linalg.norm(Hw, axis=0)
    norms = np.maximum(norms, COLUMN_FLOOR * norms.max()) if norms.max() > 0 else np.ones_like(norms)
    return Hw / norms, row_scale


def identify(obs: TimeSeries, cfg: IdentificationConfig) -> LdsModel:
    m = obs.n_channels
    i, r = cfg.hankel_rows, cfg.rank
    if r > m * i:
        raise InvalidInputError(f"rank {r} exceeds m*hankel_rows = {m * i}")
    if obs.n_samples < 2 * i + r:
        raise InsufficientDataError(
            f"identification needs at least {2 * i + r} samples, got {obs.n_samples}"
        )

    Y = obs.samples
    H = block_hankel(Y, i)
    row_scale = np.ones(H.shape[0])
    if cfg.method == "spectral":
        H, row_scale = _whiten(H, Y, i)

    U, s, Vt = linalg.svd(H, full_matrices=False)
    U, Vt = svd_flip(U, Vt)

    numerical = int(np.sum(s > SV_RTOL * s[0])) if s[0] > 0 else 0
    kept = s[:r].copy()
    if numerical < r:
        warnings.warn(
            f"rank {r} exceeds the numerical rank {numerical} of the Hankel matrix; "
            f"{r - numerical} state direction(s) are zero",
            RankDeficiencyWarning,
            stacklevel=2,
        )
        kept[numerical:] = 0.0

    gamma = U[:, :r] * np.sqrt(kept) * row_scale[:, None]
    C = gamma[:m]
    A = linalg.lstsq(gamma[:-m], gamma[m:])[0]
    return LdsModel(A=A, C=C, method=cfg.method, numerical_rank=numerical)


def one_step_rmse(model: LdsModel, obs: TimeSeries) -> float:
    """RMS over t of ||y(t+1) - C A C^+ y(t)||."""
    if obs.n_samples < 2:
        raise InsufficientDataError("one-step RMSE needs at least two samples")
    E = one_step_errors(model, obs)[1:]
    return float(np.sqrt(np.mean(np.sum(E ** 2, axis=1))))


def rank_sweep(
    obs: TimeSeries,
    max_rank: int,
    method: Method = "subspace",
    hankel_rows: int = 10,
) -> List[Tuple[int, float]]:
    if max_rank < 1 or max_rank > obs.n_channels * hankel_rows:
        raise InvalidInputError(f"max_rank must lie in [1, {obs.n_channels * hankel_rows}], got {max_rank}")
    results = []
    for rank in range(1, max_rank + 1):
        cfg = IdentificationConfig(rank=rank, hankel_rows=hankel_rows, method=method)
        model = identify(obs, cfg)
        results.append((rank, one_step_rmse(model, obs)))
    return results
