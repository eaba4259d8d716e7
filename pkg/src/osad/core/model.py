"""LDS state-space types, forward simulation, disturbance injection and error signals.

The model is

    x(t+1) = A x(t) + P zeta(t)
    y(t)   = C x(t) + v(t)

with measurement noise v(t) only. Intervals are half-open sample ranges [a, b).

Usage:
    model = LdsModel(A=[[0.5, 0.3], [0.3, 0.2]], C=np.eye(2))
    series, latent = simulate_lds(model, x0=[1.0, 0.0], steps=100)
    e = one_step_errors(model, series)
"""
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from src.osad.errors import InvalidInputError, NonFiniteError

Interval = Tuple[int, int]

DEFAULT_RATE_HZ = 200.0
PINV_RTOL = 1e-10
RANK_RTOL = 1e-9


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _frozen_array(name: str, value, ndim: int) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.ndim != ndim:
        raise InvalidInputError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise NonFiniteError(name, int(bad[0]))
    arr.setflags(write=False)
    return arr


def pinv(M: np.ndarray) -> np.ndarray:
    """Pseudoinverse with singular values below 1e-10 * sigma_max treated as zero."""
    return linalg.pinv(np.asarray(M, dtype=float), atol=0.0, rtol=PINV_RTOL)


def numerical_rank(M: np.ndarray, rtol: float = RANK_RTOL) -> int:
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0
    s = linalg.svdvals(M)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def runs_of(mask: Sequence[bool]) -> List[Interval]:
    """Maximal runs of True as half-open intervals."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return []
    edges = np.flatnonzero(np.diff(np.concatenate(([0], mask.astype(np.int8), [0]))))
    return [(int(a), int(b)) for a, b in zip(edges[::2], edges[1::2])]


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TimeSeries:
    """N x m multichannel record sampled at rate_hz."""

    samples: np.ndarray
    rate_hz: float = DEFAULT_RATE_HZ
    channel_names: Tuple[str, ...] = ()

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None]
        samples = _frozen_array("samples", samples, 2)
        if samples.shape[0] < 1 or samples.shape[1] < 1:
            raise InvalidInputError(f"series needs at least one sample and one channel, got {samples.shape}")
        if not (np.isfinite(self.rate_hz) and self.rate_hz > 0):
            raise InvalidInputError(f"rate_hz must be positive, got {self.rate_hz}")
        names = tuple(self.channel_names) or tuple(f"ch{i + 1}" for i in range(samples.shape[1]))
        if len(names) != samples.shape[1]:
            raise InvalidInputError(f"{len(names)} channel names for {samples.shape[1]} channels")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "rate_hz", float(self.rate_hz))
        object.__setattr__(self, "channel_names", names)

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def n_channels(self) -> int:
        return self.samples.shape[1]

    def window(self, start: int, end: int) -> "TimeSeries":
        return TimeSeries(self.samples[start:end], self.rate_hz, self.channel_names)


@dataclass(frozen=True)
class LdsModel:
    A: np.ndarray
    C: np.ndarray
    method: str = "given"
    numerical_rank: Optional[int] = None

    def __post_init__(self):
        A = _frozen_array("A", self.A, 2)
        C = _frozen_array("C", self.C, 2)
        if A.shape[0] != A.shape[1]:
            raise InvalidInputError(f"A must be square, got {A.shape}")
        if C.shape[1] != A.shape[0]:
            raise InvalidInputError(f"C has {C.shape[1]} columns but A is {A.shape[0]}x{A.shape[0]}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "C", C)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.C.shape[0]

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(linalg.eigvals(self.A))))

    @property
    def is_stable(self) -> bool:
        return self.spectral_radius < 1.0

    def similarity(self, T: np.ndarray) -> "LdsModel":
        """Same input/output behaviour in the basis x = T x'."""
        T = np.asarray(T, dtype=float)
        return LdsModel(
            A=linalg.solve(T, self.A @ T),
            C=self.C @ T,
            method=self.method,
            numerical_rank=self.numerical_rank,
        )


def to_observer_basis(model: LdsModel) -> LdsModel:
    """Express the model with C = I when C is square and well conditioned."""
    if model.m != model.n or np.linalg.cond(model.C) > 1e12:
        return model
    return model.similarity(linalg.inv(model.C))


@dataclass(frozen=True)
class PatternMatrix:
    """Latent directions P (n x k) through which a known disturbance enters."""

    P: np.ndarray

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        if P.ndim == 1:
            P = P[:, None]
        P = _frozen_array("P", P, 2)
        if P.shape[1] < 1:
            raise InvalidInputError("pattern needs at least one direction")
        object.__setattr__(self, "P", P)

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @property
    def k(self) -> int:
        return self.P.shape[1]


@dataclass(frozen=True)
class DisturbanceSignal:
    """Driving signal zeta(t) (N x k); active_intervals are derived from nonzero rows."""

    values: np.ndarray
    active_intervals: Tuple[Interval, ...] = field(init=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        values = _frozen_array("disturbance", values, 2)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "active_intervals", tuple(runs_of(np.any(values != 0.0, axis=1))))

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_events(cls, n_samples: int, k: int, events: Iterable[Tuple[int, np.ndarray]]) -> "DisturbanceSignal":
        """Place waveforms (L x k, or length L for k = 1) starting at the given samples."""
        values = np.zeros((n_samples, k))
        for start, waveform in events:
            wave = np.asarray(waveform, dtype=float).reshape(len(waveform), -1)
            if wave.shape[1] != k:
                raise InvalidInputError(f"waveform has {wave.shape[1]} columns, expected {k}")
            end = start + wave.shape[0]
            if start < 0 or end > n_samples:
                raise InvalidInputError(f"event [{start}, {end}) outside [0, {n_samples})")
            values[start:end] += wave
        return cls(values)


@dataclass(frozen=True)
class Trajectory:
    latent: np.ndarray
    observed: np.ndarray

    def __post_init__(self):
        latent = _frozen_array("latent trajectory", self.latent, 2)
        observed = self.observed.samples if isinstance(self.observed, TimeSeries) else self.observed
        observed = _frozen_array("observed trajectory", observed, 2)
        if latent.shape[0] != observed.shape[0]:
            raise InvalidInputError(f"latent has {latent.shape[0]} rows, observed has {observed.shape[0]}")
        object.__setattr__(self, "latent", latent)
        object.__setattr__(self, "observed", observed)


@dataclass(frozen=True)
class ErrorTrace:
    latent_err: np.ndarray
    observed_err: np.ndarray

    def __post_init__(self):
        if self.latent_err.shape[0] != self.observed_err.shape[0]:
            raise InvalidInputError("latent and observed errors differ in length")

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.observed_err, axis=1)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def simulate_lds(
    model: LdsModel,
    x0: Sequence[float],
    steps: int,
    pattern: Optional[PatternMatrix] = None,
    disturbance: Optional[DisturbanceSignal] = None,
    noise_std: float = 0.0,
    seed: int = 0,
    rate_hz: float = DEFAULT_RATE_HZ,
) -> Tuple[TimeSeries, np.ndarray]:
    """Run the model forward; returns y(0..steps-1) and x(0..steps-1).

    Noise is drawn for every run regardless of the disturbance, so a clean
    and a disturbed run with the same seed see the same noise.
    """
    x0 = _frozen_array("x0", x0, 1)
    if x0.shape[0] != model.n:
        raise InvalidInputError(f"x0 has length {x0.shape[0]}, model state is {model.n}")
    if steps < 1:
        raise InvalidInputError(f"steps must be >= 1, got {steps}")
    if (pattern is None) != (disturbance is None):
        raise InvalidInputError("a disturbance must be given together with its pattern")
    if not (np.isfinite(noise_std) and noise_std >= 0):
        raise InvalidInputError(f"noise_std must be >= 0, got {noise_std}")

    drive = np.zeros((steps, model.n))
    if pattern is not None:
        if pattern.n != model.n:
            raise InvalidInputError(f"pattern has {pattern.n} rows, model state is {model.n}")
        if disturbance.k != pattern.k:
            raise InvalidInputError(f"disturbance has {disturbance.k} columns, pattern has {pattern.k}")
        if disturbance.n_samples < steps:
            raise InvalidInputError(f"disturbance covers {disturbance.n_samples} samples, need {steps}")
        drive = disturbance.values[:steps] @ pattern.P.T

    X = np.empty((steps, model.n))
    X[0] = x0
    A = model.A
    for t in range(steps - 1):
        X[t + 1] = A @ X[t] + drive[t]

    Y = X @ model.C.T
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, 1.0, size=Y.shape)
    if noise_std > 0:
        Y = Y + noise_std * noise
    if not np.all(np.isfinite(X)):
        raise NonFiniteError("simulated state", int(np.argwhere(~np.isfinite(X))[0][0]))
    return TimeSeries(Y, rate_hz), X


def compute_errors(truth: Trajectory, estimate: Trajectory) -> ErrorTrace:
    if truth.latent.shape != estimate.latent.shape:
        raise InvalidInputError(f"latent shapes differ: {truth.latent.shape} vs {estimate.latent.shape}")
    if truth.observed.shape != estimate.observed.shape:
        raise InvalidInputError(f"observed shapes differ: {truth.observed.shape} vs {estimate.observed.shape}")
    return ErrorTrace(
        latent_err=truth.latent - estimate.latent,
        observed_err=truth.observed - estimate.observed,
    )


def threshold_anomalies(err: ErrorTrace, delta: float) -> List[int]:
    """Sample indices where the Euclidean norm of e(t) exceeds delta."""
    if not delta > 0:
        raise InvalidInputError(f"delta must be positive, got {delta}")
    return [int(t) for t in np.flatnonzero(err.norms() > delta)]


def one_step_errors(model: LdsModel, series: TimeSeries) -> np.ndarray:
    """e(t) = y(t) - C A C^+ y(t-1), with e(0) = y(0).

    This is the observer error for the deadbeat gain F = A C^+.
    """
    if series.n_channels != model.m:
        raise InvalidInputError(f"series has {series.n_channels} channels, model expects {model.m}")
    Y = series.samples
    M = model.C @ model.A @ pinv(model.C)
    E = Y.copy()
    E[1:] -= Y[:-1] @ M.T
    return E
