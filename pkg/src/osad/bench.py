"""Synthetic EEG-like bench.

Each subject is a 6-state LDS made of three slowly damped rotations (the
background rhythms) mixed into 6 channels by an orthogonal matrix, observed
with white measurement noise and, optionally, a white drive on every state
(stochastic background activity). Two kinds of events drive the state:

    pattern  spindle-like 13 Hz cosine bursts along the sensor direction G_P
    other    K-complex-like biphasic pulses along G_Q, orthogonal to G_P

Subjects share the mixing matrix and event directions; their rhythm
frequencies are scaled by 1 + subject_spread * (s - (S-1)/2), so the bench
covers both identical (spread 0) and heterogeneous subjects.
"""
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy import linalg

from src.osad.core.evaluation import LabelSet
from src.osad.core.model import DisturbanceSignal, LdsModel, PatternMatrix, TimeSeries, simulate_lds
from src.osad.errors import InvalidInputError


class BenchConfig(BaseModel):
    n_subjects: int = Field(default=3, ge=1, description="Number of synthetic subjects.")
    rhythms_hz: List[float] = Field(default=[1.0, 3.0, 6.0], min_length=1, description="Background rhythms.")
    modulus: float = Field(default=0.9999, gt=0, le=1, description="Eigenvalue modulus of every rhythm.")
    subject_spread: float = Field(default=0.5, ge=0, lt=1, description="Relative rhythm scaling step per subject.")
    duration_s: float = Field(default=60.0, gt=0, description="Recording length per subject.")
    lead_in_s: float = Field(default=12.0, ge=0, description="Event-free start (learning and calibration).")
    noise_std: float = Field(default=0.01, ge=0, description="Measurement noise standard deviation.")
    n_pattern_events: int = Field(default=10, ge=0, description="Spindle-like events per subject.")
    n_other_events: int = Field(default=3, ge=0, description="K-complex-like events per subject.")
    pattern_hz: float = Field(default=13.0, gt=0, description="Spindle burst frequency.")
    pattern_amplitude: float = Field(default=0.3, ge=0)
    other_amplitude: float = Field(default=0.5, ge=0)
    pattern_duration_s: Tuple[float, float] = (0.5, 1.0)
    other_duration_s: Tuple[float, float] = (0.3, 0.5)
    min_spacing_s: float = Field(default=1.0, ge=0, description="Quiet time between events.")
    process_noise_std: float = Field(
        default=0.0, ge=0, description="White drive on every state; 0 keeps the background deterministic."
    )


@dataclass
class BenchSubject:
    name: str
    model: LdsModel
    pattern_signature: np.ndarray
    other_signature: np.ndarray
    series: TimeSeries
    labels: Dict[str, LabelSet]
    x0: np.ndarray


def _rotation(freq_hz: float, rate_hz: float, modulus: float) -> np.ndarray:
    theta = 2.0 * np.pi * freq_hz / rate_hz
    return modulus * np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])


def _orthogonal(rng: np.random.Generator, m: int) -> np.ndarray:
    Q, R = np.linalg.qr(rng.normal(size=(m, m)))
    return Q * np.sign(np.diag(R))


def _schedule(
    rng: np.random.Generator,
    kinds: List[str],
    durations: List[int],
    lead_in: int,
    n_samples: int,
    spacing: int,
) -> List[Tuple[str, int, int]]:
    """Random non-overlapping placement after the lead-in, >= spacing apart and from the end."""
    if not kinds:
        return []
    order = rng.permutation(len(kinds))
    need = sum(durations) + spacing * len(kinds)
    slack = n_samples - lead_in - need
    if slack < 0:
        raise InvalidInputError(
            f"{len(kinds)} events need {need} samples after the lead-in, only {n_samples - lead_in} available"
        )
    extras = np.floor(rng.dirichlet(np.ones(len(kinds) + 1)) * slack).astype(int)
    events, t = [], lead_in
    for extra, idx in zip(extras, order):
        start = t + int(extra)
        events.append((kinds[idx], start, start + durations[idx]))
        t = start + durations[idx] + spacing
    return events


def _waveform(kind: str, length: int, cfg: BenchConfig, rate_hz: float) -> np.ndarray:
    if kind == "pattern":
        t = np.arange(length) / rate_hz
        return cfg.pattern_amplitude * np.cos(2.0 * np.pi * cfg.pattern_hz * t)
    half = length // 2
    return cfg.other_amplitude * np.concatenate([np.ones(half), -np.ones(length - half)])


def make_subject(
    cfg: BenchConfig,
    index: int,
    seed: int,
    rate_hz: float,
    mixing: np.ndarray,
    g_pattern: np.ndarray,
    g_other: np.ndarray,
) -> BenchSubject:
    rng = np.random.default_rng([seed, index])
    scale = 1.0 + cfg.subject_spread * (index - (cfg.n_subjects - 1) / 2.0)
    A = linalg.block_diag(*[_rotation(f * scale, rate_hz, cfg.modulus) for f in cfg.rhythms_hz])
    model = LdsModel(A=A, C=mixing, method="bench")

    phases = rng.uniform(0.0, 2.0 * np.pi, size=len(cfg.rhythms_hz))
    x0 = np.concatenate([[np.cos(p), np.sin(p)] for p in phases])

    n_samples = int(round(cfg.duration_s * rate_hz))
    kinds = ["pattern"] * cfg.n_pattern_events + ["other"] * cfg.n_other_events
    durations = [
        int(round(rng.uniform(*(cfg.pattern_duration_s if k == "pattern" else cfg.other_duration_s)) * rate_hz))
        for k in kinds
    ]
    events = _schedule(
        rng, kinds, durations,
        lead_in=int(round(cfg.lead_in_s * rate_hz)),
        n_samples=n_samples,
        spacing=int(round(cfg.min_spacing_s * rate_hz)),
    )

    # Column 0 drives the pattern direction, column 1 the other direction.
    drive = np.zeros((n_samples, 2))
    for kind, start, end in events:
        drive[start:end, 0 if kind == "pattern" else 1] = _waveform(kind, end - start, cfg, rate_hz)
    inputs = [mixing.T @ np.hstack([g_pattern, g_other])]
    if cfg.process_noise_std > 0:
        drive = np.hstack([drive, cfg.process_noise_std * rng.normal(size=(n_samples, model.n))])
        inputs.append(np.eye(model.n))
    directions = PatternMatrix(np.hstack(inputs))
    series, _ = simulate_lds(
        model, x0, n_samples,
        pattern=directions,
        disturbance=DisturbanceSignal(drive),
        noise_std=cfg.noise_std,
        seed=int(rng.integers(2 ** 31)),
        rate_hz=rate_hz,
    )
    labels = {
        cls: LabelSet(tuple((a, b) for kind, a, b in events if kind == cls), cls)
        for cls in ("pattern", "other")
    }
    return BenchSubject(
        name=f"s{index + 1:02d}",
        model=model,
        pattern_signature=g_pattern,
        other_signature=g_other,
        series=series,
        labels=labels,
        x0=x0,
    )


def generate_bench(cfg: BenchConfig, seed: int, rate_hz: float = 200.0) -> List[BenchSubject]:
    m = 2 * len(cfg.rhythms_hz)
    rng = np.random.default_rng(seed)
    mixing = _orthogonal(rng, m)
    g_pattern = rng.normal(size=(m, 1))
    g_pattern /= np.linalg.norm(g_pattern)
    g_other = rng.normal(size=(m, 1))
    g_other -= g_pattern * (g_pattern.T @ g_other).item()
    g_other /= np.linalg.norm(g_other)
    return [
        make_subject(cfg, s, seed, rate_hz, mixing, g_pattern, g_other)
        for s in range(cfg.n_subjects)
    ]
