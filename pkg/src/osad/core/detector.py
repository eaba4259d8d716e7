"""Two-sided CUSUM charts and the two OSAD alert streams.

Each chart is calibrated on a quiet window (mean mu0, unbiased std sigma) and
then runs

    S_hi(i) = max(0, S_hi(i-1) + x_i - mu0 - J)
    S_lo(i) = max(0, S_lo(i-1) + mu0 - J - x_i)

with J = delta*sigma/2 and H = (2/delta^2) ln((1-beta)/alpha) J. A sample is
flagged when either statistic exceeds H; both statistics then restart at 0.

The all-anomaly stream charts ||e(t)||, the selective stream charts ||r(t)||.
"""
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from src.osad.errors import (
    CalibrationError,
    InsufficientDataError,
    InvalidInputError,
    NonFiniteError,
)

Stream = Literal["all_anomalies", "selective"]
STREAMS: Tuple[str, ...] = ("all_anomalies", "selective")


class CusumConfig(BaseModel):
    alpha: float = Field(default=1e-4, gt=0, lt=1, description="False-alarm probability.")
    beta: float = Field(default=1e-4, gt=0, lt=1, description="Miss probability.")
    delta: float = Field(default=1.0, gt=0, description="Shift to detect, in sigmas.")
    calibration_len: int = Field(default=2000, ge=30, description="Samples used to estimate mu0 and sigma.")
    sigma_floor: float = Field(default=1e-12, ge=0, description="Smallest sigma used by the detection pipeline.")
    relative_floor: float = Field(
        default=1e-9, ge=0, description="Sigma floor relative to the largest calibration magnitude."
    )


# ---------------------------------------------------------------------------
# Chart state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CusumState:
    mu0: float
    sigma: float
    J: float
    H: float
    s_hi: float = 0.0
    s_lo: float = 0.0
    sample_index: int = 0


def calibrate(signal: Sequence[float], cfg: CusumConfig, sigma_floor: float = 0.0) -> CusumState:
    x = np.asarray(signal, dtype=float).ravel()
    window = x[:cfg.calibration_len]
    if window.size < cfg.calibration_len:
        raise InsufficientDataError(
            f"calibration needs {cfg.calibration_len} samples, got {window.size}"
        )
    if not np.all(np.isfinite(window)):
        raise NonFiniteError("calibration window", int(np.flatnonzero(~np.isfinite(window))[0]))
    mu0 = float(window.mean())
    sigma = max(float(window.std(ddof=1)), sigma_floor)
    if sigma == 0.0:
        raise CalibrationError("calibration window is constant (sigma = 0)")
    J = cfg.delta * sigma / 2.0
    H = (2.0 / cfg.delta ** 2) * math.log((1.0 - cfg.beta) / cfg.alpha) * J
    return CusumState(mu0=mu0, sigma=sigma, J=J, H=H)


def cusum_step(state: CusumState, value: float) -> Tuple[CusumState, bool]:
    if not math.isfinite(value):
        raise NonFiniteError("CUSUM input", state.sample_index)
    s_hi = max(0.0, state.s_hi + value - state.mu0 - state.J)
    s_lo = max(0.0, state.s_lo + state.mu0 - state.J - value)
    flagged = s_hi > state.H or s_lo > state.H
    if flagged:
        s_hi = s_lo = 0.0
    return replace(state, s_hi=s_hi, s_lo=s_lo, sample_index=state.sample_index + 1), flagged


class CusumChart:
    """Mutable single-owner chart; `update` mirrors cusum_step without allocating states."""

    def __init__(self, state: CusumState):
        self.mu0 = state.mu0
        self.sigma = state.sigma
        self.J = state.J
        self.H = state.H
        self.s_hi = state.s_hi
        self.s_lo = state.s_lo
        self.sample_index = state.sample_index

    @property
    def state(self) -> CusumState:
        return CusumState(self.mu0, self.sigma, self.J, self.H, self.s_hi, self.s_lo, self.sample_index)

    def update(self, value: float) -> Tuple[bool, float]:
        """Returns (flagged, statistic before any reset)."""
        if not math.isfinite(value):
            raise NonFiniteError("CUSUM input", self.sample_index)
        hi = self.s_hi + value - self.mu0 - self.J
        lo = self.s_lo + self.mu0 - self.J - value
        hi = hi if hi > 0.0 else 0.0
        lo = lo if lo > 0.0 else 0.0
        stat = hi if hi > lo else lo
        self.sample_index += 1
        if stat > self.H:
            self.s_hi = self.s_lo = 0.0
            return True, stat
        self.s_hi, self.s_lo = hi, lo
        return False, stat

    def run(self, values: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
        x = np.asarray(values, dtype=float).ravel()
        if not np.all(np.isfinite(x)):
            raise NonFiniteError("CUSUM input", self.sample_index + int(np.flatnonzero(~np.isfinite(x))[0]))
        flags = np.zeros(x.size, dtype=bool)
        stats = np.empty(x.size)
        hi, lo = self.s_hi, self.s_lo
        mu0, J, H = self.mu0, self.J, self.H
        for i, v in enumerate(x.tolist()):
            hi = hi + v - mu0 - J
            lo = lo + mu0 - J - v
            hi = hi if hi > 0.0 else 0.0
            lo = lo if lo > 0.0 else 0.0
            stat = hi if hi > lo else lo
            stats[i] = stat
            if stat > H:
                flags[i] = True
                hi = lo = 0.0
        self.s_hi, self.s_lo = hi, lo
        self.sample_index += x.size
        return flags, stats


# ---------------------------------------------------------------------------
# Intervals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AlertInterval:
    start: int
    end: int
    stream: str = "all_anomalies"
    peak_stat: float = 0.0

    def __post_init__(self):
        if not self.start < self.end:
            raise InvalidInputError(f"interval [{self.start}, {self.end}) is empty")
        if self.stream not in STREAMS:
            raise InvalidInputError(f"unknown stream {self.stream!r}")

    @property
    def length(self) -> int:
        return self.end - self.start


def intervals_from_flags(
    flags: Sequence[bool],
    gap: int,
    min_len: int,
    stream: Stream = "all_anomalies",
    stats: Optional[np.ndarray] = None,
) -> List[AlertInterval]:
    """Maximal runs of flags, bridging up to `gap` unflagged samples, keeping runs of >= min_len."""
    if gap < 0 or min_len < 0:
        raise InvalidInputError(f"gap and min_len must be >= 0, got {gap}, {min_len}")
    idx = np.flatnonzero(np.asarray(flags, dtype=bool))
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > gap + 1)
    starts = np.concatenate(([idx[0]], idx[breaks + 1]))
    ends = np.concatenate((idx[breaks], [idx[-1]])) + 1
    intervals = []
    for a, b in zip(starts.tolist(), ends.tolist()):
        if b - a < min_len:
            continue
        peak = float(np.max(stats[a:b])) if stats is not None else 0.0
        intervals.append(AlertInterval(a, b, stream, peak))
    return intervals


class IntervalBuilder:
    """Online counterpart of intervals_from_flags, emitting open/close events."""

    def __init__(self, stream: Stream, gap: int, min_len: int):
        self.stream = stream
        self.gap = gap
        self.min_len = min_len
        self.intervals: List[AlertInterval] = []
        self._start: Optional[int] = None
        self._last = -1
        self._peak = 0.0
        self._pending = 0.0
        self._opened = False

    def push(self, t: int, flagged: bool, stat: float) -> List[Dict]:
        events = []
        if self._start is not None and t - self._last - 1 > self.gap:
            events.extend(self._close())
        if flagged:
            if self._start is None:
                self._start, self._peak, self._pending = t, stat, 0.0
            self._peak = max(self._peak, self._pending, stat)
            self._pending = 0.0
            self._last = t
            if not self._opened and self._last + 1 - self._start >= self.min_len:
                self._opened = True
                events.append({"event": "alert_open", "stream": self.stream, "t": self._start})
        elif self._start is not None:
            self._pending = max(self._pending, stat)
        return events

    def finish(self) -> List[Dict]:
        return self._close() if self._start is not None else []

    def _close(self) -> List[Dict]:
        events = []
        start, end = self._start, self._last + 1
        if end - start >= self.min_len:
            interval = AlertInterval(start, end, self.stream, self._peak)
            self.intervals.append(interval)
            events.append({
                "event": "alert_close",
                "stream": self.stream,
                "t": end,
                "start": start,
                "peak_stat": round(self._peak, 6),
            })
        self._start = None
        self._opened = False
        return events


# ---------------------------------------------------------------------------
# Detection pipeline
# ---------------------------------------------------------------------------

def scalarize(series: np.ndarray) -> np.ndarray:
    """Per-sample Euclidean norm."""
    x = np.asarray(series, dtype=float)
    return np.abs(x) if x.ndim == 1 else np.linalg.norm(x, axis=1)


def calibrate_stream(values: np.ndarray, cfg: CusumConfig, warmup: int = 1) -> CusumState:
    """Calibrate on values[warmup:], with the configured sigma floors."""
    window = values[warmup:warmup + cfg.calibration_len]
    scale = float(np.max(np.abs(window))) if window.size and np.all(np.isfinite(window)) else 0.0
    floor = max(cfg.sigma_floor, cfg.relative_floor * scale)
    return calibrate(values[warmup:], cfg, sigma_floor=floor)


def detect_stream(
    values: np.ndarray,
    cfg: CusumConfig,
    gap: int,
    min_len: int,
    stream: Stream,
    warmup: int = 1,
) -> List[AlertInterval]:
    chart = CusumChart(calibrate_stream(values, cfg, warmup))
    flags = np.zeros(values.size, dtype=bool)
    stats = np.zeros(values.size)
    flags[warmup:], stats[warmup:] = chart.run(values[warmup:])
    return intervals_from_flags(flags, gap, min_len, stream, stats)


def run_selective_detection(
    e: np.ndarray,
    r: np.ndarray,
    cfg: CusumConfig,
    gap: int,
    min_len: int,
    warmup: int = 1,
) -> Tuple[List[AlertInterval], List[AlertInterval]]:
    """(all_anomalies, selective) interval lists from the error and residual series.

    The first `warmup` samples are neither calibrated on nor flagged.
    """
    e_norm, r_norm = scalarize(e), scalarize(r)
    if e_norm.size != r_norm.size:
        raise InvalidInputError(f"e has {e_norm.size} samples, r has {r_norm.size}")
    if warmup < 0:
        raise InvalidInputError(f"warmup must be >= 0, got {warmup}")
    return (
        detect_stream(e_norm, cfg, gap, min_len, "all_anomalies", warmup),
        detect_stream(r_norm, cfg, gap, min_len, "selective", warmup),
    )


class SelectiveDetector:
    """Streams (||e||, ||r||) pairs through both charts and emits live alert events."""

    def __init__(self, e_state: CusumState, r_state: CusumState, gap: int, min_len: int, warmup: int = 1):
        self._charts = {"all_anomalies": CusumChart(e_state), "selective": CusumChart(r_state)}
        self._builders = {s: IntervalBuilder(s, gap, min_len) for s in STREAMS}
        self._warmup = warmup

    def push(self, t: int, e_value: float, r_value: float) -> List[Dict]:
        if t < self._warmup:
            return []
        events = []
        for stream, value in (("all_anomalies", e_value), ("selective", r_value)):
            flagged, stat = self._charts[stream].update(value)
            events.extend(self._builders[stream].push(t, flagged, stat))
        return events

    def finish(self) -> List[Dict]:
        return [event for s in STREAMS for event in self._builders[s].finish()]

    def intervals(self, stream: Stream) -> List[AlertInterval]:
        return list(self._builders[stream].intervals)
