"""Scoring detections against labelled intervals.

Overlaps are counted in samples on half-open intervals:

    precision = sum of overlaps / sum of predicted lengths
    recall    = sum of overlaps / sum of labelled lengths
"""
import asyncio
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel

from src.osad.core.designer import ResidualDesign, design_residual, pattern_from_observed, residual_streams
from src.osad.core.detector import AlertInterval, CusumConfig, Stream, detect_stream, scalarize
from src.osad.core.model import Interval, LdsModel, TimeSeries, one_step_errors, to_observer_basis
from src.osad.errors import InvalidInputError, UndefinedMetricError

IntervalLike = Union[AlertInterval, Tuple[int, int]]
LABEL_CLASSES = ("pattern", "other")


@dataclass(frozen=True)
class LabelSet:
    intervals: Tuple[Interval, ...] = ()
    label_class: str = "pattern"

    def __post_init__(self):
        intervals = tuple((int(a), int(b)) for a, b in self.intervals)
        for (a, b) in intervals:
            if not a < b:
                raise InvalidInputError(f"label interval [{a}, {b}) is empty")
        for (_, b0), (a1, _) in zip(intervals, intervals[1:]):
            if a1 < b0:
                raise InvalidInputError(f"label intervals must be sorted and disjoint (at {a1})")
        if self.label_class not in LABEL_CLASSES:
            raise InvalidInputError(f"unknown label class {self.label_class!r}")
        object.__setattr__(self, "intervals", intervals)

    @property
    def total_length(self) -> int:
        return sum(b - a for a, b in self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)


def _pairs(intervals: Union[LabelSet, Sequence[IntervalLike]]) -> np.ndarray:
    if isinstance(intervals, LabelSet):
        intervals = intervals.intervals
    rows = [(iv.start, iv.end) if isinstance(iv, AlertInterval) else tuple(iv) for iv in intervals]
    return np.array(rows, dtype=np.int64).reshape(-1, 2)


def _overlaps(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    lo = np.maximum(X[:, None, 0], Y[None, :, 0])
    hi = np.minimum(X[:, None, 1], Y[None, :, 1])
    return np.clip(hi - lo, 0, None)


# ---------------------------------------------------------------------------
# Interval metrics
# ---------------------------------------------------------------------------

def interval_precision(labels: LabelSet, preds: Sequence[IntervalLike]) -> float:
    L, P = _pairs(labels), _pairs(preds)
    predicted = int(np.sum(P[:, 1] - P[:, 0]))
    if predicted == 0:
        raise UndefinedMetricError("precision is undefined without predicted intervals")
    return float(_overlaps(L, P).sum() / predicted)


def interval_recall(labels: LabelSet, preds: Sequence[IntervalLike]) -> float:
    L, P = _pairs(labels), _pairs(preds)
    labelled = int(np.sum(L[:, 1] - L[:, 0]))
    if labelled == 0:
        raise UndefinedMetricError("recall is undefined without labelled intervals")
    return float(_overlaps(L, P).sum() / labelled)


def _or_none(metric: Callable, labels: LabelSet, preds: Sequence[IntervalLike]) -> Optional[float]:
    try:
        return metric(labels, preds)
    except UndefinedMetricError:
        return None


def match_intervals(labels: LabelSet, preds: Sequence[IntervalLike]) -> List[Tuple[Interval, Interval]]:
    """Greedy maximum-overlap matching; ties go to the earlier label, then the earlier prediction."""
    L, P = _pairs(labels), _pairs(preds)
    if not (len(L) and len(P)):
        return []
    ov = _overlaps(L, P)
    candidates = sorted(
        ((int(ov[i, j]), i, j) for i, j in zip(*np.nonzero(ov))),
        key=lambda c: (-c[0], L[c[1], 0], P[c[2], 0]),
    )
    used_l, used_p, pairs = set(), set(), []
    for _, i, j in candidates:
        if i in used_l or j in used_p:
            continue
        used_l.add(i)
        used_p.add(j)
        pairs.append(((int(L[i, 0]), int(L[i, 1])), (int(P[j, 0]), int(P[j, 1]))))
    return sorted(pairs)


@dataclass(frozen=True)
class DelayStats:
    """Onset/offset lags in seconds; positive means the prediction came first."""

    mean_a: float
    std_a: float
    mean_b: float
    std_b: float
    n_pairs: int


def delay_offsets(pairs: Sequence[Tuple[Interval, Interval]], rate_hz: float) -> Tuple[np.ndarray, np.ndarray]:
    arr = np.array([(l[0], l[1], p[0], p[1]) for l, p in pairs], dtype=float).reshape(-1, 4)
    return (arr[:, 0] - arr[:, 2]) / rate_hz, (arr[:, 1] - arr[:, 3]) / rate_hz


def delay_stats(pairs: Sequence[Tuple[Interval, Interval]], rate_hz: float) -> DelayStats:
    if not pairs:
        raise UndefinedMetricError("delay statistics need at least one matched pair")
    if not rate_hz > 0:
        raise InvalidInputError(f"rate_hz must be positive, got {rate_hz}")
    d_a, d_b = delay_offsets(pairs, rate_hz)
    ddof_std = (lambda d: float(np.std(d, ddof=1))) if len(pairs) > 1 else (lambda d: 0.0)
    return DelayStats(
        mean_a=float(np.mean(d_a)),
        std_a=ddof_std(d_a),
        mean_b=float(np.mean(d_b)),
        std_b=ddof_std(d_b),
        n_pairs=len(pairs),
    )


# ---------------------------------------------------------------------------
# Per-class summaries
# ---------------------------------------------------------------------------

class ClassMetrics(BaseModel):
    label_class: str
    labeled: int
    detected: int
    labeled_min: float
    detected_min: float
    recall: Optional[float]
    precision: Optional[float]


def classify_alerts(
    all_anomalies: Sequence[AlertInterval],
    selective: Sequence[AlertInterval],
) -> Tuple[List[AlertInterval], List[AlertInterval]]:
    """(pattern, other): anomalies the selective stream stayed quiet on are pattern detections."""
    S = _pairs(selective)
    pattern = []
    for iv in all_anomalies:
        if not len(S) or not _overlaps(_pairs([iv]), S).any():
            pattern.append(iv)
    return pattern, list(selective)


def class_metrics(labels: LabelSet, preds: Sequence[IntervalLike], rate_hz: float) -> ClassMetrics:
    L, P = _pairs(labels), _pairs(preds)
    detected = int((_overlaps(L, P) > 0).any(axis=1).sum()) if len(L) and len(P) else 0
    return ClassMetrics(
        label_class=labels.label_class,
        labeled=len(L),
        detected=detected,
        labeled_min=float(np.sum(L[:, 1] - L[:, 0])) / rate_hz / 60.0,
        detected_min=float(np.sum(P[:, 1] - P[:, 0])) / rate_hz / 60.0,
        recall=_or_none(interval_recall, labels, preds),
        precision=_or_none(interval_precision, labels, preds),
    )


# ---------------------------------------------------------------------------
# Residual suppression
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SuppressionReport:
    median_in: float
    median_out: float
    separation: float
    n_in: int
    n_out: int


def suppression_distances(
    e: np.ndarray,
    r: np.ndarray,
    pattern_intervals: Sequence[IntervalLike],
) -> Tuple[np.ndarray, np.ndarray]:
    """||r(t) - e(t)|| inside and outside the pattern intervals.

    When r has fewer channels than e the distance is | ||r(t)|| - ||e(t)|| |.
    """
    e = np.asarray(e, dtype=float)
    r = np.asarray(r, dtype=float)
    if e.shape[0] != r.shape[0]:
        raise InvalidInputError(f"e has {e.shape[0]} samples, r has {r.shape[0]}")
    if e.shape == r.shape:
        d = scalarize(r - e)
    else:
        d = np.abs(scalarize(r) - scalarize(e))
    inside = np.zeros(d.size, dtype=bool)
    for a, b in _pairs(pattern_intervals):
        inside[a:b] = True
    return d[inside], d[~inside]


def residual_suppression_report(
    e: np.ndarray,
    r: np.ndarray,
    pattern_intervals: Sequence[IntervalLike],
) -> SuppressionReport:
    d_in, d_out = suppression_distances(e, r, pattern_intervals)
    if d_in.size == 0 or d_out.size == 0:
        raise UndefinedMetricError("suppression report needs samples both inside and outside pattern intervals")
    median_in = float(np.median(d_in))
    median_out = float(np.median(d_out))
    with np.errstate(divide="ignore", invalid="ignore"):
        separation = float(np.divide(median_in, median_out))
    return SuppressionReport(median_in, median_out, separation, int(d_in.size), int(d_out.size))


# ---------------------------------------------------------------------------
# Transfer grid
# ---------------------------------------------------------------------------

@dataclass
class SubjectCase:
    name: str
    model: LdsModel
    design: ResidualDesign
    series: TimeSeries
    labels: Dict[str, LabelSet]
    signature: Optional[np.ndarray] = None


@dataclass
class TransferGrid:
    """recall[i, j]: subject i's model on subject j's data; averaged_* per data subject."""

    names: List[str]
    recall: np.ndarray
    precision: np.ndarray
    averaged_recall: np.ndarray
    averaged_precision: np.ndarray
    stream: str = "all_anomalies"
    label_class: str = "pattern"

    def diagonal_mean(self, metric: str = "recall") -> float:
        return float(np.nanmean(np.diag(getattr(self, metric))))

    def off_diagonal_mean(self, metric: str = "recall") -> float:
        values = getattr(self, metric)
        mask = ~np.eye(len(self.names), dtype=bool)
        return float(np.nanmean(values[mask]))


def average_models(models: Sequence[LdsModel]) -> LdsModel:
    """Element-wise mean of A and C after aligning every model to its observer basis."""
    if not models:
        raise InvalidInputError("no models to average")
    aligned = [to_observer_basis(m) for m in models]
    shapes = {(m.A.shape, m.C.shape) for m in aligned}
    if len(shapes) != 1:
        raise InvalidInputError(f"models have different shapes: {sorted(shapes)}")
    return LdsModel(
        A=np.mean([m.A for m in aligned], axis=0),
        C=np.mean([m.C for m in aligned], axis=0),
        method="averaged",
    )


@dataclass
class GridSettings:
    cusum: CusumConfig = field(default_factory=CusumConfig)
    gap: int = 20
    min_len: int = 50
    warmup: int = 1
    stream: Stream = "all_anomalies"
    label_class: str = "pattern"
    max_concurrent: int = 4


def evaluate_cell(
    model: LdsModel,
    design: Optional[ResidualDesign],
    case: SubjectCase,
    settings: GridSettings,
) -> Tuple[float, float]:
    """(recall, precision) of one model/design on one subject; undefined metrics are NaN."""
    if settings.stream == "selective":
        if design is None:
            return float("nan"), float("nan")
        _, r = residual_streams(model, design, case.series)
        values = scalarize(r)
    else:
        values = scalarize(one_step_errors(model, case.series))
    preds = detect_stream(values, settings.cusum, settings.gap, settings.min_len, settings.stream, settings.warmup)
    labels = case.labels[settings.label_class]
    recall = _or_none(interval_recall, labels, preds)
    precision = _or_none(interval_precision, labels, preds)
    return (
        float("nan") if recall is None else recall,
        float("nan") if precision is None else precision,
    )


def _averaged_design(model: LdsModel, case: SubjectCase) -> Optional[ResidualDesign]:
    if case.signature is None:
        return None
    return design_residual(model, pattern_from_observed(model, case.signature), require_two_tap=True)


async def _run_cells(jobs: List[Tuple], max_concurrent: int) -> List[Tuple[float, float]]:
    results = []
    for i in range(0, len(jobs), max_concurrent):
        batch = jobs[i:i + max_concurrent]
        results.extend(await asyncio.gather(*[asyncio.to_thread(evaluate_cell, *job) for job in batch]))
    return results


def transfer_grid(cases: Sequence[SubjectCase], settings: Optional[GridSettings] = None) -> TransferGrid:
    """Cross-subject metrics plus an averaged-model row; cells run concurrently."""
    settings = settings or GridSettings()
    if len(cases) < 2:
        raise InvalidInputError(f"transfer grid needs at least 2 subjects, got {len(cases)}")
    S = len(cases)
    averaged = average_models([c.model for c in cases])

    jobs = [(cases[i].model, cases[i].design, cases[j], settings) for i in range(S) for j in range(S)]
    for case in cases:
        design = _averaged_design(averaged, case) if settings.stream == "selective" else None
        jobs.append((averaged, design, case, settings))

    results = np.array(asyncio.run(_run_cells(jobs, max(1, settings.max_concurrent))))
    grid = results[:S * S].reshape(S, S, 2)
    return TransferGrid(
        names=[c.name for c in cases],
        recall=grid[:, :, 0],
        precision=grid[:, :, 1],
        averaged_recall=results[S * S:, 0],
        averaged_precision=results[S * S:, 1],
        stream=settings.stream,
        label_class=settings.label_class,
    )
