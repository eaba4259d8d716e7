"""CSV codecs for series, labels, alert intervals and plain matrices.

Lines starting with '#' are metadata (`# seed=7`) and are skipped by readers.
Numbers are written with 17 significant digits so a write/read cycle is exact.
"""
import csv
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.osad.core.detector import STREAMS, AlertInterval
from src.osad.core.evaluation import LABEL_CLASSES, LabelSet
from src.osad.core.model import TimeSeries
from src.osad.errors import ArtifactError, ArtifactFormatError, InvalidInputError, NonFiniteError

SERIES_FILE = "series.csv"
LABELS_FILE = "labels.csv"
ALERTS_FILE = "alerts.csv"
PATTERN_FILE = "pattern.csv"


def fmt(value: float) -> str:
    return format(float(value), ".17g")


def _rows(path: Path) -> Iterator[Tuple[int, List[str]]]:
    """(1-based line number, cells) for every non-comment, non-blank line."""
    if not path.exists():
        raise ArtifactError(f"missing artifact: {path}")
    with open(path, encoding="utf-8", newline="") as f:
        for lineno, line in enumerate(f, 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            yield lineno, next(csv.reader([stripped]))


def _float(path: Path, lineno: int, cell: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise ArtifactFormatError(str(path), lineno, f"not a number: {cell!r}") from None


def _int(path: Path, lineno: int, cell: str) -> int:
    try:
        return int(cell)
    except ValueError:
        raise ArtifactFormatError(str(path), lineno, f"not an integer: {cell!r}") from None


def _write(path: Path, header: Optional[Sequence[str]], rows: Sequence[Sequence[str]], seed: Optional[int]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        if seed is not None:
            f.write(f"# seed={seed}\n")
        writer = csv.writer(f, lineterminator="\n")
        if header is not None:
            writer.writerow(header)
        writer.writerows(rows)


def read_seed(path: Path) -> Optional[int]:
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.startswith("# seed="):
                return int(line.split("=", 1)[1])
            if not line.startswith("#"):
                return None
    return None


# --- series ---

def write_series(path: Path, series: TimeSeries, seed: Optional[int] = None) -> None:
    rows = [[str(t)] + [fmt(v) for v in row] for t, row in enumerate(series.samples)]
    _write(Path(path), ["t", *series.channel_names], rows, seed)


def read_series(path: Path, rate_hz: float) -> TimeSeries:
    path = Path(path)
    rows = _rows(path)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise ArtifactFormatError(str(path), 1, "empty series file") from None
    if len(header) < 2 or header[0] != "t":
        raise ArtifactFormatError(str(path), lineno, "header must be t,<ch1>,...,<chm>")
    names = tuple(header[1:])
    samples = []
    for lineno, cells in rows:
        if len(cells) != len(header):
            raise ArtifactFormatError(str(path), lineno, f"expected {len(header)} fields, got {len(cells)}")
        if _int(path, lineno, cells[0]) != len(samples):
            raise ArtifactFormatError(str(path), lineno, f"expected t = {len(samples)}, got {cells[0]}")
        row = [_float(path, lineno, c) for c in cells[1:]]
        if not all(np.isfinite(row)):
            raise NonFiniteError(f"{path} line {lineno}", len(samples))
        samples.append(row)
    if not samples:
        raise ArtifactFormatError(str(path), lineno, "series has no samples")
    return TimeSeries(np.array(samples), rate_hz, names)


# --- labels ---

def write_labels(path: Path, labels: Dict[str, LabelSet], seed: Optional[int] = None) -> None:
    rows = [
        [cls, str(a), str(b)]
        for cls in LABEL_CLASSES if cls in labels
        for a, b in labels[cls].intervals
    ]
    _write(Path(path), ["class", "start", "end"], rows, seed)


def read_labels(path: Path) -> Dict[str, LabelSet]:
    path = Path(path)
    found: Dict[str, List[Tuple[int, int]]] = {cls: [] for cls in LABEL_CLASSES}
    for lineno, cells in _rows(path):
        if cells == ["class", "start", "end"]:
            continue
        if len(cells) != 3 or cells[0] not in found:
            raise ArtifactFormatError(str(path), lineno, "expected class,start,end with class pattern|other")
        found[cells[0]].append((_int(path, lineno, cells[1]), _int(path, lineno, cells[2])))
    try:
        return {cls: LabelSet(tuple(sorted(iv)), cls) for cls, iv in found.items()}
    except InvalidInputError as exc:
        raise ArtifactFormatError(str(path), 1, str(exc)) from exc


# --- alerts ---

def write_alerts(path: Path, intervals: Sequence[AlertInterval], seed: Optional[int] = None) -> None:
    rows = [[iv.stream, str(iv.start), str(iv.end), fmt(iv.peak_stat)] for iv in intervals]
    _write(Path(path), ["stream", "start", "end", "peak_stat"], rows, seed)


def read_alerts(path: Path) -> Dict[str, List[AlertInterval]]:
    path = Path(path)
    out: Dict[str, List[AlertInterval]] = {s: [] for s in STREAMS}
    for lineno, cells in _rows(path):
        if cells == ["stream", "start", "end", "peak_stat"]:
            continue
        if len(cells) != 4 or cells[0] not in out:
            raise ArtifactFormatError(str(path), lineno, "expected stream,start,end,peak_stat")
        try:
            out[cells[0]].append(AlertInterval(
                _int(path, lineno, cells[1]),
                _int(path, lineno, cells[2]),
                cells[0],
                _float(path, lineno, cells[3]),
            ))
        except InvalidInputError as exc:
            raise ArtifactFormatError(str(path), lineno, str(exc)) from exc
    return out


# --- matrices ---

def write_matrix(path: Path, M: np.ndarray, seed: Optional[int] = None) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    _write(Path(path), None, [[fmt(v) for v in row] for row in M], seed)


def read_matrix(path: Path) -> np.ndarray:
    path = Path(path)
    rows = []
    for lineno, cells in _rows(path):
        if rows and len(cells) != len(rows[0]):
            raise ArtifactFormatError(str(path), lineno, f"expected {len(rows[0])} columns, got {len(cells)}")
        rows.append([_float(path, lineno, c) for c in cells])
    if not rows:
        raise ArtifactFormatError(str(path), 1, "matrix file is empty")
    return np.array(rows)
