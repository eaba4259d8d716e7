"""Versioned text file for a learned model and, optionally, its residual design.

    osad-model v1
    seed 7
    method subspace
    n 6
    m 6
    rank 6
    numerical_rank 6
    A
    <n rows, row-major, 17 significant digits>
    C
    <m rows>
    design left 5          (optional: feedback path and p)
    W
    <p rows>
    F
    <n rows>
    sha256 <digest of every preceding line>
"""
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from src.osad.core.designer import ResidualDesign
from src.osad.core.model import LdsModel
from src.osad.errors import ArtifactError, ArtifactFormatError, InvalidInputError
from utils.series import fmt

MAGIC = "osad-model"
VERSION = 1
MODEL_FILE = "model.model"
TRUTH_FILE = "truth.model"
DESIGN_FILE = "design.model"


@dataclass
class StoredModel:
    model: LdsModel
    seed: Optional[int] = None
    design: Optional[ResidualDesign] = None


def _matrix_lines(name: str, M: np.ndarray) -> List[str]:
    return [name] + [" ".join(fmt(v) for v in row) for row in np.atleast_2d(M)]


def dumps_model(model: LdsModel, seed: Optional[int] = None, design: Optional[ResidualDesign] = None) -> str:
    lines = [
        f"{MAGIC} v{VERSION}",
        f"seed {'-' if seed is None else seed}",
        f"method {model.method}",
        f"n {model.n}",
        f"m {model.m}",
        f"rank {model.n}",
        f"numerical_rank {'-' if model.numerical_rank is None else model.numerical_rank}",
    ]
    lines += _matrix_lines("A", model.A)
    lines += _matrix_lines("C", model.C)
    if design is not None:
        lines.append(f"design {design.feedback} {design.p}")
        lines += _matrix_lines("W", design.W)
        lines += _matrix_lines("F", design.F)
    body = "\n".join(lines) + "\n"
    return body + f"sha256 {hashlib.sha256(body.encode('utf-8')).hexdigest()}\n"


def save_model(path: Path, model: LdsModel, seed: Optional[int] = None,
               design: Optional[ResidualDesign] = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_model(model, seed, design), encoding="utf-8")


class _Reader:
    def __init__(self, path: str, lines: List[str]):
        self.path = path
        self.lines = lines
        self.pos = 0

    def fail(self, message: str, offset: int = 0):
        raise ArtifactFormatError(self.path, self.pos + offset, message)

    def next(self) -> str:
        if self.pos >= len(self.lines):
            self.fail("unexpected end of file", 1)
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def peek(self) -> Optional[str]:
        return self.lines[self.pos] if self.pos < len(self.lines) else None

    def field(self, key: str) -> str:
        parts = self.next().split()
        if len(parts) != 2 or parts[0] != key:
            self.fail(f"expected '{key} <value>'")
        return parts[1]

    def integer(self, key: str, optional: bool = False) -> Optional[int]:
        value = self.field(key)
        if optional and value == "-":
            return None
        try:
            return int(value)
        except ValueError:
            self.fail(f"{key} must be an integer, got {value!r}")

    def matrix(self, name: str, rows: int, cols: int) -> np.ndarray:
        if self.next().strip() != name:
            self.fail(f"expected matrix header {name!r}")
        out = np.empty((rows, cols))
        for i in range(rows):
            cells = self.next().split()
            if len(cells) != cols:
                self.fail(f"{name} row {i + 1}: expected {cols} values, got {len(cells)}")
            try:
                out[i] = [float(c) for c in cells]
            except ValueError:
                self.fail(f"{name} row {i + 1}: not a number")
        if not np.all(np.isfinite(out)):
            self.fail(f"{name} has non-finite entries")
        return out


def loads_model(text: str, path: str = "<string>") -> StoredModel:
    lines = text.splitlines()
    if not lines or lines[0] != f"{MAGIC} v{VERSION}":
        raise ArtifactFormatError(path, 1, f"not an {MAGIC} v{VERSION} file")
    if not lines[-1].startswith("sha256 "):
        raise ArtifactFormatError(path, len(lines), "missing sha256 line")
    body = "\n".join(lines[:-1]) + "\n"
    if hashlib.sha256(body.encode("utf-8")).hexdigest() != lines[-1].split(" ", 1)[1].strip():
        raise ArtifactFormatError(path, len(lines), "content hash mismatch")

    r = _Reader(path, lines[:-1])
    r.next()
    seed = r.integer("seed", optional=True)
    method = r.field("method")
    n = r.integer("n")
    m = r.integer("m")
    if r.integer("rank") != n:
        r.fail("rank must equal n")
    numerical = r.integer("numerical_rank", optional=True)
    A = r.matrix("A", n, n)
    C = r.matrix("C", m, n)
    try:
        model = LdsModel(A=A, C=C, method=method, numerical_rank=numerical)
    except InvalidInputError as exc:
        raise ArtifactFormatError(path, r.pos, str(exc)) from exc

    design = None
    header = r.peek()
    if header is not None:
        parts = r.next().split()
        if len(parts) != 3 or parts[0] != "design" or parts[1] not in ("left", "right", "given"):
            r.fail("expected 'design <left|right|given> <p>'")
        try:
            p = int(parts[2])
        except ValueError:
            r.fail(f"p must be an integer, got {parts[2]!r}")
        W = r.matrix("W", p, m)
        F = r.matrix("F", n, m)
        design = ResidualDesign.from_gains(model, W, F, feedback=parts[1])
    if r.peek() is not None:
        r.fail("trailing content", 1)
    return StoredModel(model=model, seed=seed, design=design)


def load_model(path: Path) -> StoredModel:
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"missing artifact: {path}")
    return loads_model(path.read_text(encoding="utf-8"), str(path))


# --- workspace layout ---

BENCH_MANIFEST = "bench.json"
DESIGN_REPORT_FILE = "design_report.json"
REPORTS_DIR = "reports"


def subject_dir(root: Path, name: str) -> Path:
    return Path(root) / name


def write_manifest(root: Path, manifest: dict) -> None:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    (root / BENCH_MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def subject_names(root: Path, selected: Optional[List[str]] = None) -> List[str]:
    """Explicitly selected subjects, else every subject listed in bench.json."""
    if selected:
        return list(selected)
    path = Path(root) / BENCH_MANIFEST
    if not path.exists():
        raise ArtifactError(f"missing artifact: {path} (run `synth` or set subjects)")
    try:
        names = json.loads(path.read_text(encoding="utf-8"))["subjects"]
    except (json.JSONDecodeError, KeyError) as exc:
        raise ArtifactFormatError(str(path), 1, f"unreadable manifest: {exc}") from exc
    if not names:
        raise ArtifactError(f"{path} lists no subjects")
    return list(names)
