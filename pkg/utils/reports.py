"""Text tables and plot-ready CSV frames for the eval and report stages."""
from pathlib import Path
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd


def render_table(df: pd.DataFrame, title: str, digits: int = 4) -> str:
    body = df.to_string(index=False, float_format=lambda v: f"{v:.{digits}f}", na_rep="n/a")
    rule = "-" * max(len(title), max((len(line) for line in body.splitlines()), default=0))
    return f"{title}\n{rule}\n{body}\n"


def write_table(df: pd.DataFrame, path: Path, seed: Optional[int] = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        if seed is not None:
            f.write(f"# seed={seed}\n")
        df.to_csv(f, index=False, lineterminator="\n", float_format="%.17g")


def histogram_frame(samples: Dict[str, np.ndarray], bins: int = 50, log: bool = False) -> pd.DataFrame:
    """Shared-edge histograms, one count column per named sample set."""
    values = [np.asarray(v, dtype=float).ravel() for v in samples.values()]
    pooled = np.concatenate(values) if values else np.empty(0)
    if log:
        positive = pooled[pooled > 0]
        lo = positive.min() if positive.size else 1e-12
        hi = positive.max() if positive.size else 1.0
        edges = np.geomspace(lo, max(hi, lo * 10), bins + 1)
    else:
        edges = np.histogram_bin_edges(pooled if pooled.size else [0.0, 1.0], bins=bins)
    frame = pd.DataFrame({"bin_lo": edges[:-1], "bin_hi": edges[1:]})
    for name, v in zip(samples, values):
        frame[name] = np.histogram(v, bins=edges)[0]
    return frame


def scatter_frame(columns: Dict[str, np.ndarray], stride: int = 1) -> pd.DataFrame:
    return pd.DataFrame({k: np.asarray(v, dtype=float)[::stride] for k, v in columns.items()})


def grid_frame(names: Sequence[str], values: np.ndarray, averaged: np.ndarray) -> pd.DataFrame:
    """Rows are the model used, columns the subject whose data it ran on."""
    frame = pd.DataFrame(np.asarray(values), columns=list(names))
    frame.insert(0, "model", list(names))
    averaged_row = pd.DataFrame([["averaged", *np.asarray(averaged).tolist()]], columns=frame.columns)
    return pd.concat([frame, averaged_row], ignore_index=True)
