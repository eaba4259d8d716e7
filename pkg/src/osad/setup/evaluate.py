"""Score alert intervals against labels and build the cross-subject transfer grid."""
from typing import Dict, List

import numpy as np
import pandas as pd
from langsmith import traceable

from src.osad.config import RunConfig
from src.osad.core.evaluation import (
    GridSettings,
    SubjectCase,
    classify_alerts,
    class_metrics,
    delay_stats,
    match_intervals,
    transfer_grid,
)
from src.osad.errors import ArtifactError
from utils.reports import grid_frame, render_table, write_table
from utils.series import (
    ALERTS_FILE,
    LABELS_FILE,
    PATTERN_FILE,
    SERIES_FILE,
    read_alerts,
    read_labels,
    read_matrix,
    read_series,
)
from utils.store import DESIGN_FILE, REPORTS_DIR, load_model, subject_dir, subject_names


def load_case(cfg: RunConfig, name: str) -> SubjectCase:
    d = subject_dir(cfg.root, name)
    stored = load_model(d / DESIGN_FILE)
    if stored.design is None:
        raise ArtifactError(f"{d / DESIGN_FILE} has no residual design (run `design` first)")
    signature = None
    if cfg.pattern.source == "matrix" and cfg.pattern.space == "observed":
        signature = read_matrix(cfg.pattern.path or d / PATTERN_FILE)
    return SubjectCase(
        name=name,
        model=stored.model,
        design=stored.design,
        series=read_series(d / SERIES_FILE, cfg.rate_hz),
        labels=read_labels(d / LABELS_FILE),
        signature=signature,
    )


def _subject_tables(cfg: RunConfig, names: List[str]) -> Dict[str, pd.DataFrame]:
    summary, metrics, delays = [], [], []
    for name in names:
        d = subject_dir(cfg.root, name)
        labels = read_labels(d / LABELS_FILE)
        alerts = read_alerts(d / ALERTS_FILE)
        predicted = dict(zip(("pattern", "other"), classify_alerts(alerts["all_anomalies"], alerts["selective"])))
        for cls in ("pattern", "other"):
            cm = class_metrics(labels[cls], predicted[cls], cfg.rate_hz)
            summary.append({"subject": name, "class": cls, "labeled": cm.labeled, "detected": cm.detected})
            metrics.append({
                "subject": name,
                "class": cls,
                "labeled_min": cm.labeled_min,
                "detected_min": cm.detected_min,
                "recall": np.nan if cm.recall is None else cm.recall,
                "precision": np.nan if cm.precision is None else cm.precision,
            })
            pairs = match_intervals(labels[cls], predicted[cls])
            if pairs:
                ds = delay_stats(pairs, cfg.rate_hz)
                delays.append({
                    "subject": name, "class": cls, "n_pairs": ds.n_pairs,
                    "onset_mean_s": ds.mean_a, "onset_std_s": ds.std_a,
                    "offset_mean_s": ds.mean_b, "offset_std_s": ds.std_b,
                })
    return {
        "detection_summary": pd.DataFrame(summary),
        "class_metrics": pd.DataFrame(metrics),
        "delays": pd.DataFrame(delays, columns=[
            "subject", "class", "n_pairs", "onset_mean_s", "onset_std_s", "offset_mean_s", "offset_std_s",
        ]),
    }


@traceable(name="osad.eval")
def cmd_eval(cfg: RunConfig) -> Dict[str, pd.DataFrame]:
    print("Evaluating detections...")
    names = subject_names(cfg.root, cfg.subjects)
    tables = _subject_tables(cfg, names)

    if len(names) > 1:
        cases = [load_case(cfg, name) for name in names]
        settings = GridSettings(cusum=cfg.cusum, gap=cfg.gap, min_len=cfg.min_len, warmup=cfg.warmup)
        print(f"    - Transfer grid: {len(names)} x {len(names)} cells plus the averaged model")
        grid = transfer_grid(cases, settings)
        tables["transfer_recall"] = grid_frame(grid.names, grid.recall, grid.averaged_recall)
        tables["transfer_precision"] = grid_frame(grid.names, grid.precision, grid.averaged_precision)
        print(
            f"    - Diagonal recall {grid.diagonal_mean():.4f}, off-diagonal {grid.off_diagonal_mean():.4f}, "
            f"averaged {float(np.nanmean(grid.averaged_recall)):.4f}"
        )

    out = cfg.root / REPORTS_DIR
    for title, df in tables.items():
        write_table(df, out / f"{title}.csv", cfg.seed)
        print()
        print(render_table(df, title.replace("_", " ").title()))
    return tables
