"""Plot-ready CSVs: RMSE vs rank per identification method, residual suppression histograms,
|r| vs |e| scatter, delay histograms."""
from typing import Dict

import numpy as np
import pandas as pd
from langsmith import traceable

from src.osad.config import RunConfig
from src.osad.core.designer import residual_streams
from src.osad.core.detector import scalarize
from src.osad.core.evaluation import (
    classify_alerts,
    delay_offsets,
    match_intervals,
    residual_suppression_report,
    suppression_distances,
)
from src.osad.core.sysid import rank_sweep
from src.osad.setup.evaluate import load_case
from utils.reports import histogram_frame, render_table, scatter_frame, write_table
from utils.series import ALERTS_FILE, read_alerts
from utils.store import REPORTS_DIR, subject_dir, subject_names

SCATTER_STRIDE = 10
SWEEP_METHODS = ("subspace", "spectral")


@traceable(name="osad.report")
def cmd_report(cfg: RunConfig) -> Dict[str, pd.DataFrame]:
    print("Writing report data...")
    sweeps, hists, scatters, suppression = [], [], [], []
    onsets, offsets = {"pattern": [], "other": []}, {"pattern": [], "other": []}
    max_rank = cfg.identification.rank

    for name in subject_names(cfg.root, cfg.subjects):
        case = load_case(cfg, name)
        window = case.series.window(0, cfg.learn_samples)
        for method in SWEEP_METHODS:
            for rank, rmse in rank_sweep(window, max_rank, method, cfg.identification.hankel_rows):
                sweeps.append({"subject": name, "method": method, "rank": rank, "rmse": rmse})

        e, r = residual_streams(case.model, case.design, case.series)
        pattern_iv = case.labels["pattern"].intervals
        d_in, d_out = suppression_distances(e, r, pattern_iv)
        hist = histogram_frame({"inside_pattern": d_in, "outside_pattern": d_out}, log=True)
        hist.insert(0, "subject", name)
        hists.append(hist)
        if len(pattern_iv):
            rep = residual_suppression_report(e, r, pattern_iv)
            suppression.append({
                "subject": name, "median_inside": rep.median_in,
                "median_outside": rep.median_out, "separation": rep.separation,
            })

        outside = np.ones(case.series.n_samples, dtype=bool)
        for a, b in pattern_iv:
            outside[a:b] = False
        outside[:cfg.warmup] = False
        sc = scatter_frame({"e_norm": scalarize(e)[outside], "r_norm": scalarize(r)[outside]}, SCATTER_STRIDE)
        sc.insert(0, "subject", name)
        scatters.append(sc)

        alerts = read_alerts(subject_dir(cfg.root, name) / ALERTS_FILE)
        predicted = dict(zip(("pattern", "other"), classify_alerts(alerts["all_anomalies"], alerts["selective"])))
        for cls in ("pattern", "other"):
            pairs = match_intervals(case.labels[cls], predicted[cls])
            if pairs:
                d_a, d_b = delay_offsets(pairs, cfg.rate_hz)
                onsets[cls].append(d_a)
                offsets[cls].append(d_b)
        print(f"    - {name}: rank sweep, suppression and scatter data collected")

    delay_samples = {
        f"{kind}_{cls}": np.concatenate(values[cls]) if values[cls] else np.empty(0)
        for kind, values in (("onset", onsets), ("offset", offsets))
        for cls in ("pattern", "other")
    }
    tables = {
        "rank_sweep": pd.DataFrame(sweeps),
        "suppression_hist": pd.concat(hists, ignore_index=True),
        "residual_scatter": pd.concat(scatters, ignore_index=True),
        "delay_hist": histogram_frame(delay_samples, bins=40),
        "suppression": pd.DataFrame(suppression, columns=["subject", "median_inside", "median_outside", "separation"]),
    }
    out = cfg.root / REPORTS_DIR
    for title, df in tables.items():
        write_table(df, out / f"{title}.csv", cfg.seed)
    print(f"    - Plot data written to {out}/")
    print()
    print(render_table(tables["suppression"], "Residual Suppression", digits=6))
    return tables
