"""Selective anomaly detection streamed sample by sample over each recording, with a live JSON event feed."""
import json
from typing import Callable, Dict, List, Optional

import numpy as np
from langsmith import traceable

from src.osad.config import RunConfig
from src.osad.core.designer import ResidualStream, residual_streams
from src.osad.core.detector import SelectiveDetector, calibrate_stream, scalarize
from src.osad.errors import ArtifactError
from utils.series import ALERTS_FILE, SERIES_FILE, read_series, write_alerts
from utils.store import DESIGN_FILE, load_model, subject_dir, subject_names


def _print_event(event: Dict) -> None:
    print(json.dumps(event), flush=True)


def _forward(emit: Optional[Callable[[Dict], None]], subject: str, events: List[Dict]) -> None:
    if emit is None:
        return
    for event in events:
        emit({"event": event["event"], "subject": subject, **{k: v for k, v in event.items() if k != "event"}})


@traceable(name="osad.run")
def cmd_run(cfg: RunConfig, emit: Optional[Callable[[Dict], None]] = _print_event) -> Dict[str, Dict[str, int]]:
    print("Running selective detection...")
    counts = {}
    for name in subject_names(cfg.root, cfg.subjects):
        d = subject_dir(cfg.root, name)
        stored = load_model(d / DESIGN_FILE)
        if stored.design is None:
            raise ArtifactError(f"{d / DESIGN_FILE} has no residual design (run `design` first)")
        series = read_series(d / SERIES_FILE, cfg.rate_hz)

        # Charts are calibrated on the quiet prefix, then every sample is streamed.
        prefix = series.window(0, cfg.warmup + cfg.cusum.calibration_len)
        e_cal, r_cal = residual_streams(stored.model, stored.design, prefix)
        detector = SelectiveDetector(
            calibrate_stream(scalarize(e_cal), cfg.cusum, cfg.warmup),
            calibrate_stream(scalarize(r_cal), cfg.cusum, cfg.warmup),
            cfg.gap,
            cfg.min_len,
            cfg.warmup,
        )
        stream = ResidualStream(stored.model, stored.design)
        for t, y in enumerate(series.samples):
            e, r = stream.step(y)
            _forward(emit, name, detector.push(t, float(np.linalg.norm(e)), float(np.linalg.norm(r))))
        _forward(emit, name, detector.finish())

        intervals = detector.intervals("all_anomalies") + detector.intervals("selective")
        write_alerts(d / ALERTS_FILE, intervals, cfg.seed)
        counts[name] = {
            "all_anomalies": len(detector.intervals("all_anomalies")),
            "selective": len(detector.intervals("selective")),
        }
        print(
            f"    - {name}: {counts[name]['all_anomalies']} all-anomaly / "
            f"{counts[name]['selective']} selective intervals"
        )
    return counts
