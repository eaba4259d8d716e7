"""Synthetic bench generation: per-subject series, labels, generating model and pattern signature."""
from typing import List

from langsmith import traceable

from src.osad.bench import generate_bench
from src.osad.config import RunConfig
from utils.series import LABELS_FILE, PATTERN_FILE, SERIES_FILE, write_labels, write_matrix, write_series
from utils.store import TRUTH_FILE, save_model, subject_dir, write_manifest


@traceable(name="osad.synth")
def cmd_synth(cfg: RunConfig) -> List[str]:
    print("Generating synthetic bench...")
    subjects = generate_bench(cfg.bench, cfg.seed, cfg.rate_hz)
    for s in subjects:
        d = subject_dir(cfg.root, s.name)
        write_series(d / SERIES_FILE, s.series, cfg.seed)
        write_labels(d / LABELS_FILE, s.labels, cfg.seed)
        save_model(d / TRUTH_FILE, s.model, cfg.seed)
        write_matrix(d / PATTERN_FILE, s.pattern_signature, cfg.seed)
        print(
            f"    - {s.name}: {s.series.n_samples} samples x {s.series.n_channels} channels, "
            f"{len(s.labels['pattern'])} pattern / {len(s.labels['other'])} other events"
        )
    write_manifest(cfg.root, {
        "seed": cfg.seed,
        "rate_hz": cfg.rate_hz,
        "subjects": [s.name for s in subjects],
        "bench": cfg.bench.model_dump(mode="json"),
    })
    print(f"    - Bench written to {cfg.root}/")
    return [s.name for s in subjects]
