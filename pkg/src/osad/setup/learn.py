"""Identify one LDS per subject from the leading, event-free part of its recording."""
from typing import Dict

from langsmith import traceable

from src.osad.config import RunConfig
from src.osad.core.sysid import identify, one_step_rmse
from src.osad.errors import InsufficientDataError
from utils.series import SERIES_FILE, read_series
from utils.store import MODEL_FILE, save_model, subject_dir, subject_names


@traceable(name="osad.learn")
def cmd_learn(cfg: RunConfig) -> Dict[str, float]:
    print("Learning models...")
    fits = {}
    for name in subject_names(cfg.root, cfg.subjects):
        d = subject_dir(cfg.root, name)
        series = read_series(d / SERIES_FILE, cfg.rate_hz)
        if series.n_samples < cfg.learn_samples:
            raise InsufficientDataError(
                f"{name}: learning window needs {cfg.learn_samples} samples, series has {series.n_samples}"
            )
        window = series.window(0, cfg.learn_samples)
        model = identify(window, cfg.identification)
        fits[name] = one_step_rmse(model, window)
        save_model(d / MODEL_FILE, model, cfg.seed)
        print(
            f"    - {name}: rank {model.n} ({model.method}), spectral radius {model.spectral_radius:.6f}, "
            f"one-step RMSE {fits[name]:.3e}"
        )
    return fits
