"""Design the pattern-decoupled residual generator for every learned model."""
import json
from pathlib import Path
from typing import Dict

from langsmith import traceable

from src.osad.config import RunConfig
from src.osad.core.designer import (
    design_residual,
    pattern_from_observed,
    prepare_period_pattern,
    verify_decoupling,
)
from src.osad.core.model import LdsModel, PatternMatrix
from src.osad.errors import DecouplingError
from utils.series import PATTERN_FILE, read_matrix
from utils.store import (
    DESIGN_FILE,
    DESIGN_REPORT_FILE,
    MODEL_FILE,
    load_model,
    save_model,
    subject_dir,
    subject_names,
)


def resolve_pattern(cfg: RunConfig, model: LdsModel, d: Path) -> PatternMatrix:
    source = cfg.pattern
    if source.source == "period":
        return prepare_period_pattern(model, source.period, source.k_max)
    M = read_matrix(Path(source.path) if source.path else d / PATTERN_FILE)
    if source.space == "observed":
        return pattern_from_observed(model, M)
    return PatternMatrix(M)


@traceable(name="osad.design")
def cmd_design(cfg: RunConfig) -> Dict[str, bool]:
    print("Designing residual generators...")
    results = {}
    for name in subject_names(cfg.root, cfg.subjects):
        d = subject_dir(cfg.root, name)
        model = load_model(d / MODEL_FILE).model
        pattern = resolve_pattern(cfg, model, d)
        design = design_residual(
            model,
            pattern,
            p=cfg.design.p,
            order=cfg.design.order,
            require_two_tap=cfg.design.require_two_tap,
        )
        report = verify_decoupling(model.A, model.C, pattern.P, design.W, design.F)
        record = {"seed": cfg.seed, **report.model_dump(by_alias=True)}
        (d / DESIGN_REPORT_FILE).write_text(json.dumps(record, indent=2) + "\n", encoding="utf-8")
        if not report.passed:
            raise DecouplingError(
                f"{name}: decoupling check failed (|C_f P| = {report.cfp_norm:.3e}, "
                f"|C_f A_f| = {report.cfaf_norm:.3e}, |A_f P| = {report.afp_norm:.3e})"
            )
        save_model(d / DESIGN_FILE, model, cfg.seed, design)
        results[name] = report.passed
        print(
            f"    - {name}: p = {design.p}, {design.feedback} feedback, |C_f P| = {report.cfp_norm:.1e}, "
            f"two-tap {'available' if design.two_tap_valid else 'unavailable'}"
        )
    return results
