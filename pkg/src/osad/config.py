"""Run configuration: one pydantic tree, loaded from JSON plus command-line overrides."""
from pathlib import Path
from typing import List, Literal, Optional, Sequence

from pydantic import BaseModel, Field, ValidationError, model_validator

from src.osad.bench import BenchConfig
from src.osad.core.detector import CusumConfig
from src.osad.core.sysid import IdentificationConfig
from src.osad.errors import InvalidInputError
from utils.config import (
    OSAD_RATE_HZ,
    OSAD_SEED,
    OSAD_WORKDIR,
    apply_overrides,
    load_json_config,
)


class PatternSource(BaseModel):
    source: Literal["matrix", "period"] = Field(
        default="matrix", description="Pattern from a matrix file, or from a disturbance period."
    )
    space: Literal["observed", "latent"] = Field(
        default="observed", description="Whether the matrix is a sensor signature G (= C P) or a latent P."
    )
    path: Optional[str] = Field(
        default=None, description="Matrix file; defaults to each subject's pattern.csv."
    )
    period: Optional[float] = Field(default=None, gt=0, description="Period in samples for source=period.")
    k_max: Optional[int] = Field(default=None, ge=1, description="Rank cap for the period pattern.")

    @model_validator(mode="after")
    def _period_given(self):
        if self.source == "period" and self.period is None:
            raise ValueError("pattern.period is required when pattern.source = 'period'")
        return self


class DesignConfig(BaseModel):
    p: Optional[int] = Field(default=None, ge=1, description="Residual dimension; default m - rank(CP).")
    order: List[Literal["right", "left"]] = Field(
        default=["right", "left"], min_length=1, description="Feedback paths tried in order."
    )
    require_two_tap: bool = Field(default=True, description="Only accept designs with C_f A_f = 0.")


class IntervalConfig(BaseModel):
    gap_s: float = Field(default=0.1, ge=0, description="Largest unflagged gap bridged inside an interval.")
    min_len_s: float = Field(default=0.25, ge=0, description="Shortest interval kept.")


class RunConfig(BaseModel):
    rate_hz: float = Field(default=OSAD_RATE_HZ, gt=0, description="Sampling rate of every series.")
    seed: int = Field(default=OSAD_SEED, description="Seed for the bench; recorded in every artifact.")
    workdir: str = Field(default=OSAD_WORKDIR, description="Artifact root.")
    subjects: Optional[List[str]] = Field(
        default=None, description="Subjects to process; default every subject in bench.json."
    )
    learn_window_s: float = Field(default=10.0, gt=0, description="Leading seconds used for identification.")
    warmup: int = Field(default=1, ge=0, description="Leading samples skipped by the CUSUM charts.")
    bench: BenchConfig = Field(default_factory=BenchConfig)
    identification: IdentificationConfig = Field(default_factory=IdentificationConfig)
    pattern: PatternSource = Field(default_factory=PatternSource)
    design: DesignConfig = Field(default_factory=DesignConfig)
    cusum: CusumConfig = Field(default_factory=CusumConfig)
    intervals: IntervalConfig = Field(default_factory=IntervalConfig)

    @property
    def root(self) -> Path:
        return Path(self.workdir)

    @property
    def gap(self) -> int:
        return int(round(self.intervals.gap_s * self.rate_hz))

    @property
    def min_len(self) -> int:
        return int(round(self.intervals.min_len_s * self.rate_hz))

    @property
    def learn_samples(self) -> int:
        return int(round(self.learn_window_s * self.rate_hz))


def load_config(path: Optional[str] = None, overrides: Sequence[str] = ()) -> RunConfig:
    try:
        data = apply_overrides(load_json_config(path), list(overrides))
        return RunConfig.model_validate(data)
    except FileNotFoundError:
        raise
    except (ValidationError, ValueError) as exc:
        raise InvalidInputError(f"invalid config: {exc}") from exc
