"""Residual generator design.

A residual r(t) = W e(t) driven by the observer

    x_hat(t+1) = (A - F C) x_hat(t) + F y(t),    e(t) = y(t) - C x_hat(t)

ignores a disturbance entering through P when, with A_f = A - F C and
C_f = W C,

    C_f P = 0   and   (C_f A_f = 0  or  A_f P = 0).

When C_f A_f = 0 the residual depends on two samples only:

    r(t) = W y(t) - C_f F y(t-1)

Usage:
    design = design_residual(model, pattern)
    report = verify_decoupling(model.A, model.C, pattern.P, design.W, design.F)
    r = make_online_filter(design).run(series)
"""
from dataclasses import dataclass
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import linalg
from sklearn.utils.extmath import svd_flip

from src.osad.core.model import (
    PINV_RTOL,
    LdsModel,
    PatternMatrix,
    TimeSeries,
    numerical_rank,
    one_step_errors,
    pinv,
)
from src.osad.errors import (
    InfeasibleDesignError,
    InvalidInputError,
    NonFiniteError,
    TwoTapError,
)

DESIGN_TOL = 1e-9

FeedbackPath = Literal["right", "left"]
WScaling = Literal["orthonormal", "integer"]


def _max_abs(M: np.ndarray) -> float:
    return float(np.max(np.abs(M))) if M.size else 0.0


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResidualDesign:
    W: np.ndarray
    F: np.ndarray
    A_f: np.ndarray
    C_f: np.ndarray
    minus_CfF: np.ndarray
    feedback: str = "given"

    @classmethod
    def from_gains(cls, model: LdsModel, W, F, feedback: str = "given") -> "ResidualDesign":
        W = np.array(W, dtype=float, ndmin=2)
        F = np.array(F, dtype=float, ndmin=2)
        if W.shape[1] != model.m or W.shape[0] > model.m:
            raise InvalidInputError(f"W must be p x {model.m} with p <= {model.m}, got {W.shape}")
        if F.shape != (model.n, model.m):
            raise InvalidInputError(f"F must be {model.n} x {model.m}, got {F.shape}")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(F))):
            raise NonFiniteError("design gains")
        C_f = W @ model.C
        return cls(
            W=W,
            F=F,
            A_f=model.A - F @ model.C,
            C_f=C_f,
            minus_CfF=-(C_f @ F),
            feedback=feedback,
        )

    @property
    def p(self) -> int:
        return self.W.shape[0]

    @property
    def two_tap(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.W, self.minus_CfF

    @property
    def two_tap_valid(self) -> bool:
        return _max_abs(self.C_f @ self.A_f) <= DESIGN_TOL


@dataclass(frozen=True)
class PeriodExpansion:
    """Coefficients of the first-order expansion of z^T around z = 1."""

    period: float
    alpha: float
    beta: float
    gamma: float

    @classmethod
    def from_period(cls, period: float) -> "PeriodExpansion":
        if not (np.isfinite(period) and period > 0):
            raise InvalidInputError(f"period must be positive, got {period}")
        T = float(period)
        return cls(
            period=T,
            alpha=0.5 * T * (T - 3.0),
            beta=0.5 * T * (T - 1.0),
            gamma=-T * (T - 2.0),
        )


class DecouplingReport(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    cfp_norm: float = Field(description="max |C_f P|")
    cfaf_norm: float = Field(description="max |C_f A_f|")
    afp_norm: float = Field(description="max |A_f P|")
    passed: bool = Field(alias="pass")
    tol: float = DESIGN_TOL


class RankCheck(BaseModel):
    passed: bool
    rank_p: int
    rank_c: int


# ---------------------------------------------------------------------------
# Design operations
# ---------------------------------------------------------------------------

def design_w(C: np.ndarray, P: np.ndarray, p: Optional[int] = None, scaling: WScaling = "orthonormal") -> np.ndarray:
    """Rows of W span (part of) the left null space of C P.

    scaling="integer" divides each row by its smallest nonzero magnitude,
    which reproduces hand-worked integer examples.
    """
    C = np.asarray(C, dtype=float)
    P = np.asarray(P, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    if C.shape[1] != P.shape[0]:
        raise InvalidInputError(f"C is {C.shape}, P is {P.shape}")
    CP = C @ P
    basis = linalg.null_space(CP.T, rcond=PINV_RTOL)
    available = basis.shape[1]
    if available == 0:
        raise InfeasibleDesignError(
            f"rank constraint violated: rank(C·P) = {numerical_rank(CP)} equals the observation "
            f"dimension {C.shape[0]}, so no residual can ignore the pattern "
            f"(need rank(P) <= rank(C) - 1)"
        )
    p = available if p is None else p
    if p < 1:
        raise InvalidInputError(f"residual dimension must be >= 1, got {p}")
    if p > available:
        raise InfeasibleDesignError(
            f"rank constraint violated: residual dimension {p} exceeds m - rank(C·P) = {available}"
        )

    W = basis[:, :p].T.copy()
    lead = np.argmax(np.abs(W), axis=1)
    W *= np.sign(W[np.arange(p), lead])[:, None]
    if scaling == "integer":
        for row in W:
            mags = np.abs(row)
            row /= mags[mags > 1e-9 * mags.max()].min()
    return W


def design_f_left(A: np.ndarray, C: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Minimal-norm F with (W C)(A - F C) = 0: rows of W C become left null vectors of A_f."""
    A, C, W = (np.asarray(M, dtype=float) for M in (A, C, W))
    Cf = W @ C
    target = Cf @ A
    C_pinv = pinv(C)
    if _max_abs(target @ C_pinv @ C - target) > DESIGN_TOL:
        raise InfeasibleDesignError("(W·C)·A is not in the row space of C; left feedback design is unsolvable")
    F = pinv(Cf) @ target @ C_pinv
    residual = _max_abs(Cf @ (A - F @ C))
    if residual > DESIGN_TOL:
        raise InfeasibleDesignError(f"left feedback design residual {residual:.3e} above {DESIGN_TOL:g}")
    return F


def design_f_right(A: np.ndarray, C: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Minimal-norm F with (A - F C) P = 0: columns of P become right null vectors of A_f."""
    A, C, P = (np.asarray(M, dtype=float) for M in (A, C, P))
    if P.ndim == 1:
        P = P[:, None]
    CP = C @ P
    AP = A @ P
    F = AP @ pinv(CP)
    residual = _max_abs(F @ CP - AP)
    if residual > DESIGN_TOL:
        raise InfeasibleDesignError(f"no F with F·C·P = A·P (residual {residual:.3e}); try the left design")
    return F


def verify_decoupling(A, C, P, W, F) -> DecouplingReport:
    A, C, P, W, F = (np.asarray(M, dtype=float) for M in (A, C, P, W, F))
    if P.ndim == 1:
        P = P[:, None]
    n = A.shape[0]
    if A.shape != (n, n) or C.shape[1] != n or P.shape[0] != n:
        raise InvalidInputError(f"inconsistent shapes A{A.shape} C{C.shape} P{P.shape}")
    if W.ndim != 2 or W.shape[1] != C.shape[0] or F.shape != (n, C.shape[0]):
        raise InvalidInputError(f"inconsistent shapes W{W.shape} F{F.shape} for C{C.shape}")
    A_f = A - F @ C
    C_f = W @ C
    cfp = _max_abs(C_f @ P)
    cfaf = _max_abs(C_f @ A_f)
    afp = _max_abs(A_f @ P)
    return DecouplingReport(
        cfp_norm=cfp,
        cfaf_norm=cfaf,
        afp_norm=afp,
        passed=cfp <= DESIGN_TOL and (cfaf <= DESIGN_TOL or afp <= DESIGN_TOL),
    )


def check_rank_constraint(P: np.ndarray, C: np.ndarray) -> RankCheck:
    rank_p = numerical_rank(P)
    rank_c = numerical_rank(C)
    return RankCheck(passed=rank_p <= rank_c, rank_p=rank_p, rank_c=rank_c)


def design_residual(
    model: LdsModel,
    pattern: PatternMatrix,
    p: Optional[int] = None,
    order: Sequence[FeedbackPath] = ("right", "left"),
    require_two_tap: bool = False,
) -> ResidualDesign:
    """W from the null space of C P, then F from the first feedback path that works.

    With require_two_tap a path is only accepted if C_f A_f = 0 as well.
    """
    if pattern.n != model.n:
        raise InvalidInputError(f"pattern has {pattern.n} rows, model state is {model.n}")
    check = check_rank_constraint(pattern.P, model.C)
    if not check.passed:
        raise InfeasibleDesignError(
            f"rank constraint violated: rank(P) = {check.rank_p} > rank(C) = {check.rank_c}"
        )
    W = design_w(model.C, pattern.P, p)

    failures: List[str] = []
    for path in order:
        try:
            if path == "right":
                F = design_f_right(model.A, model.C, pattern.P)
            else:
                F = design_f_left(model.A, model.C, W)
        except InfeasibleDesignError as exc:
            failures.append(f"{path}: {exc}")
            continue
        design = ResidualDesign.from_gains(model, W, F, feedback=path)
        if require_two_tap and not design.two_tap_valid:
            failures.append(f"{path}: C_f·A_f != 0, two-tap form unavailable")
            continue
        if not verify_decoupling(model.A, model.C, pattern.P, W, F).passed:
            failures.append(f"{path}: decoupling check failed")
            continue
        return design
    raise InfeasibleDesignError("no feedback gain decouples the pattern (" + "; ".join(failures) + ")")


# ---------------------------------------------------------------------------
# Patterns
# ---------------------------------------------------------------------------

def pattern_from_period(A: np.ndarray, period: float) -> PatternMatrix:
    """P = [alpha A | beta A | gamma A] for a disturbance repeating every `period` samples."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"A must be square, got {A.shape}")
    exp = PeriodExpansion.from_period(period)
    return PatternMatrix(np.hstack([exp.alpha * A, exp.beta * A, exp.gamma * A]))


def reduce_pattern_rank(pattern: PatternMatrix, k_max: int) -> PatternMatrix:
    """Best rank-k_max approximation; ties in singular values keep the first direction."""
    if k_max < 1:
        raise InvalidInputError(f"k_max must be >= 1, got {k_max}")
    if numerical_rank(pattern.P) <= k_max:
        return pattern
    U, s, Vt = linalg.svd(pattern.P, full_matrices=False)
    U, Vt = svd_flip(U, Vt)
    return PatternMatrix((U[:, :k_max] * s[:k_max]) @ Vt[:k_max])


def prepare_period_pattern(model: LdsModel, period: float, k_max: Optional[int] = None) -> PatternMatrix:
    """Period pattern reduced to rank(C) - 1 directions unless k_max is given."""
    if k_max is None:
        k_max = max(1, numerical_rank(model.C) - 1)
    return reduce_pattern_rank(pattern_from_period(model.A, period), k_max)


def pattern_from_observed(model: LdsModel, signature: np.ndarray) -> PatternMatrix:
    """Latent pattern P = C^+ G for an observation-space signature G (m x k, G = C P)."""
    G = np.asarray(signature, dtype=float)
    if G.ndim == 1:
        G = G[:, None]
    if G.shape[0] != model.m:
        raise InvalidInputError(f"signature has {G.shape[0]} rows, model observes {model.m} channels")
    return PatternMatrix(pinv(model.C) @ G)


# ---------------------------------------------------------------------------
# Stream processors
# ---------------------------------------------------------------------------

class TwoTapFilter:
    """r(t) = W y(t) - C_f F y(t-1); r(0) = W y(0)."""

    def __init__(self, W: np.ndarray, minus_CfF: np.ndarray):
        self._W = np.asarray(W, dtype=float)
        self._G = np.asarray(minus_CfF, dtype=float)
        self._prev: Optional[np.ndarray] = None

    def reset(self) -> None:
        self._prev = None

    def step(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        r = self._W @ y
        if self._prev is not None:
            r += self._G @ self._prev
        self._prev = y.copy()
        return r

    def run(self, series: TimeSeries) -> np.ndarray:
        Y = series.samples
        R = Y @ self._W.T
        R[1:] += Y[:-1] @ self._G.T
        return R


def make_online_filter(design: ResidualDesign) -> TwoTapFilter:
    if not design.two_tap_valid:
        raise TwoTapError(
            f"two-tap form requires C_f·A_f = 0 (max |C_f·A_f| = {_max_abs(design.C_f @ design.A_f):.3e}); "
            "use the observer form"
        )
    return TwoTapFilter(*design.two_tap)


class ResidualObserver:
    def __init__(self, design: ResidualDesign, model: LdsModel, x0_hat: Optional[np.ndarray] = None):
        self._A_f = design.A_f
        self._F = design.F
        self._C = model.C
        self._W = design.W
        self._x = np.zeros(model.n) if x0_hat is None else np.array(x0_hat, dtype=float)
        if self._x.shape != (model.n,):
            raise InvalidInputError(f"x0_hat must have length {model.n}")
        self.t = 0

    def step(self, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        y = np.asarray(y, dtype=float)
        e = y - self._C @ self._x
        r = self._W @ e
        self._x = self._A_f @ self._x + self._F @ y
        if not np.all(np.isfinite(self._x)):
            raise NonFiniteError("observer state", self.t)
        self.t += 1
        return r, e


def run_observer(
    design: ResidualDesign,
    model: LdsModel,
    y: TimeSeries,
    x0_hat: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    if y.n_channels != model.m:
        raise InvalidInputError(f"series has {y.n_channels} channels, model expects {model.m}")
    observer = ResidualObserver(design, model, x0_hat)
    R = np.empty((y.n_samples, design.p))
    E = np.empty((y.n_samples, model.m))
    for t, sample in enumerate(y.samples):
        R[t], E[t] = observer.step(sample)
    return R, E


class ResidualStream:
    """Sample-by-sample (e, r): the one-step error and the residual, two-tap when available.

    Feeding a recording through `step` reproduces residual_streams.
    """

    def __init__(self, model: LdsModel, design: ResidualDesign):
        self._M = model.C @ model.A @ pinv(model.C)
        self._m = model.m
        self._prev: Optional[np.ndarray] = None
        self._filter = make_online_filter(design) if design.two_tap_valid else None
        self._observer = None if self._filter is not None else ResidualObserver(design, model)

    @property
    def two_tap(self) -> bool:
        return self._filter is not None

    def step(self, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        y = np.asarray(y, dtype=float)
        if y.shape != (self._m,):
            raise InvalidInputError(f"sample has shape {y.shape}, model expects ({self._m},)")
        e = y.copy() if self._prev is None else y - self._M @ self._prev
        self._prev = y.copy()
        if self._filter is not None:
            r = self._filter.step(y)
        else:
            r, _ = self._observer.step(y)
        return e, r


def residual_streams(model: LdsModel, design: ResidualDesign, series: TimeSeries) -> Tuple[np.ndarray, np.ndarray]:
    """(e, r) for detection: one-step errors and the two-tap residual, or the observer residual."""
    e = one_step_errors(model, series)
    if design.two_tap_valid:
        r = make_online_filter(design).run(series)
    else:
        r, _ = run_observer(design, model, series)
    return e, r
