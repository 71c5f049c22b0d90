"""Online weight updates for fusing sub-detector confidences.

A compound detector runs M sub-algorithms, each emitting a confidence in
[-1, 1] (positive means "event present"). The fused estimate is the linear
combination y_hat = sum_i w_i * D_i. When an oracle supplies the correct
label y, the constraint D . w = y is a hyperplane in R^M and the weights
are moved onto it by one of:

* orthogonal (relaxed) projection:  w' = w + mu * (e / ||D||^2) * D
* entropic projection:              w'_i = w_i * exp(lambda * D_i), with
  lambda chosen so that D . w' = y (requires strictly positive weights)
* the stateless exponential-loss baseline:
  w'_i = exp(-(y - D_i)^2 / 2c) / sum_j exp(-(y - D_j)^2 / 2c)

Both projections are instances of a generalized projection minimizing a
Bregman distance: the Euclidean cost recovers the orthogonal projection,
the entropy cost ``sum_i w_i log w_i`` yields the exponential update.

Oracle labels on the service path are +/-1, but every update here accepts
any finite real target so harnesses can drive weights toward arbitrary
hyperplane intersections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

# exp() overflows IEEE doubles just above 709; cap exponents below that so
# the solver sees huge-but-finite values instead of infinities.
_EXP_CAP = 700.0


class FusionError(ValueError):
    """Base class for fusion input errors."""


class DimensionMismatchError(FusionError):
    pass


class DomainError(FusionError):
    """Input outside an update rule's domain (e.g. non-positive weights)."""


class Algorithm(str, Enum):
    EADF = "EADF"
    POCS = "POCS"
    ULP = "ULP"
    FIXED = "Fixed"


class Solver(str, Enum):
    ROOT_FIND = "RootFind"
    GRID_SEARCH = "GridSearch"


class Cost(str, Enum):
    ENTROPY = "Entropy"
    EUCLIDEAN = "Euclidean"


class UpdateStatus(str, Enum):
    # EXACT: constraint met to the active solver's tolerance.
    # CLAMPED: best-effort update; constraint not met exactly (lambda pinned
    #          at a range bound, relaxed mu != 1 step, or baseline rule).
    # SKIPPED: no update applied; new weights equal the old ones.
    EXACT = "Exact"
    CLAMPED = "Clamped"
    SKIPPED = "Skipped"


@dataclass(frozen=True)
class FusionConfig:
    """Algorithm selection and solver knobs for one fusion session."""

    algorithm: Algorithm = Algorithm.EADF
    mu: float = 1.0
    c: float = 4.0
    lambda_min: float = -10.0
    lambda_max: float = 10.0
    lambda_grid_step: float = 0.01
    solver: Solver = Solver.ROOT_FIND
    root_tolerance: float = 1e-10
    max_root_iterations: int = 200

    def __post_init__(self):
        if not 0.0 < self.mu < 2.0:
            raise DomainError(f"mu must be in (0, 2), got {self.mu}")
        if self.c <= 0.0:
            raise DomainError(f"c must be > 0, got {self.c}")
        if not self.lambda_min < 0.0 < self.lambda_max:
            raise DomainError(
                f"lambda range must straddle 0, got [{self.lambda_min}, {self.lambda_max}]"
            )
        if self.lambda_grid_step <= 0.0:
            raise DomainError("lambda_grid_step must be > 0")
        if self.root_tolerance <= 0.0:
            raise DomainError("root_tolerance must be > 0")
        if self.max_root_iterations < 1:
            raise DomainError("max_root_iterations must be >= 1")


@dataclass(frozen=True)
class FusionUpdateResult:
    new_weights: np.ndarray
    prediction_before: float
    error_before: float
    lam: float | None
    residual_after: float
    status: UpdateStatus


def decision_vector(values) -> np.ndarray:
    """Validate and clamp sub-detector confidences to [-1, 1]."""
    d = np.asarray(values, dtype=np.float64)
    if d.ndim != 1 or d.size < 1:
        raise DimensionMismatchError("decision vector must be 1-d with M >= 1 entries")
    if not np.all(np.isfinite(d)):
        raise DomainError("decision values must be finite")
    return np.clip(d, -1.0, 1.0)


def weight_vector(values, require_positive: bool = False) -> np.ndarray:
    w = np.asarray(values, dtype=np.float64)
    if w.ndim != 1 or w.size < 1:
        raise DimensionMismatchError("weight vector must be 1-d with M >= 1 entries")
    if not np.all(np.isfinite(w)):
        raise DomainError("weights must be finite")
    if require_positive and not np.all(w > 0.0):
        raise DomainError("entropic updates require strictly positive weights")
    return w


def init_weights(m: int) -> np.ndarray:
    """Equal initial weights 1/M."""
    if m < 1:
        raise DimensionMismatchError(f"number of sub-algorithms must be >= 1, got {m}")
    return np.full(m, 1.0 / m, dtype=np.float64)


def predict(w: np.ndarray, d: np.ndarray) -> float:
    """Fused estimate y_hat = sum_i w_i * D_i."""
    w = np.asarray(w, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if w.shape != d.shape:
        raise DimensionMismatchError(
            f"weights have length {w.size}, decisions have length {d.size}"
        )
    return float(np.dot(w, d))


def decide(y_hat: float) -> int:
    """Binary decision from the fused estimate: +1 iff y_hat >= 0."""
    if not math.isfinite(y_hat):
        raise DomainError("prediction must be finite")
    return 1 if y_hat >= 0.0 else -1


def pocs_update(
    w: np.ndarray, d: np.ndarray, y: float, cfg: FusionConfig | None = None
) -> FusionUpdateResult:
    """Relaxed orthogonal projection onto the hyperplane D . w = y.

    w' = w + mu * (e / ||D||^2) * D with e = y - D . w. With mu = 1 the new
    weights satisfy the constraint exactly; a zero decision vector is a
    defined skip (the projection would divide by ||D||^2 = 0).
    """
    cfg = cfg or FusionConfig(algorithm=Algorithm.POCS)
    w = weight_vector(w)
    y_hat = predict(w, d)
    e = float(y) - y_hat
    norm_sq = float(np.dot(d, d))
    if norm_sq == 0.0:
        return FusionUpdateResult(
            new_weights=w.copy(),
            prediction_before=y_hat,
            error_before=e,
            lam=None,
            residual_after=abs(e),
            status=UpdateStatus.SKIPPED,
        )
    step = cfg.mu * e / norm_sq
    new_w = w + step * np.asarray(d, dtype=np.float64)
    residual = abs(predict(new_w, d) - float(y))
    status = UpdateStatus.EXACT if residual <= cfg.root_tolerance else UpdateStatus.CLAMPED
    # Reported multiplier follows the Lagrange form w' = w + (lam/2) D.
    return FusionUpdateResult(
        new_weights=new_w,
        prediction_before=y_hat,
        error_before=e,
        lam=2.0 * step,
        residual_after=residual,
        status=status,
    )


def _constraint_gap(w, d, y, lam):
    """f(lam) - y where f(lam) = sum_i w_i exp(lam d_i) d_i (nondecreasing)."""
    z = np.minimum(lam * d, _EXP_CAP)
    return float(np.dot(w * np.exp(z), d)) - y


def _constraint_slope(w, d, lam):
    z = np.minimum(lam * d, _EXP_CAP)
    return float(np.dot(w * np.exp(z), d * d))


def _solve_lambda_root(w, d, y, cfg):
    """Bracketing bisection over [lambda_min, lambda_max], Newton-accelerated.

    f is nondecreasing in lambda (f' = sum w_i exp(lam d_i) d_i^2 >= 0), so a
    sign change of f - y brackets the unique root. Targets outside the
    attainable range clamp to the nearer bound.
    """
    gap_lo = _constraint_gap(w, d, y, cfg.lambda_min)
    gap_hi = _constraint_gap(w, d, y, cfg.lambda_max)
    if gap_lo > 0.0:
        return cfg.lambda_min, False
    if gap_hi < 0.0:
        return cfg.lambda_max, False
    lo, hi = cfg.lambda_min, cfg.lambda_max
    lam = 0.0  # starting at no-op is nearly right whenever e is small
    for _ in range(cfg.max_root_iterations):
        gap = _constraint_gap(w, d, y, lam)
        if abs(gap) <= cfg.root_tolerance:
            return lam, True
        if gap < 0.0:
            lo = lam
        else:
            hi = lam
        slope = _constraint_slope(w, d, lam)
        newton = lam - gap / slope if slope > 0.0 else None
        lam = newton if newton is not None and lo < newton < hi else 0.5 * (lo + hi)
    gap = _constraint_gap(w, d, y, lam)
    return lam, abs(gap) <= cfg.root_tolerance


def _solve_lambda_grid(w, d, y, cfg):
    """Scan lambda over the configured range, keep the residual argmin."""
    count = int(math.floor((cfg.lambda_max - cfg.lambda_min) / cfg.lambda_grid_step + 1e-9))
    grid = cfg.lambda_min + cfg.lambda_grid_step * np.arange(count + 1)
    grid = np.minimum(grid, cfg.lambda_max)
    z = np.minimum(np.outer(grid, d), _EXP_CAP)
    preds = (np.exp(z) * w) @ d
    residuals = np.abs(preds - y)
    best = int(np.argmin(residuals))
    feasible = (
        _constraint_gap(w, d, y, cfg.lambda_min) <= cfg.root_tolerance
        and _constraint_gap(w, d, y, cfg.lambda_max) >= -cfg.root_tolerance
    )
    return float(grid[best]), feasible


def eadf_update(
    w: np.ndarray, d: np.ndarray, y: float, cfg: FusionConfig | None = None
) -> FusionUpdateResult:
    """Entropic projection onto the hyperplane D . w = y.

    Solves sum_i w_i exp(lambda d_i) d_i = y for lambda, then applies the
    multiplicative update w'_i = w_i exp(lambda d_i). Positive weights stay
    positive. Infeasible targets (y outside the attainable range over the
    lambda window) clamp lambda to the nearer bound.
    """
    cfg = cfg or FusionConfig(algorithm=Algorithm.EADF)
    w = weight_vector(w, require_positive=True)
    d = np.asarray(d, dtype=np.float64)
    y = float(y)
    y_hat = predict(w, d)
    e = y - y_hat
    if not np.any(d != 0.0):
        return FusionUpdateResult(
            new_weights=w.copy(),
            prediction_before=y_hat,
            error_before=e,
            lam=None,
            residual_after=abs(e),
            status=UpdateStatus.SKIPPED,
        )
    if abs(e) <= cfg.root_tolerance:
        return FusionUpdateResult(
            new_weights=w.copy(),
            prediction_before=y_hat,
            error_before=e,
            lam=0.0,
            residual_after=abs(e),
            status=UpdateStatus.EXACT,
        )
    if cfg.solver == Solver.GRID_SEARCH:
        lam, solved = _solve_lambda_grid(w, d, y, cfg)
    else:
        lam, solved = _solve_lambda_root(w, d, y, cfg)
    new_w = w * np.exp(np.minimum(lam * d, _EXP_CAP))
    residual = abs(predict(new_w, d) - y)
    status = UpdateStatus.EXACT if solved else UpdateStatus.CLAMPED
    return FusionUpdateResult(
        new_weights=new_w,
        prediction_before=y_hat,
        error_before=e,
        lam=lam,
        residual_after=residual,
        status=status,
    )


def bregman_project(
    w: np.ndarray,
    d: np.ndarray,
    y: float,
    cost: Cost = Cost.ENTROPY,
    cfg: FusionConfig | None = None,
) -> FusionUpdateResult:
    """Generalized projection of w onto D . w' = y under a cost functional.

    The projected point satisfies grad g(w') = grad g(w) + lambda * D
    together with the hyperplane constraint. Euclidean cost reduces to the
    orthogonal projection (mu = 1); entropy cost gives the exponential
    update.
    """
    if cost == Cost.EUCLIDEAN:
        base = cfg or FusionConfig(algorithm=Algorithm.POCS)
        if base.mu != 1.0:
            base = FusionConfig(
                algorithm=Algorithm.POCS,
                mu=1.0,
                c=base.c,
                lambda_min=base.lambda_min,
                lambda_max=base.lambda_max,
                lambda_grid_step=base.lambda_grid_step,
                solver=base.solver,
                root_tolerance=base.root_tolerance,
                max_root_iterations=base.max_root_iterations,
            )
        return pocs_update(w, d, y, base)
    if cost == Cost.ENTROPY:
        return eadf_update(w, d, y, cfg)
    raise DomainError(f"unknown cost functional: {cost}")


def ulp_update(
    w: np.ndarray, d: np.ndarray, y: float, cfg: FusionConfig | None = None
) -> FusionUpdateResult:
    """Exponential-loss baseline; depends only on (y, D), not on prior weights.

    l_i = (y - D_i)^2, w'_i = exp(-l_i / 2c) / sum_j exp(-l_j / 2c). The new
    weights are positive and sum to one.
    """
    cfg = cfg or FusionConfig(algorithm=Algorithm.ULP)
    w = weight_vector(w)
    d = np.asarray(d, dtype=np.float64)
    y = float(y)
    y_hat = predict(w, d)
    losses = (y - d) ** 2
    scores = np.exp(-losses / (2.0 * cfg.c))
    new_w = scores / np.sum(scores)
    residual = abs(predict(new_w, d) - y)
    status = UpdateStatus.EXACT if residual <= cfg.root_tolerance else UpdateStatus.CLAMPED
    return FusionUpdateResult(
        new_weights=new_w,
        prediction_before=y_hat,
        error_before=y - y_hat,
        lam=None,
        residual_after=residual,
        status=status,
    )


def fixed_update(
    w: np.ndarray, d: np.ndarray, y: float, cfg: FusionConfig | None = None
) -> FusionUpdateResult:
    """No-op update for the fixed-weights baseline."""
    w = weight_vector(w)
    y_hat = predict(w, d)
    return FusionUpdateResult(
        new_weights=w.copy(),
        prediction_before=y_hat,
        error_before=float(y) - y_hat,
        lam=None,
        residual_after=abs(float(y) - y_hat),
        status=UpdateStatus.SKIPPED,
    )


_UPDATES = {
    Algorithm.EADF: eadf_update,
    Algorithm.POCS: pocs_update,
    Algorithm.ULP: ulp_update,
    Algorithm.FIXED: fixed_update,
}


def apply_update(w: np.ndarray, d: np.ndarray, y: float, cfg: FusionConfig) -> FusionUpdateResult:
    """Dispatch to the configured algorithm's update rule."""
    return _UPDATES[cfg.algorithm](w, d, y, cfg)
