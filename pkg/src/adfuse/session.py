"""Per-preset fusion session state and the feedback-optional stream step.

One session holds the weights for one camera preset (or one experiment run).
Histories grow only when feedback is applied, so replaying the feedback log
from the initial state reproduces the current weights exactly. A session's
steps must be applied serially in event order; distinct sessions are
independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fusion import (
    Algorithm,
    DimensionMismatchError,
    FusionConfig,
    FusionUpdateResult,
    apply_update,
    decide,
    init_weights,
    predict,
)
from .stream import FusionEvent


@dataclass
class HistoryEntry:
    step: int
    event_id: str
    label: int
    prediction: float
    error: float
    decision: int
    weights: np.ndarray


@dataclass
class SessionState:
    session_id: str
    m: int
    config: FusionConfig = field(default_factory=FusionConfig)
    weights: np.ndarray = None  # set in __post_init__
    history: list[HistoryEntry] = field(default_factory=list)

    def __post_init__(self):
        if self.weights is None:
            self.weights = init_weights(self.m)
        else:
            self.weights = np.asarray(self.weights, dtype=np.float64)
            if self.weights.size != self.m:
                raise DimensionMismatchError(
                    f"session expects {self.m} weights, got {self.weights.size}"
                )


def step_session(
    state: SessionState, event: FusionEvent, label: int | float | None = None
) -> tuple[int, FusionUpdateResult | None]:
    """Advance one session by one event.

    Returns the fused decision for the event. When a label is supplied the
    configured update runs and a history entry is appended; without a label
    (autonomous mode) the weights are left untouched. Fixed-weight sessions
    record history but never move.
    """
    if event.decisions.size != state.m:
        raise DimensionMismatchError(
            f"event {event.event_id} has {event.decisions.size} decisions, session expects {state.m}"
        )
    y_hat = predict(state.weights, event.decisions)
    decision = decide(y_hat)
    if label is None:
        return decision, None
    result = apply_update(state.weights, event.decisions, label, state.config)
    state.weights = result.new_weights
    state.history.append(
        HistoryEntry(
            step=len(state.history),
            event_id=event.event_id,
            label=int(label) if float(label) in (-1.0, 1.0) else label,
            prediction=y_hat,
            error=result.error_before,
            decision=decision,
            weights=result.new_weights.copy(),
        )
    )
    return decision, result
