"""Online adaptive decision fusion toolkit.

Fuses the confidences of several binary sub-detectors with weights adapted
online from oracle feedback, via entropic or orthogonal projections onto
the constraint hyperplane. Ships with a concept-drift stream simulator, a
region-covariance feature pipeline, an alarm extractor, evaluation
harnesses and an HTTP feedback service.
"""

from .fusion import (
    Algorithm,
    Cost,
    DimensionMismatchError,
    DomainError,
    FusionConfig,
    FusionError,
    FusionUpdateResult,
    Solver,
    UpdateStatus,
    bregman_project,
    decide,
    decision_vector,
    eadf_update,
    init_weights,
    pocs_update,
    predict,
    ulp_update,
)
from .session import SessionState, step_session
from .stream import (
    ExpertProfile,
    FusionEvent,
    StreamConfig,
    generate_stream,
    load_stream,
    save_stream,
)

__all__ = [
    "Algorithm",
    "Cost",
    "DimensionMismatchError",
    "DomainError",
    "ExpertProfile",
    "FusionConfig",
    "FusionError",
    "FusionEvent",
    "FusionUpdateResult",
    "SessionState",
    "Solver",
    "StreamConfig",
    "UpdateStatus",
    "bregman_project",
    "decide",
    "decision_vector",
    "eadf_update",
    "generate_stream",
    "init_weights",
    "load_stream",
    "pocs_update",
    "predict",
    "save_stream",
    "step_session",
    "ulp_update",
]

__version__ = "0.1.0"
