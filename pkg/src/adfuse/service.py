"""Session-managing feedback service.

Each session owns the fusion weights for one preset. Submitted events get
an immediate fused decision; depending on the oracle mode the label is
applied inline (ground truth, noisy, intermittent) or the event waits in a
FIFO for a human verdict. Every event and every applied feedback is
appended to a JSONL log, and replaying a log into a fresh session
reproduces the final weights exactly.

Writes on one session are serialized by a per-session lock; sessions are
independent. State snapshots are taken under the same lock so readers never
observe torn weights/history pairs.
"""

from __future__ import annotations

import json
import queue
import threading
import time
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path

from .fusion import (
    Algorithm,
    DimensionMismatchError,
    FusionConfig,
    FusionUpdateResult,
    Solver,
    decide,
    predict,
)
from .rng import Pcg32
from .session import SessionState, step_session
from .stream import FusionEvent


class ServiceError(Exception):
    pass


class UnknownSessionError(ServiceError):
    pass


class UnknownEventError(ServiceError):
    pass


class DuplicateFeedbackError(ServiceError):
    pass


class ValidationError(ServiceError):
    pass


class ReplayError(ServiceError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class OracleMode:
    """How labels reach a session.

    ground_truth: every event's truth applied immediately.
    noisy: ground truth flipped with probability p_flip.
    human: alarms (and flagged events) queue for API feedback.
    intermittent: ground truth for the first k events, then autonomous.
    """

    kind: str = "human"
    p_flip: float = 0.0
    k: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("ground_truth", "noisy", "human", "intermittent"):
            raise ValidationError(f"unknown oracle mode: {self.kind}")
        if not 0.0 <= self.p_flip <= 0.5:
            raise ValidationError("p_flip must lie in [0, 0.5]")
        if self.k < 0:
            raise ValidationError("k must be >= 0")

    def to_dict(self) -> dict:
        return {"mode": self.kind, "p_flip": self.p_flip, "k": self.k, "seed": self.seed}

    @classmethod
    def from_dict(cls, data: dict) -> "OracleMode":
        return cls(
            kind=str(data.get("mode", "human")),
            p_flip=float(data.get("p_flip", 0.0)),
            k=int(data.get("k", 0)),
            seed=int(data.get("seed", 0)),
        )


@dataclass(frozen=True)
class FeedbackRecord:
    event_id: str
    label: int
    source: str  # Human | GroundTruth | NoisyOracle
    timestamp: float


@dataclass
class _ManagedSession:
    state: SessionState
    mode: OracleMode
    pending: OrderedDict = field(default_factory=OrderedDict)
    pending_since: dict = field(default_factory=dict)
    feedback_log: list[FeedbackRecord] = field(default_factory=list)
    resolved: set = field(default_factory=set)
    expired: set = field(default_factory=set)
    events_seen: int = 0
    lock: threading.RLock = field(default_factory=threading.RLock)
    rng: Pcg32 | None = None
    log_path: Path | None = None
    subscribers: list[queue.Queue] = field(default_factory=list)


def fusion_config_to_dict(cfg: FusionConfig) -> dict:
    return {
        "algorithm": cfg.algorithm.value,
        "mu": cfg.mu,
        "c": cfg.c,
        "lambda_min": cfg.lambda_min,
        "lambda_max": cfg.lambda_max,
        "lambda_grid_step": cfg.lambda_grid_step,
        "solver": cfg.solver.value,
        "root_tolerance": cfg.root_tolerance,
        "max_root_iterations": cfg.max_root_iterations,
    }


def fusion_config_from_dict(data: dict) -> FusionConfig:
    try:
        return FusionConfig(
            algorithm=Algorithm(data.get("algorithm", "EADF")),
            mu=float(data.get("mu", 1.0)),
            c=float(data.get("c", 4.0)),
            lambda_min=float(data.get("lambda_min", -10.0)),
            lambda_max=float(data.get("lambda_max", 10.0)),
            lambda_grid_step=float(data.get("lambda_grid_step", 0.01)),
            solver=Solver(data.get("solver", "RootFind")),
            root_tolerance=float(data.get("root_tolerance", 1e-10)),
            max_root_iterations=int(data.get("max_root_iterations", 200)),
        )
    except (ValueError, TypeError) as exc:
        raise ValidationError(f"bad fusion config: {exc}") from exc


def update_result_to_dict(result: FusionUpdateResult) -> dict:
    return {
        "new_weights": [float(v) for v in result.new_weights],
        "prediction_before": result.prediction_before,
        "error_before": result.error_before,
        "lambda": result.lam,
        "residual_after": result.residual_after,
        "status": result.status.value,
    }


class SessionManager:
    """Holds all live sessions; one instance per service process.

    pending_ttl_seconds, when set, expires unanswered review requests: an
    expired event leaves the queue with an "expired" log record, so every
    submitted alarm is pending, resolved or explicitly expired, never
    silently dropped. Default is no expiry.
    """

    def __init__(
        self,
        persist_dir: str | Path | None = None,
        pending_ttl_seconds: float | None = None,
        clock=time.time,
    ):
        if pending_ttl_seconds is not None and pending_ttl_seconds <= 0:
            raise ValidationError("pending_ttl_seconds must be positive")
        self._sessions: dict[str, _ManagedSession] = {}
        self._lock = threading.Lock()
        self.persist_dir = Path(persist_dir) if persist_dir else None
        self.pending_ttl_seconds = pending_ttl_seconds
        self._clock = clock
        if self.persist_dir:
            self.persist_dir.mkdir(parents=True, exist_ok=True)

    def _expire_stale(self, managed) -> None:
        """Sweep the pending queue; caller holds the session lock."""
        if self.pending_ttl_seconds is None:
            return
        cutoff = self._clock() - self.pending_ttl_seconds
        stale = [
            event_id
            for event_id, since in managed.pending_since.items()
            if since <= cutoff and event_id in managed.pending
        ]
        for event_id in stale:
            managed.pending.pop(event_id)
            managed.pending_since.pop(event_id, None)
            managed.expired.add(event_id)
            self._append_log(
                managed,
                {"type": "expired", "event_id": event_id, "timestamp": self._clock()},
            )
            self._publish(managed, {"type": "expired", "event_id": event_id})

    # -- session lifecycle --------------------------------------------------

    def create_session(
        self,
        session_id: str,
        m: int,
        config: FusionConfig | None = None,
        mode: OracleMode | None = None,
    ) -> SessionState:
        config = config or FusionConfig()
        mode = mode or OracleMode()
        if m < 1:
            raise ValidationError("m must be >= 1")
        with self._lock:
            if session_id in self._sessions:
                raise ValidationError(f"session {session_id} already exists")
            managed = _ManagedSession(
                state=SessionState(session_id=session_id, m=m, config=config),
                mode=mode,
                rng=Pcg32(mode.seed) if mode.kind == "noisy" else None,
            )
            if self.persist_dir:
                managed.log_path = self.persist_dir / f"{session_id}.jsonl"
                self._append_log(
                    managed,
                    {
                        "type": "init",
                        "session_id": session_id,
                        "m": m,
                        "config": fusion_config_to_dict(config),
                        "oracle_mode": mode.to_dict(),
                    },
                )
            self._sessions[session_id] = managed
        return managed.state

    def list_sessions(self) -> list[dict]:
        with self._lock:
            sessions = list(self._sessions.values())
        out = []
        for managed in sessions:
            with managed.lock:
                out.append(
                    {
                        "session_id": managed.state.session_id,
                        "m": managed.state.m,
                        "algorithm": managed.state.config.algorithm.value,
                        "oracle_mode": managed.mode.kind,
                        "events_seen": managed.events_seen,
                        "pending": len(managed.pending),
                        "history_length": len(managed.state.history),
                    }
                )
        return out

    def _get(self, session_id: str) -> _ManagedSession:
        with self._lock:
            try:
                return self._sessions[session_id]
            except KeyError:
                raise UnknownSessionError(f"unknown session: {session_id}") from None

    # -- event intake and feedback -------------------------------------------

    def submit_event(self, session_id: str, event: FusionEvent) -> dict:
        managed = self._get(session_id)
        with managed.lock:
            if event.decisions.size != managed.state.m:
                raise DimensionMismatchError(
                    f"event has {event.decisions.size} decisions, session expects {managed.state.m}"
                )
            self._expire_stale(managed)
            if (
                event.event_id in managed.pending
                or event.event_id in managed.resolved
                or event.event_id in managed.expired
            ):
                raise ValidationError(f"event_id {event.event_id} already submitted")
            y_hat = predict(managed.state.weights, event.decisions)
            decision = decide(y_hat)
            managed.events_seen += 1
            self._append_log(managed, {"type": "event", "event": event.to_json_dict()})
            label, source = self._inline_label(managed, event, decision)
            if label is not None:
                self._apply(managed, event, label, source)
            elif managed.mode.kind == "human" and (decision == 1 or event.flagged):
                managed.pending[event.event_id] = event
                managed.pending_since[event.event_id] = self._clock()
                self._publish(
                    managed,
                    {"type": "pending", "event_id": event.event_id, "step": event.step},
                )
            return {
                "decision": decision,
                "y_hat": y_hat,
                "pending": event.event_id in managed.pending,
            }

    def _inline_label(self, managed, event, decision):
        mode = managed.mode
        if mode.kind == "ground_truth":
            if event.truth is not None:
                return event.truth, "GroundTruth"
        elif mode.kind == "noisy":
            if event.truth is not None:
                label = event.truth
                if managed.rng.random() < mode.p_flip:
                    label = -label
                return label, "NoisyOracle"
        elif mode.kind == "intermittent":
            if managed.events_seen <= mode.k and event.truth is not None:
                return event.truth, "GroundTruth"
        return None, None

    def apply_feedback(self, session_id: str, event_id: str, label: int) -> FusionUpdateResult:
        managed = self._get(session_id)
        if label not in (-1, 1):
            raise ValidationError(f"label must be -1 or 1, got {label}")
        with managed.lock:
            self._expire_stale(managed)
            if event_id in managed.resolved:
                raise DuplicateFeedbackError(f"event {event_id} already resolved")
            if event_id in managed.expired:
                raise UnknownEventError(f"event {event_id} expired unanswered")
            if event_id not in managed.pending:
                raise UnknownEventError(f"event {event_id} is not pending")
            event = managed.pending.pop(event_id)
            managed.pending_since.pop(event_id, None)
            return self._apply(managed, event, label, "Human")

    def _apply(self, managed, event, label, source) -> FusionUpdateResult:
        _, result = step_session(managed.state, event, label)
        record = FeedbackRecord(
            event_id=event.event_id,
            label=int(label),
            source=source,
            timestamp=time.time(),
        )
        managed.feedback_log.append(record)
        managed.resolved.add(event.event_id)
        self._append_log(
            managed,
            {
                "type": "feedback",
                "event_id": record.event_id,
                "label": record.label,
                "source": record.source,
                "timestamp": record.timestamp,
            },
        )
        self._publish(
            managed,
            {
                "type": "feedback_applied",
                "event_id": record.event_id,
                "label": record.label,
                "source": record.source,
                "weights": [float(v) for v in managed.state.weights],
                "history_length": len(managed.state.history),
            },
        )
        return result

    # -- reads ----------------------------------------------------------------

    def get_state(self, session_id: str, last: int | None = None) -> dict:
        managed = self._get(session_id)
        with managed.lock:
            self._expire_stale(managed)
            history = managed.state.history
            if last is not None:
                history = history[-last:]
            return {
                "session_id": managed.state.session_id,
                "m": managed.state.m,
                "algorithm": managed.state.config.algorithm.value,
                "oracle_mode": managed.mode.kind,
                "weights": [float(v) for v in managed.state.weights],
                "events_seen": managed.events_seen,
                "history_length": len(managed.state.history),
                "history": [
                    {
                        "step": h.step,
                        "event_id": h.event_id,
                        "label": h.label,
                        "prediction": h.prediction,
                        "error": h.error,
                        "decision": h.decision,
                        "weights": [float(v) for v in h.weights],
                    }
                    for h in history
                ],
                "pending": self._pending_summaries(managed),
            }

    def get_pending(self, session_id: str) -> list[dict]:
        managed = self._get(session_id)
        with managed.lock:
            self._expire_stale(managed)
            return self._pending_summaries(managed)

    @staticmethod
    def _pending_summaries(managed) -> list[dict]:
        return [
            {
                "event_id": e.event_id,
                "step": e.step,
                "decisions": [float(v) for v in e.decisions],
                "preset_id": e.preset_id,
            }
            for e in managed.pending.values()
        ]

    # -- persistence ------------------------------------------------------------

    @staticmethod
    def _append_log(managed, record: dict) -> None:
        if managed.log_path is None:
            return
        with managed.log_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, separators=(",", ":")))
            fh.write("\n")

    def replay(self, path, session_id: str | None = None) -> SessionState:
        """Rebuild a session from its log; the result is registered under
        session_id (default: the logged id). Nothing is committed on error."""
        path = Path(path)
        state = None
        mode = None
        events: dict[str, FusionEvent] = {}
        queued: list[str] = []
        feedback: list[FeedbackRecord] = []
        resolved: set = set()
        expired: set = set()
        events_seen = 0
        with path.open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ReplayError(f"invalid JSON: {exc.msg}", lineno) from exc
                kind = record.get("type")
                if kind == "init":
                    try:
                        state = SessionState(
                            session_id=str(record["session_id"]),
                            m=int(record["m"]),
                            config=fusion_config_from_dict(record.get("config", {})),
                        )
                        mode = OracleMode.from_dict(record.get("oracle_mode", {}))
                    except (KeyError, ValidationError, ValueError) as exc:
                        raise ReplayError(f"bad init record: {exc}", lineno) from exc
                elif kind == "event":
                    if state is None:
                        raise ReplayError("event before init record", lineno)
                    try:
                        event = FusionEvent.from_json_dict(record["event"])
                    except (KeyError, ValueError) as exc:
                        raise ReplayError(f"bad event record: {exc}", lineno) from exc
                    events[event.event_id] = event
                    events_seen += 1
                    # recompute the intake decision with the replayed weights
                    # (log order is processing order) to rebuild the queue
                    if mode is not None and mode.kind == "human":
                        decision = decide(predict(state.weights, event.decisions))
                        if decision == 1 or event.flagged:
                            queued.append(event.event_id)
                elif kind == "feedback":
                    if state is None:
                        raise ReplayError("feedback before init record", lineno)
                    try:
                        event_id = str(record["event_id"])
                        label = int(record["label"])
                        source = str(record.get("source", "Human"))
                        timestamp = float(record.get("timestamp", 0.0))
                    except (KeyError, ValueError) as exc:
                        raise ReplayError(f"bad feedback record: {exc}", lineno) from exc
                    if event_id not in events:
                        raise ReplayError(f"feedback for unknown event {event_id}", lineno)
                    step_session(state, events[event_id], label)
                    feedback.append(FeedbackRecord(event_id, label, source, timestamp))
                    resolved.add(event_id)
                elif kind == "expired":
                    if state is None:
                        raise ReplayError("expired record before init record", lineno)
                    try:
                        expired.add(str(record["event_id"]))
                    except KeyError as exc:
                        raise ReplayError("expired record missing event_id", lineno) from exc
                else:
                    raise ReplayError(f"unknown record type: {kind!r}", lineno)
        if state is None:
            raise ReplayError("log contains no init record", 1)
        if session_id is not None:
            state.session_id = session_id
        managed = _ManagedSession(state=state, mode=mode or OracleMode())
        managed.feedback_log = feedback
        managed.resolved = resolved
        managed.expired = expired
        managed.events_seen = events_seen
        for event_id in queued:
            if event_id in resolved or event_id in expired:
                continue
            managed.pending[event_id] = events[event_id]
            # restored reviews get a fresh TTL window from replay time
            managed.pending_since[event_id] = self._clock()
        with self._lock:
            if state.session_id in self._sessions:
                raise ValidationError(f"session {state.session_id} already exists")
            self._sessions[state.session_id] = managed
        return state

    # -- live updates ------------------------------------------------------------

    def subscribe(self, session_id: str) -> queue.Queue:
        managed = self._get(session_id)
        q: queue.Queue = queue.Queue()
        with managed.lock:
            managed.subscribers.append(q)
        return q

    def unsubscribe(self, session_id: str, q: queue.Queue) -> None:
        try:
            managed = self._get(session_id)
        except UnknownSessionError:
            return
        with managed.lock:
            if q in managed.subscribers:
                managed.subscribers.remove(q)

    @staticmethod
    def _publish(managed, payload: dict) -> None:
        for q in managed.subscribers:
            q.put(payload)
