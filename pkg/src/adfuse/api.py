"""HTTP/JSON front for the feedback service.

Routes
------
GET  /sessions                      list session summaries
POST /sessions                      {session_id?, m, config?, oracle_mode?}
POST /sessions/{id}/events          FusionEvent fields -> {decision, y_hat}
GET  /sessions/{id}/pending
POST /sessions/{id}/feedback        {event_id, label} -> update result
GET  /sessions/{id}/state?last=N
GET  /sessions/{id}/stream          server-sent events with state deltas

404 for unknown ids, 409 for duplicate feedback, 422 for validation
failures.
"""

from __future__ import annotations

import json
import queue
import uuid

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, StreamingResponse

from .fusion import FusionError
from .service import (
    DuplicateFeedbackError,
    OracleMode,
    SessionManager,
    ServiceError,
    UnknownEventError,
    UnknownSessionError,
    ValidationError,
    fusion_config_from_dict,
    update_result_to_dict,
)
from .stream import FusionEvent, StreamFormatError

SSE_HEARTBEAT_SECONDS = 15.0


def create_app(manager: SessionManager | None = None) -> FastAPI:
    manager = manager or SessionManager()
    app = FastAPI(title="adfuse oracle service")
    app.state.manager = manager

    @app.exception_handler(ServiceError)
    async def service_error_handler(_request: Request, exc: ServiceError):
        if isinstance(exc, (UnknownSessionError, UnknownEventError)):
            status = 404
        elif isinstance(exc, DuplicateFeedbackError):
            status = 409
        else:
            status = 422
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    @app.exception_handler(FusionError)
    async def fusion_error_handler(_request: Request, exc: FusionError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/sessions")
    def list_sessions():
        return {"sessions": manager.list_sessions()}

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        payload = await _json_body(request)
        try:
            m = int(payload["m"])
        except (KeyError, TypeError, ValueError):
            raise HTTPException(status_code=422, detail="body must include integer 'm'")
        session_id = str(payload.get("session_id") or uuid.uuid4().hex[:12])
        config = fusion_config_from_dict(payload.get("config", {}))
        mode = OracleMode.from_dict(payload.get("oracle_mode", {}))
        state = manager.create_session(session_id, m, config, mode)
        return {
            "session_id": state.session_id,
            "m": state.m,
            "algorithm": state.config.algorithm.value,
            "weights": [float(v) for v in state.weights],
        }

    @app.post("/sessions/{session_id}/events")
    async def submit_event(session_id: str, request: Request):
        payload = await _json_body(request)
        try:
            event = FusionEvent.from_json_dict(payload)
        except StreamFormatError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return manager.submit_event(session_id, event)

    @app.get("/sessions/{session_id}/pending")
    def pending(session_id: str):
        return {"pending": manager.get_pending(session_id)}

    @app.post("/sessions/{session_id}/feedback")
    async def feedback(session_id: str, request: Request):
        payload = await _json_body(request)
        try:
            event_id = str(payload["event_id"])
            label = int(payload["label"])
        except (KeyError, TypeError, ValueError):
            raise HTTPException(
                status_code=422, detail="body must include 'event_id' and integer 'label'"
            )
        result = manager.apply_feedback(session_id, event_id, label)
        return update_result_to_dict(result)

    @app.get("/sessions/{session_id}/state")
    def state(session_id: str, last: int | None = None):
        return manager.get_state(session_id, last)

    @app.get("/sessions/{session_id}/stream")
    def stream(session_id: str, limit: int | None = None, heartbeat: float = SSE_HEARTBEAT_SECONDS):
        """State-delta stream; `limit` closes the stream after N messages
        (useful for polling clients and tests), default is unbounded."""
        subscription = manager.subscribe(session_id)  # 404s for unknown ids

        def event_source():
            delivered = 0
            try:
                yield "event: hello\ndata: {}\n\n"
                while limit is None or delivered < limit:
                    try:
                        payload = subscription.get(timeout=heartbeat)
                    except queue.Empty:
                        yield ": heartbeat\n\n"
                        continue
                    delivered += 1
                    yield f"data: {json.dumps(payload, separators=(',', ':'))}\n\n"
            finally:
                manager.unsubscribe(session_id, subscription)

        return StreamingResponse(event_source(), media_type="text/event-stream")

    return app


async def _json_body(request: Request) -> dict:
    try:
        payload = await request.json()
    except json.JSONDecodeError:
        raise HTTPException(status_code=422, detail="request body must be JSON")
    if not isinstance(payload, dict):
        raise HTTPException(status_code=422, detail="request body must be a JSON object")
    return payload
