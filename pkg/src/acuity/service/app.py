"""FastAPI wiring for the live exam service."""

from __future__ import annotations

import os
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from . import models
from .sessions import SessionFinished, SessionRegistry, StepConflict, UnknownSession
from .store import SessionStore


def create_app(data_dir: str | None = None) -> FastAPI:
    data_dir = data_dir or os.environ.get("ACUITY_DATA_DIR", "./acuity-sessions")
    store = SessionStore(data_dir)
    registry = SessionRegistry(store)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        registry.recover()
        yield

    app = FastAPI(title="acuity exam service", lifespan=lifespan)
    app.state.registry = registry

    def error(status: int, code: str, message: str) -> JSONResponse:
        body = models.ErrorBody(code=code, message=message)
        return JSONResponse(status_code=status, content=body.model_dump())

    @app.exception_handler(UnknownSession)
    async def unknown_session(request: Request, exc: UnknownSession):
        return error(404, "not_found", "no such session")

    @app.exception_handler(StepConflict)
    async def step_conflict(request: Request, exc: StepConflict):
        return error(409, "conflict", exc.message if hasattr(exc, "message") else str(exc))

    @app.exception_handler(SessionFinished)
    async def session_finished(request: Request, exc: SessionFinished):
        return error(409, "finished", "session already finished")

    @app.exception_handler(RequestValidationError)
    async def invalid(request: Request, exc: RequestValidationError):
        return error(422, "validation_error", str(exc.errors()[:3]))

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "sessions": len(registry)}

    @app.post("/sessions", response_model=models.CreateSessionResponse, status_code=201)
    def create_session(req: models.CreateSessionRequest):
        session = registry.create(req)
        from .sessions import config_out

        return models.CreateSessionResponse(
            session_id=session.id,
            optotypes=list(session.optotypes),
            config=config_out(session.cfg),
            stimulus=session.current_stimulus(),
        )

    @app.get("/sessions/{session_id}", response_model=models.SessionStateOut)
    def get_session(session_id: str):
        return registry.get(session_id).state_out()

    @app.post("/sessions/{session_id}/responses", response_model=models.SubmitResponse)
    def submit_response(session_id: str, req: models.SubmitRequest):
        session = registry.get(session_id)
        return session.submit(req.step, req.chosen, timeout=req.timeout)

    @app.get("/sessions/{session_id}/belief", response_model=models.BeliefOut)
    def get_belief(session_id: str):
        return registry.get(session_id).belief_out()

    @app.get("/sessions/{session_id}/result", response_model=models.ResultOut)
    def get_result(session_id: str):
        return registry.get(session_id).result_out()

    return app
