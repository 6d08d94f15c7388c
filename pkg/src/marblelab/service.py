"""HTTP service exposing sessions to the browser UI.

The server is authoritative for all game logic: clients only send
trapdoor clicks and question answers with their click timestamps, and
render whatever state comes back.  Computer moves are applied
server-side immediately after the event that hands it the turn.
Requests for one session are serialized behind a per-session lock.
"""

from __future__ import annotations

import os
import threading
import uuid
from typing import Literal

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel, Field

from .games import Player
from .opponent import OpponentConfig
from .session import (
    Group,
    SessionConfig,
    SessionError,
    SessionState,
    events_to_jsonl,
    export_records,
    rows_to_csv,
)


class CreateSessionRequest(BaseModel):
    group: Literal["A", "B"]
    seed: int
    participant_id: str = "anonymous"
    deviation_rate: float = Field(default=0.75, ge=0.0, le=1.0)
    rounds: int = Field(default=8, ge=1)
    practice_count: int = Field(default=14, ge=0)
    t_ms: int = 0


class MoveRequest(BaseModel):
    action: str
    t_ms: int


class AnswerRequest(BaseModel):
    choice: Literal["left", "right", "undecided"]
    t_ms: int


class StartRequest(BaseModel):
    t_ms: int


class _Sessions:
    def __init__(self, log_dir: str | None):
        self._states: dict[str, SessionState] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self._log_dir = log_dir
        self._log_offsets: dict[str, int] = {}

    def create(self, state: SessionState) -> str:
        session_id = uuid.uuid4().hex[:12]
        with self._registry_lock:
            self._states[session_id] = state
            self._locks[session_id] = threading.Lock()
        self.flush_log(session_id)
        return session_id

    def lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            if session_id not in self._locks:
                raise HTTPException(status_code=404, detail="unknown session")
            return self._locks[session_id]

    def state(self, session_id: str) -> SessionState:
        with self._registry_lock:
            if session_id not in self._states:
                raise HTTPException(status_code=404, detail="unknown session")
            return self._states[session_id]

    def flush_log(self, session_id: str) -> None:
        if not self._log_dir:
            return
        os.makedirs(self._log_dir, exist_ok=True)
        state = self._states[session_id]
        offset = self._log_offsets.get(session_id, 0)
        new_events = state.events[offset:]
        if new_events:
            path = os.path.join(self._log_dir, f"{session_id}.jsonl")
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(events_to_jsonl(new_events))
            self._log_offsets[session_id] = len(state.events)


def create_app(log_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="marblelab session service")
    sessions = _Sessions(log_dir)

    @app.post("/sessions")
    def create_session(req: CreateSessionRequest) -> dict:
        config = SessionConfig(
            participant_id=req.participant_id,
            group=Group(req.group),
            seed=req.seed,
            opponent=OpponentConfig(
                deviation_rate=req.deviation_rate, rounds=req.rounds
            ),
            practice_count=req.practice_count,
            rounds=req.rounds,
            created_at_ms=req.t_ms,
        )
        state = SessionState(config)
        session_id = sessions.create(state)
        return {"session_id": session_id, "trial_count": len(state.trials)}

    @app.get("/sessions/{session_id}/state")
    def get_state(session_id: str) -> dict:
        with sessions.lock(session_id):
            return sessions.state(session_id).trial_view()

    @app.post("/sessions/{session_id}/start")
    def start_trial(session_id: str, req: StartRequest) -> dict:
        with sessions.lock(session_id):
            state = sessions.state(session_id)
            _guarded(state.start_trial, req.t_ms)
            state.advance_computer(req.t_ms)
            sessions.flush_log(session_id)
            return state.trial_view()

    @app.post("/sessions/{session_id}/move")
    def move(session_id: str, req: MoveRequest) -> dict:
        with sessions.lock(session_id):
            state = sessions.state(session_id)
            _guarded(state.apply_move, Player.P, req.action, req.t_ms)
            state.advance_computer(req.t_ms)
            sessions.flush_log(session_id)
            return state.trial_view()

    @app.post("/sessions/{session_id}/answer")
    def answer(session_id: str, req: AnswerRequest) -> dict:
        with sessions.lock(session_id):
            state = sessions.state(session_id)
            _guarded(state.answer_question, req.choice, req.t_ms)
            state.advance_computer(req.t_ms)
            sessions.flush_log(session_id)
            return state.trial_view()

    @app.get("/sessions/{session_id}/export", response_class=PlainTextResponse)
    def export(session_id: str, partial: bool = False) -> str:
        with sessions.lock(session_id):
            state = sessions.state(session_id)
            rows = _guarded(export_records, state, partial)
            return rows_to_csv(rows)

    @app.get("/sessions/{session_id}/events", response_class=PlainTextResponse)
    def events(session_id: str) -> str:
        with sessions.lock(session_id):
            return events_to_jsonl(sessions.state(session_id).events)

    return app


def _guarded(fn, *args):
    try:
        return fn(*args)
    except SessionError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def serve(port: int, log_dir: str | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(log_dir), host="127.0.0.1", port=port, log_level="warning")
