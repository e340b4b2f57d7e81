"""HTTP + WebSocket API for training sessions.

All mutations to one session pass through its asyncio lock, so the event
log's (tick, seq) order is the causal order even under concurrent clients.
Stream subscribers get one message per committed command: the full state
snapshot plus the consequence feed, which keeps the console a pure mirror
of server state (no client-side simulation).
"""

from __future__ import annotations

import asyncio
import json
import logging
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from ..twin import ActionParseError, parse_action
from .runtime import SessionNotRunning, SessionRuntime, SessionStillRunning
from .scenario import ScenarioInvalid, ScenarioSpec, parse_scenario

log = logging.getLogger("tuftwin.service")


@dataclass
class ServiceConfig:
    scenario_dir: Path | None = None
    log_dir: Path | None = None
    frontend_dir: Path | None = None
    auto_tick_ms: int = 0
    auto_tick_step: int = 1


@dataclass
class _SessionSlot:
    runtime: SessionRuntime
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)
    subscribers: list[asyncio.Queue] = field(default_factory=list)
    log_file: object | None = None
    ticker: asyncio.Task | None = None


def _error(status: int, error: str, message: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": error, "message": message, **extra})


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    scenarios: dict[str, ScenarioSpec] = {}
    sessions: dict[str, _SessionSlot] = {}
    counter = {"next": 1}

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        # Graceful shutdown: stop tickers and flush session log files so a
        # SIGTERM mid-session leaves complete, replayable logs behind.
        for slot in sessions.values():
            if slot.ticker:
                slot.ticker.cancel()
            if slot.log_file:
                slot.log_file.flush()
                slot.log_file.close()
                slot.log_file = None

    app = FastAPI(title="tuftwin session service", lifespan=lifespan)

    if config.scenario_dir:
        for path in sorted(Path(config.scenario_dir).glob("*.json")):
            try:
                spec = parse_scenario(json.loads(path.read_text()))
                scenarios[spec.scenario_id] = spec
                log.info("loaded scenario %s from %s", spec.scenario_id, path)
            except (json.JSONDecodeError, ScenarioInvalid) as err:
                log.warning("skipping %s: %s", path, err)

    app.state.scenarios = scenarios
    app.state.sessions = sessions
    app.state.config = config

    def _broadcast(slot: _SessionSlot) -> None:
        state = slot.runtime.state_snapshot()
        message = {
            "tick": state["tick"],
            "delta": state,
            "consequences": state["consequences"],
            "activity_states": state["activities"],
        }
        for queue in list(slot.subscribers):
            queue.put_nowait(message)

    def _open_log_file(session_id: str):
        if not config.log_dir:
            return None
        directory = Path(config.log_dir)
        directory.mkdir(parents=True, exist_ok=True)
        return (directory / f"{session_id}.jsonl").open("a", encoding="utf-8")

    def _slot(session_id: str) -> _SessionSlot | None:
        return sessions.get(session_id)

    @app.get("/healthz")
    async def healthz():
        return {"ok": True, "sessions": len(sessions), "scenarios": len(scenarios)}

    @app.post("/scenarios")
    async def upload_scenario(document: dict):
        try:
            spec = parse_scenario(document)
        except ScenarioInvalid as err:
            return _error(422, "ScenarioInvalid", "scenario rejected", diagnostics=err.diagnostics)
        if spec.scenario_id in scenarios:
            return _error(409, "DuplicateScenario", f"{spec.scenario_id} already exists")
        scenarios[spec.scenario_id] = spec
        return {"scenario_id": spec.scenario_id, "title": spec.title}

    @app.get("/scenarios")
    async def list_scenarios():
        return {
            "scenarios": [
                {
                    "scenario_id": spec.scenario_id,
                    "title": spec.title,
                    "activities": spec.activity_ids(),
                }
                for spec in sorted(scenarios.values(), key=lambda s: s.scenario_id)
            ]
        }

    @app.post("/sessions")
    async def create_session(body: dict):
        scenario_id = body.get("scenario_id")
        spec = scenarios.get(scenario_id)
        if spec is None:
            return _error(404, "UnknownScenario", f"no scenario {scenario_id!r}")
        session_id = f"s-{counter['next']:04d}"
        counter["next"] += 1
        runtime = SessionRuntime(spec, session_id)
        slot = _SessionSlot(runtime=runtime)
        slot.log_file = _open_log_file(session_id)

        def persist(batch):
            if slot.log_file:
                for record in batch:
                    slot.log_file.write(record.to_json_line() + "\n")
                slot.log_file.flush()

        runtime.commit_hooks.append(persist)
        runtime.begin()
        sessions[session_id] = slot
        if config.auto_tick_ms > 0:
            slot.ticker = asyncio.create_task(_auto_tick(slot))
        return {"session_id": session_id, "state": runtime.state_snapshot()}

    async def _auto_tick(slot: _SessionSlot):
        try:
            while slot.runtime.status == "Running":
                await asyncio.sleep(config.auto_tick_ms / 1000)
                async with slot.lock:
                    if slot.runtime.status != "Running":
                        break
                    slot.runtime.advance(config.auto_tick_step)
                    _broadcast(slot)
        except asyncio.CancelledError:
            pass

    @app.post("/sessions/{session_id}/actions")
    async def post_action(session_id: str, body: dict):
        slot = _slot(session_id)
        if slot is None:
            return _error(404, "UnknownSession", session_id)
        try:
            action = parse_action(body)
        except ActionParseError as err:
            return _error(422, "ActionParseError", str(err))
        async with slot.lock:
            try:
                ack = slot.runtime.post_action(action)
            except SessionNotRunning:
                return _error(409, "SessionNotRunning", session_id)
            _broadcast(slot)
        return ack

    @app.post("/sessions/{session_id}/advance")
    async def advance(session_id: str, body: dict):
        slot = _slot(session_id)
        if slot is None:
            return _error(404, "UnknownSession", session_id)
        dticks = body.get("dticks")
        if not isinstance(dticks, int) or isinstance(dticks, bool) or dticks < 1:
            return _error(422, "BadRequest", "dticks must be a positive integer")
        async with slot.lock:
            try:
                ack = slot.runtime.advance(dticks)
            except SessionNotRunning:
                return _error(409, "SessionNotRunning", session_id)
            _broadcast(slot)
        return ack

    @app.post("/sessions/{session_id}/complete")
    async def complete(session_id: str, body: dict | None = None):
        slot = _slot(session_id)
        if slot is None:
            return _error(404, "UnknownSession", session_id)
        aborted = bool((body or {}).get("aborted", False))
        async with slot.lock:
            try:
                slot.runtime.complete(aborted=aborted)
            except SessionNotRunning:
                return _error(409, "SessionNotRunning", session_id)
            _broadcast(slot)
        return {"session_id": session_id, "status": slot.runtime.status}

    @app.get("/sessions/{session_id}/state")
    async def get_state(session_id: str):
        slot = _slot(session_id)
        if slot is None:
            return _error(404, "UnknownSession", session_id)
        async with slot.lock:
            return slot.runtime.state_snapshot()

    @app.get("/sessions/{session_id}/log")
    async def get_log(session_id: str):
        slot = _slot(session_id)
        if slot is None:
            return _error(404, "UnknownSession", session_id)
        async with slot.lock:
            lines = slot.runtime.log_lines()
        return PlainTextResponse("\n".join(lines) + ("\n" if lines else ""), media_type="application/jsonl")

    @app.get("/sessions/{session_id}/debrief")
    async def get_debrief(session_id: str):
        slot = _slot(session_id)
        if slot is None:
            return _error(404, "UnknownSession", session_id)
        async with slot.lock:
            try:
                return slot.runtime.debrief()
            except SessionStillRunning:
                return _error(409, "SessionStillRunning", session_id)

    @app.websocket("/sessions/{session_id}/stream")
    async def stream(websocket: WebSocket, session_id: str):
        slot = _slot(session_id)
        if slot is None:
            await websocket.close(code=4404)
            return
        await websocket.accept()
        queue: asyncio.Queue = asyncio.Queue()
        # Subscribe and seed the initial snapshot under the session lock so
        # the message stream is strictly commit-ordered from the first frame.
        async with slot.lock:
            state = slot.runtime.state_snapshot()
            queue.put_nowait(
                {
                    "tick": state["tick"],
                    "delta": state,
                    "consequences": state["consequences"],
                    "activity_states": state["activities"],
                }
            )
            slot.subscribers.append(queue)
        try:
            while True:
                message = await queue.get()
                await websocket.send_json(message)
        except WebSocketDisconnect:
            pass
        finally:
            slot.subscribers.remove(queue)

    if config.frontend_dir and Path(config.frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(config.frontend_dir), html=True), name="console")

    return app
