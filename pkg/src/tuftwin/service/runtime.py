"""One training session: the event loop binding twin and activity nets.

Every mutation flows through post_action/advance/complete on one runtime
instance; the append-only log of (tick, seq, kind, body) records is the
single causal order, and replaying the driver records (operator actions,
advances, explicit completion) from the scenario reproduces the live state
byte for byte at every commit point.

Durational actions emit future-stamped subevents; they wait in a pending
queue and are delivered, interleaved tick by tick with scripted fault
injections and twin production, when the clock advances.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Mapping

from ..activities import ActivityEngine, error_path_length
from ..events import SubEvent
from ..jsonutil import ordered_dumps
from ..twin import (
    InterlockActive,
    InvalidAction,
    InvalidParameter,
    InvalidSlot,
    InvalidTarget,
    OperatorAction,
    action_to_dict,
    apply_action,
    execute_command,
    inject_fault,
    parse_action,
    snapshot,
    tick as twin_tick,
)
from .scenario import ScenarioSpec

REFUSAL_ERRORS = (InterlockActive, InvalidSlot, InvalidParameter, InvalidAction, InvalidTarget)


class SessionNotRunning(Exception):
    pass


class SessionStillRunning(Exception):
    pass


class UnknownSession(KeyError):
    pass


@dataclass(frozen=True)
class LogRecord:
    tick: int
    seq: int
    kind: str  # Action | SubEvent | Firing | Command | Log | History
    body: Mapping[str, Any]

    def to_dict(self) -> dict:
        return {"tick": self.tick, "seq": self.seq, "kind": self.kind, "body": self.body}

    def to_json_line(self) -> str:
        return ordered_dumps(self.to_dict())


class SessionRuntime:
    def __init__(self, spec: ScenarioSpec, session_id: str):
        self.spec = spec
        self.session_id = session_id
        self.status = "Created"
        self.twin = spec.initial_work_cell()
        self.engine = ActivityEngine(
            spec.activities, context_provider=lambda: snapshot(self.twin)
        )
        self.error_path_length = error_path_length(spec.activities)
        self.log: list[LogRecord] = []
        self._seq = 0
        self._pending: list[tuple[int, int, int, SubEvent]] = []
        self._pending_seq = 0
        self._fault_cursor = 0
        self.commit_hooks: list[Callable[[list[LogRecord]], None]] = []

    # Log plumbing

    def _append(self, batch: list[LogRecord], kind: str, body: Mapping[str, Any]) -> None:
        record = LogRecord(tick=self.twin.clock, seq=self._seq, kind=kind, body=body)
        self._seq += 1
        self.log.append(record)
        batch.append(record)

    def _commit(self, batch: list[LogRecord]) -> None:
        for hook in self.commit_hooks:
            hook(batch)

    # Lifecycle

    def begin(self) -> None:
        if self.status != "Created":
            return
        self.status = "Running"
        batch: list[LogRecord] = []
        self._append(batch, "Action", {"type": "session", "event": "started"})
        self._commit(batch)

    def complete(self, aborted: bool = False) -> None:
        if self.status in ("Completed", "Aborted"):
            return
        if self.status != "Running":
            raise SessionNotRunning(self.session_id)
        self.status = "Aborted" if aborted else "Completed"
        batch: list[LogRecord] = []
        self._append(
            batch,
            "Action",
            {"type": "session", "event": self.status.lower(), "explicit": True},
        )
        self._commit(batch)

    def _auto_complete(self, batch: list[LogRecord]) -> None:
        states = self.engine.activity_states()
        if not states:
            return
        if all(inst.state.value in ("Finished", "Interrupted") for inst in states.values()):
            self.status = "Completed"
            self._append(batch, "Action", {"type": "session", "event": "completed", "explicit": False})

    # Event pipeline

    def _queue_or_dispatch(self, events: Iterable[SubEvent], batch: list[LogRecord]) -> None:
        due = []
        for ev in events:
            if ev.tick > self.twin.clock:
                self._pending_seq += 1
                heapq.heappush(self._pending, (*ev.sort_key(), self._pending_seq, ev))
            else:
                due.append(ev)
        ordered = sorted(enumerate(due), key=lambda pair: (*pair[1].sort_key(), pair[0]))
        for _, ev in ordered:
            self._dispatch(ev, batch)

    def _dispatch(self, ev: SubEvent, batch: list[LogRecord]) -> None:
        if not ev.activity_id or ev.activity_id not in self.engine.defs:
            self._append(
                batch,
                "Log",
                {
                    "type": "unrouted_event",
                    "event": ev.to_dict(),
                    "note": "no activity bound to this event",
                },
            )
            return
        self._append(batch, "SubEvent", ev.to_dict())
        result = self.engine.dispatch(ev)
        self._record_steps(result.steps, batch)

    def _record_steps(self, steps, batch: list[LogRecord]) -> None:
        for step in steps:
            if step.kind == "SubEvent":
                self._append(batch, "SubEvent", step.subevent.to_dict())
            elif step.kind == "Firing":
                self._append(batch, "Firing", step.firing.to_dict())
            elif step.kind == "Log":
                self._append(batch, "Log", step.log.to_dict())
            elif step.kind == "History":
                body = {"entry": step.history.to_dict()}
                ref = step.history.marking_ref
                if ref:
                    body["marking_snapshot"] = self.engine.snapshots[ref]
                self._append(batch, "History", body)
            elif step.kind == "Command":
                self.twin = execute_command(self.twin, step.command, self.twin.clock)
                self._append(batch, "Command", step.command.to_dict())

    def _deliver_due_pending(self, batch: list[LogRecord]) -> None:
        while self._pending and self._pending[0][0] <= self.twin.clock:
            _, _, _, ev = heapq.heappop(self._pending)
            self._dispatch(ev, batch)

    def _inject_due_faults(self, batch: list[LogRecord]) -> None:
        while self._fault_cursor < len(self.spec.faults):
            when, fault = self.spec.faults[self._fault_cursor]
            if when > self.twin.clock:
                return
            self._fault_cursor += 1
            try:
                self.twin = inject_fault(self.twin, fault, self.twin.clock)
                self._append(batch, "Log", {"type": "fault_injected", "fault": fault.to_dict()})
            except InvalidTarget as err:
                self._append(
                    batch,
                    "Log",
                    {"type": "fault_skipped", "fault": fault.to_dict(), "reason": str(err)},
                )

    # Public operations

    def post_action(self, action: OperatorAction) -> dict:
        if self.status != "Running":
            raise SessionNotRunning(self.session_id)
        batch: list[LogRecord] = []
        try:
            twin, events = apply_action(self.twin, action, self.twin.clock)
        except REFUSAL_ERRORS as err:
            # Refusals are learning data: logged, never dropped.
            self._append(
                batch,
                "Action",
                {
                    "type": "operator_action",
                    "action": action_to_dict(action),
                    "accepted": False,
                    "refusal": {"error": type(err).__name__, "message": str(err)},
                },
            )
            self._append(
                batch,
                "Log",
                {"type": "refusal", "action": action_to_dict(action), "error": type(err).__name__},
            )
            self._commit(batch)
            return {
                "accepted": False,
                "refusal": {"error": type(err).__name__, "message": str(err)},
                "state": self.state_snapshot(),
            }
        self.twin = twin
        self._append(
            batch,
            "Action",
            {"type": "operator_action", "action": action_to_dict(action), "accepted": True},
        )
        self._queue_or_dispatch(events, batch)
        self._auto_complete(batch)
        self._commit(batch)
        return {"accepted": True, "state": self.state_snapshot()}

    def inject_fault_now(self, fault) -> dict:
        """Ad-hoc fault injection (trace files, trainer tools). Unlike the
        scenario's scripted faults this is driver input, so it is logged as
        an Action record and re-applied on replay."""
        if self.status != "Running":
            raise SessionNotRunning(self.session_id)
        batch: list[LogRecord] = []
        try:
            self.twin = inject_fault(self.twin, fault, self.twin.clock)
            self._append(
                batch, "Action", {"type": "fault", "fault": fault.to_dict(), "accepted": True}
            )
            self._commit(batch)
            return {"accepted": True, "state": self.state_snapshot()}
        except InvalidTarget as err:
            self._append(
                batch,
                "Action",
                {
                    "type": "fault",
                    "fault": fault.to_dict(),
                    "accepted": False,
                    "refusal": {"error": "InvalidTarget", "message": str(err)},
                },
            )
            self._commit(batch)
            return {
                "accepted": False,
                "refusal": {"error": "InvalidTarget", "message": str(err)},
                "state": self.state_snapshot(),
            }

    def advance(self, dticks: int) -> dict:
        if self.status != "Running":
            raise SessionNotRunning(self.session_id)
        if dticks < 1:
            raise ValueError("dticks must be >= 1")
        batch: list[LogRecord] = []
        self._append(batch, "Action", {"type": "advance", "dticks": dticks})
        target = self.twin.clock + dticks
        while self.twin.clock < target and self.status == "Running":
            self._inject_due_faults(batch)
            self.twin, events = twin_tick(self.twin, 1)
            self._queue_or_dispatch(events, batch)
            self._deliver_due_pending(batch)
            timeout_result = self.engine.check_timeouts(self.twin.clock)
            self._record_steps(timeout_result.steps, batch)
            self._auto_complete(batch)
        self._commit(batch)
        return {"accepted": True, "state": self.state_snapshot()}

    def state_snapshot(self) -> dict:
        """Consistent full snapshot: twin, activity states, consequence feed."""
        return {
            "session_id": self.session_id,
            "scenario_id": self.spec.scenario_id,
            "status": self.status,
            "tick": self.twin.clock,
            "work_cell": snapshot(self.twin),
            "activities": {
                a: inst.to_dict() for a, inst in self.engine.activity_states().items()
            },
            "consequences": [c.to_dict() for c in self.twin.consequences],
            "log_length": len(self.log),
            "error_path_length": self.error_path_length,
        }

    def log_lines(self) -> list[str]:
        return [record.to_json_line() for record in self.log]

    def debrief(self) -> dict:
        if self.status not in ("Completed", "Aborted"):
            raise SessionStillRunning(self.session_id)
        from .debrief import build_debrief

        return build_debrief(self.spec, self.log, self.session_id)


def replay(spec: ScenarioSpec, records: Iterable[LogRecord | Mapping], session_id: str = "replay") -> SessionRuntime:
    """Rebuild a session by re-running the driver records (operator actions,
    advances, explicit completion) against a fresh runtime. Derived records
    (subevents, firings, commands, auto-completion) are re-computed, which is
    exactly what makes log-replay equivalence a meaningful check."""
    runtime = SessionRuntime(spec, session_id)
    for record in records:
        body = record.body if isinstance(record, LogRecord) else record["body"]
        kind = record.kind if isinstance(record, LogRecord) else record["kind"]
        if kind != "Action":
            continue
        rtype = body.get("type")
        if rtype == "session":
            if body.get("event") == "started":
                runtime.begin()
            elif body.get("explicit"):
                runtime.complete(aborted=body.get("event") == "aborted")
        elif rtype == "operator_action":
            runtime.post_action(parse_action(body["action"]))
        elif rtype == "fault":
            from ..twin import TwinError

            runtime.inject_fault_now(TwinError.from_dict(body["fault"]))
        elif rtype == "advance":
            runtime.advance(int(body["dticks"]))
    return runtime
