"""Dispatching subevents through the composed session net.

The tracker owns one composed net plus its marking, injects subevent tokens,
runs the engine to quiescence and harvests what came out: consequence
commands, history entries (with a marking snapshot captured on interrupts)
and log entries. Activity lifecycle states are a pure derivation from the
marking plus the accumulated history.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from ..events import ConsequenceCommand, SubEvent, SubEventKind
from ..jsonutil import canonical_dumps
from ..petri import FiringRecord, Marking, Token, inject, run_to_quiescence
from . import templates
from .defs import (
    ActivityDefinition,
    ActivityInstance,
    ActivityState,
    HistoryEntry,
    LogEntry,
    PredicateTrigger,
    TimeoutTrigger,
    predicate_violated,
)


class UnknownActivity(Exception):
    pass


class StaleTick(Exception):
    pass


@dataclass(frozen=True)
class Step:
    """One harvested item from a dispatch, in processing order."""

    kind: str  # SubEvent | Firing | Command | History | Log
    subevent: SubEvent | None = None
    firing: FiringRecord | None = None
    command: ConsequenceCommand | None = None
    history: HistoryEntry | None = None
    log: LogEntry | None = None


@dataclass
class DispatchResult:
    steps: list[Step] = field(default_factory=list)

    @property
    def commands(self) -> list[ConsequenceCommand]:
        return [s.command for s in self.steps if s.kind == "Command"]

    @property
    def log_entries(self) -> list[LogEntry]:
        return [s.log for s in self.steps if s.kind == "Log"]

    @property
    def history_entries(self) -> list[HistoryEntry]:
        return [s.history for s in self.steps if s.kind == "History"]

    @property
    def firings(self) -> list[FiringRecord]:
        return [s.firing for s in self.steps if s.kind == "Firing"]

    @property
    def synthesized(self) -> list[SubEvent]:
        return [s.subevent for s in self.steps if s.kind == "SubEvent"]


def error_path_length(defs: Sequence[ActivityDefinition]) -> int:
    """Upper bound on firings between an error injection and its commands:
    detect, react, then the abstract interrupt. Constant per composed net."""
    return 3 if any(d.error_specs for d in defs) else 0


class ActivityEngine:
    """Single-writer engine for one session's composed activity net."""

    def __init__(
        self,
        defs: Sequence[ActivityDefinition],
        context_provider: Callable[[], Mapping] | None = None,
        max_steps: int = 10_000,
    ):
        self.defs = {d.activity_id: d for d in defs}
        registry = templates.standard_registry()
        self.net = templates.build_session_net(list(defs), registry)
        self.marking = Marking.initial(self.net)
        self.context_provider = context_provider or (lambda: {})
        self.max_steps = max_steps
        self.last_tick = 0
        self.trace: list[FiringRecord] = []
        self.history: list[HistoryEntry] = []
        self.logs: list[LogEntry] = []
        self.snapshots: dict[str, dict] = {}
        self._ev_seq = 0
        self._snap_seq = 0
        self._history_cursor = 0
        self._fired_timeouts: set[str] = set()
        self._interrupt_tids = {
            templates.interrupt_transition(a): a for a in self.defs
        }
        self._transition_activity = self._index_transitions()

    def _index_transitions(self) -> dict[str, tuple[str, str]]:
        index = {}
        for a, definition in self.defs.items():
            index[templates.start_transition(a)] = (a, "started")
            index[templates.finish_transition(a)] = (a, "finished")
            index[templates.interrupt_transition(a)] = (a, "interrupted")
            if definition.has_execute:
                index[f"{a}.progress"] = (a, "progressed")
        return index

    def _next_event_token(self, payload: dict, tick: int) -> Token:
        self._ev_seq += 1
        return Token(f"ev-{self._ev_seq}", payload, tick, tick)

    # Event dispatch

    def dispatch(self, ev: SubEvent) -> DispatchResult:
        """Inject the event token, run to quiescence, harvest the effects.

        End/Execute payloads are checked against the activity's predicate
        error specs first; a violated spec synthesizes an ErrorDetected event
        dispatched before the triggering event so the interrupt wins over the
        finish at the same tick.
        """
        if ev.activity_id not in self.defs:
            raise UnknownActivity(ev.activity_id)
        if ev.tick < self.last_tick:
            raise StaleTick(f"event at tick {ev.tick} after tick {self.last_tick}")
        definition = self.defs[ev.activity_id]
        result = DispatchResult()

        # End and error events only make sense while the activity is being
        # executed; anything else is sensor noise that must not latch, or a
        # later Start would jump straight past Active.
        if ev.kind in (SubEventKind.END, SubEventKind.ERROR_DETECTED):
            if not self.marking.tokens(templates.active_place(ev.activity_id)):
                entry = LogEntry(
                    ev.tick,
                    f"{ev.activity_id}#1",
                    f"{ev.kind.value} for {ev.activity_id} ignored (activity not active)",
                )
                self.logs.append(entry)
                result.steps.append(Step(kind="Log", log=entry))
                self.last_tick = ev.tick
                return result

        payload = self._token_payload(ev)
        if ev.kind in (SubEventKind.END, SubEventKind.EXECUTE):
            for spec in definition.error_specs:
                if isinstance(spec.trigger, PredicateTrigger) and predicate_violated(
                    spec.trigger, payload
                ):
                    synthesized = SubEvent(
                        activity_id=ev.activity_id,
                        kind=SubEventKind.ERROR_DETECTED,
                        tick=ev.tick,
                        payload={
                            "measured": payload.get(spec.trigger.field, 0),
                            "required": spec.trigger.threshold,
                        },
                        error_id=spec.error_id,
                    )
                    result.steps.append(Step(kind="SubEvent", subevent=synthesized))
                    self._inject_and_run(synthesized, self._token_payload(synthesized), result)

        self._inject_and_run(ev, payload, result)
        self.last_tick = ev.tick
        return result

    def dispatch_all(self, events: Sequence[SubEvent]) -> DispatchResult:
        """Dispatch a batch in canonical order: (tick, error-first rank, arrival)."""
        combined = DispatchResult()
        ordered = sorted(enumerate(events), key=lambda pair: (*pair[1].sort_key(), pair[0]))
        for _, ev in ordered:
            combined.steps.extend(self.dispatch(ev).steps)
        return combined

    def check_timeouts(self, now: int) -> DispatchResult:
        """Synthesize timeout errors for overdue Active instances, once each."""
        result = DispatchResult()
        states = self.activity_states()
        for a, definition in self.defs.items():
            instance = states[a]
            if (
                definition.timeout_ticks is None
                or instance.state is not ActivityState.ACTIVE
                or instance.started_at is None
                or now - instance.started_at <= definition.timeout_ticks
            ):
                continue
            for spec in definition.error_specs:
                key = f"{a}:{spec.error_id}"
                if not isinstance(spec.trigger, TimeoutTrigger) or key in self._fired_timeouts:
                    continue
                self._fired_timeouts.add(key)
                synthesized = SubEvent(
                    activity_id=a,
                    kind=SubEventKind.ERROR_DETECTED,
                    tick=now,
                    payload={"timeout_ticks": definition.timeout_ticks},
                    error_id=spec.error_id,
                )
                result.steps.append(Step(kind="SubEvent", subevent=synthesized))
                self._inject_and_run(synthesized, self._token_payload(synthesized), result)
                self.last_tick = now
        return result

    def _token_payload(self, ev: SubEvent) -> dict:
        payload = dict(ev.payload)
        payload["activity_id"] = ev.activity_id
        if ev.kind is SubEventKind.START:
            payload["started_at"] = ev.tick
        elif ev.kind is SubEventKind.END:
            payload["ended_at"] = ev.tick
            timer = self.marking.tokens(templates.timer_place(ev.activity_id))
            if timer:
                started = timer[0].payload.get("started_at")
                if isinstance(started, int):
                    payload["duration"] = ev.tick - started
        elif ev.kind is SubEventKind.ERROR_DETECTED:
            payload["error_id"] = ev.error_id
            payload["detected_at"] = ev.tick
        return payload

    def _inject_and_run(self, ev: SubEvent, payload: dict, result: DispatchResult) -> None:
        target = templates.exec_in_place(
            ev.activity_id,
            {
                SubEventKind.START: "start",
                SubEventKind.EXECUTE: "execute",
                SubEventKind.END: "end",
                SubEventKind.ERROR_DETECTED: "error",
            }[ev.kind],
        )
        if ev.kind is SubEventKind.EXECUTE and not self.defs[ev.activity_id].has_execute:
            # Execute markers for activities that do not expect them are
            # recorded but not injected (there is no place to receive them).
            entry = LogEntry(ev.tick, f"{ev.activity_id}#1", "unexpected execute marker ignored")
            self.logs.append(entry)
            result.steps.append(Step(kind="Log", log=entry))
            return

        context = dict(self.context_provider())
        marking = inject(self.marking, target, self._next_event_token(payload, ev.tick))
        marking, firings = run_to_quiescence(self.net, marking, ev.tick, self.max_steps, context)
        self.marking = marking
        self.trace.extend(firings)

        snapshot_ref = ""
        if any(f.transition_id in self._interrupt_tids for f in firings):
            self._snap_seq += 1
            snapshot_ref = f"snap-{self._snap_seq}"
            self.snapshots[snapshot_ref] = self.marking_snapshot()

        for firing in firings:
            result.steps.append(Step(kind="Firing", firing=firing))
            labelled = self._transition_activity.get(firing.transition_id)
            if labelled:
                a, what = labelled
                entry = LogEntry(
                    firing.tick,
                    f"{a}#1",
                    f"{a} {what}",
                    marking_ref=snapshot_ref if what == "interrupted" else "",
                )
                self.logs.append(entry)
                result.steps.append(Step(kind="Log", log=entry))

        for token in self.marking.store_tokens(templates.HISTORY_PLACE)[self._history_cursor:]:
            entry = self._history_entry(token, snapshot_ref)
            self.history.append(entry)
            self._history_cursor += 1
            result.steps.append(Step(kind="History", history=entry))

        for a in sorted(self.defs):
            commands_place = templates.commands_place(a)
            tokens, self.marking = self.marking.drain(commands_place)
            for token in tokens:
                result.steps.append(
                    Step(kind="Command", command=ConsequenceCommand.from_token_payload(token.payload))
                )

        if ev.kind is SubEventKind.START:
            started = any(
                f.transition_id == templates.start_transition(ev.activity_id) for f in firings
            )
            if not started:
                entry = LogEntry(
                    ev.tick,
                    f"{ev.activity_id}#1",
                    f"start of {ev.activity_id} refused (guard not satisfied or not pending)",
                )
                self.logs.append(entry)
                result.steps.append(Step(kind="Log", log=entry))

    def _history_entry(self, token: Token, snapshot_ref: str) -> HistoryEntry:
        a = str(token.payload.get("activity_id", ""))
        error_id = str(token.payload.get("error_id", ""))
        slot = token.payload.get("slot")
        description = f"{error_id} interrupted {a}"
        if slot is not None:
            description += f" (slot {slot})"
        return HistoryEntry(
            tick=token.created_at,
            instance_id=f"{a}#1",
            error_id=error_id,
            description=description,
            marking_ref=snapshot_ref,
        )

    # Derived views

    def activity_states(self) -> dict[str, ActivityInstance]:
        states = {}
        for a in self.defs:
            errors = tuple(e for e in self.history if e.instance_id == f"{a}#1")
            terminal = None
            for place, state in (
                (templates.finished_place(a), ActivityState.FINISHED),
                (templates.interrupted_place(a), ActivityState.INTERRUPTED),
            ):
                tokens = self.marking.tokens(place)
                if tokens:
                    terminal = (tokens[0], state)
                    break
            if terminal is not None:
                token, state = terminal
                started = token.payload.get("started_at")
                states[a] = ActivityInstance(
                    instance_id=f"{a}#1",
                    activity_id=a,
                    state=state,
                    started_at=started if isinstance(started, int) else None,
                    ended_at=token.created_at,
                    errors=errors,
                )
                continue
            active = self.marking.tokens(templates.active_place(a))
            if active:
                started = active[0].payload.get("started_at")
                states[a] = ActivityInstance(
                    instance_id=f"{a}#1",
                    activity_id=a,
                    state=ActivityState.ACTIVE,
                    started_at=started if isinstance(started, int) else None,
                    errors=errors,
                )
            else:
                states[a] = ActivityInstance(
                    instance_id=f"{a}#1",
                    activity_id=a,
                    state=ActivityState.PENDING,
                    errors=errors,
                )
        return states

    def marking_snapshot(self) -> dict:
        return self.marking.to_dict()

    def serialized_trace(self) -> str:
        return "\n".join(f.to_json_line() for f in self.trace)

    def state_digest(self) -> str:
        return canonical_dumps(
            {a: inst.to_dict() for a, inst in self.activity_states().items()}
        )
