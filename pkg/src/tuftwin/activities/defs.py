"""Activity definitions, error specs and the derived lifecycle records.

Activity definition files are JSON arrays of objects:

    {
      "activity_id": "splice_yarn",
      "name": "Splice yarn ends",
      "guard": "always",
      "expected_subevents": ["Start", "End"],
      "timeout_ticks": null,
      "error_specs": [
        {"error_id": "yarn_break",
         "trigger": {"twin_error": "YarnBreak"},
         "severity": "Critical",
         "actions": [{"kind": "StopMachine"},
                     {"kind": "ShowConsequence", "text": "...", "anchor": "creel.slot.0"}]}
      ]
    }

Triggers are either a twin error kind ({"twin_error": ...}), a named
predicate over subevent payloads ({"predicate": {"name": "duration_below",
"field": "duration", "threshold": 8}}), or {"timeout": true} which fires
when the activity outlives timeout_ticks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Mapping, Sequence

from ..events import ConsequenceKind, Severity, SubEventKind


class DefinitionError(ValueError):
    """An activity definition document is invalid."""

    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{message} (at {location})" if location else message)
        self.location = location


class DuplicateActivity(DefinitionError):
    pass


@dataclass(frozen=True)
class TwinErrorTrigger:
    kind: str


@dataclass(frozen=True)
class PredicateTrigger:
    name: str
    field: str
    threshold: int


@dataclass(frozen=True)
class TimeoutTrigger:
    pass


Trigger = TwinErrorTrigger | PredicateTrigger | TimeoutTrigger

# Payload predicates: True means the spec is violated and the error fires.
_PREDICATES: dict[str, Callable[[int, int], bool]] = {
    "duration_below": lambda value, threshold: value < threshold,
    "duration_above": lambda value, threshold: value > threshold,
}


def predicate_violated(trigger: PredicateTrigger, payload: Mapping) -> bool:
    value = payload.get(trigger.field)
    if not isinstance(value, int) or isinstance(value, bool):
        return False
    return _PREDICATES[trigger.name](value, trigger.threshold)


@dataclass(frozen=True)
class ConsequenceAction:
    kind: ConsequenceKind
    text: str = ""
    anchor: str = ""


@dataclass(frozen=True)
class ErrorSpec:
    error_id: str
    trigger: Trigger
    severity: Severity
    actions: tuple[ConsequenceAction, ...]


@dataclass(frozen=True)
class ActivityDefinition:
    activity_id: str
    name: str
    guard_name: str = "always"
    expected_subevents: tuple[SubEventKind, ...] = (SubEventKind.START, SubEventKind.END)
    timeout_ticks: int | None = None
    error_specs: tuple[ErrorSpec, ...] = ()

    @property
    def has_execute(self) -> bool:
        return SubEventKind.EXECUTE in self.expected_subevents

    def spec_for(self, error_id: str) -> ErrorSpec | None:
        for spec in self.error_specs:
            if spec.error_id == error_id:
                return spec
        return None


class ActivityState(str, Enum):
    PENDING = "Pending"
    ACTIVE = "Active"
    FINISHED = "Finished"
    INTERRUPTED = "Interrupted"


@dataclass(frozen=True)
class HistoryEntry:
    tick: int
    instance_id: str
    error_id: str
    description: str
    marking_ref: str

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "instance_id": self.instance_id,
            "error_id": self.error_id,
            "description": self.description,
            "marking_ref": self.marking_ref,
        }


@dataclass(frozen=True)
class LogEntry:
    tick: int
    instance_id: str
    description: str
    marking_ref: str = ""

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "instance_id": self.instance_id,
            "description": self.description,
            "marking_ref": self.marking_ref,
        }


@dataclass(frozen=True)
class ActivityInstance:
    instance_id: str
    activity_id: str
    state: ActivityState
    started_at: int | None = None
    ended_at: int | None = None
    errors: tuple[HistoryEntry, ...] = ()

    @property
    def duration_ticks(self) -> int | None:
        if self.started_at is None or self.ended_at is None:
            return None
        return self.ended_at - self.started_at

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "activity_id": self.activity_id,
            "state": self.state.value,
            "started_at": self.started_at,
            "ended_at": self.ended_at,
            "duration_ticks": self.duration_ticks,
            "errors": [e.to_dict() for e in self.errors],
        }


_SPEC_KEYS = {"error_id", "trigger", "severity", "actions"}
_DEF_KEYS = {"activity_id", "name", "guard", "expected_subevents", "timeout_ticks", "error_specs"}
_ACTION_KEYS = {"kind", "text", "anchor"}


def _parse_trigger(raw: Any, where: str) -> Trigger:
    if not isinstance(raw, Mapping):
        raise DefinitionError("trigger must be an object", where)
    if set(raw) == {"twin_error"}:
        return TwinErrorTrigger(str(raw["twin_error"]))
    if set(raw) == {"timeout"}:
        if raw["timeout"] is not True:
            raise DefinitionError("timeout trigger must be {\"timeout\": true}", where)
        return TimeoutTrigger()
    if set(raw) == {"predicate"}:
        pred = raw["predicate"]
        if not isinstance(pred, Mapping) or set(pred) - {"name", "field", "threshold"}:
            raise DefinitionError("bad predicate trigger", where)
        name = pred.get("name")
        if name not in _PREDICATES:
            raise DefinitionError(f"unknown predicate {name!r}", where)
        threshold = pred.get("threshold")
        if not isinstance(threshold, int) or isinstance(threshold, bool):
            raise DefinitionError("predicate threshold must be an integer", where)
        return PredicateTrigger(name=name, field=str(pred.get("field", "duration")), threshold=threshold)
    raise DefinitionError(f"unknown trigger shape {sorted(raw)}", where)


def _parse_spec(raw: Any, where: str) -> ErrorSpec:
    if not isinstance(raw, Mapping):
        raise DefinitionError("error spec must be an object", where)
    unknown = set(raw) - _SPEC_KEYS
    if unknown:
        raise DefinitionError(f"unknown keys {sorted(unknown)}", where)
    error_id = raw.get("error_id")
    if not isinstance(error_id, str) or not error_id:
        raise DefinitionError("error_id must be a non-empty string", where)
    try:
        severity = Severity(raw.get("severity", "Warning"))
    except ValueError:
        raise DefinitionError(f"unknown severity {raw.get('severity')!r}", where)
    actions = []
    for i, entry in enumerate(raw.get("actions", [])):
        action_where = f"{where}.actions[{i}]"
        if not isinstance(entry, Mapping) or set(entry) - _ACTION_KEYS:
            raise DefinitionError("bad consequence action", action_where)
        try:
            kind = ConsequenceKind(entry.get("kind"))
        except ValueError:
            raise DefinitionError(f"unknown action kind {entry.get('kind')!r}", action_where)
        actions.append(
            ConsequenceAction(kind=kind, text=str(entry.get("text", "")), anchor=str(entry.get("anchor", "")))
        )
    if severity in (Severity.WARNING, Severity.CRITICAL) and not actions:
        raise DefinitionError(
            f"{severity.value} errors need at least one consequence action", where
        )
    return ErrorSpec(
        error_id=error_id,
        trigger=_parse_trigger(raw.get("trigger"), where),
        severity=severity,
        actions=tuple(actions),
    )


def parse_activity_definition(raw: Any, where: str = "$") -> ActivityDefinition:
    if not isinstance(raw, Mapping):
        raise DefinitionError("activity definition must be an object", where)
    unknown = set(raw) - _DEF_KEYS
    if unknown:
        raise DefinitionError(f"unknown keys {sorted(unknown)}", where)
    activity_id = raw.get("activity_id")
    if not isinstance(activity_id, str) or not activity_id:
        raise DefinitionError("activity_id must be a non-empty string", where)
    subevents = []
    for kind in raw.get("expected_subevents", ["Start", "End"]):
        try:
            parsed = SubEventKind(kind)
        except ValueError:
            raise DefinitionError(f"unknown subevent kind {kind!r}", where)
        if parsed is SubEventKind.ERROR_DETECTED:
            raise DefinitionError("ErrorDetected is not an expected subevent", where)
        subevents.append(parsed)
    if not subevents or subevents[0] is not SubEventKind.START or subevents[-1] is not SubEventKind.END:
        raise DefinitionError("expected_subevents must begin with Start and end with End", where)
    if any(k is not SubEventKind.EXECUTE for k in subevents[1:-1]):
        raise DefinitionError("only Execute markers are allowed between Start and End", where)
    timeout = raw.get("timeout_ticks")
    if timeout is not None and (not isinstance(timeout, int) or isinstance(timeout, bool) or timeout < 1):
        raise DefinitionError("timeout_ticks must be a positive integer", where)
    specs = [
        _parse_spec(entry, f"{where}.error_specs[{i}]")
        for i, entry in enumerate(raw.get("error_specs", []))
    ]
    seen = set()
    for spec in specs:
        if spec.error_id in seen:
            raise DefinitionError(f"duplicate error_id {spec.error_id!r}", where)
        seen.add(spec.error_id)
    return ActivityDefinition(
        activity_id=activity_id,
        name=str(raw.get("name", activity_id)),
        guard_name=str(raw.get("guard", "always")),
        expected_subevents=tuple(subevents),
        timeout_ticks=timeout,
        error_specs=tuple(specs),
    )


def parse_activity_definitions(raw: Any, where: str = "$") -> tuple[ActivityDefinition, ...]:
    if not isinstance(raw, Sequence) or isinstance(raw, (str, bytes)):
        raise DefinitionError("expected a JSON array of activity definitions", where)
    defs = [parse_activity_definition(entry, f"{where}[{i}]") for i, entry in enumerate(raw)]
    seen: set[str] = set()
    for definition in defs:
        if definition.activity_id in seen:
            raise DuplicateActivity(
                f"duplicate activity_id {definition.activity_id!r}", where
            )
        seen.add(definition.activity_id)
    return tuple(defs)


def definition_to_dict(definition: ActivityDefinition) -> dict:
    specs = []
    for spec in definition.error_specs:
        if isinstance(spec.trigger, TwinErrorTrigger):
            trigger: dict = {"twin_error": spec.trigger.kind}
        elif isinstance(spec.trigger, PredicateTrigger):
            trigger = {
                "predicate": {
                    "name": spec.trigger.name,
                    "field": spec.trigger.field,
                    "threshold": spec.trigger.threshold,
                }
            }
        else:
            trigger = {"timeout": True}
        actions = []
        for action in spec.actions:
            entry: dict = {"kind": action.kind.value}
            if action.text:
                entry["text"] = action.text
            if action.anchor:
                entry["anchor"] = action.anchor
            actions.append(entry)
        specs.append(
            {
                "error_id": spec.error_id,
                "trigger": trigger,
                "severity": spec.severity.value,
                "actions": actions,
            }
        )
    data: dict = {
        "activity_id": definition.activity_id,
        "name": definition.name,
        "guard": definition.guard_name,
        "expected_subevents": [k.value for k in definition.expected_subevents],
        "error_specs": specs,
    }
    if definition.timeout_ticks is not None:
        data["timeout_ticks"] = definition.timeout_ticks
    return data
