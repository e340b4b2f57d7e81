"""Event types shared between the work-cell twin, the activity nets and the
session service: subevents flowing in, consequence commands flowing out."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping


class SubEventKind(str, Enum):
    START = "Start"
    EXECUTE = "Execute"
    END = "End"
    ERROR_DETECTED = "ErrorDetected"


# Same-tick delivery order: lifecycle order with errors squeezed in before
# End, so an error accompanying a Start still lands on the active activity
# and an error racing an End wins (the instance interrupts, not finishes).
KIND_RANK = {
    SubEventKind.START: 0,
    SubEventKind.EXECUTE: 1,
    SubEventKind.ERROR_DETECTED: 2,
    SubEventKind.END: 3,
}


@dataclass(frozen=True)
class SubEvent:
    """Atomic observable fragment of an operator activity."""

    activity_id: str
    kind: SubEventKind
    tick: int
    payload: Mapping[str, str | int | bool] = field(default_factory=dict)
    error_id: str | None = None

    def __post_init__(self):
        if self.kind is SubEventKind.ERROR_DETECTED and not self.error_id:
            raise ValueError("ErrorDetected subevents need an error_id")
        if self.tick < 0:
            raise ValueError("tick must be non-negative")

    def sort_key(self) -> tuple:
        return (self.tick, KIND_RANK[self.kind])

    def to_dict(self) -> dict:
        data = {
            "activity_id": self.activity_id,
            "kind": self.kind.value,
            "tick": self.tick,
            "payload": dict(sorted(self.payload.items())),
        }
        if self.error_id is not None:
            data["error_id"] = self.error_id
        return data


class Severity(str, Enum):
    INFO = "Info"
    WARNING = "Warning"
    CRITICAL = "Critical"


class ConsequenceKind(str, Enum):
    STOP_MACHINE = "StopMachine"
    SHOW_CONSEQUENCE = "ShowConsequence"
    LOCK_CONTROLS = "LockControls"
    NONE = "None"


@dataclass(frozen=True)
class ConsequenceCommand:
    """One error-handling measure emitted by an error-consequence net."""

    kind: ConsequenceKind
    activity_id: str
    error_id: str
    severity: Severity
    text: str = ""
    anchor: str = ""

    def to_dict(self) -> dict:
        data = {
            "kind": self.kind.value,
            "activity_id": self.activity_id,
            "error_id": self.error_id,
            "severity": self.severity.value,
        }
        if self.kind is ConsequenceKind.SHOW_CONSEQUENCE:
            data["text"] = self.text
            data["anchor"] = self.anchor
        return data

    @classmethod
    def from_token_payload(cls, payload: Mapping) -> "ConsequenceCommand":
        return cls(
            kind=ConsequenceKind(payload["cmd"]),
            activity_id=str(payload.get("activity_id", "")),
            error_id=str(payload.get("error_id", "")),
            severity=Severity(payload.get("severity", "Info")),
            text=str(payload.get("text", "")),
            anchor=str(payload.get("anchor", "")),
        )
