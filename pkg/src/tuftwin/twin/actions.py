"""Operator action vocabulary and its wire form."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping


class ActionParseError(ValueError):
    pass


@dataclass(frozen=True)
class MountSpool:
    slot: int
    yarn_type: str
    kind = "MountSpool"


@dataclass(frozen=True)
class RemoveSpool:
    slot: int
    kind = "RemoveSpool"


@dataclass(frozen=True)
class ConnectYarn:
    slot: int
    kind = "ConnectYarn"


@dataclass(frozen=True)
class SpliceYarn:
    slot: int
    duration_ticks: int
    kind = "SpliceYarn"


@dataclass(frozen=True)
class ApplyCompressedAir:
    duration_ticks: int
    kind = "ApplyCompressedAir"


@dataclass(frozen=True)
class SetParameter:
    name: str
    value: float
    kind = "SetParameter"


@dataclass(frozen=True)
class StartMachine:
    kind = "StartMachine"


@dataclass(frozen=True)
class StopMachine:
    kind = "StopMachine"


@dataclass(frozen=True)
class Focus:
    element: str
    kind = "Focus"


OperatorAction = (
    MountSpool
    | RemoveSpool
    | ConnectYarn
    | SpliceYarn
    | ApplyCompressedAir
    | SetParameter
    | StartMachine
    | StopMachine
    | Focus
)

ACTION_KINDS = (
    "MountSpool",
    "RemoveSpool",
    "ConnectYarn",
    "SpliceYarn",
    "ApplyCompressedAir",
    "SetParameter",
    "StartMachine",
    "StopMachine",
    "Focus",
)


def _need_int(data: Mapping, key: str, minimum: int | None = None) -> int:
    value = data.get(key)
    if not isinstance(value, int) or isinstance(value, bool):
        raise ActionParseError(f"{key} must be an integer")
    if minimum is not None and value < minimum:
        raise ActionParseError(f"{key} must be >= {minimum}")
    return value


def parse_action(data: Any) -> OperatorAction:
    if not isinstance(data, Mapping):
        raise ActionParseError("action must be an object")
    kind = data.get("kind")
    if kind == "MountSpool":
        yarn = data.get("yarn_type")
        if not isinstance(yarn, str) or not yarn:
            raise ActionParseError("yarn_type must be a non-empty string")
        return MountSpool(slot=_need_int(data, "slot", 0), yarn_type=yarn)
    if kind == "RemoveSpool":
        return RemoveSpool(slot=_need_int(data, "slot", 0))
    if kind == "ConnectYarn":
        return ConnectYarn(slot=_need_int(data, "slot", 0))
    if kind == "SpliceYarn":
        return SpliceYarn(
            slot=_need_int(data, "slot", 0),
            duration_ticks=_need_int(data, "duration_ticks", 1),
        )
    if kind == "ApplyCompressedAir":
        return ApplyCompressedAir(duration_ticks=_need_int(data, "duration_ticks", 1))
    if kind == "SetParameter":
        name = data.get("name")
        value = data.get("value")
        if not isinstance(name, str) or not name:
            raise ActionParseError("name must be a non-empty string")
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ActionParseError("value must be a number")
        return SetParameter(name=name, value=float(value))
    if kind == "StartMachine":
        return StartMachine()
    if kind == "StopMachine":
        return StopMachine()
    if kind == "Focus":
        element = data.get("element")
        if not isinstance(element, str) or not element:
            raise ActionParseError("element must be a non-empty string")
        return Focus(element=element)
    raise ActionParseError(f"unknown action kind {kind!r}")


def action_to_dict(action: OperatorAction) -> dict:
    data: dict = {"kind": action.kind}
    for attr in ("slot", "yarn_type", "duration_ticks", "name", "value", "element"):
        if hasattr(action, attr):
            data[attr] = getattr(action, attr)
    return data
