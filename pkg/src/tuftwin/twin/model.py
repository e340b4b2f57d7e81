"""Work-cell twin state: machine, creel, substrate, product, operator.

Everything is a frozen dataclass; the simulation functions in sim.py return
new states, which keeps replay trivially deterministic and snapshots cheap.
Snapshots round-trip losslessly through plain dicts serialized as canonical
JSON (sorted keys), so equal states are byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping


class MachineStatus(str, Enum):
    OFF = "Off"
    SETUP = "Setup"
    RUN = "Run"
    EMERGENCY_STOP = "EmergencyStop"


# Twin error taxonomy. SeamUnderNeedles and StartWhileSetupIncomplete are
# extrapolations from the seam/setup content (flagged in the README).
WRONG_YARN_TYPE = "WrongYarnType"
TENSION_BLOCKED = "TensionBlocked"
EMPTY_SLOT_CONNECTED = "EmptySlotConnected"
YARN_BREAK = "YarnBreak"
AIR_DURATION_TOO_SHORT = "AirDurationTooShort"
SEAM_UNDER_NEEDLES = "SeamUnderNeedles"
START_WHILE_SETUP_INCOMPLETE = "StartWhileSetupIncomplete"

ERROR_KINDS = {
    WRONG_YARN_TYPE,
    TENSION_BLOCKED,
    EMPTY_SLOT_CONNECTED,
    YARN_BREAK,
    AIR_DURATION_TOO_SHORT,
    SEAM_UNDER_NEEDLES,
    START_WHILE_SETUP_INCOMPLETE,
}

INJECTABLE_KINDS = {YARN_BREAK, TENSION_BLOCKED}


@dataclass(frozen=True)
class TwinError:
    kind: str
    slot: int | None = None
    measured: int | None = None
    required: int | None = None

    def to_dict(self) -> dict:
        data: dict = {"kind": self.kind}
        if self.slot is not None:
            data["slot"] = self.slot
        if self.measured is not None:
            data["measured"] = self.measured
        if self.required is not None:
            data["required"] = self.required
        return data

    @classmethod
    def from_dict(cls, data: Mapping) -> "TwinError":
        return cls(
            kind=data["kind"],
            slot=data.get("slot"),
            measured=data.get("measured"),
            required=data.get("required"),
        )


@dataclass(frozen=True)
class MachineTwin:
    status: MachineStatus = MachineStatus.OFF
    main_shaft_rpm: float = 0.0
    pile_height_mm: float = 8.0
    tool_phase_deg: float = 0.0
    interlocked: bool = False

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "main_shaft_rpm": self.main_shaft_rpm,
            "pile_height_mm": self.pile_height_mm,
            "tool_phase_deg": self.tool_phase_deg,
            "interlocked": self.interlocked,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "MachineTwin":
        return cls(
            status=MachineStatus(data["status"]),
            main_shaft_rpm=data["main_shaft_rpm"],
            pile_height_mm=data["pile_height_mm"],
            tool_phase_deg=data["tool_phase_deg"],
            interlocked=data["interlocked"],
        )


@dataclass(frozen=True)
class SpoolSlot:
    occupied: bool = False
    yarn_type: str | None = None
    connected: bool = False
    tension_blocked: bool = False

    def to_dict(self) -> dict:
        return {
            "occupied": self.occupied,
            "yarn_type": self.yarn_type,
            "connected": self.connected,
            "tension_blocked": self.tension_blocked,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "SpoolSlot":
        return cls(
            occupied=data["occupied"],
            yarn_type=data.get("yarn_type"),
            connected=data["connected"],
            tension_blocked=data["tension_blocked"],
        )


@dataclass(frozen=True)
class CreelTwin:
    slots: tuple[SpoolSlot, ...] = ()

    def with_slot(self, index: int, slot: SpoolSlot) -> "CreelTwin":
        slots = list(self.slots)
        slots[index] = slot
        return CreelTwin(tuple(slots))

    def to_dict(self) -> dict:
        return {"slots": [s.to_dict() for s in self.slots]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "CreelTwin":
        return cls(tuple(SpoolSlot.from_dict(s) for s in data["slots"]))


@dataclass(frozen=True)
class SubstrateTwin:
    material: str = "jute"
    length_m: float = 50.0
    seam_positions_m: tuple[float, ...] = ()
    advanced_m: float = 0.0

    def to_dict(self) -> dict:
        return {
            "material": self.material,
            "length_m": self.length_m,
            "seam_positions_m": list(self.seam_positions_m),
            "advanced_m": self.advanced_m,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "SubstrateTwin":
        return cls(
            material=data["material"],
            length_m=data["length_m"],
            seam_positions_m=tuple(data["seam_positions_m"]),
            advanced_m=data["advanced_m"],
        )


@dataclass(frozen=True)
class ProductRow:
    index: int
    quality: str  # "Regular" | "Interrupted"
    error_kind: str | None = None
    slot: int | None = None

    def to_dict(self) -> dict:
        data: dict = {"index": self.index, "quality": self.quality}
        if self.error_kind is not None:
            data["error_kind"] = self.error_kind
        if self.slot is not None:
            data["slot"] = self.slot
        return data

    @classmethod
    def from_dict(cls, data: Mapping) -> "ProductRow":
        return cls(
            index=data["index"],
            quality=data["quality"],
            error_kind=data.get("error_kind"),
            slot=data.get("slot"),
        )


@dataclass(frozen=True)
class ProductTwin:
    rows: tuple[ProductRow, ...] = ()

    def to_dict(self) -> dict:
        return {"rows": [r.to_dict() for r in self.rows]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "ProductTwin":
        return cls(tuple(ProductRow.from_dict(r) for r in data["rows"]))


@dataclass(frozen=True)
class OperatorTwin:
    focus_element: str | None = None
    last_action_kind: str | None = None

    def to_dict(self) -> dict:
        return {"focus_element": self.focus_element, "last_action_kind": self.last_action_kind}

    @classmethod
    def from_dict(cls, data: Mapping) -> "OperatorTwin":
        return cls(
            focus_element=data.get("focus_element"),
            last_action_kind=data.get("last_action_kind"),
        )


# Activities with these ids are driven by the matching operator action.
ACTIVITY_FOR_ACTION = {
    "MountSpool": "mount_spool",
    "RemoveSpool": "remove_spool",
    "ConnectYarn": "connect_yarn",
    "SpliceYarn": "splice_yarn",
    "ApplyCompressedAir": "apply_air",
    "StartMachine": "start_machine",
    "StopMachine": "stop_machine",
}


@dataclass(frozen=True)
class CellParams:
    """Machine- and scenario-specific constants. None are hard-coded in the
    simulation; defaults here are placeholders a scenario file overrides."""

    slot_count: int = 8
    row_period_ticks: int = 10
    feed_m_per_tick: float = 0.005
    phase_deg_per_rpm_tick: float = 0.01
    run_rpm: float = 600.0
    air_required_ticks: int = 10
    required_yarn: tuple[tuple[int, str], ...] = ()
    required_connected_slots: tuple[int, ...] = ()
    bounds: tuple[tuple[str, tuple[float, float]], ...] = (
        ("main_shaft_rpm", (0.0, 1200.0)),
        ("pile_height_mm", (2.0, 20.0)),
    )
    # action kind -> activity id; twin error kind -> (activity id, error id)
    action_bindings: tuple[tuple[str, str], ...] = ()
    error_bindings: tuple[tuple[str, tuple[str, str]], ...] = ()

    def __post_init__(self):
        # Canonical ordering so equal configurations compare and serialize
        # identically regardless of construction order.
        for name in ("required_yarn", "bounds", "action_bindings", "error_bindings"):
            object.__setattr__(self, name, tuple(sorted(getattr(self, name))))
        object.__setattr__(
            self, "required_connected_slots", tuple(sorted(self.required_connected_slots))
        )

    def required_yarn_for(self, slot: int) -> str | None:
        for s, yarn in self.required_yarn:
            if s == slot:
                return yarn
        return None

    def bound_for(self, name: str) -> tuple[float, float] | None:
        for n, pair in self.bounds:
            if n == name:
                return pair
        return None

    def activity_for_action(self, action_kind: str) -> str | None:
        for kind, activity in self.action_bindings:
            if kind == action_kind:
                return activity
        return None

    def binding_for_error(self, error_kind: str) -> tuple[str, str] | None:
        for kind, pair in self.error_bindings:
            if kind == error_kind:
                return pair
        return None

    def to_dict(self) -> dict:
        return {
            "slot_count": self.slot_count,
            "row_period_ticks": self.row_period_ticks,
            "feed_m_per_tick": self.feed_m_per_tick,
            "phase_deg_per_rpm_tick": self.phase_deg_per_rpm_tick,
            "run_rpm": self.run_rpm,
            "air_required_ticks": self.air_required_ticks,
            "required_yarn": {str(s): y for s, y in self.required_yarn},
            "required_connected_slots": list(self.required_connected_slots),
            "bounds": {n: list(pair) for n, pair in self.bounds},
            "action_bindings": {k: v for k, v in self.action_bindings},
            "error_bindings": {k: list(v) for k, v in self.error_bindings},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "CellParams":
        return cls(
            slot_count=data["slot_count"],
            row_period_ticks=data["row_period_ticks"],
            feed_m_per_tick=data["feed_m_per_tick"],
            phase_deg_per_rpm_tick=data["phase_deg_per_rpm_tick"],
            run_rpm=data["run_rpm"],
            air_required_ticks=data["air_required_ticks"],
            required_yarn=tuple(sorted((int(s), y) for s, y in data["required_yarn"].items())),
            required_connected_slots=tuple(data["required_connected_slots"]),
            bounds=tuple(sorted((n, (p[0], p[1])) for n, p in data["bounds"].items())),
            action_bindings=tuple(sorted(data["action_bindings"].items())),
            error_bindings=tuple(
                sorted((k, (v[0], v[1])) for k, v in data["error_bindings"].items())
            ),
        )


@dataclass(frozen=True)
class ConsequenceNote:
    tick: int
    text: str
    anchor: str
    error_id: str
    activity_id: str
    severity: str

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "text": self.text,
            "anchor": self.anchor,
            "error_id": self.error_id,
            "activity_id": self.activity_id,
            "severity": self.severity,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ConsequenceNote":
        return cls(**data)


@dataclass(frozen=True)
class WorkCellState:
    params: CellParams
    clock: int = 0
    machine: MachineTwin = field(default_factory=MachineTwin)
    creel: CreelTwin = field(default_factory=CreelTwin)
    substrate: SubstrateTwin = field(default_factory=SubstrateTwin)
    product: ProductTwin = field(default_factory=ProductTwin)
    operator: OperatorTwin = field(default_factory=OperatorTwin)
    latched: tuple[TwinError, ...] = ()
    onsets_emitted: tuple[str, ...] = ()
    seams_crossed: tuple[int, ...] = ()
    row_progress: int = 0
    consequences: tuple[ConsequenceNote, ...] = ()

    def elements(self) -> set[str]:
        """Anchor/focus namespace shared with the trainer console."""
        ids = {"machine", "machine.status", "machine.controls", "substrate", "product"}
        ids.update(f"creel.slot.{i}" for i in range(self.params.slot_count))
        return ids


def initial_state(params: CellParams, machine: MachineTwin | None = None,
                  creel: CreelTwin | None = None,
                  substrate: SubstrateTwin | None = None) -> WorkCellState:
    slots = creel if creel is not None else CreelTwin(tuple(SpoolSlot() for _ in range(params.slot_count)))
    return WorkCellState(
        params=params,
        machine=machine or MachineTwin(),
        creel=slots,
        substrate=substrate or SubstrateTwin(),
    )


def snapshot(state: WorkCellState) -> dict:
    """Lossless, canonical plain-dict form of the whole state."""
    return {
        "params": state.params.to_dict(),
        "clock": state.clock,
        "machine": state.machine.to_dict(),
        "creel": state.creel.to_dict(),
        "substrate": state.substrate.to_dict(),
        "product": state.product.to_dict(),
        "operator": state.operator.to_dict(),
        "latched": [e.to_dict() for e in state.latched],
        "onsets_emitted": sorted(state.onsets_emitted),
        "seams_crossed": sorted(state.seams_crossed),
        "row_progress": state.row_progress,
        "consequences": [c.to_dict() for c in state.consequences],
    }


def state_from_snapshot(data: Mapping) -> WorkCellState:
    return WorkCellState(
        params=CellParams.from_dict(data["params"]),
        clock=data["clock"],
        machine=MachineTwin.from_dict(data["machine"]),
        creel=CreelTwin.from_dict(data["creel"]),
        substrate=SubstrateTwin.from_dict(data["substrate"]),
        product=ProductTwin.from_dict(data["product"]),
        operator=OperatorTwin.from_dict(data["operator"]),
        latched=tuple(TwinError.from_dict(e) for e in data["latched"]),
        onsets_emitted=tuple(data["onsets_emitted"]),
        seams_crossed=tuple(data["seams_crossed"]),
        row_progress=data["row_progress"],
        consequences=tuple(ConsequenceNote.from_dict(c) for c in data["consequences"]),
    )


def clear_interlock(state: WorkCellState) -> WorkCellState:
    """Scenario-level reset; deliberately not an operator action."""
    machine = replace(
        state.machine,
        interlocked=False,
        status=MachineStatus.OFF
        if state.machine.status is MachineStatus.EMERGENCY_STOP
        else state.machine.status,
    )
    return replace(state, machine=machine)
