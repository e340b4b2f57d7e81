"""Scenario files: the pre-programmed training content.

A scenario is a JSON document:

    {
      "scenario_id": "tufting-demo-01",
      "title": "Creel setup and splice",
      "work_cell": {
        "slot_count": 4,
        "machine": {"status": "Setup", "pile_height_mm": 8.0, "main_shaft_rpm": 0.0},
        "substrate": {"material": "jute", "length_m": 50.0, "seam_positions_m": []},
        "creel": [{"slot": 0, "yarn_type": "wool", "connected": true}],
        "params": {"row_period_ticks": 5, "air_required_ticks": 8, ...}
      },
      "activities": [... activity definition documents ...],
      "faults": [{"tick": 30, "fault": {"kind": "YarnBreak", "slot": 0}}],
      "success_criteria": ["all_activities_finished",
                           {"name": "min_regular_rows", "params": {"rows": 2}}],
      "hints": {"yarn_break": "Splice the broken ends ..."}
    }

All numeric thresholds are explicit in the file; the simulator hard-codes
none of them. Hint and consequence texts live here too, never in code.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Mapping

from ..activities import (
    ActivityDefinition,
    DefinitionError,
    TwinErrorTrigger,
    parse_activity_definitions,
)
from ..twin import (
    ACTIVITY_FOR_ACTION,
    ERROR_KINDS,
    INJECTABLE_KINDS,
    CellParams,
    CreelTwin,
    MachineStatus,
    MachineTwin,
    SpoolSlot,
    SubstrateTwin,
    TwinError,
    WorkCellState,
    initial_state,
)


class ScenarioInvalid(ValueError):
    def __init__(self, diagnostics: list[str]):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class SuccessCriterion:
    name: str
    params: Mapping[str, Any]


@dataclass(frozen=True)
class ScenarioSpec:
    scenario_id: str
    title: str
    params: CellParams
    machine: MachineTwin
    creel: CreelTwin
    substrate: SubstrateTwin
    activities: tuple[ActivityDefinition, ...]
    faults: tuple[tuple[int, TwinError], ...]
    success_criteria: tuple[SuccessCriterion, ...]
    hints: Mapping[str, str]
    raw: Mapping[str, Any]

    def initial_work_cell(self) -> WorkCellState:
        return initial_state(self.params, machine=self.machine, creel=self.creel, substrate=self.substrate)

    def hint_for(self, error_id: str) -> str:
        return self.hints.get(error_id, "")

    def activity_ids(self) -> list[str]:
        return [d.activity_id for d in self.activities]


# success criteria evaluated on (final snapshot dict, activity states dict)
CriterionFn = Callable[[Mapping, Mapping], bool]


def _all_activities_finished(snapshot: Mapping, states: Mapping) -> bool:
    return all(inst["state"] == "Finished" for inst in states.values())


def _no_critical_errors(snapshot: Mapping, states: Mapping) -> bool:
    return all(inst["state"] != "Interrupted" for inst in states.values())


def _min_regular_rows(rows: int) -> CriterionFn:
    def check(snapshot: Mapping, states: Mapping) -> bool:
        regular = [r for r in snapshot["product"]["rows"] if r["quality"] == "Regular"]
        return len(regular) >= rows

    return check


def resolve_criterion(criterion: SuccessCriterion) -> CriterionFn:
    if criterion.name == "all_activities_finished":
        return _all_activities_finished
    if criterion.name == "no_critical_errors":
        return _no_critical_errors
    if criterion.name == "min_regular_rows":
        return _min_regular_rows(int(criterion.params["rows"]))
    raise ScenarioInvalid([f"unknown success criterion {criterion.name!r}"])


_TOP_KEYS = {"scenario_id", "title", "work_cell", "activities", "faults", "success_criteria", "hints"}
_CELL_KEYS = {"slot_count", "machine", "substrate", "creel", "params"}
_PARAM_KEYS = {
    "row_period_ticks",
    "feed_m_per_tick",
    "phase_deg_per_rpm_tick",
    "run_rpm",
    "air_required_ticks",
    "required_yarn",
    "required_connected_slots",
    "bounds",
}


def parse_scenario(document: Any) -> ScenarioSpec:
    """Validate a scenario document; raises ScenarioInvalid with a list of
    diagnostics covering every problem found (not just the first)."""
    problems: list[str] = []
    if not isinstance(document, Mapping):
        raise ScenarioInvalid(["scenario must be a JSON object"])
    unknown = set(document) - _TOP_KEYS
    if unknown:
        problems.append(f"unknown top-level keys {sorted(unknown)}")

    scenario_id = document.get("scenario_id")
    if not isinstance(scenario_id, str) or not scenario_id:
        problems.append("scenario_id must be a non-empty string")
        scenario_id = "invalid"
    title = str(document.get("title", scenario_id))

    cell = document.get("work_cell", {})
    if not isinstance(cell, Mapping):
        problems.append("work_cell must be an object")
        cell = {}
    unknown = set(cell) - _CELL_KEYS
    if unknown:
        problems.append(f"unknown work_cell keys {sorted(unknown)}")

    slot_count = cell.get("slot_count", 8)
    if not isinstance(slot_count, int) or slot_count < 1:
        problems.append("slot_count must be a positive integer")
        slot_count = 8

    raw_params = cell.get("params", {})
    if not isinstance(raw_params, Mapping):
        problems.append("work_cell.params must be an object")
        raw_params = {}
    unknown = set(raw_params) - _PARAM_KEYS
    if unknown:
        problems.append(f"unknown params keys {sorted(unknown)}")

    required_yarn: list[tuple[int, str]] = []
    for key, yarn in dict(raw_params.get("required_yarn", {})).items():
        try:
            slot = int(key)
        except (TypeError, ValueError):
            problems.append(f"required_yarn key {key!r} is not a slot index")
            continue
        if not 0 <= slot < slot_count:
            problems.append(f"required_yarn references slot {slot} of a {slot_count}-slot creel")
        required_yarn.append((slot, str(yarn)))

    required_connected = []
    for slot in raw_params.get("required_connected_slots", []):
        if not isinstance(slot, int) or not 0 <= slot < slot_count:
            problems.append(f"required_connected_slots references invalid slot {slot!r}")
        else:
            required_connected.append(slot)

    default_bounds = dict(CellParams().bounds)
    bounds = {**default_bounds}
    for name, pair in dict(raw_params.get("bounds", {})).items():
        if (
            not isinstance(pair, (list, tuple))
            or len(pair) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in pair)
        ):
            problems.append(f"bounds for {name!r} must be a [min, max] pair")
            continue
        bounds[name] = (float(pair[0]), float(pair[1]))

    try:
        activities = parse_activity_definitions(document.get("activities", []), "$.activities")
    except DefinitionError as err:
        problems.append(str(err))
        activities = ()

    action_bindings = []
    for action_kind, activity_id in ACTIVITY_FOR_ACTION.items():
        if any(d.activity_id == activity_id for d in activities):
            action_bindings.append((action_kind, activity_id))
    error_bindings: dict[str, tuple[str, str]] = {}
    for definition in activities:
        for spec in definition.error_specs:
            if not isinstance(spec.trigger, TwinErrorTrigger):
                continue
            kind = spec.trigger.kind
            if kind not in ERROR_KINDS:
                problems.append(
                    f"activity {definition.activity_id!r} references unknown twin error {kind!r}"
                )
                continue
            if kind in error_bindings:
                problems.append(
                    f"twin error {kind!r} bound by both "
                    f"{error_bindings[kind][0]!r} and {definition.activity_id!r}"
                )
                continue
            error_bindings[kind] = (definition.activity_id, spec.error_id)

    params = CellParams(
        slot_count=slot_count,
        row_period_ticks=int(raw_params.get("row_period_ticks", 10)),
        feed_m_per_tick=float(raw_params.get("feed_m_per_tick", 0.005)),
        phase_deg_per_rpm_tick=float(raw_params.get("phase_deg_per_rpm_tick", 0.01)),
        run_rpm=float(raw_params.get("run_rpm", 600.0)),
        air_required_ticks=int(raw_params.get("air_required_ticks", 10)),
        required_yarn=tuple(required_yarn),
        required_connected_slots=tuple(required_connected),
        bounds=tuple(bounds.items()),
        action_bindings=tuple(action_bindings),
        error_bindings=tuple(error_bindings.items()),
    )
    if params.row_period_ticks < 1:
        problems.append("row_period_ticks must be >= 1")
    if params.air_required_ticks < 0:
        problems.append("air_required_ticks must be >= 0")

    machine_raw = cell.get("machine", {})
    if not isinstance(machine_raw, Mapping):
        problems.append("work_cell.machine must be an object")
        machine_raw = {}
    try:
        status = MachineStatus(machine_raw.get("status", "Off"))
    except ValueError:
        problems.append(f"unknown machine status {machine_raw.get('status')!r}")
        status = MachineStatus.OFF
    machine = MachineTwin(
        status=status,
        main_shaft_rpm=float(machine_raw.get("main_shaft_rpm", 0.0)),
        pile_height_mm=float(machine_raw.get("pile_height_mm", 8.0)),
    )
    low, high = dict(params.bounds).get("pile_height_mm", (None, None))
    if low is not None and not low <= machine.pile_height_mm <= high:
        problems.append("initial pile_height_mm outside bounds")
    if machine.status is MachineStatus.RUN and machine.main_shaft_rpm <= 0:
        problems.append("machine cannot start in Run with zero rpm")

    slots = [SpoolSlot() for _ in range(slot_count)]
    for i, entry in enumerate(cell.get("creel", [])):
        if not isinstance(entry, Mapping) or set(entry) - {"slot", "yarn_type", "connected", "tension_blocked"}:
            problems.append(f"bad creel entry at index {i}")
            continue
        slot = entry.get("slot")
        if not isinstance(slot, int) or not 0 <= slot < slot_count:
            problems.append(f"creel entry {i} references invalid slot {slot!r}")
            continue
        slots[slot] = SpoolSlot(
            occupied=True,
            yarn_type=str(entry.get("yarn_type", "")) or None,
            connected=bool(entry.get("connected", False)),
            tension_blocked=bool(entry.get("tension_blocked", False)),
        )

    substrate_raw = cell.get("substrate", {})
    if not isinstance(substrate_raw, Mapping):
        problems.append("work_cell.substrate must be an object")
        substrate_raw = {}
    seams = tuple(float(s) for s in substrate_raw.get("seam_positions_m", []))
    length = float(substrate_raw.get("length_m", 50.0))
    if any(not 0 <= s < length for s in seams):
        problems.append("seam positions must lie within the substrate length")
    substrate = SubstrateTwin(
        material=str(substrate_raw.get("material", "jute")),
        length_m=length,
        seam_positions_m=tuple(sorted(seams)),
    )

    faults = []
    for i, entry in enumerate(document.get("faults", [])):
        if not isinstance(entry, Mapping) or set(entry) - {"tick", "fault"}:
            problems.append(f"bad fault entry at index {i}")
            continue
        when = entry.get("tick")
        if not isinstance(when, int) or when < 0:
            problems.append(f"fault {i} tick must be a non-negative integer")
            continue
        fault_raw = entry.get("fault", {})
        kind = fault_raw.get("kind") if isinstance(fault_raw, Mapping) else None
        if kind not in INJECTABLE_KINDS:
            problems.append(f"fault {i} kind {kind!r} is not injectable")
            continue
        slot = fault_raw.get("slot")
        if not isinstance(slot, int) or not 0 <= slot < slot_count:
            problems.append(f"fault {i} references invalid slot {slot!r}")
            continue
        faults.append((when, TwinError(kind=kind, slot=slot)))
    faults.sort(key=lambda pair: pair[0])

    criteria = []
    for i, entry in enumerate(document.get("success_criteria", [])):
        if isinstance(entry, str):
            criteria.append(SuccessCriterion(entry, {}))
        elif isinstance(entry, Mapping) and set(entry) <= {"name", "params"} and "name" in entry:
            criteria.append(SuccessCriterion(str(entry["name"]), dict(entry.get("params", {}))))
        else:
            problems.append(f"bad success criterion at index {i}")
    for criterion in criteria:
        try:
            resolve_criterion(criterion)
        except ScenarioInvalid as err:
            problems.extend(err.diagnostics)
        except (KeyError, TypeError, ValueError):
            problems.append(f"criterion {criterion.name!r} has bad params")

    hints = document.get("hints", {})
    if not isinstance(hints, Mapping):
        problems.append("hints must be an object keyed by error_id")
        hints = {}

    if problems:
        raise ScenarioInvalid(problems)
    return ScenarioSpec(
        scenario_id=scenario_id,
        title=title,
        params=params,
        machine=machine,
        creel=CreelTwin(tuple(slots)),
        substrate=substrate,
        activities=activities,
        faults=tuple(faults),
        success_criteria=tuple(criteria),
        hints={str(k): str(v) for k, v in hints.items()},
        raw=document,
    )
