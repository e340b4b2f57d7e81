"""Deterministic work-cell dynamics.

All functions are pure: (state, input, tick) -> (state, subevents). Operator
interactions are closely monitored: each bound action emits Start/End
subevents for its activity and error subevents per the taxonomy. Durational
actions (splice, compressed air) return a future-stamped End; the session's
pending queue delivers it when time advances.
"""

from __future__ import annotations

from dataclasses import replace

from ..events import ConsequenceCommand, ConsequenceKind, SubEvent, SubEventKind
from . import model
from .actions import (
    ApplyCompressedAir,
    ConnectYarn,
    Focus,
    MountSpool,
    OperatorAction,
    RemoveSpool,
    SetParameter,
    SpliceYarn,
    StartMachine,
    StopMachine,
)
from .model import (
    AIR_DURATION_TOO_SHORT,
    EMPTY_SLOT_CONNECTED,
    INJECTABLE_KINDS,
    SEAM_UNDER_NEEDLES,
    START_WHILE_SETUP_INCOMPLETE,
    TENSION_BLOCKED,
    WRONG_YARN_TYPE,
    YARN_BREAK,
    MachineStatus,
    TwinError,
    WorkCellState,
)


class InterlockActive(Exception):
    pass


class InvalidSlot(Exception):
    pass


class InvalidTarget(Exception):
    pass


class InvalidParameter(Exception):
    pass


class InvalidAction(Exception):
    pass


def _lifecycle_events(
    state: WorkCellState, action_kind: str, start_tick: int, end_tick: int, payload: dict
) -> list[SubEvent]:
    activity = state.params.activity_for_action(action_kind)
    if activity is None:
        return []
    return [
        SubEvent(activity, SubEventKind.START, start_tick, dict(payload)),
        SubEvent(activity, SubEventKind.END, end_tick, dict(payload)),
    ]


def _error_event(state: WorkCellState, error: TwinError, tick: int) -> SubEvent:
    """Bound errors carry the scenario's error_id; unbound ones keep the
    taxonomy kind and an empty activity (the session logs them unrouted)."""
    binding = state.params.binding_for_error(error.kind)
    payload: dict = {"twin_error": error.kind}
    if error.slot is not None:
        payload["slot"] = error.slot
    if error.measured is not None:
        payload["measured"] = error.measured
    if error.required is not None:
        payload["required"] = error.required
    activity_id, error_id = binding if binding else ("", error.kind)
    return SubEvent(activity_id, SubEventKind.ERROR_DETECTED, tick, payload, error_id=error_id)


def _check_slot(state: WorkCellState, slot: int) -> None:
    if not 0 <= slot < state.params.slot_count:
        raise InvalidSlot(f"slot {slot} out of range (creel has {state.params.slot_count})")


def _setup_complete(state: WorkCellState) -> bool:
    for slot in state.params.required_connected_slots:
        spool = state.creel.slots[slot]
        if not (spool.occupied and spool.connected):
            return False
    return True


def apply_action(
    state: WorkCellState, action: OperatorAction, tick: int
) -> tuple[WorkCellState, list[SubEvent]]:
    if tick < state.clock:
        raise ValueError(f"action at tick {tick} behind clock {state.clock}")
    if state.machine.interlocked:
        raise InterlockActive(action.kind)

    state = replace(state, clock=tick, operator=replace(state.operator, last_action_kind=action.kind))
    events: list[SubEvent] = []

    if isinstance(action, MountSpool):
        _check_slot(state, action.slot)
        if state.creel.slots[action.slot].occupied:
            raise InvalidSlot(f"slot {action.slot} already occupied")
        state = replace(
            state,
            creel=state.creel.with_slot(
                action.slot,
                model.SpoolSlot(occupied=True, yarn_type=action.yarn_type),
            ),
        )
        events += _lifecycle_events(
            state, action.kind, tick, tick, {"slot": action.slot, "yarn_type": action.yarn_type}
        )

    elif isinstance(action, RemoveSpool):
        _check_slot(state, action.slot)
        if not state.creel.slots[action.slot].occupied:
            raise InvalidSlot(f"slot {action.slot} is empty")
        state = replace(
            state,
            creel=state.creel.with_slot(action.slot, model.SpoolSlot()),
            latched=tuple(e for e in state.latched if e.slot != action.slot),
            onsets_emitted=tuple(
                k for k in state.onsets_emitted if k.split(":")[-1] != str(action.slot)
            ),
        )
        events += _lifecycle_events(state, action.kind, tick, tick, {"slot": action.slot})

    elif isinstance(action, ConnectYarn):
        _check_slot(state, action.slot)
        spool = state.creel.slots[action.slot]
        payload = {"slot": action.slot}
        events += _lifecycle_events(state, action.kind, tick, tick, payload)
        if not spool.occupied:
            events.append(_error_event(state, TwinError(EMPTY_SLOT_CONNECTED, action.slot), tick))
        else:
            state = replace(
                state, creel=state.creel.with_slot(action.slot, replace(spool, connected=True))
            )
            required = state.params.required_yarn_for(action.slot)
            already = f"{WRONG_YARN_TYPE}:{action.slot}" in state.onsets_emitted
            if required is not None and required != spool.yarn_type and not already:
                state = _mark_onset(state, WRONG_YARN_TYPE, action.slot)
                events.append(_error_event(state, TwinError(WRONG_YARN_TYPE, action.slot), tick))

    elif isinstance(action, SpliceYarn):
        _check_slot(state, action.slot)
        if not state.creel.slots[action.slot].occupied:
            raise InvalidSlot(f"slot {action.slot} is empty")
        # A splice repairs a broken yarn end; clearing the onset marker lets
        # a later break on the same slot report again.
        state = replace(
            state,
            latched=tuple(
                e for e in state.latched if not (e.kind == YARN_BREAK and e.slot == action.slot)
            ),
            onsets_emitted=tuple(
                k for k in state.onsets_emitted if k != f"{YARN_BREAK}:{action.slot}"
            ),
        )
        events += _lifecycle_events(
            state, action.kind, tick, tick + action.duration_ticks, {"slot": action.slot}
        )

    elif isinstance(action, ApplyCompressedAir):
        end = tick + action.duration_ticks
        events += _lifecycle_events(
            state, action.kind, tick, end, {"measured": action.duration_ticks}
        )
        required = state.params.air_required_ticks
        if action.duration_ticks < required:
            events.append(
                _error_event(
                    state,
                    TwinError(AIR_DURATION_TOO_SHORT, measured=action.duration_ticks, required=required),
                    end,
                )
            )

    elif isinstance(action, SetParameter):
        bound = state.params.bound_for(action.name)
        if bound is None:
            raise InvalidParameter(f"unknown parameter {action.name!r}")
        low, high = bound
        if not low <= action.value <= high:
            raise InvalidParameter(
                f"{action.name}={action.value} outside bounds [{low}, {high}]"
            )
        if (
            action.name == "main_shaft_rpm"
            and action.value <= 0
            and state.machine.status is MachineStatus.RUN
        ):
            raise InvalidParameter("main_shaft_rpm must stay positive while running")
        state = replace(state, machine=replace(state.machine, **{action.name: action.value}))
        events += _lifecycle_events(
            state, action.kind, tick, tick, {"name": action.name}
        )

    elif isinstance(action, StartMachine):
        if state.machine.status is MachineStatus.RUN:
            raise InvalidAction("machine already running")
        rpm = state.machine.main_shaft_rpm if state.machine.main_shaft_rpm > 0 else state.params.run_rpm
        state = replace(
            state, machine=replace(state.machine, status=MachineStatus.RUN, main_shaft_rpm=rpm)
        )
        events += _lifecycle_events(state, action.kind, tick, tick, {})
        if not _setup_complete(state):
            events.append(_error_event(state, TwinError(START_WHILE_SETUP_INCOMPLETE), tick))

    elif isinstance(action, StopMachine):
        state = replace(
            state, machine=replace(state.machine, status=MachineStatus.OFF, main_shaft_rpm=0.0)
        )
        events += _lifecycle_events(state, action.kind, tick, tick, {})

    elif isinstance(action, Focus):
        if action.element not in state.elements():
            raise InvalidTarget(f"unknown element {action.element!r}")
        state = replace(state, operator=replace(state.operator, focus_element=action.element))

    else:
        raise InvalidAction(f"unhandled action {action!r}")

    return state, events


def _mark_onset(state: WorkCellState, kind: str, slot: int | None) -> WorkCellState:
    key = f"{kind}:{slot}"
    if key in state.onsets_emitted:
        return state
    return replace(state, onsets_emitted=(*state.onsets_emitted, key))


def _slot_defect(state: WorkCellState, index: int) -> str | None:
    """First defect visible on a connected slot, in a fixed check order."""
    spool = state.creel.slots[index]
    if not (spool.occupied and spool.connected):
        return None
    if any(e.kind == YARN_BREAK and e.slot == index for e in state.latched):
        return YARN_BREAK
    if spool.tension_blocked:
        return TENSION_BLOCKED
    required = state.params.required_yarn_for(index)
    if required is not None and required != spool.yarn_type:
        return WRONG_YARN_TYPE
    return None


def tick(state: WorkCellState, dticks: int) -> tuple[WorkCellState, list[SubEvent]]:
    """Advance the clock tick by tick; while running, rotate the tools,
    advance the substrate and append one product row per row period."""
    if dticks < 1:
        raise ValueError("dticks must be >= 1")
    events: list[SubEvent] = []
    for _ in range(dticks):
        now = state.clock + 1
        state = replace(state, clock=now)
        if state.machine.status is not MachineStatus.RUN:
            continue

        machine = replace(
            state.machine,
            tool_phase_deg=(
                state.machine.tool_phase_deg
                + state.machine.main_shaft_rpm * state.params.phase_deg_per_rpm_tick
            )
            % 360.0,
        )
        advanced = min(
            state.substrate.advanced_m + state.params.feed_m_per_tick,
            state.substrate.length_m,
        )
        state = replace(
            state, machine=machine, substrate=replace(state.substrate, advanced_m=advanced)
        )

        for i, seam in enumerate(state.substrate.seam_positions_m):
            if i not in state.seams_crossed and state.substrate.advanced_m >= seam:
                state = replace(state, seams_crossed=(*state.seams_crossed, i))
                events.append(_error_event(state, TwinError(SEAM_UNDER_NEEDLES), now))

        for index in range(state.params.slot_count):
            defect = _slot_defect(state, index)
            if defect is None:
                continue
            key = f"{defect}:{index}"
            if key not in state.onsets_emitted:
                state = _mark_onset(state, defect, index)
                events.append(_error_event(state, TwinError(defect, index), now))

        progress = state.row_progress + 1
        if progress >= state.params.row_period_ticks:
            defect_slot, defect = None, None
            for index in range(state.params.slot_count):
                found = _slot_defect(state, index)
                if found is not None:
                    defect_slot, defect = index, found
                    break
            row = model.ProductRow(
                index=len(state.product.rows),
                quality="Regular" if defect is None else "Interrupted",
                error_kind=defect,
                slot=defect_slot,
            )
            state = replace(
                state,
                row_progress=0,
                product=model.ProductTwin((*state.product.rows, row)),
            )
        else:
            state = replace(state, row_progress=progress)
    return state, events


def execute_command(state: WorkCellState, cmd: ConsequenceCommand, tick: int) -> WorkCellState:
    """Apply an error-consequence command to the twin. Idempotent."""
    if cmd.kind is ConsequenceKind.STOP_MACHINE:
        status = state.machine.status
        if status is not MachineStatus.OFF:
            status = MachineStatus.EMERGENCY_STOP
        return replace(
            state,
            machine=replace(state.machine, status=status, main_shaft_rpm=0.0, interlocked=True),
        )
    if cmd.kind is ConsequenceKind.LOCK_CONTROLS:
        return replace(state, machine=replace(state.machine, interlocked=True))
    if cmd.kind is ConsequenceKind.SHOW_CONSEQUENCE:
        note = model.ConsequenceNote(
            tick=tick,
            text=cmd.text,
            anchor=cmd.anchor,
            error_id=cmd.error_id,
            activity_id=cmd.activity_id,
            severity=cmd.severity.value,
        )
        return replace(state, consequences=(*state.consequences, note))
    return state


def inject_fault(state: WorkCellState, fault: TwinError, tick: int) -> WorkCellState:
    """Latch a scripted fault; it manifests on subsequent ticks/actions."""
    if fault.kind not in INJECTABLE_KINDS:
        raise InvalidTarget(f"{fault.kind} is not injectable")
    if fault.slot is None:
        raise InvalidTarget(f"{fault.kind} needs a slot")
    _check_slot_target(state, fault)
    if fault.kind == YARN_BREAK:
        if any(e.kind == YARN_BREAK and e.slot == fault.slot for e in state.latched):
            return state
        return replace(state, latched=(*state.latched, TwinError(YARN_BREAK, fault.slot)))
    spool = state.creel.slots[fault.slot]
    return replace(
        state, creel=state.creel.with_slot(fault.slot, replace(spool, tension_blocked=True))
    )


def _check_slot_target(state: WorkCellState, fault: TwinError) -> None:
    if not 0 <= fault.slot < state.params.slot_count:
        raise InvalidTarget(f"slot {fault.slot} out of range")
    spool = state.creel.slots[fault.slot]
    if not spool.occupied:
        raise InvalidTarget(f"slot {fault.slot} is not occupied")
    if fault.kind == YARN_BREAK and not spool.connected:
        raise InvalidTarget(f"slot {fault.slot} is not connected")
