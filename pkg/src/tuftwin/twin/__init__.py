"""Discrete-tick hybrid twin of the tufting work cell."""

from .actions import (
    ACTION_KINDS,
    ActionParseError,
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
    action_to_dict,
    parse_action,
)
from .model import (
    ACTIVITY_FOR_ACTION,
    AIR_DURATION_TOO_SHORT,
    EMPTY_SLOT_CONNECTED,
    ERROR_KINDS,
    INJECTABLE_KINDS,
    SEAM_UNDER_NEEDLES,
    START_WHILE_SETUP_INCOMPLETE,
    TENSION_BLOCKED,
    WRONG_YARN_TYPE,
    YARN_BREAK,
    CellParams,
    ConsequenceNote,
    CreelTwin,
    MachineStatus,
    MachineTwin,
    OperatorTwin,
    ProductRow,
    ProductTwin,
    SpoolSlot,
    SubstrateTwin,
    TwinError,
    WorkCellState,
    clear_interlock,
    initial_state,
    snapshot,
    state_from_snapshot,
)
from .sim import (
    InterlockActive,
    InvalidAction,
    InvalidParameter,
    InvalidSlot,
    InvalidTarget,
    apply_action,
    execute_command,
    inject_fault,
    tick,
)

__all__ = [
    "ACTION_KINDS",
    "ACTIVITY_FOR_ACTION",
    "AIR_DURATION_TOO_SHORT",
    "ActionParseError",
    "ApplyCompressedAir",
    "CellParams",
    "ConnectYarn",
    "ConsequenceNote",
    "CreelTwin",
    "EMPTY_SLOT_CONNECTED",
    "ERROR_KINDS",
    "Focus",
    "INJECTABLE_KINDS",
    "InterlockActive",
    "InvalidAction",
    "InvalidParameter",
    "InvalidSlot",
    "InvalidTarget",
    "MachineStatus",
    "MachineTwin",
    "MountSpool",
    "OperatorAction",
    "OperatorTwin",
    "ProductRow",
    "ProductTwin",
    "RemoveSpool",
    "SEAM_UNDER_NEEDLES",
    "START_WHILE_SETUP_INCOMPLETE",
    "SetParameter",
    "SpliceYarn",
    "SpoolSlot",
    "StartMachine",
    "StopMachine",
    "SubstrateTwin",
    "TENSION_BLOCKED",
    "TwinError",
    "WRONG_YARN_TYPE",
    "WorkCellState",
    "YARN_BREAK",
    "action_to_dict",
    "apply_action",
    "clear_interlock",
    "execute_command",
    "initial_state",
    "inject_fault",
    "parse_action",
    "snapshot",
    "state_from_snapshot",
    "tick",
]
