"""Partitioned activity architecture: abstract lifecycle, execution and
error-consequence subnets plus the subevent dispatch layer."""

from .defs import (
    ActivityDefinition,
    ActivityInstance,
    ActivityState,
    ConsequenceAction,
    DefinitionError,
    DuplicateActivity,
    ErrorSpec,
    HistoryEntry,
    LogEntry,
    PredicateTrigger,
    TimeoutTrigger,
    Trigger,
    TwinErrorTrigger,
    definition_to_dict,
    parse_activity_definition,
    parse_activity_definitions,
)
from .templates import (
    FusionMismatch,
    IdCollision,
    build_abstract_net,
    build_error_net,
    build_execution_net,
    build_session_net,
    compose,
    standard_registry,
    with_environment,
)
from .tracker import (
    ActivityEngine,
    DispatchResult,
    StaleTick,
    Step,
    UnknownActivity,
    error_path_length,
)

__all__ = [
    "ActivityDefinition",
    "ActivityEngine",
    "ActivityInstance",
    "ActivityState",
    "ConsequenceAction",
    "DefinitionError",
    "DispatchResult",
    "DuplicateActivity",
    "ErrorSpec",
    "FusionMismatch",
    "HistoryEntry",
    "IdCollision",
    "LogEntry",
    "PredicateTrigger",
    "StaleTick",
    "Step",
    "TimeoutTrigger",
    "Trigger",
    "TwinErrorTrigger",
    "UnknownActivity",
    "build_abstract_net",
    "build_error_net",
    "build_execution_net",
    "build_session_net",
    "compose",
    "definition_to_dict",
    "error_path_length",
    "parse_activity_definition",
    "parse_activity_definitions",
    "standard_registry",
    "with_environment",
]
