"""Training-session service: scenarios, runtimes, debriefs, HTTP/WS API."""

from .app import ServiceConfig, create_app
from .debrief import build_debrief
from .runtime import (
    LogRecord,
    SessionNotRunning,
    SessionRuntime,
    SessionStillRunning,
    UnknownSession,
    replay,
)
from .scenario import ScenarioInvalid, ScenarioSpec, SuccessCriterion, parse_scenario

__all__ = [
    "LogRecord",
    "ScenarioInvalid",
    "ScenarioSpec",
    "ServiceConfig",
    "SessionNotRunning",
    "SessionRuntime",
    "SessionStillRunning",
    "SuccessCriterion",
    "UnknownSession",
    "build_debrief",
    "create_app",
    "parse_scenario",
    "replay",
]
