"""Colored, time-extended Petri net kernel with fusion places."""

from .errors import (
    CapacityExceeded,
    DuplicateTokenId,
    NonQuiescent,
    NotEnabled,
    PetriError,
    StructuralError,
    UnknownPlace,
    UnknownTransition,
)
from .guards import GuardRegistry, default_registry
from .marking import Marking, check_fusion_coherence
from .net import (
    MERGE,
    Copy,
    InputArc,
    Literal,
    Merge,
    Net,
    OutputArc,
    Place,
    Token,
    Transition,
    build_net,
    net_from_parts,
)
from .engine import (
    Binding,
    FiringRecord,
    enabled_transitions,
    fire,
    inject,
    run_to_quiescence,
)

__all__ = [
    "Binding",
    "CapacityExceeded",
    "Copy",
    "DuplicateTokenId",
    "FiringRecord",
    "GuardRegistry",
    "InputArc",
    "Literal",
    "MERGE",
    "Marking",
    "Merge",
    "Net",
    "NonQuiescent",
    "NotEnabled",
    "OutputArc",
    "PetriError",
    "Place",
    "StructuralError",
    "Token",
    "Transition",
    "UnknownPlace",
    "UnknownTransition",
    "build_net",
    "check_fusion_coherence",
    "default_registry",
    "enabled_transitions",
    "fire",
    "inject",
    "net_from_parts",
    "run_to_quiescence",
]
