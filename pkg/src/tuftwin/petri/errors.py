"""Exception types raised by the net kernel."""

from __future__ import annotations


class PetriError(Exception):
    """Base class for all kernel errors."""


class StructuralError(PetriError):
    """A net definition violates a structural invariant.

    Carries a `location` string (place/transition/group id or JSON path)
    so file-level diagnostics can point at the offending element.
    """

    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{message} (at {location})" if location else message)
        self.location = location


class UnknownPlace(PetriError):
    pass


class UnknownTransition(PetriError):
    pass


class NotEnabled(PetriError):
    pass


class CapacityExceeded(PetriError):
    pass


class NonQuiescent(PetriError):
    """run_to_quiescence exhausted max_steps with transitions still enabled."""


class DuplicateTokenId(PetriError):
    pass
