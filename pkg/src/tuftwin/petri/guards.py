"""Named guard predicates.

Net files reference guards by name; the callables live in a registry so the
file format stays declarative. A guard receives the candidate tokens (the
FIFO-oldest binding) plus a read-only context mapping (the work-cell
snapshot) and returns True to admit the firing.

Parameterized guards use the form "<factory>::<arg>", e.g. "error_is::yarn_break"
resolves through a registered factory.
"""

from __future__ import annotations

from typing import Callable, Mapping, Sequence

from .errors import StructuralError

GuardFn = Callable[[Sequence, Mapping], bool]


class GuardRegistry:
    def __init__(self):
        self._guards: dict[str, GuardFn] = {}
        self._factories: dict[str, Callable[[str], GuardFn]] = {}

    def register(self, name: str, fn: GuardFn) -> None:
        if name in self._guards:
            raise ValueError(f"guard {name!r} already registered")
        self._guards[name] = fn

    def register_factory(self, prefix: str, factory: Callable[[str], GuardFn]) -> None:
        if prefix in self._factories:
            raise ValueError(f"guard factory {prefix!r} already registered")
        self._factories[prefix] = factory

    def resolve(self, name: str) -> GuardFn:
        if name in self._guards:
            return self._guards[name]
        if "::" in name:
            prefix, _, arg = name.partition("::")
            if prefix in self._factories:
                return self._factories[prefix](arg)
        raise StructuralError(f"unknown guard {name!r}", location=name)

    def knows(self, name: str) -> bool:
        try:
            self.resolve(name)
            return True
        except StructuralError:
            return False


def _always(tokens: Sequence, context: Mapping) -> bool:
    return True


def default_registry() -> GuardRegistry:
    reg = GuardRegistry()
    reg.register("always", _always)
    return reg
