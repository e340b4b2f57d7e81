"""Deterministic firing engine.

Conflict resolution is fixed: enabled transitions are ordered by
(priority desc, transition_id asc) and only the FIFO-oldest ready tokens of
each input place are guard-tested (no backtracking over alternative
bindings). run_to_quiescence fires the first enabled entry repeatedly at a
fixed tick; advancing time is the caller's job.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from ..jsonutil import ordered_dumps
from .errors import CapacityExceeded, NonQuiescent, NotEnabled, UnknownTransition
from .marking import Marking, check_fusion_coherence
from .net import Copy, Literal, Merge, Net, Token, Transition

EMPTY_CONTEXT: Mapping = {}


@dataclass(frozen=True)
class Binding:
    """Tokens a firing would consume, per input arc."""

    per_arc: tuple[tuple[str, tuple[Token, ...]], ...]

    def flattened(self) -> tuple[Token, ...]:
        return tuple(t for _, tokens in self.per_arc for t in tokens)


@dataclass(frozen=True)
class FiringRecord:
    tick: int
    transition_id: str
    consumed: tuple[tuple[str, tuple[str, ...]], ...]
    produced: tuple[tuple[str, tuple[str, ...]], ...]

    def to_dict(self) -> dict:
        # Field order is fixed (tick, transition_id, consumed, produced) so
        # serialized traces are byte-stable for golden tests.
        return {
            "tick": self.tick,
            "transition_id": self.transition_id,
            "consumed": {place: list(ids) for place, ids in self.consumed},
            "produced": {place: list(ids) for place, ids in self.produced},
        }

    def to_json_line(self) -> str:
        return ordered_dumps(self.to_dict())


def _candidate_binding(net: Net, marking: Marking, transition: Transition, now: int) -> Binding | None:
    per_arc = []
    for arc in transition.inputs:
        ready = [t for t in marking.tokens(arc.place) if t.ready_at <= now]
        if len(ready) < arc.weight:
            return None
        per_arc.append((arc.place, tuple(ready[: arc.weight])))
    return Binding(per_arc=tuple(per_arc))


def _capacity_ok(net: Net, marking: Marking, transition: Transition, binding: Binding) -> bool:
    deltas: dict[str, int] = {}
    for arc in transition.inputs:
        key = net.store_key(arc.place)
        deltas[key] = deltas.get(key, 0) - arc.weight
    for arc in transition.outputs:
        key = net.store_key(arc.place)
        deltas[key] = deltas.get(key, 0) + arc.weight
    for key, delta in deltas.items():
        cap = net.store_capacity(key)
        if cap is not None and len(marking.store_tokens(key)) + delta > cap:
            return False
    return True


def _guard_accepts(net: Net, transition: Transition, binding: Binding, context: Mapping) -> bool:
    if transition.guard is None:
        return True
    return bool(net.guards[transition.guard](binding.flattened(), context))


def enabled_transitions(
    net: Net, marking: Marking, now: int, context: Mapping = EMPTY_CONTEXT
) -> list[tuple[Transition, Binding]]:
    """Transitions fireable at `now`, ordered (priority desc, id asc).

    A transition qualifies when every input place holds enough ready tokens
    (FIFO-oldest choice), its guard accepts that binding, and firing would
    not break any output-place capacity bound.
    """
    result = []
    for transition in net.ordered_transitions():
        binding = _candidate_binding(net, marking, transition, now)
        if binding is None:
            continue
        if not _capacity_ok(net, marking, transition, binding):
            continue
        if not _guard_accepts(net, transition, binding, context):
            continue
        result.append((transition, binding))
    return result


def _merge_payload(tokens: Sequence[Token]) -> dict:
    merged: dict = {}
    for token in tokens:
        merged.update(token.payload)
    return merged


def fire(
    net: Net,
    marking: Marking,
    transition_id: str,
    now: int,
    context: Mapping = EMPTY_CONTEXT,
) -> tuple[Marking, FiringRecord]:
    """Fire one transition: consume the FIFO-oldest ready binding, produce
    tokens with created_at = now and ready_at = now + delay."""
    transition = net.transitions.get(transition_id)
    if transition is None:
        raise UnknownTransition(transition_id)
    binding = _candidate_binding(net, marking, transition, now)
    if binding is None or not _guard_accepts(net, transition, binding, context):
        raise NotEnabled(transition_id)
    if not _capacity_ok(net, marking, transition, binding):
        raise CapacityExceeded(transition_id)

    stores = {key: list(tokens) for key, tokens in marking.stores.items()}
    consumed_records = []
    for place, tokens in binding.per_arc:
        key = net.store_key(place)
        ids = {t.token_id for t in tokens}
        stores[key] = [t for t in stores.get(key, []) if t.token_id not in ids]
        consumed_records.append((place, tuple(t.token_id for t in tokens)))

    flattened = binding.flattened()
    seq = marking.next_token_seq
    produced_records = []
    for arc in transition.outputs:
        key = net.store_key(arc.place)
        ids = []
        for _ in range(arc.weight):
            rule = arc.payload_rule
            if isinstance(rule, Copy):
                payload = dict(flattened[rule.index].payload)
            elif isinstance(rule, Literal):
                payload = dict(rule.payload)
            else:
                assert isinstance(rule, Merge)
                payload = _merge_payload(flattened)
            token = Token(f"tk-{seq}", payload, now, now + transition.delay)
            seq += 1
            stores.setdefault(key, []).append(token)
            ids.append(token.token_id)
        produced_records.append((arc.place, tuple(ids)))

    new_marking = Marking(
        net=net,
        stores={k: tuple(v) for k, v in stores.items()},
        next_token_seq=seq,
    )
    if __debug__:
        check_fusion_coherence(net, new_marking)
    record = FiringRecord(
        tick=now,
        transition_id=transition_id,
        consumed=tuple(consumed_records),
        produced=tuple(produced_records),
    )
    return new_marking, record


def inject(marking: Marking, place_id: str, token: Token) -> Marking:
    """Append an externally created token (how sensor/interface events enter)."""
    new_marking = marking.with_appended(place_id, token)
    if __debug__:
        check_fusion_coherence(marking.net, new_marking)
    return new_marking


def run_to_quiescence(
    net: Net,
    marking: Marking,
    now: int,
    max_steps: int,
    context: Mapping = EMPTY_CONTEXT,
) -> tuple[Marking, list[FiringRecord]]:
    """Fire the first enabled transition until nothing is enabled at `now`.

    Raises NonQuiescent when max_steps firings happen and transitions remain
    enabled, which signals a livelock in the net design.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    trace: list[FiringRecord] = []
    current = marking
    for _ in range(max_steps):
        enabled = enabled_transitions(net, current, now, context)
        if not enabled:
            return current, trace
        transition, _ = enabled[0]
        current, record = fire(net, current, transition.transition_id, now, context)
        trace.append(record)
    if enabled_transitions(net, current, now, context):
        raise NonQuiescent(f"still enabled after {max_steps} steps at tick {now}")
    return current, trace
