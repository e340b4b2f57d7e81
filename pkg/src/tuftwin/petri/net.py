"""Net structure: tokens, places, transitions, arcs, fusion groups.

A net definition document is UTF-8 JSON:

    {
      "net_id": "example",
      "places": [
        {"id": "p1", "name": "Pool", "capacity": 1, "fusion_group": "g", "initial": 1}
      ],
      "transitions": [
        {"id": "t1", "name": "start", "guard": "always", "delay": 0, "priority": 0,
         "inputs":  [{"place": "p1", "weight": 1}],
         "outputs": [{"place": "p2", "weight": 1, "payload_rule": {"copy": 0}}]}
      ],
      "fusion_groups": {"g": ["p1", "p9"]}
    }

Unknown keys are rejected at every level. `payload_rule` is one of
"merge" (default), {"copy": <index into the consumed tokens>} or
{"literal": {<key>: <scalar>}}. `initial` is either a token count or a list
of payload maps and seeds the net's initial marking.

All places of one fusion group share a single backing token store; reads
through any member are identical by construction. A place belongs to at
most one group, and a transition may not take input from two places of the
same store.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Mapping, Sequence

from .errors import StructuralError
from .guards import GuardFn, GuardRegistry, default_registry

Scalar = str | int | bool

_PLACE_KEYS = {"id", "name", "capacity", "fusion_group", "initial"}
_TRANSITION_KEYS = {"id", "name", "guard", "delay", "priority", "inputs", "outputs"}
_INPUT_KEYS = {"place", "weight"}
_OUTPUT_KEYS = {"place", "weight", "payload_rule"}
_TOP_KEYS = {"net_id", "places", "transitions", "fusion_groups"}


def _check_payload(payload: Mapping[str, Any], where: str) -> dict[str, Scalar]:
    out: dict[str, Scalar] = {}
    for key, value in payload.items():
        if not isinstance(key, str):
            raise StructuralError(f"payload key {key!r} is not a string", where)
        if isinstance(value, bool) or isinstance(value, int) or isinstance(value, str):
            out[key] = value
        else:
            raise StructuralError(
                f"payload value for {key!r} must be string, integer or boolean", where
            )
    return out


@dataclass(frozen=True)
class Token:
    """A timestamped, payload-carrying token.

    `ready_at` realizes the time extension: the token cannot be consumed
    before that logical tick.
    """

    token_id: str
    payload: Mapping[str, Scalar]
    created_at: int
    ready_at: int

    def __post_init__(self):
        if self.ready_at < self.created_at:
            raise ValueError("ready_at must be >= created_at")
        if self.created_at < 0:
            raise ValueError("created_at must be non-negative")
        frozen = MappingProxyType(_check_payload(self.payload, self.token_id))
        object.__setattr__(self, "payload", frozen)

    def to_dict(self) -> dict:
        return {
            "token_id": self.token_id,
            "payload": dict(sorted(self.payload.items())),
            "created_at": self.created_at,
            "ready_at": self.ready_at,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Token":
        return cls(
            token_id=data["token_id"],
            payload=dict(data["payload"]),
            created_at=data["created_at"],
            ready_at=data["ready_at"],
        )


# Output-arc payload rules.


@dataclass(frozen=True)
class Copy:
    """Copy the payload of the i-th consumed token (flattened input-arc order)."""

    index: int


@dataclass(frozen=True)
class Literal:
    payload: Mapping[str, Scalar]

    def __post_init__(self):
        object.__setattr__(
            self, "payload", MappingProxyType(_check_payload(self.payload, "literal"))
        )


@dataclass(frozen=True)
class Merge:
    """Union of all consumed payloads in consumption order; later keys win."""


PayloadRule = Copy | Literal | Merge

MERGE = Merge()


def payload_rule_to_json(rule: PayloadRule) -> Any:
    if isinstance(rule, Merge):
        return "merge"
    if isinstance(rule, Copy):
        return {"copy": rule.index}
    return {"literal": dict(sorted(rule.payload.items()))}


def payload_rule_from_json(value: Any, where: str) -> PayloadRule:
    if value == "merge":
        return MERGE
    if isinstance(value, dict) and set(value) == {"copy"}:
        idx = value["copy"]
        if not isinstance(idx, int) or isinstance(idx, bool) or idx < 0:
            raise StructuralError("copy index must be a non-negative integer", where)
        return Copy(idx)
    if isinstance(value, dict) and set(value) == {"literal"}:
        if not isinstance(value["literal"], dict):
            raise StructuralError("literal payload must be an object", where)
        return Literal(value["literal"])
    raise StructuralError(f"unknown payload_rule {value!r}", where)


@dataclass(frozen=True)
class InputArc:
    place: str
    weight: int = 1


@dataclass(frozen=True)
class OutputArc:
    place: str
    weight: int = 1
    payload_rule: PayloadRule = MERGE


@dataclass(frozen=True)
class Place:
    place_id: str
    name: str
    capacity: int | None = None
    fusion_group: str | None = None


@dataclass(frozen=True)
class Transition:
    transition_id: str
    name: str
    guard: str | None = None
    delay: int = 0
    priority: int = 0
    inputs: tuple[InputArc, ...] = ()
    outputs: tuple[OutputArc, ...] = ()


@dataclass(frozen=True)
class Net:
    """A validated net. Construct through build_net / net_from_parts only."""

    net_id: str
    places: Mapping[str, Place]
    transitions: Mapping[str, Transition]
    fusion_groups: Mapping[str, tuple[str, ...]]
    initial: Mapping[str, tuple[Mapping[str, Scalar], ...]]
    guards: Mapping[str, GuardFn]
    store_keys: Mapping[str, str] = field(repr=False, default_factory=dict)

    def store_key(self, place_id: str) -> str:
        """Canonical backing-store key: the fusion group id for grouped places."""
        return self.store_keys[place_id]

    def store_members(self, key: str) -> tuple[str, ...]:
        if key in self.fusion_groups:
            return self.fusion_groups[key]
        return (key,)

    def store_capacity(self, key: str) -> int | None:
        caps = [
            self.places[p].capacity
            for p in self.store_members(key)
            if self.places[p].capacity is not None
        ]
        return min(caps) if caps else None

    def logical_store_count(self) -> int:
        """Number of distinct backing stores (fusion aliases collapse to one)."""
        return len(set(self.store_keys.values()))

    def ordered_transitions(self) -> tuple[Transition, ...]:
        return tuple(
            sorted(self.transitions.values(), key=lambda t: (-t.priority, t.transition_id))
        )

    def to_definition(self) -> dict:
        places = []
        for pid in sorted(self.places):
            place = self.places[pid]
            entry: dict[str, Any] = {"id": place.place_id, "name": place.name}
            if place.capacity is not None:
                entry["capacity"] = place.capacity
            if place.fusion_group is not None:
                entry["fusion_group"] = place.fusion_group
            seeds = self.initial.get(pid, ())
            if seeds:
                if all(not dict(s) for s in seeds):
                    entry["initial"] = len(seeds)
                else:
                    entry["initial"] = [dict(sorted(s.items())) for s in seeds]
            places.append(entry)
        transitions = []
        for tid in sorted(self.transitions):
            tr = self.transitions[tid]
            entry = {"id": tr.transition_id, "name": tr.name}
            if tr.guard is not None:
                entry["guard"] = tr.guard
            if tr.delay:
                entry["delay"] = tr.delay
            if tr.priority:
                entry["priority"] = tr.priority
            entry["inputs"] = [{"place": a.place, "weight": a.weight} for a in tr.inputs]
            entry["outputs"] = [
                {
                    "place": a.place,
                    "weight": a.weight,
                    "payload_rule": payload_rule_to_json(a.payload_rule),
                }
                for a in tr.outputs
            ]
            transitions.append(entry)
        return {
            "net_id": self.net_id,
            "places": places,
            "transitions": transitions,
            "fusion_groups": {g: list(m) for g, m in sorted(self.fusion_groups.items())},
        }


def _reject_unknown(obj: Mapping, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise StructuralError(f"unknown keys {sorted(unknown)}", where)


def net_from_parts(
    net_id: str,
    places: Sequence[Place],
    transitions: Sequence[Transition],
    fusion_groups: Mapping[str, Sequence[str]] | None = None,
    initial: Mapping[str, Sequence[Mapping[str, Scalar]]] | None = None,
    guard_registry: GuardRegistry | None = None,
    allow_unresolved_guards: bool = False,
) -> Net:
    """Validate programmatically constructed parts into a Net.

    Checks every structural invariant: unique ids, referential integrity,
    bipartiteness (arc endpoints must be places), fusion-group consistency,
    positive weights, non-negative delays and guard resolvability.
    """
    registry = guard_registry or default_registry()

    place_map: dict[str, Place] = {}
    for place in places:
        if place.place_id in place_map:
            raise StructuralError("duplicate place id", place.place_id)
        if place.capacity is not None and place.capacity < 1:
            raise StructuralError("capacity must be a positive integer", place.place_id)
        place_map[place.place_id] = place

    groups: dict[str, list[str]] = {}
    for group, members in (fusion_groups or {}).items():
        seen: list[str] = []
        for member in members:
            if member not in place_map:
                raise StructuralError(
                    f"fusion group references unknown place {member!r}", group
                )
            if member in seen:
                raise StructuralError(f"place {member!r} listed twice in group", group)
            seen.append(member)
        groups[group] = seen

    # Cross-check the per-place fusion_group field against the group map and
    # normalize so both views agree.
    membership: dict[str, str] = {}
    for group, members in groups.items():
        for member in members:
            if member in membership:
                raise StructuralError(
                    f"place {member!r} belongs to groups {membership[member]!r} and {group!r}",
                    member,
                )
            membership[member] = group
    for place in place_map.values():
        declared = place.fusion_group
        mapped = membership.get(place.place_id)
        if declared is not None and mapped is None:
            groups.setdefault(declared, []).append(place.place_id)
            membership[place.place_id] = declared
        elif declared is not None and mapped != declared:
            raise StructuralError(
                f"place declares group {declared!r} but group map says {mapped!r}",
                place.place_id,
            )
    normalized_places = {
        pid: Place(pid, p.name, p.capacity, membership.get(pid))
        for pid, p in place_map.items()
    }

    store_keys = {pid: membership.get(pid, pid) for pid in normalized_places}

    transition_map: dict[str, Transition] = {}
    for tr in transitions:
        tid = tr.transition_id
        if tid in transition_map:
            raise StructuralError("duplicate transition id", tid)
        if tid in normalized_places:
            raise StructuralError("id used for both a place and a transition", tid)
        if not tr.inputs and not tr.outputs:
            raise StructuralError("transition has no arcs", tid)
        if tr.delay < 0:
            raise StructuralError("delay must be >= 0", tid)
        seen_stores: set[str] = set()
        for arc in tr.inputs:
            if arc.place in transition_map or arc.place not in normalized_places:
                raise StructuralError(
                    f"input arc endpoint {arc.place!r} is not a place", tid
                )
            if arc.weight < 1:
                raise StructuralError("arc weight must be >= 1", tid)
            store = store_keys[arc.place]
            if store in seen_stores:
                raise StructuralError(
                    f"two input arcs read the same token store ({store!r})", tid
                )
            seen_stores.add(store)
        consumed_total = sum(a.weight for a in tr.inputs)
        for arc in tr.outputs:
            if arc.place not in normalized_places:
                raise StructuralError(
                    f"output arc endpoint {arc.place!r} is not a place", tid
                )
            if arc.weight < 1:
                raise StructuralError("arc weight must be >= 1", tid)
            if isinstance(arc.payload_rule, Copy) and arc.payload_rule.index >= consumed_total:
                raise StructuralError(
                    f"copy index {arc.payload_rule.index} out of range "
                    f"({consumed_total} tokens consumed)",
                    tid,
                )
        transition_map[tid] = tr

    guard_map: dict[str, GuardFn] = {}
    for tr in transition_map.values():
        if tr.guard is None or tr.guard in guard_map:
            continue
        if allow_unresolved_guards and not registry.knows(tr.guard):
            guard_map[tr.guard] = lambda tokens, context: True
        else:
            guard_map[tr.guard] = registry.resolve(tr.guard)

    seeds: dict[str, tuple[Mapping[str, Scalar], ...]] = {}
    for pid, payloads in (initial or {}).items():
        if pid not in normalized_places:
            raise StructuralError(f"initial marking references unknown place {pid!r}", pid)
        seeds[pid] = tuple(
            MappingProxyType(_check_payload(p, pid)) for p in payloads
        )
    seed_counts: dict[str, int] = {}
    for pid, payloads in seeds.items():
        key = store_keys[pid]
        seed_counts[key] = seed_counts.get(key, 0) + len(payloads)
    for key, count in seed_counts.items():
        caps = [
            normalized_places[p].capacity
            for p in normalized_places
            if store_keys[p] == key and normalized_places[p].capacity is not None
        ]
        if caps and count > min(caps):
            raise StructuralError(
                f"initial marking exceeds capacity {min(caps)} of store {key!r}", key
            )

    return Net(
        net_id=net_id,
        places=normalized_places,
        transitions=transition_map,
        fusion_groups={g: tuple(m) for g, m in groups.items()},
        initial=seeds,
        guards=guard_map,
        store_keys=store_keys,
    )


def build_net(
    definition: Mapping,
    guard_registry: GuardRegistry | None = None,
    allow_unresolved_guards: bool = False,
) -> Net:
    """Validate a parsed net definition document into a Net.

    Raises StructuralError with location info on any violation: dangling
    reference, non-bipartite arc, duplicate id, a place in two fusion
    groups, unknown keys, or an unresolvable guard name.
    """
    if not isinstance(definition, Mapping):
        raise StructuralError("net definition must be a JSON object", "$")
    _reject_unknown(definition, _TOP_KEYS, "$")
    net_id = definition.get("net_id")
    if not isinstance(net_id, str) or not net_id:
        raise StructuralError("net_id must be a non-empty string", "$.net_id")

    places: list[Place] = []
    initial: dict[str, list[dict]] = {}
    for i, raw in enumerate(definition.get("places", [])):
        where = f"$.places[{i}]"
        if not isinstance(raw, Mapping):
            raise StructuralError("place entry must be an object", where)
        _reject_unknown(raw, _PLACE_KEYS, where)
        pid = raw.get("id")
        if not isinstance(pid, str) or not pid:
            raise StructuralError("place id must be a non-empty string", where)
        capacity = raw.get("capacity")
        if capacity is not None and (not isinstance(capacity, int) or isinstance(capacity, bool)):
            raise StructuralError("capacity must be an integer", where)
        places.append(
            Place(
                place_id=pid,
                name=str(raw.get("name", pid)),
                capacity=capacity,
                fusion_group=raw.get("fusion_group"),
            )
        )
        seed = raw.get("initial")
        if seed is None:
            continue
        if isinstance(seed, int) and not isinstance(seed, bool):
            if seed < 0:
                raise StructuralError("initial count must be >= 0", where)
            initial[pid] = [{} for _ in range(seed)]
        elif isinstance(seed, list):
            for entry in seed:
                if not isinstance(entry, Mapping):
                    raise StructuralError("initial entries must be payload objects", where)
            initial[pid] = [dict(entry) for entry in seed]
        else:
            raise StructuralError("initial must be a count or list of payloads", where)

    transitions: list[Transition] = []
    for i, raw in enumerate(definition.get("transitions", [])):
        where = f"$.transitions[{i}]"
        if not isinstance(raw, Mapping):
            raise StructuralError("transition entry must be an object", where)
        _reject_unknown(raw, _TRANSITION_KEYS, where)
        tid = raw.get("id")
        if not isinstance(tid, str) or not tid:
            raise StructuralError("transition id must be a non-empty string", where)
        inputs = []
        for j, arc in enumerate(raw.get("inputs", [])):
            arc_where = f"{where}.inputs[{j}]"
            if not isinstance(arc, Mapping):
                raise StructuralError("arc must be an object", arc_where)
            _reject_unknown(arc, _INPUT_KEYS, arc_where)
            inputs.append(InputArc(place=arc.get("place"), weight=arc.get("weight", 1)))
        outputs = []
        for j, arc in enumerate(raw.get("outputs", [])):
            arc_where = f"{where}.outputs[{j}]"
            if not isinstance(arc, Mapping):
                raise StructuralError("arc must be an object", arc_where)
            _reject_unknown(arc, _OUTPUT_KEYS, arc_where)
            rule = MERGE
            if "payload_rule" in arc:
                rule = payload_rule_from_json(arc["payload_rule"], arc_where)
            outputs.append(
                OutputArc(place=arc.get("place"), weight=arc.get("weight", 1), payload_rule=rule)
            )
        delay = raw.get("delay", 0)
        priority = raw.get("priority", 0)
        for num, label in ((delay, "delay"), (priority, "priority")):
            if not isinstance(num, int) or isinstance(num, bool):
                raise StructuralError(f"{label} must be an integer", where)
        transitions.append(
            Transition(
                transition_id=tid,
                name=str(raw.get("name", tid)),
                guard=raw.get("guard"),
                delay=delay,
                priority=priority,
                inputs=tuple(inputs),
                outputs=tuple(outputs),
            )
        )

    groups = definition.get("fusion_groups", {})
    if not isinstance(groups, Mapping):
        raise StructuralError("fusion_groups must be an object", "$.fusion_groups")

    return net_from_parts(
        net_id=net_id,
        places=places,
        transitions=transitions,
        fusion_groups={g: list(m) for g, m in groups.items()},
        initial=initial,
        guard_registry=guard_registry,
        allow_unresolved_guards=allow_unresolved_guards,
    )
