"""Bounded reachability analysis over the count abstraction.

The abstraction drops token payloads and timestamps (delays act as zero) and
treats guards as satisfiable, so the graph over-approximates the concrete
engine: it may contain spurious markings but never misses a concrete
behaviour. Place capacities are respected; the concrete engine enforces
them too, so this stays sound. Fusion aliases collapse to one entry keyed by
the backing store.

Exploration is breadth-first. A marking with more than `place_bound` tokens
in some store is recorded but not expanded, and exploration also stops at
`node_bound` markings; both cases set the truncation flag. The k-bound
truncation is a fixpoint (order independent); the node bound is not, so
oracle-equivalence tests use a node bound large enough not to trigger.

Quasi-liveness here is L1-liveness per transition (fireable in at least one
reachable marking); stronger notions are future work.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .jsonutil import canonical_dumps
from .petri import Marking, Net

AbstractMarking = tuple[tuple[str, int], ...]
"""Sorted (store_key, count) pairs; zero counts omitted."""


def abstract_marking(counts: Mapping[str, int]) -> AbstractMarking:
    return tuple(sorted((k, v) for k, v in counts.items() if v))


def initial_abstract_marking(net: Net) -> AbstractMarking:
    counts: dict[str, int] = {}
    for place, seeds in net.initial.items():
        key = net.store_key(place)
        counts[key] = counts.get(key, 0) + len(seeds)
    return abstract_marking(counts)


def marking_to_abstract(marking: Marking) -> AbstractMarking:
    return abstract_marking(marking.counts())


def _dense_transitions(net: Net, stores: Sequence[str], index: Mapping[str, int]):
    """Per transition (sorted by id): (id, needs, deltas, caps) with store
    indices, net deltas per touched store and capacity limits where a
    positive delta could break a bound. Markings never exceed capacities
    (seeds are validated), so only positive deltas can violate one."""
    compiled = []
    for tid in sorted(net.transitions):
        tr = net.transitions[tid]
        need: dict[int, int] = {}
        delta: dict[int, int] = {}
        for arc in tr.inputs:
            i = index[net.store_key(arc.place)]
            need[i] = need.get(i, 0) + arc.weight
            delta[i] = delta.get(i, 0) - arc.weight
        for arc in tr.outputs:
            i = index[net.store_key(arc.place)]
            delta[i] = delta.get(i, 0) + arc.weight
        caps = []
        for i, d in delta.items():
            if d <= 0:
                continue
            cap = net.store_capacity(stores[i])
            if cap is not None:
                caps.append((i, cap))
        compiled.append(
            (
                tid,
                tuple(sorted(need.items())),
                tuple(sorted((i, d) for i, d in delta.items() if d)),
                tuple(sorted(caps)),
            )
        )
    return compiled


@dataclass(frozen=True)
class ReachabilityGraph:
    nodes: tuple[AbstractMarking, ...]  # BFS discovery order
    edges: tuple[tuple[AbstractMarking, str, AbstractMarking], ...]
    initial: AbstractMarking
    truncated: bool
    truncation_reason: str | None  # "place_bound" | "node_bound" | None
    place_bound: int
    node_bound: int

    def node_set(self) -> frozenset[AbstractMarking]:
        return frozenset(self.nodes)

    def edge_set(self) -> frozenset[tuple[AbstractMarking, str, AbstractMarking]]:
        return frozenset(self.edges)

    def to_dict(self) -> dict:
        def marking_obj(m: AbstractMarking) -> dict:
            return {k: v for k, v in m}

        return {
            "initial": marking_obj(self.initial),
            "nodes": [marking_obj(m) for m in self.nodes],
            "edges": [
                {"from": marking_obj(a), "transition": t, "to": marking_obj(b)}
                for a, t, b in self.edges
            ],
            "truncated": self.truncated,
            "truncation_reason": self.truncation_reason,
            "place_bound": self.place_bound,
            "node_bound": self.node_bound,
        }


def reachability(
    net: Net,
    initial: AbstractMarking | None = None,
    place_bound: int = 8,
    node_bound: int = 100_000,
) -> ReachabilityGraph:
    """Breadth-first exploration of the abstract firing relation.

    Internally markings are dense integer tuples over interned store
    indices; the public graph uses the sparse (store, count) form.
    """
    if place_bound < 1 or node_bound < 1:
        raise ValueError("bounds must be >= 1")
    stores = sorted(set(net.store_keys.values()))
    index = {s: i for i, s in enumerate(stores)}
    start_sparse = initial if initial is not None else initial_abstract_marking(net)
    start = [0] * len(stores)
    for key, count in start_sparse:
        if key not in index:
            raise ValueError(f"initial marking references unknown store {key!r}")
        start[index[key]] = count
    start = tuple(start)
    transitions = _dense_transitions(net, stores, index)

    def within_bound(dense: tuple[int, ...]) -> bool:
        return max(dense, default=0) <= place_bound

    nodes: dict[tuple[int, ...], None] = {start: None}
    edges: list[tuple[tuple[int, ...], str, tuple[int, ...]]] = []
    truncated = False
    reason: str | None = None
    queue: deque[tuple[int, ...]] = deque()
    if within_bound(start):
        queue.append(start)
    else:
        truncated, reason = True, "place_bound"

    while queue:
        current = queue.popleft()
        for tid, need, delta, caps in transitions:
            enabled = True
            for i, required in need:
                if current[i] < required:
                    enabled = False
                    break
            if not enabled:
                continue
            for i, cap in caps:
                after = current[i]
                for j, d in delta:
                    if j == i:
                        after += d
                        break
                if after > cap:
                    enabled = False
                    break
            if not enabled:
                continue
            successor = list(current)
            for i, d in delta:
                successor[i] += d
            successor = tuple(successor)
            if successor not in nodes and len(nodes) >= node_bound:
                truncated, reason = True, "node_bound"
                queue.clear()
                break
            edges.append((current, tid, successor))
            if successor in nodes:
                continue
            nodes[successor] = None
            if within_bound(successor):
                queue.append(successor)
            else:
                truncated = True
                if reason is None:
                    reason = "place_bound"

    sparse_cache = {
        dense: tuple(sorted((stores[i], c) for i, c in enumerate(dense) if c))
        for dense in nodes
    }
    return ReachabilityGraph(
        nodes=tuple(sparse_cache[d] for d in nodes),
        edges=tuple((sparse_cache[a], t, sparse_cache[b]) for a, t, b in edges),
        initial=sparse_cache[start],
        truncated=truncated,
        truncation_reason=reason,
        place_bound=place_bound,
        node_bound=node_bound,
    )


MarkingPredicate = Callable[[AbstractMarking], bool]


def deadlocks(
    graph: ReachabilityGraph, terminal_allowlist: Iterable[MarkingPredicate] = ()
) -> list[AbstractMarking]:
    """Nodes with no outgoing edges not matching any allowlisted predicate.

    On a truncated graph the answer is partial: report it alongside
    graph.truncated.
    """
    allowlist = tuple(terminal_allowlist)
    with_out = {a for a, _, _ in graph.edges}
    result = []
    for node in graph.nodes:
        if node in with_out:
            continue
        if any(pred(node) for pred in allowlist):
            continue
        result.append(node)
    return result


def quasi_live(graph: ReachabilityGraph, net: Net) -> list[str]:
    """Transitions that never appear on any edge (not L1-live)."""
    seen = {t for _, t, _ in graph.edges}
    return [tid for tid in sorted(net.transitions) if tid not in seen]


def bounded(graph: ReachabilityGraph, k: int) -> bool:
    """True iff no explored marking exceeds k tokens in any store and the
    graph is complete."""
    if graph.truncated:
        return False
    return all(count <= k for node in graph.nodes for _, count in node)


def max_store_count(graph: ReachabilityGraph) -> int:
    return max((count for node in graph.nodes for _, count in node), default=0)


def all_activities_terminal(activity_ids: Sequence[str]) -> MarkingPredicate:
    """Allowlist predicate: every activity's finished or interrupted place
    holds a token (residual signal/budget tokens are permitted)."""
    from .activities import templates

    def predicate(marking: AbstractMarking) -> bool:
        counts = dict(marking)
        return all(
            counts.get(templates.finished_place(a), 0)
            + counts.get(templates.interrupted_place(a), 0)
            >= 1
            for a in activity_ids
        )

    return predicate


NAMED_PREDICATES: dict[str, Callable[[Net], MarkingPredicate]] = {
    "all-activities-terminal": lambda net: all_activities_terminal(
        sorted({p.split(".")[0] for p in net.places if p.endswith(".finished")})
    ),
    "empty": lambda net: lambda marking: len(marking) == 0,
}


def analysis_report(
    net: Net,
    graph: ReachabilityGraph,
    terminal_allowlist: Iterable[MarkingPredicate] = (),
    k: int | None = None,
) -> dict:
    """The CLI-facing JSON report."""
    bound = k if k is not None else graph.place_bound
    dead = deadlocks(graph, terminal_allowlist)
    non_live = quasi_live(graph, net)
    return {
        "net_id": net.net_id,
        "nodes": len(graph.nodes),
        "edges": len(graph.edges),
        "deadlocks": [dict(m) for m in dead],
        "deadlocks_partial": graph.truncated,
        "non_quasi_live": non_live,
        "bounded": bounded(graph, bound),
        "bound_checked": bound,
        "max_store_count": max_store_count(graph),
        "truncated": graph.truncated,
        "truncation_reason": graph.truncation_reason,
    }


def serialize_graph(graph: ReachabilityGraph) -> str:
    return canonical_dumps(graph.to_dict())


def to_dot(graph: ReachabilityGraph, max_nodes: int = 500) -> str:
    """DOT export of the reachability graph (for visual inspection)."""
    index = {node: i for i, node in enumerate(graph.nodes[:max_nodes])}
    with_out = {a for a, _, _ in graph.edges}
    lines = ["digraph reachability {", "  rankdir=LR;", '  node [shape=box, fontsize=9];']
    for node, i in index.items():
        label = ", ".join(f"{k}:{v}" for k, v in node) or "(empty)"
        attrs = f'label="M{i}\\n{label}"'
        if node == graph.initial:
            attrs += ", style=filled, fillcolor=lightblue"
        elif node not in with_out:
            attrs += ", style=filled, fillcolor=lightcoral"
        lines.append(f"  m{i} [{attrs}];")
    for a, t, b in graph.edges:
        if a in index and b in index:
            lines.append(f'  m{index[a]} -> m{index[b]} [label="{t}", fontsize=8];')
    lines.append("}")
    return "\n".join(lines)
