"""Reachability, deadlock, quasi-liveness and boundedness checks."""

import random

from oracle_reachability import oracle_enumerate

from tuftwin import analysis
from tuftwin.activities import build_session_net, with_environment
from tuftwin.petri import InputArc, Marking, OutputArc, Place, Transition, net_from_parts, run_to_quiescence


def chain_net():
    return net_from_parts(
        "chain",
        [Place("p0", "p0"), Place("p1", "p1"), Place("p2", "p2")],
        [
            Transition("t0", "t0", inputs=(InputArc("p0"),), outputs=(OutputArc("p1"),)),
            Transition("t1", "t1", inputs=(InputArc("p1"),), outputs=(OutputArc("p2"),)),
        ],
        initial={"p0": [{}]},
    )


def producer_loop():
    return net_from_parts(
        "loop",
        [Place("fuel", "fuel"), Place("heap", "heap")],
        [
            Transition(
                "burn", "burn", inputs=(InputArc("fuel"),), outputs=(OutputArc("fuel"), OutputArc("heap"))
            )
        ],
        initial={"fuel": [{}]},
    )


def test_linear_chain_graph():
    graph = analysis.reachability(chain_net(), place_bound=5, node_bound=100)
    assert len(graph.nodes) == 3
    assert len(graph.edges) == 2
    assert not graph.truncated


def test_unbounded_producer_truncates():
    graph = analysis.reachability(producer_loop(), place_bound=5, node_bound=10_000)
    assert graph.truncated
    assert graph.truncation_reason == "place_bound"
    assert not analysis.bounded(graph, 5)


def test_node_bound_truncates():
    graph = analysis.reachability(producer_loop(), place_bound=100, node_bound=4)
    assert graph.truncated
    assert graph.truncation_reason == "node_bound"


def test_deadlocks_with_and_without_allowlist():
    graph = analysis.reachability(chain_net(), place_bound=5, node_bound=100)
    dead = analysis.deadlocks(graph)
    assert dead == [(("p2", 1),)]
    allow_final = lambda m: dict(m).get("p2", 0) == 1
    assert analysis.deadlocks(graph, [allow_final]) == []


def test_quasi_liveness():
    graph = analysis.reachability(chain_net(), place_bound=5, node_bound=100)
    assert analysis.quasi_live(graph, chain_net()) == []
    with_dead = net_from_parts(
        "dead",
        [Place("p0", "p0"), Place("p1", "p1"), Place("island", "island"), Place("out", "out")],
        [
            Transition("t0", "t0", inputs=(InputArc("p0"),), outputs=(OutputArc("p1"),)),
            Transition("never", "never", inputs=(InputArc("island"),), outputs=(OutputArc("out"),)),
        ],
        initial={"p0": [{}]},
    )
    graph = analysis.reachability(with_dead, place_bound=5, node_bound=100)
    assert analysis.quasi_live(graph, with_dead) == ["never"]


def test_bounded_checks():
    capped = net_from_parts(
        "capped",
        [Place("a", "a", capacity=1), Place("b", "b", capacity=1)],
        [
            Transition("ab", "ab", inputs=(InputArc("a"),), outputs=(OutputArc("b"),)),
            Transition("ba", "ba", inputs=(InputArc("b"),), outputs=(OutputArc("a"),)),
        ],
        initial={"a": [{}]},
    )
    graph = analysis.reachability(capped, place_bound=3, node_bound=100)
    assert analysis.bounded(graph, 1)
    loop_graph = analysis.reachability(producer_loop(), place_bound=5, node_bound=10_000)
    assert not analysis.bounded(loop_graph, 5)


def random_net(rng: random.Random):
    n_places = rng.randrange(2, 7)
    n_transitions = rng.randrange(1, 7)
    places = []
    fusion = {}
    for i in range(n_places):
        capacity = rng.choice([None, None, None, 2, 3])
        places.append(Place(f"p{i}", f"p{i}", capacity=capacity))
    if n_places >= 3 and rng.random() < 0.3:
        fusion = {"g": [f"p{n_places - 2}", f"p{n_places - 1}"]}
    transitions = []
    for j in range(n_transitions):
        stores_used = set()
        inputs = []
        for _ in range(rng.randrange(0, 3)):
            pid = f"p{rng.randrange(n_places)}"
            store = "g" if fusion and pid in fusion["g"] else pid
            if store in stores_used:
                continue
            stores_used.add(store)
            inputs.append(InputArc(pid, rng.randrange(1, 3)))
        outputs = [
            OutputArc(f"p{rng.randrange(n_places)}", rng.randrange(1, 3))
            for _ in range(rng.randrange(0, 3))
        ]
        if not inputs and not outputs:
            outputs = [OutputArc("p0", 1)]
        transitions.append(Transition(f"t{j}", f"t{j}", inputs=tuple(inputs), outputs=tuple(outputs)))
    total = rng.randrange(0, 4)
    seeds: dict[str, list] = {}
    for _ in range(total):
        pid = f"p{rng.randrange(n_places)}"
        store_places = fusion["g"] if fusion and pid in fusion["g"] else [pid]
        store_count = sum(len(seeds.get(p, [])) for p in store_places)
        caps = [places[int(p[1:])].capacity for p in store_places if places[int(p[1:])].capacity]
        if caps and store_count + 1 > min(caps):
            continue
        seeds.setdefault(pid, []).append({})
    return net_from_parts(
        f"random-{rng.random()}", places, transitions, fusion_groups=fusion, initial=seeds
    )


def test_oracle_equivalence_on_random_nets():
    rng = random.Random(777)
    for _ in range(60):
        net = random_net(rng)
        graph = analysis.reachability(net, place_bound=4, node_bound=1_000_000)
        oracle_nodes, oracle_edges = oracle_enumerate(net, place_bound=4)
        assert {frozenset(m) for m in graph.node_set()} == oracle_nodes
        assert {(frozenset(a), t, frozenset(b)) for a, t, b in graph.edge_set()} == oracle_edges


def test_concrete_traces_are_graph_paths():
    # Every distinct concrete step (within the same tick, FIFO/priority
    # semantics) must appear as an edge of the abstract graph.
    rng = random.Random(31337)
    checked_steps = 0
    for _ in range(120):
        net = random_net(rng)
        graph = analysis.reachability(net, place_bound=6, node_bound=200_000)
        if graph.truncated:
            continue
        marking = Marking.initial(net)
        edge_set = graph.edge_set()
        try:
            current = analysis.marking_to_abstract(marking)
            final, trace = run_to_quiescence(net, marking, now=0, max_steps=60)
        except Exception:
            continue
        replay = Marking.initial(net)
        for record in trace:
            from tuftwin.petri import fire

            replay, _ = fire(net, replay, record.transition_id, now=0)
            successor = analysis.marking_to_abstract(replay)
            assert (current, record.transition_id, successor) in edge_set
            current = successor
            checked_steps += 1
    assert checked_steps > 20


def test_graph_serialization_deterministic():
    blobs = set()
    for _ in range(20):
        graph = analysis.reachability(chain_net(), place_bound=5, node_bound=100)
        blobs.add(analysis.serialize_graph(graph))
    assert len(blobs) == 1


def test_session_closure_analysis_oracle_checked():
    # Two session activities, one error spec each: the closure's node/edge
    # counts are the exact per-activity product (34 -> 1156 = 34**2) and the
    # oracle agrees on the full graph. The shipped three-activity
    # demonstrator goldens live in the acceptance suite.
    from tuftwin.activities import ActivityDefinition, ConsequenceAction, ErrorSpec, TwinErrorTrigger
    from tuftwin.events import ConsequenceKind, Severity

    def single_spec(aid, eid, kind):
        return ActivityDefinition(
            aid,
            aid,
            error_specs=(
                ErrorSpec(
                    eid,
                    TwinErrorTrigger(kind),
                    Severity.CRITICAL,
                    (
                        ConsequenceAction(ConsequenceKind.STOP_MACHINE),
                        ConsequenceAction(ConsequenceKind.SHOW_CONSEQUENCE, text="x", anchor="a"),
                    ),
                ),
            ),
        )

    defs = [single_spec("splice_yarn", "yarn_break", "YarnBreak"),
            single_spec("start_machine", "setup_incomplete", "StartWhileSetupIncomplete")]
    net = with_environment(build_session_net(defs), defs)
    graph = analysis.reachability(net, place_bound=8, node_bound=500_000)
    assert not graph.truncated
    assert (len(graph.nodes), len(graph.edges)) == (1156, 3740)
    ids = [d.activity_id for d in defs]
    assert analysis.deadlocks(graph, [analysis.all_activities_terminal(ids)]) == []
    assert analysis.quasi_live(graph, net) == []
    assert analysis.bounded(graph, 3)
    oracle_nodes, oracle_edges = oracle_enumerate(net, place_bound=8)
    assert {frozenset(m) for m in graph.node_set()} == oracle_nodes
    assert {(frozenset(a), t, frozenset(b)) for a, t, b in graph.edge_set()} == oracle_edges


def test_dot_export_contains_nodes_and_edges():
    graph = analysis.reachability(chain_net(), place_bound=5, node_bound=100)
    dot = analysis.to_dot(graph)
    assert dot.startswith("digraph")
    assert "t0" in dot and "t1" in dot
