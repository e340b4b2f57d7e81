"""Firing engine semantics: enabling, firing, quiescence, injection."""

import pytest

from tuftwin.petri import (
    CapacityExceeded,
    Copy,
    GuardRegistry,
    InputArc,
    Literal,
    Marking,
    NonQuiescent,
    NotEnabled,
    OutputArc,
    Place,
    Token,
    Transition,
    UnknownPlace,
    build_net,
    check_fusion_coherence,
    default_registry,
    enabled_transitions,
    fire,
    inject,
    net_from_parts,
    run_to_quiescence,
)


def chain_net(delay=0):
    return net_from_parts(
        "chain",
        [Place("p1", "p1"), Place("p2", "p2")],
        [
            Transition(
                "t", "t", delay=delay, inputs=(InputArc("p1"),), outputs=(OutputArc("p2"),)
            )
        ],
        initial={"p1": [{}]},
    )


def test_empty_marking_nothing_enabled():
    net = net_from_parts(
        "empty",
        [Place("p1", "p1"), Place("p2", "p2")],
        [Transition("t", "t", inputs=(InputArc("p1"),), outputs=(OutputArc("p2"),))],
    )
    assert enabled_transitions(net, Marking.initial(net), now=0) == []


def test_time_extension_defers_enabling():
    net = chain_net()
    marking = Marking.initial(net)
    marking, _ = marking.drain("p1")[1], None
    marking = inject(marking, "p1", Token("late", {}, created_at=0, ready_at=5))
    assert enabled_transitions(net, marking, now=0) == []
    assert len(enabled_transitions(net, marking, now=5)) == 1


def test_priority_ordering_deterministic():
    net = net_from_parts(
        "prio",
        [Place("p", "p"), Place("q", "q")],
        [
            Transition("a_low", "a", priority=1, inputs=(InputArc("p"),), outputs=(OutputArc("q"),)),
            Transition("b_high", "b", priority=3, inputs=(InputArc("p"),), outputs=(OutputArc("q"),)),
        ],
        initial={"p": [{}]},
    )
    marking = Marking.initial(net)
    order = [t.transition_id for t, _ in enabled_transitions(net, marking, 0)]
    assert order == ["b_high", "a_low"]
    for _ in range(100):
        assert [t.transition_id for t, _ in enabled_transitions(net, marking, 0)] == order


def test_elementary_firing_moves_token():
    net = chain_net()
    marking = Marking.initial(net)
    marking, record = fire(net, marking, "t", now=0)
    assert marking.tokens("p1") == ()
    assert len(marking.tokens("p2")) == 1
    assert record.to_dict()["consumed"] == {"p1": ["tk-1"]}


def test_delay_arithmetic():
    net = chain_net(delay=3)
    marking = Marking.initial(net)
    marking = marking.drain("p1")[1]
    marking = inject(marking, "p1", Token("x", {}, 10, 10))
    marking, _ = fire(net, marking, "t", now=10)
    (token,) = marking.tokens("p2")
    assert token.created_at == 10
    assert token.ready_at == 13


def test_fire_not_enabled_raises():
    net = chain_net()
    marking = Marking.initial(net).drain("p1")[1]
    with pytest.raises(NotEnabled):
        fire(net, marking, "t", now=0)


def test_capacity_rejected_marking_unchanged():
    net = net_from_parts(
        "cap",
        [Place("p1", "p1"), Place("p2", "p2", capacity=1)],
        [Transition("t", "t", inputs=(InputArc("p1"),), outputs=(OutputArc("p2"),))],
        initial={"p1": [{}], "p2": [{}]},
    )
    marking = Marking.initial(net)
    # Capacity-breaking transitions are filtered from the enabled list so the
    # quiescence loop cannot trip over them; a forced fire still raises.
    assert enabled_transitions(net, marking, 0) == []
    with pytest.raises(CapacityExceeded):
        fire(net, marking, "t", now=0)
    assert len(marking.tokens("p1")) == 1


def test_fusion_write_visible_through_alias():
    net = net_from_parts(
        "fused",
        [Place("src", "src"), Place("a", "a", fusion_group="g"), Place("b", "b", fusion_group="g")],
        [Transition("t", "t", inputs=(InputArc("src"),), outputs=(OutputArc("a"),))],
        fusion_groups={"g": ["a", "b"]},
        initial={"src": [{}]},
    )
    marking = Marking.initial(net)
    marking, _ = fire(net, marking, "t", now=0)
    assert [t.token_id for t in marking.tokens("b")] == [t.token_id for t in marking.tokens("a")]
    check_fusion_coherence(net, marking)


def test_guard_gating_with_context():
    registry = default_registry()
    registry.register("ctx_flag", lambda tokens, ctx: bool(ctx.get("open")))
    net = net_from_parts(
        "guarded",
        [Place("p1", "p1"), Place("p2", "p2")],
        [Transition("t", "t", guard="ctx_flag", inputs=(InputArc("p1"),), outputs=(OutputArc("p2"),))],
        initial={"p1": [{}]},
        guard_registry=registry,
    )
    marking = Marking.initial(net)
    assert enabled_transitions(net, marking, 0, context={"open": False}) == []
    assert len(enabled_transitions(net, marking, 0, context={"open": True})) == 1


def test_payload_rules():
    net = net_from_parts(
        "payloads",
        [Place("a", "a"), Place("b", "b"), Place("copy", "c"), Place("lit", "l"), Place("mrg", "m")],
        [
            Transition(
                "t",
                "t",
                inputs=(InputArc("a"), InputArc("b")),
                outputs=(
                    OutputArc("copy", 1, Copy(1)),
                    OutputArc("lit", 1, Literal({"fixed": True})),
                    OutputArc("mrg", 1),
                ),
            )
        ],
        initial={"a": [{"k": "a", "only_a": 1}], "b": [{"k": "b"}]},
    )
    marking, _ = fire(net, Marking.initial(net), "t", now=0)
    assert dict(marking.tokens("copy")[0].payload) == {"k": "b"}
    assert dict(marking.tokens("lit")[0].payload) == {"fixed": True}
    assert dict(marking.tokens("mrg")[0].payload) == {"k": "b", "only_a": 1}


def test_fifo_skips_unready_but_preserves_order():
    net = chain_net()
    marking = Marking.initial(net).drain("p1")[1]
    marking = inject(marking, "p1", Token("slow", {}, 0, 9))
    marking = inject(marking, "p1", Token("fast", {}, 0, 0))
    marking, record = fire(net, marking, "t", now=0)
    assert record.to_dict()["consumed"] == {"p1": ["fast"]}
    assert [t.token_id for t in marking.tokens("p1")] == ["slow"]


def test_quiescence_fixpoint_and_chain():
    net = net_from_parts(
        "chain3",
        [Place(f"p{i}", f"p{i}") for i in range(4)],
        [
            Transition(f"t{i}", f"t{i}", inputs=(InputArc(f"p{i}"),), outputs=(OutputArc(f"p{i+1}"),))
            for i in range(3)
        ],
        initial={"p0": [{}]},
    )
    marking = Marking.initial(net)
    final, trace = run_to_quiescence(net, marking, now=0, max_steps=100)
    assert [r.transition_id for r in trace] == ["t0", "t1", "t2"]
    assert len(final.tokens("p3")) == 1
    again, trace2 = run_to_quiescence(net, final, now=0, max_steps=100)
    assert trace2 == []
    assert again.stores == final.stores


def test_designed_livelock_raises_nonquiescent():
    net = net_from_parts(
        "loop",
        [Place("a", "a"), Place("b", "b")],
        [
            Transition("ab", "ab", inputs=(InputArc("a"),), outputs=(OutputArc("b"),)),
            Transition("ba", "ba", inputs=(InputArc("b"),), outputs=(OutputArc("a"),)),
        ],
        initial={"a": [{}]},
    )
    with pytest.raises(NonQuiescent):
        run_to_quiescence(net, Marking.initial(net), now=0, max_steps=100)


def test_inject_examples():
    net = net_from_parts(
        "inj",
        [
            Place("open", "open"),
            Place("tight", "tight", capacity=1),
            Place("fa", "fa", fusion_group="g"),
            Place("fb", "fb", fusion_group="g"),
        ],
        [Transition("t", "t", inputs=(InputArc("open"),), outputs=(OutputArc("fa"),))],
        fusion_groups={"g": ["fa", "fb"]},
    )
    marking = Marking.initial(net)
    marking = inject(marking, "open", Token("x", {}, 0, 0))
    assert len(marking.tokens("open")) == 1
    marking = inject(marking, "tight", Token("y", {}, 0, 0))
    with pytest.raises(CapacityExceeded):
        inject(marking, "tight", Token("z", {}, 0, 0))
    with pytest.raises(UnknownPlace):
        inject(marking, "ghost", Token("g", {}, 0, 0))
    marking = inject(marking, "fa", Token("shared", {}, 0, 0))
    assert [t.token_id for t in marking.tokens("fb")] == ["shared"]


def test_token_conservation_and_untouched_places():
    net = net_from_parts(
        "conserve",
        [Place("a", "a"), Place("b", "b"), Place("spectator", "s")],
        [Transition("t", "t", inputs=(InputArc("a", 2),), outputs=(OutputArc("b", 3),))],
        initial={"a": [{}, {}], "spectator": [{}]},
    )
    marking = Marking.initial(net)
    before = marking.counts()
    marking, record = fire(net, marking, "t", now=0)
    after = marking.counts()
    consumed = sum(len(ids) for _, ids in record.consumed)
    produced = sum(len(ids) for _, ids in record.produced)
    assert consumed == 2 and produced == 3
    assert after["spectator"] == before["spectator"]
    assert after["a"] == 0 and after["b"] == 3


def test_determinism_repeated_traces_byte_identical():
    def build():
        return net_from_parts(
            "det",
            [Place("a", "a"), Place("b", "b"), Place("c", "c")],
            [
                Transition("t1", "t1", priority=2, inputs=(InputArc("a"),), outputs=(OutputArc("b"),)),
                Transition("t2", "t2", priority=1, inputs=(InputArc("b"),), outputs=(OutputArc("c"),)),
            ],
            initial={"a": [{"n": 1}, {"n": 2}]},
        )

    reference = None
    for _ in range(100):
        net = build()
        _, trace = run_to_quiescence(net, Marking.initial(net), now=0, max_steps=50)
        blob = "\n".join(r.to_json_line() for r in trace)
        if reference is None:
            reference = blob
        assert blob == reference


def test_time_monotonicity():
    net = chain_net(delay=2)
    marking = Marking.initial(net)
    marking, _ = fire(net, marking, "t", now=7)
    for token in marking.tokens("p2"):
        assert token.ready_at >= 7
