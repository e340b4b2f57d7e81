"""Acceptance suite: one test per criterion, one printed line each.

Run with `pytest -v tests/test_acceptance.py` (add -s to see the PASS lines
inline). Every tolerance and budget is pinned here, not calibrated later.
"""

import json
import random
import time
from pathlib import Path

import pytest

from oracle_reachability import oracle_enumerate
from test_analysis import random_net

from tuftwin import analysis
from tuftwin.activities import (
    ActivityEngine,
    ActivityState,
    build_session_net,
    with_environment,
)
from tuftwin.cli import main as cli_main, run_trace
from tuftwin.events import SubEvent, SubEventKind
from tuftwin.jsonutil import canonical_dumps
from tuftwin.petri import check_fusion_coherence
from tuftwin.service import parse_scenario, replay
from tuftwin.service.runtime import SessionRuntime
from tuftwin.twin import ApplyCompressedAir, ConnectYarn, MountSpool, SpliceYarn, StartMachine
from tuftwin.twin import apply_action as twin_apply, initial_state

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"


def _report(criterion: str, detail: str) -> None:
    print(f"ACCEPTANCE {criterion}: PASS ({detail})")


def demo_doc():
    return json.loads((SCENARIOS / "demo_cell.json").read_text())


def demo_trace():
    return [
        json.loads(line)
        for line in (SCENARIOS / "demo_trace.jsonl").read_text().splitlines()
        if line.strip()
    ]


def drive_flagship(runtime: SessionRuntime, per_step=None):
    """Replay the flagship trace through a live runtime, step by step."""
    for entry in demo_trace():
        if runtime.status != "Running":
            break
        if entry["kind"] == "Action":
            from tuftwin.twin import parse_action

            runtime.post_action(parse_action(entry["body"]))
        elif entry["kind"] == "Advance":
            runtime.advance(entry["body"]["dticks"])
        if per_step:
            per_step(runtime)


def test_a1_engine_oracle_equivalence():
    rng = random.Random(20250815)
    started = time.time()
    checked = 0
    for _ in range(200):
        net = random_net(rng)
        graph = analysis.reachability(net, place_bound=4, node_bound=1_000_000)
        oracle_nodes, oracle_edges = oracle_enumerate(net, place_bound=4)
        assert {frozenset(m) for m in graph.node_set()} == oracle_nodes
        assert {(frozenset(a), t, frozenset(b)) for a, t, b in graph.edge_set()} == oracle_edges
        checked += 1
    elapsed = time.time() - started
    assert checked >= 200
    assert elapsed < 60.0
    _report("A1", f"{checked} random nets equal the brute-force oracle in {elapsed:.1f}s")


def test_a2_determinism_and_prefix_replay():
    document = demo_doc()
    trace = demo_trace()
    reference = None
    for _ in range(100):
        artifacts = run_trace(document, trace)
        blob = (artifacts["log.jsonl"], artifacts["snapshot.json"], artifacts["debrief.json"])
        if reference is None:
            reference = blob
        assert blob == reference

    spec = parse_scenario(document)
    runtime = SessionRuntime(spec, "sim")
    runtime.begin()
    checkpoints = [(len(runtime.log), canonical_dumps(runtime.state_snapshot()))]
    drive_flagship(
        runtime,
        per_step=lambda rt: checkpoints.append(
            (len(rt.log), canonical_dumps(rt.state_snapshot()))
        ),
    )
    for log_len, expected in checkpoints:
        rebuilt = replay(spec, runtime.log[:log_len], session_id="sim")
        assert canonical_dumps(rebuilt.state_snapshot()) == expected
    _report("A2", f"100 byte-identical runs; {len(checkpoints)} prefixes replay exactly")


LIFECYCLE_NEXT = {
    ActivityState.PENDING: {ActivityState.PENDING, ActivityState.ACTIVE},
    ActivityState.ACTIVE: {
        ActivityState.ACTIVE,
        ActivityState.FINISHED,
        ActivityState.INTERRUPTED,
    },
    ActivityState.FINISHED: {ActivityState.FINISHED},
    ActivityState.INTERRUPTED: {ActivityState.INTERRUPTED},
}


def test_a3_lifecycle_soundness_1000_sequences():
    from test_activity_tracker import defs, random_event

    rng = random.Random(99991)
    sequences = 0
    for _ in range(1000):
        engine = ActivityEngine(defs())
        previous = {a: i.state for a, i in engine.activity_states().items()}
        tick = 0
        for _ in range(rng.randrange(1, 9)):
            tick += rng.randrange(0, 4)
            engine.dispatch(random_event(rng, tick))
            states = engine.activity_states()
            for activity, instance in states.items():
                assert instance.state in LIFECYCLE_NEXT[previous[activity]], (
                    previous[activity],
                    instance.state,
                )
                if instance.state is ActivityState.INTERRUPTED:
                    assert instance.errors, "Interrupted without history entries"
            previous = {a: i.state for a, i in states.items()}
        sequences += 1
    assert sequences >= 1000
    _report("A3", f"{sequences} random event sequences, no lifecycle violation")


def test_a4_error_pathway_end_to_end():
    spec = parse_scenario(demo_doc())
    runtime = SessionRuntime(spec, "a4")
    runtime.begin()
    drive_flagship(runtime)

    records = runtime.log
    error_seq = next(
        r.seq
        for r in records
        if r.kind == "SubEvent"
        and r.body["kind"] == "ErrorDetected"
        and r.body["error_id"] == "yarn_break"
    )
    interrupt_seq = next(
        r.seq
        for r in records
        if r.kind == "Firing" and r.body["transition_id"] == "splice_yarn.interrupt"
    )
    history_seq = next(
        r.seq
        for r in records
        if r.kind == "History" and r.body["entry"]["error_id"] == "yarn_break"
    )
    stop_seq = next(
        r.seq for r in records if r.kind == "Command" and r.body["kind"] == "StopMachine"
    )
    assert error_seq < interrupt_seq < history_seq < stop_seq
    intervening = [
        r for r in records if r.kind == "Firing" and error_seq < r.seq < stop_seq
    ]
    assert len(intervening) <= runtime.error_path_length == 3
    final = runtime.state_snapshot()
    assert final["activities"]["splice_yarn"]["state"] == "Interrupted"
    assert final["work_cell"]["machine"]["status"] == "EmergencyStop"
    _report(
        "A4",
        f"interrupt -> history -> StopMachine with {len(intervening)} firings "
        f"<= path length {runtime.error_path_length}",
    )


def test_a5_fusion_coherence_during_session_runs():
    assert __debug__, "acceptance must run with assertions enabled"
    spec = parse_scenario(demo_doc())
    runtime = SessionRuntime(spec, "a5")
    runtime.begin()
    checks = {"n": 0}

    def verify(rt: SessionRuntime):
        engine = rt.engine
        check_fusion_coherence(engine.net, engine.marking)
        for group, members in engine.net.fusion_groups.items():
            sequences = {
                tuple(t.token_id for t in engine.marking.tokens(m)) for m in members
            }
            assert len(sequences) == 1, group
            checks["n"] += 1

    verify(runtime)
    drive_flagship(runtime, per_step=verify)
    assert checks["n"] > 50
    _report("A5", f"{checks['n']} alias-group comparisons identical (plus always-on engine assertion)")


def test_a6_duration_exactness_100_pairs():
    from test_activity_tracker import defs

    rng = random.Random(606060)
    for _ in range(100):
        start = rng.randrange(0, 500)
        end = start + rng.randrange(0, 200)
        engine = ActivityEngine(defs())
        engine.dispatch(SubEvent("mount", SubEventKind.START, start))
        engine.dispatch(SubEvent("mount", SubEventKind.END, end))
        instance = engine.activity_states()["mount"]
        assert instance.state is ActivityState.FINISHED
        assert instance.duration_ticks == end - start
    _report("A6", "100 randomized (start, end) pairs with exact durations")


def test_a7_formal_analysis_of_demonstrator(tmp_path):
    # Goldens established once with the brute-force oracle (node and edge
    # sets equal on the full three-activity closure) and frozen here.
    started = time.time()
    report_path = tmp_path / "analysis.json"
    code = cli_main(
        [
            "analyze",
            str(SCENARIOS / "demo_cell.json"),
            "--k",
            "3",
            "--m",
            "200000",
            "--out",
            str(report_path),
        ]
    )
    elapsed = time.time() - started
    assert code == 0
    report = json.loads(report_path.read_text())
    assert report["nodes"] == 39304
    assert report["edges"] == 190740
    assert report["deadlocks"] == []
    assert report["non_quasi_live"] == []
    assert report["bounded"] is True and report["bound_checked"] == 3
    assert report["truncated"] is False
    assert elapsed < 10.0
    _report("A7", f"39304 nodes / 190740 edges, clean, k=3, {elapsed:.1f}s")


def test_a8_interlock_safety_fuzzed():
    from tuftwin.twin import parse_action

    spec = parse_scenario(demo_doc())
    runtime = SessionRuntime(spec, "a8")
    runtime.begin()
    runtime.post_action(StartMachine())  # setup incomplete -> EmergencyStop
    machine_before = runtime.state_snapshot()["work_cell"]["machine"]
    assert machine_before["status"] == "EmergencyStop"

    rng = random.Random(808080)
    refused = 0
    for _ in range(200):
        action = rng.choice(
            [
                {"kind": "StartMachine"},
                {"kind": "StopMachine"},
                {"kind": "MountSpool", "slot": rng.randrange(4), "yarn_type": "wool"},
                {"kind": "ConnectYarn", "slot": rng.randrange(4)},
                {"kind": "SpliceYarn", "slot": rng.randrange(4), "duration_ticks": 2},
                {"kind": "SetParameter", "name": "pile_height_mm", "value": 9.0},
                {"kind": "ApplyCompressedAir", "duration_ticks": 12},
                {"kind": "Focus", "element": "product"},
            ]
        )
        log_before = len(runtime.log)
        ack = runtime.post_action(parse_action(action))
        assert not ack["accepted"]
        refused += 1
        new = runtime.log[log_before:]
        assert any(r.kind == "Action" and r.body["accepted"] is False for r in new)
        assert any(r.kind == "Log" and r.body.get("type") == "refusal" for r in new)
        assert runtime.state_snapshot()["work_cell"]["machine"] == machine_before
    assert refused == 200
    _report("A8", "200 fuzzed post-stop actions all refused, logged, machine untouched")


@pytest.mark.parametrize("offset", [-2, -1, 0, 1])
def test_a9_compressed_air_rule(offset):
    document = demo_doc()
    threshold = document["work_cell"]["params"]["air_required_ticks"]
    duration = threshold + offset
    spec = parse_scenario(document)
    state = initial_state(spec.params)
    _, events = twin_apply(state, ApplyCompressedAir(duration), 0)
    errors = [
        e
        for e in events
        if e.kind is SubEventKind.ERROR_DETECTED
        and e.payload.get("twin_error") == "AirDurationTooShort"
    ]
    if duration < threshold:
        assert len(errors) == 1
        assert errors[0].payload["measured"] == duration
        assert errors[0].payload["required"] == threshold
    else:
        assert errors == []
    _report("A9", f"d={duration} vs T={threshold}: error iff d < T holds")
