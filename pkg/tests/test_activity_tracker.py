"""Subevent dispatch, lifecycle derivation and the error pipeline."""

import random

import pytest

from tuftwin.activities import (
    ActivityDefinition,
    ActivityEngine,
    ActivityState,
    ConsequenceAction,
    ErrorSpec,
    PredicateTrigger,
    StaleTick,
    TwinErrorTrigger,
    UnknownActivity,
)
from tuftwin.events import ConsequenceKind, Severity, SubEvent, SubEventKind

STOP_AND_SHOW = (
    ConsequenceAction(ConsequenceKind.STOP_MACHINE),
    ConsequenceAction(ConsequenceKind.SHOW_CONSEQUENCE, text="snapped", anchor="creel.slot.0"),
)


def defs(guard="always"):
    return [
        ActivityDefinition(
            "splice",
            "Splice yarn",
            guard_name=guard,
            expected_subevents=(SubEventKind.START, SubEventKind.EXECUTE, SubEventKind.END),
            error_specs=(
                ErrorSpec("yarn_break", TwinErrorTrigger("YarnBreak"), Severity.CRITICAL, STOP_AND_SHOW),
                ErrorSpec(
                    "too_quick",
                    PredicateTrigger("duration_below", "duration", 5),
                    Severity.WARNING,
                    (ConsequenceAction(ConsequenceKind.SHOW_CONSEQUENCE, text="too quick", anchor="creel"),),
                ),
            ),
        ),
        ActivityDefinition("mount", "Mount spool", error_specs=()),
    ]


def ev(activity, kind, tick, error_id=None, payload=None):
    return SubEvent(activity, kind, tick, payload or {}, error_id)


def test_fresh_engine_all_pending():
    engine = ActivityEngine(defs())
    assert {a: i.state for a, i in engine.activity_states().items()} == {
        "splice": ActivityState.PENDING,
        "mount": ActivityState.PENDING,
    }


def test_start_then_end_finishes_with_duration():
    engine = ActivityEngine(defs())
    engine.dispatch(ev("splice", SubEventKind.START, 5))
    assert engine.activity_states()["splice"].state is ActivityState.ACTIVE
    engine.dispatch(ev("splice", SubEventKind.END, 12))
    instance = engine.activity_states()["splice"]
    assert instance.state is ActivityState.FINISHED
    assert instance.duration_ticks == 12 - 5
    assert instance.errors == ()


def test_end_signal_token_carries_duration():
    # Frozen from a hand simulation of the execution template: Start at 5,
    # End at 12 puts duration 7 into the end-signal token, which the finish
    # transition merges into the finished token.
    engine = ActivityEngine(defs())
    engine.dispatch(ev("splice", SubEventKind.START, 5))
    engine.dispatch(ev("splice", SubEventKind.END, 12))
    (finished,) = engine.marking.tokens("splice.finished")
    assert finished.payload["duration"] == 7
    assert finished.payload["started_at"] == 5
    assert finished.payload["ended_at"] == 12


def test_error_while_active_interrupts_and_stops_machine():
    engine = ActivityEngine(defs())
    engine.dispatch(ev("splice", SubEventKind.START, 3))
    result = engine.dispatch(
        ev("splice", SubEventKind.ERROR_DETECTED, 8, error_id="yarn_break", payload={"slot": 0})
    )
    instance = engine.activity_states()["splice"]
    assert instance.state is ActivityState.INTERRUPTED
    assert len(instance.errors) == 1
    assert instance.errors[0].error_id == "yarn_break"
    assert instance.errors[0].marking_ref in engine.snapshots
    kinds = [c.kind for c in result.commands]
    assert kinds == [ConsequenceKind.STOP_MACHINE, ConsequenceKind.SHOW_CONSEQUENCE]
    assert result.commands[1].anchor == "creel.slot.0"


def test_error_outside_execution_dropped_not_latched():
    engine = ActivityEngine(defs())
    result = engine.dispatch(ev("splice", SubEventKind.ERROR_DETECTED, 1, error_id="yarn_break"))
    assert engine.activity_states()["splice"].state is ActivityState.PENDING
    assert any("ignored" in entry.description for entry in result.log_entries)
    engine.dispatch(ev("splice", SubEventKind.START, 2))
    # The stale error must not interrupt the freshly started activity.
    assert engine.activity_states()["splice"].state is ActivityState.ACTIVE


def test_end_without_start_dropped():
    engine = ActivityEngine(defs())
    result = engine.dispatch(ev("splice", SubEventKind.END, 1))
    assert engine.activity_states()["splice"].state is ActivityState.PENDING
    assert any("ignored" in entry.description for entry in result.log_entries)


def test_guard_refusal_logged_and_pending():
    engine = ActivityEngine(defs(guard="machine_running"), context_provider=lambda: {"machine": {"status": "Off"}})
    result = engine.dispatch(ev("splice", SubEventKind.START, 4))
    assert engine.activity_states()["splice"].state is ActivityState.PENDING
    assert any("refused" in entry.description for entry in result.log_entries)


def test_execute_marker_logged_without_lifecycle_change():
    engine = ActivityEngine(defs())
    engine.dispatch(ev("splice", SubEventKind.START, 1))
    result = engine.dispatch(ev("splice", SubEventKind.EXECUTE, 2))
    assert engine.activity_states()["splice"].state is ActivityState.ACTIVE
    assert any("progressed" in entry.description for entry in result.log_entries)


def test_predicate_trigger_interrupts_instead_of_finishing():
    engine = ActivityEngine(defs())
    engine.dispatch(ev("splice", SubEventKind.START, 10))
    result = engine.dispatch(ev("splice", SubEventKind.END, 12))  # duration 2 < 5
    instance = engine.activity_states()["splice"]
    assert instance.state is ActivityState.INTERRUPTED
    assert [e.error_id for e in instance.errors] == ["too_quick"]
    assert [s.error_id for s in result.synthesized] == ["too_quick"]


def test_same_tick_error_beats_end():
    engine = ActivityEngine(defs())
    engine.dispatch(ev("splice", SubEventKind.START, 1))
    engine.dispatch_all(
        [
            ev("splice", SubEventKind.END, 9),
            ev("splice", SubEventKind.ERROR_DETECTED, 9, error_id="yarn_break"),
        ]
    )
    assert engine.activity_states()["splice"].state is ActivityState.INTERRUPTED


def test_unknown_activity_and_stale_tick():
    engine = ActivityEngine(defs())
    with pytest.raises(UnknownActivity):
        engine.dispatch(ev("ghost", SubEventKind.START, 0))
    engine.dispatch(ev("splice", SubEventKind.START, 5))
    with pytest.raises(StaleTick):
        engine.dispatch(ev("splice", SubEventKind.END, 4))


def test_timeout_trigger_fires_once():
    timed = ActivityDefinition(
        "bake",
        "Bake",
        timeout_ticks=10,
        error_specs=(
            ErrorSpec(
                "overdue",
                __import__("tuftwin.activities", fromlist=["TimeoutTrigger"]).TimeoutTrigger(),
                Severity.WARNING,
                (ConsequenceAction(ConsequenceKind.SHOW_CONSEQUENCE, text="overdue", anchor="machine"),),
            ),
        ),
    )
    engine = ActivityEngine([timed])
    engine.dispatch(ev("bake", SubEventKind.START, 0))
    assert engine.check_timeouts(5).steps == []
    result = engine.check_timeouts(11)
    assert [s.error_id for s in result.synthesized] == ["overdue"]
    assert engine.activity_states()["bake"].state is ActivityState.INTERRUPTED
    assert engine.check_timeouts(12).steps == []


def test_logs_are_append_only_prefix():
    engine = ActivityEngine(defs())
    engine.dispatch(ev("splice", SubEventKind.START, 1))
    before = [entry.to_dict() for entry in engine.logs]
    engine.dispatch(ev("splice", SubEventKind.END, 9))
    after = [entry.to_dict() for entry in engine.logs]
    assert after[: len(before)] == before
    assert len(after) > len(before)


LIFECYCLE_EDGES = {
    (ActivityState.PENDING, ActivityState.PENDING),
    (ActivityState.PENDING, ActivityState.ACTIVE),
    (ActivityState.ACTIVE, ActivityState.ACTIVE),
    (ActivityState.ACTIVE, ActivityState.FINISHED),
    (ActivityState.ACTIVE, ActivityState.INTERRUPTED),
    (ActivityState.FINISHED, ActivityState.FINISHED),
    (ActivityState.INTERRUPTED, ActivityState.INTERRUPTED),
}


def random_event(rng, tick):
    activity = rng.choice(["splice", "mount"])
    kind = rng.choice(list(SubEventKind))
    if kind is SubEventKind.ERROR_DETECTED:
        return ev(activity, kind, tick, error_id=rng.choice(["yarn_break", "too_quick", "bogus"]))
    return ev(activity, kind, tick)


def test_lifecycle_soundness_random_sequences():
    rng = random.Random(424242)
    for _ in range(150):
        engine = ActivityEngine(defs())
        previous = {a: i.state for a, i in engine.activity_states().items()}
        tick = 0
        for _ in range(rng.randrange(1, 10)):
            tick += rng.randrange(0, 4)
            engine.dispatch(random_event(rng, tick))
            current = {a: i.state for a, i in engine.activity_states().items()}
            for activity, state in current.items():
                assert (previous[activity], state) in LIFECYCLE_EDGES
                if state is ActivityState.INTERRUPTED:
                    assert engine.activity_states()[activity].errors
            previous = current


def test_dispatch_determinism():
    def run():
        engine = ActivityEngine(defs())
        engine.dispatch(ev("splice", SubEventKind.START, 1))
        engine.dispatch(ev("splice", SubEventKind.ERROR_DETECTED, 4, error_id="yarn_break"))
        return engine.serialized_trace(), engine.state_digest()

    first = run()
    for _ in range(25):
        assert run() == first
