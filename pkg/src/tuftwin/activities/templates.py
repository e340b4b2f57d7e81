"""Canonical subnet templates and their composition.

The three-subnet architecture links an abstract lifecycle net, one
execution net per activity and one error-consequence net per activity
through fusion places (group ids `fuse.<activity_id>.<subevent>` plus
`fuse.<activity_id>.active` and `fuse.<activity_id>.history` for the error
gate). The figures the templates interpret do not enumerate arcs, so the
census below is the frozen canonical interpretation:

Abstract net, per activity (plus shared `history` and `log` places):
    places      pool, active (cap 1), finished (cap 1), interrupted (cap 1),
                sig.start, sig.end, sig.error, flag.history
                [+ sig.execute when Execute is expected]        -> 8 (9)
    transitions start (guarded, prio 20), finish (prio 10),
                interrupt (prio 30) [+ progress (prio 15)]      -> 3 (4)

Execution net, per activity with k error specs:
    places      in.start, in.end, in.error, timer (cap 1),
                out.start, out.end, out.error, out.history
                [+ in.execute, out.execute]                     -> 8 (10)
    transitions t_start, t_end (prio 40), detect.<error_id>
                (prio 45) per spec [+ t_execute]                -> 2+k (3+k)

Error-consequence net, per activity with k error specs:
    places      history alias, active alias, commands           -> 3
    transitions react.<error_id> (prio 50) per spec             -> k

The timer token records the start tick in its payload; the duration carried
by the End signal is the tick difference (a counter place accumulating one
token per tick would make every composed net unbounded). Interrupt priority
exceeds Finish priority so a same-tick error wins, and react priority
exceeds Interrupt so consequences are emitted while the Active flag still
holds its token (react returns the flag token it reads).
"""

from __future__ import annotations

from typing import Sequence

from ..petri import (
    Copy,
    GuardRegistry,
    InputArc,
    Literal,
    Net,
    OutputArc,
    Place,
    Transition,
    default_registry,
    net_from_parts,
)
from .defs import ActivityDefinition, DefinitionError, DuplicateActivity

PRIO_FINISH = 10
PRIO_PROGRESS = 15
PRIO_START = 20
PRIO_INTERRUPT = 30
PRIO_EXEC = 40
PRIO_DETECT = 45
PRIO_REACT = 50

HISTORY_PLACE = "history"
LOG_PLACE = "log"

class FusionMismatch(Exception):
    """A fusion group is referenced by a subnet the abstract net never declares."""

class IdCollision(Exception):
    pass

# Naming helpers shared with the tracker.

def pool_place(a: str) -> str:
    return f"{a}.pool"

def active_place(a: str) -> str:
    return f"{a}.active"

def finished_place(a: str) -> str:
    return f"{a}.finished"

def interrupted_place(a: str) -> str:
    return f"{a}.interrupted"

def sig_place(a: str, kind: str) -> str:
    return f"{a}.sig.{kind}"

def flag_place(a: str) -> str:
    return f"{a}.flag.history"

def fusion_group(a: str, kind: str) -> str:
    return f"fuse.{a}.{kind}"

def exec_in_place(a: str, kind: str) -> str:
    return f"exec.{a}.in.{kind}"

def timer_place(a: str) -> str:
    return f"exec.{a}.timer"

def exec_out_place(a: str, kind: str) -> str:
    return f"exec.{a}.out.{kind}"

def commands_place(a: str) -> str:
    return f"err.{a}.commands"

def start_transition(a: str) -> str:
    return f"{a}.start"

def finish_transition(a: str) -> str:
    return f"{a}.finish"

def interrupt_transition(a: str) -> str:
    return f"{a}.interrupt"

def error_is(error_id: str) -> str:
    return f"error_is::{error_id}"

def standard_registry() -> GuardRegistry:
    """Guards available to activity definitions.

    Context is the read-only work-cell snapshot; `error_is::<id>` matches the
    error token's id and is used internally by the detect/react transitions.
    """
    reg = default_registry()
    reg.register(
        "machine_stopped",
        lambda tokens, ctx: ctx.get("machine", {}).get("status") in ("Off", "Setup"),
    )
    reg.register(
        "machine_running",
        lambda tokens, ctx: ctx.get("machine", {}).get("status") == "Run",
    )
    reg.register_factory(
        "error_is",
        lambda eid: lambda tokens, ctx: any(
            t.payload.get("error_id") == eid for t in tokens
        ),
    )
    return reg

def build_abstract_net(
    defs: Sequence[ActivityDefinition], registry: GuardRegistry | None = None
) -> Net:
    """The lifecycle net: Pool -> (guarded Start) -> Active -> Finish | Interrupt."""
    if not defs:
        raise DefinitionError("at least one activity definition is required")
    seen: set[str] = set()
    for definition in defs:
        if definition.activity_id in seen:
            raise DuplicateActivity(f"duplicate activity_id {definition.activity_id!r}")
        seen.add(definition.activity_id)

    registry = registry or standard_registry()
    places: list[Place] = [
        Place(HISTORY_PLACE, "History"),
        Place(LOG_PLACE, "Log"),
    ]
    transitions: list[Transition] = []
    groups: dict[str, list[str]] = {}
    initial: dict[str, list[dict]] = {}

    for definition in defs:
        a = definition.activity_id
        places.extend(
            [
                Place(pool_place(a), f"{definition.name} pool", capacity=1),
                Place(active_place(a), f"{definition.name} active flag", capacity=1,
                      fusion_group=fusion_group(a, "active")),
                Place(finished_place(a), f"{definition.name} finished", capacity=1),
                Place(interrupted_place(a), f"{definition.name} interrupted", capacity=1),
                Place(sig_place(a, "start"), "start signal", fusion_group=fusion_group(a, "start")),
                Place(sig_place(a, "end"), "end signal", fusion_group=fusion_group(a, "end")),
                Place(sig_place(a, "error"), "error signal", fusion_group=fusion_group(a, "error")),
                Place(flag_place(a), "history gate", fusion_group=fusion_group(a, "history")),
            ]
        )
        groups[fusion_group(a, "start")] = [sig_place(a, "start")]
        groups[fusion_group(a, "end")] = [sig_place(a, "end")]
        groups[fusion_group(a, "error")] = [sig_place(a, "error")]
        groups[fusion_group(a, "history")] = [flag_place(a)]
        groups[fusion_group(a, "active")] = [active_place(a)]
        initial[pool_place(a)] = [{"activity_id": a}]

        transitions.append(
            Transition(
                start_transition(a),
                f"start {definition.name}",
                guard=definition.guard_name,
                priority=PRIO_START,
                inputs=(InputArc(pool_place(a)), InputArc(sig_place(a, "start"))),
                outputs=(OutputArc(active_place(a)),),
            )
        )
        transitions.append(
            Transition(
                finish_transition(a),
                f"finish {definition.name}",
                priority=PRIO_FINISH,
                inputs=(InputArc(active_place(a)), InputArc(sig_place(a, "end"))),
                outputs=(OutputArc(finished_place(a)), OutputArc(LOG_PLACE)),
            )
        )
        transitions.append(
            Transition(
                interrupt_transition(a),
                f"interrupt {definition.name}",
                priority=PRIO_INTERRUPT,
                inputs=(InputArc(active_place(a)), InputArc(sig_place(a, "error"))),
                outputs=(
                    OutputArc(interrupted_place(a)),
                    OutputArc(HISTORY_PLACE, 1, Copy(1)),
                    OutputArc(LOG_PLACE, 1, Copy(1)),
                ),
            )
        )
        if definition.has_execute:
            places.append(
                Place(
                    sig_place(a, "execute"),
                    "execute marker",
                    fusion_group=fusion_group(a, "execute"),
                )
            )
            groups[fusion_group(a, "execute")] = [sig_place(a, "execute")]
            transitions.append(
                Transition(
                    f"{a}.progress",
                    f"note progress of {definition.name}",
                    priority=PRIO_PROGRESS,
                    inputs=(InputArc(sig_place(a, "execute")),),
                    outputs=(OutputArc(LOG_PLACE, 1, Copy(0)),),
                )
            )

    return net_from_parts(
        "abstract",
        places,
        transitions,
        fusion_groups=groups,
        initial=initial,
        guard_registry=registry,
    )

def build_execution_net(
    definition: ActivityDefinition, registry: GuardRegistry | None = None
) -> Net:
    """Sensor-facing net: injection places per expected subevent, a timer
    gathering the action duration, and one detect transition per error spec
    routing errors into the abstract history channel."""
    registry = registry or standard_registry()
    a = definition.activity_id
    places = [
        Place(exec_in_place(a, "start"), "start injections"),
        Place(exec_in_place(a, "end"), "end injections"),
        Place(exec_in_place(a, "error"), "error injections"),
        Place(timer_place(a), "duration timer", capacity=1),
        Place(exec_out_place(a, "start"), "start mirror", fusion_group=fusion_group(a, "start")),
        Place(exec_out_place(a, "end"), "end mirror", fusion_group=fusion_group(a, "end")),
        Place(exec_out_place(a, "error"), "error mirror", fusion_group=fusion_group(a, "error")),
        Place(exec_out_place(a, "history"), "history mirror", fusion_group=fusion_group(a, "history")),
    ]
    groups = {
        fusion_group(a, "start"): [exec_out_place(a, "start")],
        fusion_group(a, "end"): [exec_out_place(a, "end")],
        fusion_group(a, "error"): [exec_out_place(a, "error")],
        fusion_group(a, "history"): [exec_out_place(a, "history")],
    }
    transitions = [
        Transition(
            f"exec.{a}.t_start",
            "observe start",
            priority=PRIO_EXEC,
            inputs=(InputArc(exec_in_place(a, "start")),),
            outputs=(
                OutputArc(timer_place(a), 1, Copy(0)),
                OutputArc(exec_out_place(a, "start"), 1, Copy(0)),
            ),
        ),
        Transition(
            f"exec.{a}.t_end",
            "observe end",
            priority=PRIO_EXEC,
            inputs=(InputArc(exec_in_place(a, "end")), InputArc(timer_place(a))),
            outputs=(OutputArc(exec_out_place(a, "end")),),
        ),
    ]
    if definition.has_execute:
        places.append(Place(exec_in_place(a, "execute"), "execute injections"))
        places.append(
            Place(
                exec_out_place(a, "execute"),
                "execute mirror",
                fusion_group=fusion_group(a, "execute"),
            )
        )
        groups[fusion_group(a, "execute")] = [exec_out_place(a, "execute")]
        transitions.append(
            Transition(
                f"exec.{a}.t_execute",
                "observe execute",
                priority=PRIO_EXEC,
                inputs=(InputArc(exec_in_place(a, "execute")),),
                outputs=(OutputArc(exec_out_place(a, "execute"), 1, Copy(0)),),
            )
        )
    for spec in definition.error_specs:
        transitions.append(
            Transition(
                f"exec.{a}.detect.{spec.error_id}",
                f"detect {spec.error_id}",
                guard=error_is(spec.error_id),
                priority=PRIO_DETECT,
                inputs=(InputArc(exec_in_place(a, "error")),),
                outputs=(
                    OutputArc(exec_out_place(a, "error"), 1, Copy(0)),
                    OutputArc(exec_out_place(a, "history"), 1, Copy(0)),
                ),
            )
        )
    return net_from_parts(
        f"execution.{a}", places, transitions, fusion_groups=groups, guard_registry=registry
    )

def build_error_net(
    definition: ActivityDefinition, registry: GuardRegistry | None = None
) -> Net:
    """Safety subnet: reacts when the history gate and the Active flag hold
    tokens together, emitting one command token per consequence action."""
    registry = registry or standard_registry()
    a = definition.activity_id
    places = [
        Place(f"err.{a}.history", "history gate alias", fusion_group=fusion_group(a, "history")),
        Place(f"err.{a}.active", "active flag alias", fusion_group=fusion_group(a, "active")),
        Place(commands_place(a), "consequence commands"),
    ]
    groups = {
        fusion_group(a, "history"): [f"err.{a}.history"],
        fusion_group(a, "active"): [f"err.{a}.active"],
    }
    transitions = []
    for spec in definition.error_specs:
        outputs: list[OutputArc] = [OutputArc(f"err.{a}.active", 1, Copy(1))]
        for order, action in enumerate(spec.actions):
            payload = {
                "cmd": action.kind.value,
                "activity_id": a,
                "error_id": spec.error_id,
                "severity": spec.severity.value,
                "order": order,
            }
            if action.text:
                payload["text"] = action.text
            if action.anchor:
                payload["anchor"] = action.anchor
            outputs.append(OutputArc(commands_place(a), 1, Literal(payload)))
        transitions.append(
            Transition(
                f"err.{a}.react.{spec.error_id}",
                f"react to {spec.error_id}",
                guard=error_is(spec.error_id),
                priority=PRIO_REACT,
                inputs=(InputArc(f"err.{a}.history"), InputArc(f"err.{a}.active")),
                outputs=tuple(outputs),
            )
        )
    return net_from_parts(
        f"error.{a}", places, transitions, fusion_groups=groups, guard_registry=registry
    )

def compose(
    abstract: Net,
    execution: Sequence[Net],
    error: Sequence[Net] = (),
    registry: GuardRegistry | None = None,
) -> Net:
    """Merge the subnets into a single net, unioning fusion groups by id.

    Every group declared by an execution or error subnet must exist in the
    abstract net (FusionMismatch otherwise); place and transition ids must be
    globally unique (IdCollision). The result is re-validated from scratch,
    so composition output always passes build_net-level checks.
    """
    registry = registry or standard_registry()
    parts = [abstract, *execution, *error]

    abstract_groups = set(abstract.fusion_groups)
    for part in parts[1:]:
        for group in part.fusion_groups:
            if group not in abstract_groups:
                raise FusionMismatch(group)

    places: dict[str, Place] = {}
    transitions: dict[str, Transition] = {}
    groups: dict[str, list[str]] = {g: list(m) for g, m in abstract.fusion_groups.items()}
    initial: dict[str, list] = {}
    for part in parts:
        for pid, place in part.places.items():
            if pid in places or pid in transitions:
                raise IdCollision(pid)
            places[pid] = place
        for tid, transition in part.transitions.items():
            if tid in transitions or tid in places:
                raise IdCollision(tid)
            transitions[tid] = transition
        for pid, seeds in part.initial.items():
            initial.setdefault(pid, []).extend(dict(s) for s in seeds)
        if part is not abstract:
            for group, members in part.fusion_groups.items():
                groups[group].extend(members)

    return net_from_parts(
        f"composed.{abstract.net_id}",
        list(places.values()),
        list(transitions.values()),
        fusion_groups=groups,
        initial=initial,
        guard_registry=registry,
        allow_unresolved_guards=False,
    )

def build_session_net(
    defs: Sequence[ActivityDefinition], registry: GuardRegistry | None = None
) -> Net:
    """The net a training session runs: abstract + execution + error subnets."""
    registry = registry or standard_registry()
    abstract = build_abstract_net(defs, registry)
    execution = [build_execution_net(d, registry) for d in defs]
    error = [build_error_net(d, registry) for d in defs]
    return compose(abstract, execution, error, registry)

def with_environment(
    net: Net,
    defs: Sequence[ActivityDefinition],
    registry: GuardRegistry | None = None,
    error_budget: int = 1,
) -> Net:
    """Close a composed session net for whole-net analysis.

    Sessions are driven by injected subevents, so from the bare initial
    marking nothing is enabled. The closure adds budget-gated source
    transitions modelling the environment: one Start, one End (and one
    Execute where expected) delivered in lifecycle order per activity, and
    up to `error_budget` errors per error spec, deliverable only while the
    activity's timer place holds a token (errors occur during execution).
    """
    registry = registry or standard_registry()
    places = list(net.places.values())
    transitions = list(net.transitions.values())
    groups = {g: list(m) for g, m in net.fusion_groups.items()}
    initial: dict[str, list] = {p: [dict(s) for s in seeds] for p, seeds in net.initial.items()}

    for d in defs:
        a = d.activity_id
        q_start = f"env.{a}.q.start"
        q_end = f"env.{a}.q.end"
        places.append(Place(q_start, "start budget", capacity=1))
        places.append(Place(q_end, "end budget", capacity=1))
        initial[q_start] = [{}]
        after_start = q_end
        if d.has_execute:
            q_exec = f"env.{a}.q.execute"
            places.append(Place(q_exec, "execute budget", capacity=1))
            after_start = q_exec
            transitions.append(
                Transition(
                    f"env.{a}.deliver.execute",
                    "deliver execute",
                    inputs=(InputArc(q_exec),),
                    outputs=(
                        OutputArc(exec_in_place(a, "execute"), 1, Literal({"activity_id": a})),
                        OutputArc(q_end, 1, Literal({})),
                    ),
                )
            )
        transitions.append(
            Transition(
                f"env.{a}.deliver.start",
                "deliver start",
                inputs=(InputArc(q_start),),
                outputs=(
                    OutputArc(exec_in_place(a, "start"), 1, Literal({"activity_id": a})),
                    OutputArc(after_start, 1, Literal({})),
                ),
            )
        )
        transitions.append(
            Transition(
                f"env.{a}.deliver.end",
                "deliver end",
                inputs=(InputArc(q_end),),
                outputs=(OutputArc(exec_in_place(a, "end"), 1, Literal({"activity_id": a})),),
            )
        )
        for spec in d.error_specs:
            q_err = f"env.{a}.q.err.{spec.error_id}"
            places.append(Place(q_err, "error budget", capacity=error_budget))
            initial[q_err] = [{} for _ in range(error_budget)]
            transitions.append(
                Transition(
                    f"env.{a}.deliver.err.{spec.error_id}",
                    f"deliver {spec.error_id}",
                    inputs=(InputArc(q_err), InputArc(timer_place(a))),
                    outputs=(
                        OutputArc(
                            exec_in_place(a, "error"),
                            1,
                            Literal({"activity_id": a, "error_id": spec.error_id}),
                        ),
                        OutputArc(timer_place(a), 1, Copy(1)),
                    ),
                )
            )

    return net_from_parts(
        f"analysis.{net.net_id}",
        places,
        transitions,
        fusion_groups=groups,
        initial=initial,
        guard_registry=registry,
        allow_unresolved_guards=True,
    )
