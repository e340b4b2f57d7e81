"""Command-line front door.

    tuftwin validate PATH                    check a net/scenario/activities file
    tuftwin simulate SCENARIO TRACE -o DIR   run a trace headlessly
    tuftwin analyze PATH [--k N] [--m N]     reachability / deadlock / liveness
    tuftwin serve [--addr HOST:PORT]         run the session service

Exit codes: 0 success, 1 operational error (bad input, cannot analyze),
2 analysis found problems (deadlocks or non-quasi-live transitions).
Diagnostics go to stderr as JSON; humans read stdout. Simulation artifacts
(log.jsonl, snapshot.json, debrief.json) contain no wall-clock data; the
run timestamp lives in meta.json only.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import analysis
from .activities import DefinitionError, build_session_net, parse_activity_definitions, with_environment
from .jsonutil import canonical_dumps
from .petri import StructuralError, build_net
from .service import ScenarioInvalid, SessionRuntime, parse_scenario
from .service.app import ServiceConfig, create_app
from .twin import ActionParseError, TwinError, parse_action


def _diagnostics(path: str, kind: str, errors: list[str]) -> None:
    print(
        canonical_dumps({"file": path, "kind": kind, "errors": errors}),
        file=sys.stderr,
    )


def _detect_kind(document) -> str:
    if isinstance(document, list):
        return "activities"
    if isinstance(document, dict) and "scenario_id" in document:
        return "scenario"
    if isinstance(document, dict) and "net_id" in document:
        return "net"
    return "unknown"


def cmd_validate(args) -> int:
    path = Path(args.path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        _diagnostics(str(path), "unreadable", [str(err)])
        return 1
    kind = _detect_kind(document)
    try:
        if kind == "net":
            build_net(document, allow_unresolved_guards=args.allow_unresolved_guards)
        elif kind == "scenario":
            parse_scenario(document)
        elif kind == "activities":
            parse_activity_definitions(document)
        else:
            _diagnostics(str(path), kind, ["cannot determine file kind (net/scenario/activities)"])
            return 1
    except StructuralError as err:
        _diagnostics(str(path), kind, [str(err)])
        return 1
    except ScenarioInvalid as err:
        _diagnostics(str(path), kind, err.diagnostics)
        return 1
    except DefinitionError as err:
        _diagnostics(str(path), kind, [str(err)])
        return 1
    print(f"{path}: valid {kind}")
    return 0


def run_trace(scenario_doc, trace_entries, session_id: str = "sim") -> dict:
    """Drive a headless session; returns the three byte-stable artifacts
    plus run notes. Raises on malformed input; the pipeline itself is
    deterministic."""
    spec = parse_scenario(scenario_doc)
    runtime = SessionRuntime(spec, session_id)
    runtime.begin()
    notes = []
    last_tick = 0
    for i, entry in enumerate(trace_entries):
        if not isinstance(entry, dict) or not {"tick", "kind", "body"} <= set(entry):
            raise ValueError(f"trace entry {i} must have tick, kind and body")
        tick, kind, body = entry["tick"], entry["kind"], entry["body"]
        if not isinstance(tick, int) or tick < last_tick:
            raise ValueError(f"trace entry {i}: ticks must be non-decreasing")
        last_tick = tick
        if runtime.status != "Running":
            notes.append(f"entry {i} skipped: session already {runtime.status}")
            continue
        if tick > runtime.twin.clock:
            runtime.advance(tick - runtime.twin.clock)
            if runtime.status != "Running":
                notes.append(f"entry {i} skipped: session completed while advancing")
                continue
        if kind == "Action":
            ack = runtime.post_action(parse_action(body))
            if not ack["accepted"]:
                notes.append(f"entry {i} refused: {ack['refusal']['error']}")
        elif kind == "Fault":
            runtime.inject_fault_now(TwinError.from_dict(body))
        elif kind == "Advance":
            dticks = body.get("dticks")
            if not isinstance(dticks, int) or dticks < 1:
                raise ValueError(f"trace entry {i}: dticks must be a positive integer")
            runtime.advance(dticks)
        else:
            raise ValueError(f"trace entry {i}: unknown kind {kind!r}")
    if runtime.status == "Running":
        runtime.complete()
    return {
        "log.jsonl": "\n".join(runtime.log_lines()) + "\n",
        "snapshot.json": canonical_dumps(runtime.state_snapshot()) + "\n",
        "debrief.json": canonical_dumps(runtime.debrief()) + "\n",
        "notes": notes,
        "status": runtime.status,
    }


def cmd_simulate(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        scenario_doc = json.loads(Path(args.scenario).read_text(encoding="utf-8"))
        trace_entries = [
            json.loads(line)
            for line in Path(args.trace).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
    except (OSError, json.JSONDecodeError) as err:
        _diagnostics(args.scenario, "simulate", [str(err)])
        return 1
    try:
        artifacts = run_trace(scenario_doc, trace_entries)
    except (ScenarioInvalid, ActionParseError, ValueError) as err:
        _diagnostics(args.scenario, "simulate", [str(err)])
        return 1
    for name in ("log.jsonl", "snapshot.json", "debrief.json"):
        (out_dir / name).write_text(artifacts[name], encoding="utf-8")
    # Wall-clock data is quarantined here so the artifacts above stay
    # byte-identical across runs.
    meta = {
        "generated_at_unix": int(time.time()),
        "scenario": str(args.scenario),
        "trace": str(args.trace),
        "status": artifacts["status"],
        "notes": artifacts["notes"],
    }
    (out_dir / "meta.json").write_text(canonical_dumps(meta) + "\n", encoding="utf-8")
    print(f"simulated {args.trace} -> {out_dir} (session {artifacts['status']})")
    return 0


def cmd_analyze(args) -> int:
    path = Path(args.path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        _diagnostics(str(path), "analyze", [str(err)])
        return 1
    kind = _detect_kind(document)
    try:
        if kind == "scenario":
            spec = parse_scenario(document)
            net = with_environment(build_session_net(list(spec.activities)), list(spec.activities))
            allow_names = args.allow_terminal or ["all-activities-terminal"]
        elif kind == "net":
            net = build_net(document, allow_unresolved_guards=True)
            allow_names = args.allow_terminal or []
        else:
            _diagnostics(str(path), kind, ["analyze expects a net or scenario file"])
            return 1
        predicates = []
        for name in allow_names:
            factory = analysis.NAMED_PREDICATES.get(name)
            if factory is None:
                _diagnostics(str(path), kind, [f"unknown terminal predicate {name!r}"])
                return 1
            predicates.append(factory(net))
    except (StructuralError, ScenarioInvalid, DefinitionError) as err:
        _diagnostics(str(path), kind, [str(err)])
        return 1

    graph = analysis.reachability(net, place_bound=args.k, node_bound=args.m)
    report = analysis.analysis_report(net, graph, predicates, k=args.k)
    out_path = Path(args.out) if args.out else Path("analysis.json")
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(canonical_dumps(report) + "\n", encoding="utf-8")
    if args.dot:
        Path(args.dot).write_text(analysis.to_dot(graph) + "\n", encoding="utf-8")
    clean = not report["deadlocks"] and not report["non_quasi_live"]
    print(
        f"{net.net_id}: {report['nodes']} markings, {report['edges']} edges, "
        f"{len(report['deadlocks'])} deadlocks, "
        f"{len(report['non_quasi_live'])} non-quasi-live, "
        f"bounded(k={args.k})={report['bounded']}"
        + (" [truncated]" if report["truncated"] else "")
    )
    return 0 if clean else 2


def cmd_serve(args) -> int:
    import uvicorn

    host, _, port = args.addr.rpartition(":")
    if not host or not port.isdigit():
        _diagnostics(args.addr, "serve", ["addr must be HOST:PORT"])
        return 1
    config = ServiceConfig(
        scenario_dir=Path(args.scenario_dir) if args.scenario_dir else None,
        log_dir=Path(args.log_dir) if args.log_dir else None,
        frontend_dir=Path(args.frontend_dir) if args.frontend_dir else None,
        auto_tick_ms=args.auto_tick_ms,
    )
    try:
        uvicorn.run(create_app(config), host=host, port=int(port), log_level="info")
    except (OSError, ValueError) as err:
        _diagnostics(args.addr, "serve", [str(err)])
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tuftwin", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a net, scenario or activities file")
    p.add_argument("path")
    p.add_argument("--allow-unresolved-guards", action="store_true",
                   help="accept net files whose guard names are not registered")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("simulate", help="run a trace file against a scenario headlessly")
    p.add_argument("scenario")
    p.add_argument("trace")
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("analyze", help="reachability/deadlock/liveness analysis")
    p.add_argument("path", help="net file or scenario file (composed + environment closure)")
    p.add_argument("--k", type=int, default=8, help="place bound / boundedness k")
    p.add_argument("--m", type=int, default=200_000, help="node bound")
    p.add_argument("--allow-terminal", action="append",
                   help="named terminal-marking predicate (repeatable)")
    p.add_argument("--dot", help="write a DOT export of the reachability graph")
    p.add_argument("--out", help="report path (default analysis.json)")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("serve", help="run the session service")
    p.add_argument("--addr", default="127.0.0.1:8400")
    p.add_argument("--scenario-dir", default="scenarios")
    p.add_argument("--auto-tick-ms", type=int, default=0)
    p.add_argument("--log-dir", default=None)
    p.add_argument("--frontend-dir", default=None)
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
