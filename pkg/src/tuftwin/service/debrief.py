"""Debrief reports: the feedback phase artifact.

A report is a pure function of (scenario, event log): the final state is
re-derived by replaying the log's driver records, so repeated calls are
byte-identical and nothing depends on live session internals. Reports are
produced for error-free sessions too.
"""

from __future__ import annotations

from typing import Iterable, Mapping

from .runtime import LogRecord, replay
from .scenario import ScenarioSpec, resolve_criterion


def build_debrief(
    spec: ScenarioSpec, records: Iterable[LogRecord | Mapping], session_id: str
) -> dict:
    records = list(records)
    rebuilt = replay(spec, records, session_id=session_id)
    final = rebuilt.state_snapshot()
    states = final["activities"]

    def body_of(record):
        return record.body if isinstance(record, LogRecord) else record["body"]

    def kind_of(record):
        return record.kind if isinstance(record, LogRecord) else record["kind"]

    def tick_of(record):
        return record.tick if isinstance(record, LogRecord) else record["tick"]

    history_bodies = [(tick_of(r), body_of(r)) for r in records if kind_of(r) == "History"]
    command_bodies = [(tick_of(r), body_of(r)) for r in records if kind_of(r) == "Command"]
    action_bodies = [body_of(r) for r in records if kind_of(r) == "Action"]
    refusals = [
        b for b in action_bodies if b.get("type") == "operator_action" and not b.get("accepted")
    ]

    def consequence_text(error_id: str) -> str:
        for _, body in command_bodies:
            if body.get("error_id") == error_id and body.get("kind") == "ShowConsequence":
                return body.get("text", "")
        return ""

    timeline = []
    for when, body in history_bodies:
        entry = body["entry"]
        timeline.append(
            {
                "tick": entry["tick"],
                "activity_id": entry["instance_id"].split("#")[0],
                "error_id": entry["error_id"],
                "description": entry["description"],
                "consequence_text": consequence_text(entry["error_id"]),
                "hint": spec.hint_for(entry["error_id"]),
                "marking_ref": entry["marking_ref"],
                "has_marking_snapshot": "marking_snapshot" in body,
            }
        )

    activities = []
    for definition in spec.activities:
        inst = states[definition.activity_id]
        errors = [t for t in timeline if t["activity_id"] == definition.activity_id]
        activities.append(
            {
                "activity_id": definition.activity_id,
                "name": definition.name,
                "state": inst["state"],
                "started_at": inst["started_at"],
                "ended_at": inst["ended_at"],
                "duration_ticks": inst["duration_ticks"],
                "errors": errors,
            }
        )

    criteria = []
    overall = True
    for criterion in spec.success_criteria:
        passed = bool(resolve_criterion(criterion)(final["work_cell"], states))
        overall = overall and passed
        criteria.append({"name": criterion.name, "params": dict(criterion.params), "passed": passed})

    operator_actions = [
        b for b in action_bodies if b.get("type") == "operator_action"
    ]
    return {
        "session_id": session_id,
        "scenario_id": spec.scenario_id,
        "title": spec.title,
        "status": rebuilt.status,
        "success": overall,
        "criteria": criteria,
        "activities": activities,
        "error_timeline": timeline,
        "counts": {
            "actions": len(operator_actions),
            "refusals": len(refusals),
            "errors": len(timeline),
            "rows_total": len(final["work_cell"]["product"]["rows"]),
            "rows_regular": len(
                [r for r in final["work_cell"]["product"]["rows"] if r["quality"] == "Regular"]
            ),
            "log_records": len(records),
        },
        "final_tick": final["tick"],
    }
