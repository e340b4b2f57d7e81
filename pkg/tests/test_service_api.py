"""HTTP/WebSocket contract of the session service."""

import asyncio
import json
from pathlib import Path

import httpx
import pytest
from fastapi.testclient import TestClient

from tuftwin.service.app import ServiceConfig, create_app

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture()
def client(tmp_path):
    config = ServiceConfig(scenario_dir=SCENARIOS, log_dir=tmp_path / "logs")
    app = create_app(config)
    with TestClient(app) as test_client:
        yield test_client


def make_session(client):
    response = client.post("/sessions", json={"scenario_id": "tufting-demo-01"})
    assert response.status_code == 200
    return response.json()["session_id"]


def test_health_and_scenario_listing(client):
    assert client.get("/healthz").status_code == 200
    listing = client.get("/scenarios").json()
    assert any(s["scenario_id"] == "tufting-demo-01" for s in listing["scenarios"])


def test_scenario_upload_validates(client):
    bad = {"scenario_id": "x", "work_cell": {"params": {"required_connected_slots": [99]}}}
    response = client.post("/scenarios", json=bad)
    assert response.status_code == 422
    assert response.json()["diagnostics"]
    good = json.loads((SCENARIOS / "demo_cell.json").read_text())
    good["scenario_id"] = "uploaded-copy"
    assert client.post("/scenarios", json=good).status_code == 200
    assert client.post("/scenarios", json=good).status_code == 409


def test_unknown_session_and_scenario(client):
    assert client.post("/sessions", json={"scenario_id": "nope"}).status_code == 404
    assert client.get("/sessions/s-9999/state").status_code == 404
    assert client.post("/sessions/s-9999/actions", json={"kind": "StartMachine"}).status_code == 404


def test_action_flow_and_state(client):
    session_id = make_session(client)
    state = client.get(f"/sessions/{session_id}/state").json()
    assert state["status"] == "Running"
    response = client.post(
        f"/sessions/{session_id}/actions",
        json={"kind": "MountSpool", "slot": 2, "yarn_type": "wool"},
    )
    body = response.json()
    assert body["accepted"]
    assert body["state"]["work_cell"]["creel"]["slots"][2]["occupied"]
    assert client.post(f"/sessions/{session_id}/actions", json={"kind": "Bogus"}).status_code == 422


def test_advance_validation(client):
    session_id = make_session(client)
    assert client.post(f"/sessions/{session_id}/advance", json={"dticks": 0}).status_code == 422
    response = client.post(f"/sessions/{session_id}/advance", json={"dticks": 5})
    assert response.json()["state"]["tick"] == 5


def test_debrief_gate_and_complete(client):
    session_id = make_session(client)
    assert client.get(f"/sessions/{session_id}/debrief").status_code == 409
    assert client.post(f"/sessions/{session_id}/complete", json={}).status_code == 200
    report = client.get(f"/sessions/{session_id}/debrief")
    assert report.status_code == 200
    assert report.json()["session_id"] == session_id
    assert client.post(f"/sessions/{session_id}/actions", json={"kind": "StartMachine"}).status_code == 409


def test_log_endpoint_jsonl(client):
    session_id = make_session(client)
    client.post(f"/sessions/{session_id}/actions", json={"kind": "StartMachine"})
    lines = [json.loads(l) for l in client.get(f"/sessions/{session_id}/log").text.splitlines()]
    assert lines[0]["body"] == {"type": "session", "event": "started"}
    assert all({"tick", "seq", "kind", "body"} == set(l) for l in lines)
    seqs = [l["seq"] for l in lines]
    assert seqs == sorted(seqs)


def test_websocket_stream_pushes_committed_state(client):
    session_id = make_session(client)
    with client.websocket_connect(f"/sessions/{session_id}/stream") as ws:
        first = ws.receive_json()
        assert first["tick"] == 0
        assert first["activity_states"]["splice_yarn"]["state"] == "Pending"
        client.post(
            f"/sessions/{session_id}/actions",
            json={"kind": "MountSpool", "slot": 2, "yarn_type": "wool"},
        )
        push = ws.receive_json()
        assert push["delta"]["work_cell"]["creel"]["slots"][2]["occupied"]
        assert push["activity_states"]["mount_spool"]["state"] == "Finished"
        state = client.get(f"/sessions/{session_id}/state").json()
        assert push["delta"]["work_cell"] == state["work_cell"]


def test_session_log_file_persisted(client, tmp_path):
    session_id = make_session(client)
    client.post(f"/sessions/{session_id}/actions", json={"kind": "StartMachine"})
    log_path = tmp_path / "logs" / f"{session_id}.jsonl"
    assert log_path.exists()
    lines = log_path.read_text().splitlines()
    assert json.loads(lines[0])["body"]["event"] == "started"
    served = client.get(f"/sessions/{session_id}/log").text.splitlines()
    assert lines == served


def test_auto_tick_advances_sessions():
    config = ServiceConfig(scenario_dir=SCENARIOS, auto_tick_ms=20, auto_tick_step=2)
    app = create_app(config)

    async def scenario():
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport, base_url="http://test") as ac:
            session_id = (
                await ac.post("/sessions", json={"scenario_id": "tufting-demo-01"})
            ).json()["session_id"]
            await asyncio.sleep(0.3)
            state = (await ac.get(f"/sessions/{session_id}/state")).json()
            for slot in app.state.sessions.values():
                if slot.ticker:
                    slot.ticker.cancel()
            return state["tick"]

    assert asyncio.run(scenario()) >= 2


def test_concurrent_actions_never_tear_the_log():
    # Hammer one session from many coroutines; the per-session lock must
    # serialize them so seq numbers stay gapless and strictly ordered.
    config = ServiceConfig(scenario_dir=SCENARIOS)
    app = create_app(config)

    async def hammer():
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport, base_url="http://test") as ac:
            session_id = (
                await ac.post("/sessions", json={"scenario_id": "tufting-demo-01"})
            ).json()["session_id"]

            async def one(i):
                if i % 3 == 0:
                    return await ac.post(f"/sessions/{session_id}/advance", json={"dticks": 1})
                return await ac.post(
                    f"/sessions/{session_id}/actions",
                    json={"kind": "Focus", "element": "product"},
                )

            await asyncio.gather(*(one(i) for i in range(60)))
            return (await ac.get(f"/sessions/{session_id}/log")).text

    text = asyncio.run(hammer())
    records = [json.loads(l) for l in text.splitlines()]
    seqs = [r["seq"] for r in records]
    assert seqs == list(range(len(records)))
    ticks = [r["tick"] for r in records]
    assert ticks == sorted(ticks)
