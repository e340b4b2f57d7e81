/** Thin wrappers over the session-service HTTP API. */

import type { ActionBody } from "./actions.js";
import type { SocketLike } from "./stream.js";
import type { Ack, DebriefReport, ScenarioInfo, StateSnapshot } from "./types.js";

async function asJson<T>(response: Response): Promise<T> {
  const body = await response.json();
  if (!response.ok) {
    throw new Error(body.message ?? body.error ?? `HTTP ${response.status}`);
  }
  return body as T;
}

export async function listScenarios(): Promise<ScenarioInfo[]> {
  const body = await asJson<{ scenarios: ScenarioInfo[] }>(await fetch("/scenarios"));
  return body.scenarios;
}

export async function createSession(scenarioId: string): Promise<{ session_id: string; state: StateSnapshot }> {
  return asJson(
    await fetch("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ scenario_id: scenarioId }),
    }),
  );
}

export async function postAction(sessionId: string, action: ActionBody): Promise<Ack> {
  return asJson(
    await fetch(`/sessions/${sessionId}/actions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(action),
    }),
  );
}

export async function advance(sessionId: string, dticks: number): Promise<Ack> {
  return asJson(
    await fetch(`/sessions/${sessionId}/advance`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ dticks }),
    }),
  );
}

export async function completeSession(sessionId: string): Promise<{ status: string }> {
  return asJson(
    await fetch(`/sessions/${sessionId}/complete`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({}),
    }),
  );
}

export async function getState(sessionId: string): Promise<StateSnapshot> {
  return asJson(await fetch(`/sessions/${sessionId}/state`));
}

export async function getDebrief(sessionId: string): Promise<DebriefReport> {
  return asJson(await fetch(`/sessions/${sessionId}/debrief`));
}

export function openStream(sessionId: string): SocketLike {
  const scheme = location.protocol === "https:" ? "wss" : "ws";
  const socket = new WebSocket(`${scheme}://${location.host}/sessions/${sessionId}/stream`);
  // A browser WebSocket satisfies SocketLike at runtime; the handler slots
  // differ only in the (wider) DOM event parameter type.
  return socket as unknown as SocketLike;
}
