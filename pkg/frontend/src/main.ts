/** Console bootstrap: pick a scenario, run the session, view the debrief. */

import { ACTION_FIELDS, ACTION_KINDS, buildAction, type ActionKind } from "./actions.js";
import * as api from "./api.js";
import { renderDebrief, renderView } from "./render.js";
import { SessionStream } from "./stream.js";
import type { StateSnapshot } from "./types.js";
import { buildDebriefView, buildViewModel } from "./viewmodel.js";

const app = document.getElementById("app")!;
const controls = document.getElementById("controls")!;
const connection = document.getElementById("connection")!;

let sessionId: string | null = null;
let latest: StateSnapshot | null = null;
let connected = false;

function setConnected(up: boolean): void {
  connected = up;
  connection.textContent = up ? "connected" : "disconnected (actions disabled)";
  connection.className = up ? "conn up" : "conn down";
  controls.querySelectorAll("button, select, input").forEach((node) => {
    (node as HTMLButtonElement).disabled = !up;
  });
}

function onState(snapshot: StateSnapshot): void {
  // The resync fetch can race a pushed delta; never render backwards.
  if (latest && snapshot.log_length < latest.log_length) {
    return;
  }
  latest = snapshot;
  renderView(app, buildViewModel(snapshot));
  const debriefButton = document.getElementById("show-debrief") as HTMLButtonElement | null;
  if (debriefButton) {
    debriefButton.disabled = !(snapshot.status === "Completed" || snapshot.status === "Aborted");
  }
}

function note(text: string, isError = false): void {
  const banner = document.getElementById("notice")!;
  banner.textContent = text;
  banner.className = isError ? "notice error" : "notice";
}

async function runAction(kind: ActionKind, values: Record<string, string>): Promise<void> {
  if (!sessionId || !connected) {
    return;
  }
  try {
    const ack = await api.postAction(sessionId, buildAction(kind, values));
    if (!ack.accepted && ack.refusal) {
      note(`refused: ${ack.refusal.error}: ${ack.refusal.message}`, true);
    } else {
      note(`${kind} accepted`);
    }
  } catch (err) {
    note(String(err), true);
  }
}

function buildControls(slotCount: number): void {
  controls.replaceChildren();

  const kindSelect = document.createElement("select");
  for (const kind of ACTION_KINDS) {
    const option = document.createElement("option");
    option.value = kind;
    option.textContent = kind;
    kindSelect.appendChild(option);
  }
  const fieldBox = document.createElement("span");

  const renderFields = () => {
    fieldBox.replaceChildren();
    for (const field of ACTION_FIELDS[kindSelect.value as ActionKind]) {
      const label = document.createElement("label");
      label.textContent = field.label;
      let input: HTMLElement;
      if (field.input === "slot") {
        const select = document.createElement("select");
        for (let i = 0; i < slotCount; i += 1) {
          const option = document.createElement("option");
          option.value = String(i);
          option.textContent = `slot ${i}`;
          select.appendChild(option);
        }
        select.name = field.name;
        input = select;
      } else if (field.input === "element") {
        const select = document.createElement("select");
        const anchors = ["machine", "machine.status", "machine.controls", "substrate", "product"];
        for (let i = 0; i < slotCount; i += 1) {
          anchors.push(`creel.slot.${i}`);
        }
        for (const anchor of anchors) {
          const option = document.createElement("option");
          option.value = anchor;
          option.textContent = anchor;
          select.appendChild(option);
        }
        select.name = field.name;
        input = select;
      } else {
        const box = document.createElement("input");
        box.name = field.name;
        box.type = field.input === "text" ? "text" : "number";
        if (field.input === "int") {
          box.step = "1";
        }
        input = box;
      }
      label.appendChild(input);
      fieldBox.appendChild(label);
    }
  };
  kindSelect.addEventListener("change", renderFields);
  renderFields();

  const send = document.createElement("button");
  send.textContent = "Do it";
  send.addEventListener("click", () => {
    const values: Record<string, string> = {};
    fieldBox.querySelectorAll("input, select").forEach((node) => {
      const field = node as HTMLInputElement;
      values[field.name] = field.value;
    });
    try {
      void runAction(kindSelect.value as ActionKind, values);
    } catch (err) {
      note(String(err), true);
    }
  });

  const advanceButton = document.createElement("button");
  advanceButton.textContent = "Advance 5 ticks";
  advanceButton.addEventListener("click", () => {
    if (sessionId && connected) {
      void api.advance(sessionId, 5).catch((err) => note(String(err), true));
    }
  });

  const endButton = document.createElement("button");
  endButton.textContent = "End session";
  endButton.addEventListener("click", () => {
    if (sessionId && connected) {
      void api.completeSession(sessionId).catch((err) => note(String(err), true));
    }
  });

  const debriefButton = document.createElement("button");
  debriefButton.id = "show-debrief";
  debriefButton.textContent = "Debrief";
  debriefButton.disabled = true;
  debriefButton.addEventListener("click", () => {
    if (!sessionId) {
      return;
    }
    void api
      .getDebrief(sessionId)
      .then((report) => {
        renderDebrief(document.getElementById("debrief")!, buildDebriefView(report));
      })
      .catch((err) => note(String(err), true));
  });

  controls.append(kindSelect, fieldBox, send, advanceButton, endButton, debriefButton);
}

async function boot(): Promise<void> {
  const scenarios = await api.listScenarios();
  const picker = document.getElementById("scenario-picker")!;
  for (const scenario of scenarios) {
    const button = document.createElement("button");
    button.textContent = `${scenario.title} (${scenario.scenario_id})`;
    button.addEventListener("click", () => {
      void start(scenario.scenario_id);
      picker.replaceChildren();
    });
    picker.appendChild(button);
  }
  if (!scenarios.length) {
    note("no scenarios loaded on the server", true);
  }
}

async function start(scenarioId: string): Promise<void> {
  const created = await api.createSession(scenarioId);
  sessionId = created.session_id;
  buildControls(created.state.work_cell.params.slot_count as number);
  onState(created.state);
  const stream = new SessionStream({
    openSocket: () => api.openStream(sessionId!),
    fetchState: () => api.getState(sessionId!),
    onState,
    onConnection: setConnected,
  });
  stream.start();
}

void boot();
export { latest };
