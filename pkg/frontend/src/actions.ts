/**
 * Operator action bodies, 1:1 with POST /sessions/{id}/actions. The console
 * can emit exactly these variants and nothing else.
 */

export type ActionBody =
  | { kind: "MountSpool"; slot: number; yarn_type: string }
  | { kind: "RemoveSpool"; slot: number }
  | { kind: "ConnectYarn"; slot: number }
  | { kind: "SpliceYarn"; slot: number; duration_ticks: number }
  | { kind: "ApplyCompressedAir"; duration_ticks: number }
  | { kind: "SetParameter"; name: string; value: number }
  | { kind: "StartMachine" }
  | { kind: "StopMachine" }
  | { kind: "Focus"; element: string };

export const ACTION_KINDS = [
  "MountSpool",
  "RemoveSpool",
  "ConnectYarn",
  "SpliceYarn",
  "ApplyCompressedAir",
  "SetParameter",
  "StartMachine",
  "StopMachine",
  "Focus",
] as const;

export type ActionKind = (typeof ACTION_KINDS)[number];

export function mountSpool(slot: number, yarnType: string): ActionBody {
  return { kind: "MountSpool", slot, yarn_type: yarnType };
}

export function removeSpool(slot: number): ActionBody {
  return { kind: "RemoveSpool", slot };
}

export function connectYarn(slot: number): ActionBody {
  return { kind: "ConnectYarn", slot };
}

export function spliceYarn(slot: number, durationTicks: number): ActionBody {
  return { kind: "SpliceYarn", slot, duration_ticks: durationTicks };
}

export function applyCompressedAir(durationTicks: number): ActionBody {
  return { kind: "ApplyCompressedAir", duration_ticks: durationTicks };
}

export function setParameter(name: string, value: number): ActionBody {
  return { kind: "SetParameter", name, value };
}

export function startMachine(): ActionBody {
  return { kind: "StartMachine" };
}

export function stopMachine(): ActionBody {
  return { kind: "StopMachine" };
}

export function focus(element: string): ActionBody {
  return { kind: "Focus", element };
}

/** Field spec for the generic action form; slots render as dropdowns. */
export interface ActionField {
  name: string;
  label: string;
  input: "slot" | "int" | "float" | "text" | "element";
}

export const ACTION_FIELDS: Record<ActionKind, ActionField[]> = {
  MountSpool: [
    { name: "slot", label: "Slot", input: "slot" },
    { name: "yarn_type", label: "Yarn type", input: "text" },
  ],
  RemoveSpool: [{ name: "slot", label: "Slot", input: "slot" }],
  ConnectYarn: [{ name: "slot", label: "Slot", input: "slot" }],
  SpliceYarn: [
    { name: "slot", label: "Slot", input: "slot" },
    { name: "duration_ticks", label: "Duration (ticks)", input: "int" },
  ],
  ApplyCompressedAir: [{ name: "duration_ticks", label: "Duration (ticks)", input: "int" }],
  SetParameter: [
    { name: "name", label: "Parameter", input: "text" },
    { name: "value", label: "Value", input: "float" },
  ],
  StartMachine: [],
  StopMachine: [],
  Focus: [{ name: "element", label: "Element", input: "element" }],
};

/**
 * Build an action body from raw form values; throws on anything that would
 * not be a valid wire body, so invalid input never reaches the server.
 */
export function buildAction(kind: ActionKind, values: Record<string, string>): ActionBody {
  const need = (field: ActionField): string => {
    const raw = values[field.name];
    if (raw === undefined || raw === "") {
      throw new Error(`${field.label} is required`);
    }
    return raw;
  };
  const toInt = (field: ActionField, minimum: number): number => {
    const value = Number(need(field));
    if (!Number.isInteger(value) || value < minimum) {
      throw new Error(`${field.label} must be an integer >= ${minimum}`);
    }
    return value;
  };
  const fields = ACTION_FIELDS[kind];
  switch (kind) {
    case "MountSpool":
      return mountSpool(toInt(fields[0], 0), need(fields[1]));
    case "RemoveSpool":
      return removeSpool(toInt(fields[0], 0));
    case "ConnectYarn":
      return connectYarn(toInt(fields[0], 0));
    case "SpliceYarn":
      return spliceYarn(toInt(fields[0], 0), toInt(fields[1], 1));
    case "ApplyCompressedAir":
      return applyCompressedAir(toInt(fields[0], 1));
    case "SetParameter": {
      const value = Number(need(fields[1]));
      if (!Number.isFinite(value)) {
        throw new Error("Value must be a number");
      }
      return setParameter(need(fields[0]), value);
    }
    case "StartMachine":
      return startMachine();
    case "StopMachine":
      return stopMachine();
    case "Focus":
      return focus(need(fields[0]));
  }
}
