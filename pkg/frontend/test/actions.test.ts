import { describe, expect, it } from "vitest";

import {
  ACTION_FIELDS,
  ACTION_KINDS,
  buildAction,
  mountSpool,
  spliceYarn,
} from "../src/actions.js";

describe("action bodies", () => {
  it("covers every operator action variant and nothing else", () => {
    expect([...ACTION_KINDS].sort()).toEqual(
      [
        "ApplyCompressedAir",
        "ConnectYarn",
        "Focus",
        "MountSpool",
        "RemoveSpool",
        "SetParameter",
        "SpliceYarn",
        "StartMachine",
        "StopMachine",
      ].sort(),
    );
    expect(Object.keys(ACTION_FIELDS).sort()).toEqual([...ACTION_KINDS].sort());
  });

  it("builds wire bodies 1:1 with the POST contract", () => {
    expect(mountSpool(2, "wool")).toEqual({ kind: "MountSpool", slot: 2, yarn_type: "wool" });
    expect(spliceYarn(0, 10)).toEqual({ kind: "SpliceYarn", slot: 0, duration_ticks: 10 });
    expect(buildAction("StartMachine", {})).toEqual({ kind: "StartMachine" });
    expect(buildAction("ApplyCompressedAir", { duration_ticks: "7" })).toEqual({
      kind: "ApplyCompressedAir",
      duration_ticks: 7,
    });
    expect(buildAction("SetParameter", { name: "pile_height_mm", value: "9.5" })).toEqual({
      kind: "SetParameter",
      name: "pile_height_mm",
      value: 9.5,
    });
  });

  it("rejects malformed form input before it reaches the server", () => {
    expect(() => buildAction("MountSpool", { slot: "1", yarn_type: "" })).toThrow(/required/);
    expect(() => buildAction("SpliceYarn", { slot: "0", duration_ticks: "0" })).toThrow(/>= 1/);
    expect(() => buildAction("SpliceYarn", { slot: "0", duration_ticks: "2.5" })).toThrow(/integer/);
    expect(() => buildAction("SetParameter", { name: "x", value: "abc" })).toThrow(/number/);
  });
});
