import type { StateSnapshot } from "../src/types.js";

export function snapshotFixture(overrides: Partial<StateSnapshot> = {}): StateSnapshot {
  const base: StateSnapshot = {
    session_id: "s-0001",
    scenario_id: "tufting-demo-01",
    status: "Running",
    tick: 31,
    work_cell: {
      clock: 31,
      machine: {
        status: "EmergencyStop",
        main_shaft_rpm: 0,
        pile_height_mm: 8,
        tool_phase_deg: 123.4,
        interlocked: true,
      },
      creel: {
        slots: [
          { occupied: true, yarn_type: "wool", connected: true, tension_blocked: false },
          { occupied: false, yarn_type: null, connected: false, tension_blocked: false },
          { occupied: true, yarn_type: "wool", connected: true, tension_blocked: false },
          { occupied: true, yarn_type: "nylon", connected: false, tension_blocked: true },
        ],
      },
      substrate: {
        material: "jute",
        length_m: 50,
        seam_positions_m: [40],
        advanced_m: 0.2,
      },
      product: {
        rows: [
          { index: 0, quality: "Regular" },
          { index: 1, quality: "Regular" },
          { index: 2, quality: "Interrupted", error_kind: "YarnBreak", slot: 0 },
        ],
      },
      operator: { focus_element: null, last_action_kind: "SpliceYarn" },
      consequences: [],
      params: { slot_count: 4 },
    },
    activities: {
      mount_spool: {
        instance_id: "mount_spool#1",
        activity_id: "mount_spool",
        state: "Finished",
        started_at: 0,
        ended_at: 0,
        duration_ticks: 0,
        errors: [],
      },
      splice_yarn: {
        instance_id: "splice_yarn#1",
        activity_id: "splice_yarn",
        state: "Interrupted",
        started_at: 25,
        ended_at: 31,
        duration_ticks: 6,
        errors: [{ tick: 31, error_id: "yarn_break", description: "yarn_break interrupted splice_yarn (slot 0)" }],
      },
      start_machine: {
        instance_id: "start_machine#1",
        activity_id: "start_machine",
        state: "Finished",
        started_at: 10,
        ended_at: 10,
        duration_ticks: 0,
        errors: [],
      },
    },
    consequences: [
      {
        tick: 31,
        text: "The yarn snapped at the creel; the pile pattern is interrupted.",
        anchor: "creel.slot.0",
        error_id: "yarn_break",
        activity_id: "splice_yarn",
        severity: "Critical",
      },
    ],
    log_length: 60,
    error_path_length: 3,
  };
  return { ...base, ...overrides };
}
