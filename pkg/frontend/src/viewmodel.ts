/**
 * Pure projection of a server snapshot into render-ready panel models.
 * Reloading the page and resyncing goes through the same function, so the
 * view is a pure function of server state.
 */

import type {
  ActivityInstance,
  ConsequenceNote,
  DebriefReport,
  StateSnapshot,
} from "./types.js";

export interface MachinePanel {
  status: string;
  statusClass: "off" | "setup" | "run" | "estop";
  interlocked: boolean;
  rows: { label: string; value: string }[];
}

export interface CreelCell {
  slot: number;
  elementId: string;
  occupied: boolean;
  yarnType: string | null;
  connected: boolean;
  tensionBlocked: boolean;
  overlays: ConsequenceNote[];
}

export interface PatternCell {
  index: number;
  quality: "Regular" | "Interrupted";
  title: string;
}

export interface ChecklistEntry {
  activityId: string;
  state: ActivityInstance["state"];
  badge: string;
  duration: string;
  errorCount: number;
}

export interface OverlayModel {
  anchor: string;
  notes: ConsequenceNote[];
}

export interface ViewModel {
  tick: number;
  sessionId: string;
  sessionStatus: string;
  machine: MachinePanel;
  creel: CreelCell[];
  pattern: PatternCell[];
  substrate: { label: string; progressPct: number; seamsPct: number[] };
  checklist: ChecklistEntry[];
  overlays: OverlayModel[];
  machineOverlays: ConsequenceNote[];
  debriefReady: boolean;
}

const STATUS_CLASS: Record<string, MachinePanel["statusClass"]> = {
  Off: "off",
  Setup: "setup",
  Run: "run",
  EmergencyStop: "estop",
};

const STATE_BADGE: Record<ActivityInstance["state"], string> = {
  Pending: "○", // open circle
  Active: "◔", // quarter circle
  Finished: "✓",
  Interrupted: "✕",
};

export function consequencesByAnchor(notes: ConsequenceNote[]): Map<string, ConsequenceNote[]> {
  const grouped = new Map<string, ConsequenceNote[]>();
  for (const note of notes) {
    const list = grouped.get(note.anchor) ?? [];
    list.push(note);
    grouped.set(note.anchor, list);
  }
  return grouped;
}

export function buildViewModel(snapshot: StateSnapshot): ViewModel {
  const cell = snapshot.work_cell;
  const grouped = consequencesByAnchor(snapshot.consequences);

  const machine: MachinePanel = {
    status: cell.machine.status,
    statusClass: STATUS_CLASS[cell.machine.status] ?? "off",
    interlocked: cell.machine.interlocked,
    rows: [
      { label: "Main shaft", value: `${cell.machine.main_shaft_rpm.toFixed(0)} rpm` },
      { label: "Pile height", value: `${cell.machine.pile_height_mm.toFixed(1)} mm` },
      { label: "Tool phase", value: `${cell.machine.tool_phase_deg.toFixed(0)}°` },
      { label: "Clock", value: `tick ${cell.clock}` },
    ],
  };

  const creel: CreelCell[] = cell.creel.slots.map((slot, index) => ({
    slot: index,
    elementId: `creel.slot.${index}`,
    occupied: slot.occupied,
    yarnType: slot.yarn_type,
    connected: slot.connected,
    tensionBlocked: slot.tension_blocked,
    overlays: grouped.get(`creel.slot.${index}`) ?? [],
  }));

  const pattern: PatternCell[] = cell.product.rows.map((row) => ({
    index: row.index,
    quality: row.quality,
    title:
      row.quality === "Regular"
        ? `row ${row.index}: regular`
        : `row ${row.index}: interrupted (${row.error_kind ?? "?"}${
            row.slot !== undefined ? `, slot ${row.slot}` : ""
          })`,
  }));

  const checklist: ChecklistEntry[] = Object.values(snapshot.activities)
    .sort((a, b) => a.activity_id.localeCompare(b.activity_id))
    .map((inst) => ({
      activityId: inst.activity_id,
      state: inst.state,
      badge: STATE_BADGE[inst.state],
      duration: inst.duration_ticks === null ? "" : `${inst.duration_ticks} ticks`,
      errorCount: inst.errors.length,
    }));

  const overlays: OverlayModel[] = [...grouped.entries()]
    .sort(([a], [b]) => a.localeCompare(b))
    .map(([anchor, notes]) => ({ anchor, notes }));

  return {
    tick: snapshot.tick,
    sessionId: snapshot.session_id,
    sessionStatus: snapshot.status,
    machine,
    creel,
    pattern,
    substrate: {
      label: `${cell.substrate.material}, ${cell.substrate.advanced_m.toFixed(2)} / ${cell.substrate.length_m.toFixed(1)} m`,
      progressPct: (cell.substrate.advanced_m / cell.substrate.length_m) * 100,
      seamsPct: cell.substrate.seam_positions_m.map((s) => (s / cell.substrate.length_m) * 100),
    },
    checklist,
    overlays,
    machineOverlays: [...grouped.entries()]
      .filter(([anchor]) => anchor === "machine" || anchor.startsWith("machine."))
      .flatMap(([, notes]) => notes),
    debriefReady: snapshot.status === "Completed" || snapshot.status === "Aborted",
  };
}

export interface DebriefView {
  headline: string;
  success: boolean;
  criteria: { label: string; passed: boolean }[];
  activities: {
    name: string;
    state: string;
    duration: string;
    errors: { text: string; hint: string }[];
  }[];
  timeline: { tick: number; label: string; hint: string }[];
  counts: { label: string; value: number }[];
}

export function buildDebriefView(report: DebriefReport): DebriefView {
  return {
    headline: report.success
      ? `Session ${report.session_id}: goal reached`
      : `Session ${report.session_id}: review the errors below`,
    success: report.success,
    criteria: report.criteria.map((criterion) => ({
      label:
        criterion.name +
        (Object.keys(criterion.params).length ? ` ${JSON.stringify(criterion.params)}` : ""),
      passed: criterion.passed,
    })),
    activities: report.activities.map((activity) => ({
      name: activity.name,
      state: activity.state,
      duration: activity.duration_ticks === null ? "" : `${activity.duration_ticks} ticks`,
      errors: activity.errors.map((entry) => ({
        text: `${entry.error_id} @ tick ${entry.tick}: ${entry.description}`,
        hint: entry.hint,
      })),
    })),
    timeline: report.error_timeline.map((entry) => ({
      tick: entry.tick,
      label: `${entry.activity_id}: ${entry.error_id}${
        entry.consequence_text ? ` · ${entry.consequence_text}` : ""
      }`,
      hint: entry.hint,
    })),
    counts: Object.entries(report.counts).map(([label, value]) => ({ label, value })),
  };
}
