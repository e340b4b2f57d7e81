/**
 * Mirrors of the session-service JSON payloads. The console renders only
 * what the server sends; nothing here is computed client-side.
 */

export interface SpoolSlot {
  occupied: boolean;
  yarn_type: string | null;
  connected: boolean;
  tension_blocked: boolean;
}

export interface MachineState {
  status: "Off" | "Setup" | "Run" | "EmergencyStop";
  main_shaft_rpm: number;
  pile_height_mm: number;
  tool_phase_deg: number;
  interlocked: boolean;
}

export interface ProductRow {
  index: number;
  quality: "Regular" | "Interrupted";
  error_kind?: string;
  slot?: number;
}

export interface WorkCell {
  clock: number;
  machine: MachineState;
  creel: { slots: SpoolSlot[] };
  substrate: {
    material: string;
    length_m: number;
    seam_positions_m: number[];
    advanced_m: number;
  };
  product: { rows: ProductRow[] };
  operator: { focus_element: string | null; last_action_kind: string | null };
  consequences: ConsequenceNote[];
  params: { slot_count: number; [key: string]: unknown };
}

export interface ConsequenceNote {
  tick: number;
  text: string;
  anchor: string;
  error_id: string;
  activity_id: string;
  severity: string;
}

export interface ActivityInstance {
  instance_id: string;
  activity_id: string;
  state: "Pending" | "Active" | "Finished" | "Interrupted";
  started_at: number | null;
  ended_at: number | null;
  duration_ticks: number | null;
  errors: { tick: number; error_id: string; description: string }[];
}

export interface StateSnapshot {
  session_id: string;
  scenario_id: string;
  status: "Created" | "Running" | "Completed" | "Aborted";
  tick: number;
  work_cell: WorkCell;
  activities: Record<string, ActivityInstance>;
  consequences: ConsequenceNote[];
  log_length: number;
  error_path_length: number;
}

export interface StreamMessage {
  tick: number;
  delta: StateSnapshot;
  consequences: ConsequenceNote[];
  activity_states: Record<string, ActivityInstance>;
}

export interface ScenarioInfo {
  scenario_id: string;
  title: string;
  activities: string[];
}

export interface DebriefCriterion {
  name: string;
  params: Record<string, unknown>;
  passed: boolean;
}

export interface DebriefTimelineEntry {
  tick: number;
  activity_id: string;
  error_id: string;
  description: string;
  consequence_text: string;
  hint: string;
  marking_ref: string;
  has_marking_snapshot: boolean;
}

export interface DebriefActivity {
  activity_id: string;
  name: string;
  state: string;
  started_at: number | null;
  ended_at: number | null;
  duration_ticks: number | null;
  errors: DebriefTimelineEntry[];
}

export interface DebriefReport {
  session_id: string;
  scenario_id: string;
  title: string;
  status: string;
  success: boolean;
  criteria: DebriefCriterion[];
  activities: DebriefActivity[];
  error_timeline: DebriefTimelineEntry[];
  counts: Record<string, number>;
  final_tick: number;
}

export interface Ack {
  accepted: boolean;
  refusal?: { error: string; message: string };
  state: StateSnapshot;
}
