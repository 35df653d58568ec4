// Payload types of the run-control service API.

/** One trajectory sample: [t, x, y, z, qw, qx, qy, qz]. */
export type TrajectoryPoint = [number, number, number, number, number, number, number, number];

export interface ParameterSpec {
  short_name: string;
  long_name: string;
  description: string;
  type: "int" | "real" | "bool" | "string";
  default: unknown;
  current?: unknown;
  bounds: [number, number] | null;
  live: boolean;
}

export interface MetricRow {
  frame_index: number;
  timestamp: number;
  duration: number;
  phases: Record<string, number>;
  memory_bytes: number | null;
  plugin_memory_bytes: number | null;
  power_watts: number | null;
  ate: number | null;
  tracking_status: string;
}

export interface AuditEntry {
  frame: number;
  algorithm: string;
  name: string;
  old: unknown;
  new: unknown;
}

export interface Snapshot {
  id: string;
  mode: string;
  frame: number;
  seq: number;
  error: string | null;
  trajectories: {
    gt: TrajectoryPoint[];
    est: Record<string, TrajectoryPoint[]>;
  };
  rows: Record<string, MetricRow[]>;
  params: Record<string, ParameterSpec[]>;
  audit: AuditEntry[];
  clouds: Record<string, { total: number; seed: number; points: number[][] }>;
}

export type StreamMessage =
  | { seq: number; type: "pose-appended"; algorithm: string; frame: number; point: TrajectoryPoint }
  | { seq: number; type: "row-appended"; algorithm: string; frame: number; row: MetricRow }
  | { seq: number; type: "status-changed"; algorithm?: string; frame: number; status?: string; mode?: string };

export interface SessionAck {
  id: string;
  mode: string;
  frame: number;
  error: string | null;
}

export interface AlgorithmInfo {
  library: string;
  name: string;
  parameters: ParameterSpec[];
}

export interface DatasetInfo {
  path: string;
  sensors: string[];
  gt_frames: number;
  input_frames: number;
  duration_seconds: number;
}
