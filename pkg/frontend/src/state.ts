// Session view state: a pure reducer over snapshots and stream messages.
//
// The dashboard renders only data received from the service; byte-identical
// responses therefore yield identical rendered state, and a client resyncing
// from a fresh snapshot converges to the same state as one that never
// disconnected (the replay-determinism test pins this).

import type {
  AuditEntry,
  MetricRow,
  ParameterSpec,
  Snapshot,
  StreamMessage,
  TrajectoryPoint,
} from "./types.js";

export type ConnectionState = "connecting" | "live" | "disconnected";

export interface SessionView {
  sessionId: string;
  connection: ConnectionState;
  mode: string;
  frame: number;
  /** Next stream sequence number this view expects. */
  seq: number;
  gt: TrajectoryPoint[];
  est: Record<string, TrajectoryPoint[]>;
  rows: Record<string, MetricRow[]>;
  params: Record<string, ParameterSpec[]>;
  audit: AuditEntry[];
}

export function emptyView(sessionId: string): SessionView {
  return {
    sessionId,
    connection: "connecting",
    mode: "paused",
    frame: 0,
    seq: 0,
    gt: [],
    est: {},
    rows: {},
    params: {},
    audit: [],
  };
}

export function applySnapshot(view: SessionView, snapshot: Snapshot): SessionView {
  return {
    ...view,
    connection: "live",
    mode: snapshot.mode,
    frame: snapshot.frame,
    seq: snapshot.seq,
    gt: snapshot.trajectories.gt.slice(),
    est: Object.fromEntries(
      Object.entries(snapshot.trajectories.est).map(([name, pts]) => [name, pts.slice()]),
    ),
    rows: Object.fromEntries(
      Object.entries(snapshot.rows).map(([name, rows]) => [name, rows.slice()]),
    ),
    params: snapshot.params,
    audit: snapshot.audit.slice(),
  };
}

export type ApplyResult =
  | { view: SessionView; outcome: "applied" }
  | { view: SessionView; outcome: "duplicate" }
  | { view: SessionView; outcome: "gap" };

/** Apply one stream message in order; duplicates (already covered by the
 * snapshot) are dropped, a sequence gap demands a resync. */
export function applyMessage(view: SessionView, message: StreamMessage): ApplyResult {
  if (message.seq < view.seq) {
    return { view, outcome: "duplicate" };
  }
  if (message.seq > view.seq) {
    return { view, outcome: "gap" };
  }
  const next: SessionView = { ...view, seq: view.seq + 1 };
  switch (message.type) {
    case "pose-appended": {
      const existing = next.est[message.algorithm] ?? [];
      next.est = { ...next.est, [message.algorithm]: [...existing, message.point] };
      next.frame = Math.max(next.frame, message.frame + 1);
      break;
    }
    case "row-appended": {
      const existing = next.rows[message.algorithm] ?? [];
      next.rows = { ...next.rows, [message.algorithm]: [...existing, message.row] };
      next.frame = Math.max(next.frame, message.frame + 1);
      break;
    }
    case "status-changed": {
      if (message.mode !== undefined) {
        next.mode = message.mode;
      }
      break;
    }
  }
  return { view: next, outcome: "applied" };
}

/** The stream-derived rendered state: what the plots and status line show.
 * Parameter-panel state follows snapshot/acknowledgment responses instead
 * and is excluded on purpose. */
export interface RenderedState {
  mode: string;
  frame: number;
  gt: TrajectoryPoint[];
  est: Record<string, TrajectoryPoint[]>;
  ateSeries: Record<string, Array<number | null>>;
  durationSeries: Record<string, number[]>;
  memorySeries: Record<string, Array<number | null>>;
  statuses: Record<string, string>;
}

export function renderedState(view: SessionView): RenderedState {
  const ateSeries: RenderedState["ateSeries"] = {};
  const durationSeries: RenderedState["durationSeries"] = {};
  const memorySeries: RenderedState["memorySeries"] = {};
  const statuses: RenderedState["statuses"] = {};
  for (const [name, rows] of Object.entries(view.rows)) {
    ateSeries[name] = rows.map((r) => r.ate);
    durationSeries[name] = rows.map((r) => r.duration);
    memorySeries[name] = rows.map((r) => r.plugin_memory_bytes ?? r.memory_bytes);
    statuses[name] = rows.length ? rows[rows.length - 1].tracking_status : "bootstrap";
  }
  return {
    mode: view.mode,
    frame: view.frame,
    gt: view.gt,
    est: view.est,
    ateSeries,
    durationSeries,
    memorySeries,
    statuses,
  };
}
