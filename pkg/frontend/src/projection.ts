// Trajectory comparison model: 2-d projections onto a selectable plane,
// stable per-algorithm colors, and the legend with running ATE.

import type { MetricRow, TrajectoryPoint } from "./types.js";

export type Plane = "xy" | "xz" | "yz";

const AXES: Record<Plane, [number, number]> = {
  xy: [1, 2],
  xz: [1, 3],
  yz: [2, 3],
};

export function projectTrajectory(points: TrajectoryPoint[], plane: Plane): Array<[number, number]> {
  const [a, b] = AXES[plane];
  return points.map((p) => [p[a], p[b]]);
}

const PALETTE = [
  "#e41a1c", "#377eb8", "#4daf4a", "#984ea3",
  "#ff7f00", "#a65628", "#f781bf", "#00bfa5",
];

export const GT_COLOR = "#888888";

/** Stable color per algorithm name: survives reconnects and reordering. */
export function colorFor(algorithm: string): string {
  let hash = 0;
  for (let i = 0; i < algorithm.length; i++) {
    hash = (hash * 31 + algorithm.charCodeAt(i)) >>> 0;
  }
  return PALETTE[hash % PALETTE.length];
}

export interface Polyline {
  label: string;
  color: string;
  points: Array<[number, number]>;
}

/** Overlay model: ground truth drawn once, one polyline per algorithm. */
export function comparePolylines(
  gt: TrajectoryPoint[],
  est: Record<string, TrajectoryPoint[]>,
  plane: Plane,
): Polyline[] {
  const lines: Polyline[] = [
    { label: "ground-truth", color: GT_COLOR, points: projectTrajectory(gt, plane) },
  ];
  for (const name of Object.keys(est).sort()) {
    lines.push({ label: name, color: colorFor(name), points: projectTrajectory(est[name], plane) });
  }
  return lines;
}

export interface LegendEntry {
  algorithm: string;
  color: string;
  runningAte: number | null;
  status: string;
}

export function legend(rows: Record<string, MetricRow[]>): LegendEntry[] {
  return Object.keys(rows)
    .sort()
    .map((name) => {
      const series = rows[name];
      const last = series.length ? series[series.length - 1] : undefined;
      return {
        algorithm: name,
        color: colorFor(name),
        runningAte: last?.ate ?? null,
        status: last?.tracking_status ?? "bootstrap",
      };
    });
}

/** Fit a set of polylines into a width x height box, preserving aspect. */
export function fitTransform(
  lines: Polyline[],
  width: number,
  height: number,
  margin = 12,
): (p: [number, number]) => [number, number] {
  let minX = Infinity, maxX = -Infinity, minY = Infinity, maxY = -Infinity;
  for (const line of lines) {
    for (const [x, y] of line.points) {
      minX = Math.min(minX, x); maxX = Math.max(maxX, x);
      minY = Math.min(minY, y); maxY = Math.max(maxY, y);
    }
  }
  if (!isFinite(minX)) {
    return ([x, y]) => [x, y];
  }
  const spanX = Math.max(maxX - minX, 1e-9);
  const spanY = Math.max(maxY - minY, 1e-9);
  const scale = Math.min((width - 2 * margin) / spanX, (height - 2 * margin) / spanY);
  const offX = (width - scale * spanX) / 2;
  const offY = (height - scale * spanY) / 2;
  return ([x, y]) => [offX + (x - minX) * scale, height - (offY + (y - minY) * scale)];
}
