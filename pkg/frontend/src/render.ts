// Canvas drawing: thin imperative layer over the pure view models.

import type { Polyline } from "./projection.js";
import { fitTransform } from "./projection.js";

export function drawTrajectories(canvas: HTMLCanvasElement, lines: Polyline[]): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const transform = fitTransform(lines, canvas.width, canvas.height);
  for (const line of lines) {
    if (!line.points.length) continue;
    ctx.strokeStyle = line.color;
    ctx.lineWidth = line.label === "ground-truth" ? 2.5 : 1.5;
    ctx.beginPath();
    line.points.forEach((p, i) => {
      const [x, y] = transform(p);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();
  }
}

export function drawSeries(
  canvas: HTMLCanvasElement,
  series: Record<string, Array<number | null>>,
  colorOf: (name: string) => string,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  let maxValue = 0;
  let maxLength = 1;
  for (const values of Object.values(series)) {
    maxLength = Math.max(maxLength, values.length);
    for (const v of values) {
      if (v !== null && v > maxValue) maxValue = v;
    }
  }
  if (maxValue <= 0) maxValue = 1;
  const margin = 6;
  const sx = (canvas.width - 2 * margin) / Math.max(maxLength - 1, 1);
  const sy = (canvas.height - 2 * margin) / maxValue;
  for (const [name, values] of Object.entries(series)) {
    ctx.strokeStyle = colorOf(name);
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    let started = false;
    values.forEach((v, i) => {
      if (v === null) return;
      const x = margin + i * sx;
      const y = canvas.height - margin - v * sy;
      if (!started) {
        ctx.moveTo(x, y);
        started = true;
      } else {
        ctx.lineTo(x, y);
      }
    });
    ctx.stroke();
  }
}
