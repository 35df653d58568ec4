// Dashboard wiring: one session view, steered over the service API, fed by
// the push stream with snapshot resync on any gap or dropped connection.

import { ClientValidationError, ServiceClient, ServiceError } from "./client.js";
import { colorFor, comparePolylines, legend, type Plane } from "./projection.js";
import { drawSeries, drawTrajectories } from "./render.js";
import {
  applyMessage,
  applySnapshot,
  emptyView,
  renderedState,
  type SessionView,
} from "./state.js";
import type { StreamMessage } from "./types.js";

const el = <T extends HTMLElement>(id: string): T => {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
};

const serviceUrl = (document.body.dataset.service ?? "").replace(/\/$/, "") || window.location.origin;
const client = new ServiceClient(serviceUrl);

let view: SessionView = emptyView("");
let plane: Plane = "xy";
let source: EventSource | null = null;

const trajCanvas = el<HTMLCanvasElement>("trajectories");
const ateCanvas = el<HTMLCanvasElement>("ate-series");
const durationCanvas = el<HTMLCanvasElement>("duration-series");
const statusLine = el<HTMLDivElement>("status-line");
const legendBox = el<HTMLDivElement>("legend");
const paramsBox = el<HTMLDivElement>("params");
const auditBox = el<HTMLOListElement>("audit");
const errorBox = el<HTMLDivElement>("error-box");

function showError(text: string): void {
  errorBox.textContent = text;
  errorBox.style.display = text ? "block" : "none";
}

function render(): void {
  const state = renderedState(view);
  statusLine.textContent =
    `session ${view.sessionId || "-"} | ${view.connection} | mode ${state.mode} | frame ${state.frame}`;
  statusLine.className = view.connection;
  drawTrajectories(trajCanvas, comparePolylines(state.gt, state.est, plane));
  drawSeries(ateCanvas, state.ateSeries, colorFor);
  drawSeries(durationCanvas, Object.fromEntries(
    Object.entries(state.durationSeries).map(([k, v]) => [k, v as Array<number | null>]),
  ), colorFor);
  legendBox.innerHTML = "";
  for (const entry of legend(view.rows)) {
    const item = document.createElement("span");
    item.className = "legend-entry";
    item.style.color = entry.color;
    const ate = entry.runningAte === null ? "-" : entry.runningAte.toFixed(4);
    item.textContent = `${entry.algorithm} (ATE ${ate}, ${entry.status})`;
    legendBox.appendChild(item);
  }
  renderParams();
  auditBox.innerHTML = "";
  for (const entry of view.audit) {
    const item = document.createElement("li");
    item.textContent =
      `frame ${entry.frame}: ${entry.algorithm}.${entry.name} ${entry.old} -> ${entry.new}`;
    auditBox.appendChild(item);
  }
}

function renderParams(): void {
  paramsBox.innerHTML = "";
  for (const [algorithm, specs] of Object.entries(view.params)) {
    for (const spec of specs) {
      const row = document.createElement("div");
      row.className = "param-row";
      const label = document.createElement("label");
      label.textContent = `${algorithm} --${spec.long_name}${spec.live ? " (live)" : ""}`;
      label.title = spec.description;
      const input = document.createElement("input");
      input.value = String(spec.current ?? spec.default);
      input.disabled = !spec.live;
      const apply = document.createElement("button");
      apply.textContent = "set";
      apply.disabled = !spec.live;
      apply.onclick = async () => {
        showError("");
        try {
          const entry = await client.setParam(view.sessionId, algorithm, spec, input.value);
          view = { ...view, audit: [...view.audit, entry] };
          spec.current = entry.new;
          render();
        } catch (err) {
          if (err instanceof ClientValidationError) {
            showError(`blocked client-side: ${err.message}`);
          } else if (err instanceof ServiceError) {
            showError(err.message); // service error verbatim
          } else {
            markDisconnected();
          }
        }
      };
      row.append(label, input, apply);
      paramsBox.appendChild(row);
    }
  }
}

function markDisconnected(): void {
  view = { ...view, connection: "disconnected" };
  render();
}

async function resync(): Promise<void> {
  try {
    const snapshot = await client.snapshot(view.sessionId);
    view = applySnapshot(view, snapshot);
    render();
    subscribe(snapshot.seq);
  } catch {
    markDisconnected();
    setTimeout(resync, 1500);
  }
}

function subscribe(fromSeq: number): void {
  source?.close();
  source = new EventSource(client.streamUrl(view.sessionId, fromSeq));
  source.onmessage = (event) => {
    const message = JSON.parse(event.data) as StreamMessage;
    const result = applyMessage(view, message);
    view = result.view;
    if (result.outcome === "gap") {
      source?.close();
      void resync();
      return;
    }
    render();
  };
  source.onerror = () => {
    source?.close();
    markDisconnected();
    setTimeout(resync, 1000);
  };
}

async function connect(sessionId: string): Promise<void> {
  view = emptyView(sessionId);
  render();
  await resync();
}

async function steer(action: "play" | "pause" | "step"): Promise<void> {
  showError("");
  try {
    const ack =
      action === "play" ? await client.play(view.sessionId)
      : action === "pause" ? await client.pause(view.sessionId)
      : await client.step(view.sessionId, parseInt(el<HTMLInputElement>("step-count").value, 10) || 1);
    view = { ...view, mode: ack.mode, frame: ack.frame };
    render();
  } catch (err) {
    if (err instanceof ServiceError) showError(err.message);
    else markDisconnected();
  }
}

async function createSession(): Promise<void> {
  showError("");
  const datafile = el<HTMLInputElement>("datafile").value;
  const libraries = el<HTMLInputElement>("libraries").value.split(",").map((s) => s.trim()).filter(Boolean);
  try {
    const created = await client.createSession({
      datafile,
      algorithms: libraries.map((library) => ({ library })),
      deliver_gt_frames: el<HTMLInputElement>("deliver-gt").checked,
      memory_probe: "rss",
    });
    await connect(created.id);
  } catch (err) {
    showError(err instanceof ServiceError ? err.message : String(err));
  }
}

el<HTMLButtonElement>("create").onclick = () => void createSession();
el<HTMLButtonElement>("connect").onclick = () =>
  void connect(el<HTMLInputElement>("session-id").value);
el<HTMLButtonElement>("play").onclick = () => void steer("play");
el<HTMLButtonElement>("pause").onclick = () => void steer("pause");
el<HTMLButtonElement>("step").onclick = () => void steer("step");
el<HTMLSelectElement>("plane").onchange = (event) => {
  plane = (event.target as HTMLSelectElement).value as Plane;
  render();
};

void client.datasets().then((datasets) => {
  if (datasets.length) el<HTMLInputElement>("datafile").value = datasets[0].path;
}).catch(() => showError("service unreachable"));

render();
