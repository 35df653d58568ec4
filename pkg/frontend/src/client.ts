// Service request layer: every steering action issues exactly one request,
// state is updated only from acknowledged responses, and invalid parameter
// edits are rejected before any request is made.

import { validateParamValue } from "./params.js";
import type {
  AlgorithmInfo,
  AuditEntry,
  DatasetInfo,
  ParameterSpec,
  SessionAck,
  Snapshot,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** A parameter edit blocked client-side; no request was sent. */
export class ClientValidationError extends Error {}

/** The service rejected a request; message carries its detail verbatim. */
export class ServiceError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

export interface SessionRequest {
  datafile?: string;
  algorithms: Array<{ library: string; parameters?: Record<string, unknown> }>;
  deliver_gt_frames?: boolean;
  memory_probe?: string;
  frame_limit?: number | null;
  max_dt?: number;
}

export class ServiceClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let detail = `${response.status}`;
      try {
        const payload = await response.json();
        detail = typeof payload.detail === "string" ? payload.detail : JSON.stringify(payload);
      } catch {
        // keep the bare status
      }
      throw new ServiceError(detail, response.status);
    }
    return (await response.json()) as T;
  }

  createSession(spec: SessionRequest): Promise<{ id: string; mode: string }> {
    return this.request("POST", "/sessions", spec);
  }

  step(sessionId: string, n: number): Promise<SessionAck> {
    return this.request("POST", `/sessions/${sessionId}/step`, { n });
  }

  play(sessionId: string): Promise<SessionAck> {
    return this.request("POST", `/sessions/${sessionId}/play`);
  }

  pause(sessionId: string): Promise<SessionAck> {
    return this.request("POST", `/sessions/${sessionId}/pause`);
  }

  /** Validates against the spec's declared type and bounds first; an invalid
   * value rejects locally without touching the network. */
  setParam(
    sessionId: string,
    algorithm: string,
    spec: ParameterSpec,
    raw: string,
  ): Promise<AuditEntry> {
    const checked = validateParamValue(spec, raw);
    if (!checked.ok) {
      return Promise.reject(new ClientValidationError(checked.reason));
    }
    return this.request("PUT", `/sessions/${sessionId}/params`, {
      algorithm,
      name: spec.long_name,
      value: checked.value,
    });
  }

  snapshot(sessionId: string): Promise<Snapshot> {
    return this.request("GET", `/sessions/${sessionId}/snapshot`);
  }

  algorithms(): Promise<AlgorithmInfo[]> {
    return this.request("GET", "/algorithms");
  }

  datasets(): Promise<DatasetInfo[]> {
    return this.request("GET", "/datasets");
  }

  streamUrl(sessionId: string, fromSeq: number): string {
    return `${this.baseUrl}/sessions/${sessionId}/stream?from_seq=${fromSeq}`;
  }
}
