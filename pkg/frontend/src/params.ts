// Client-side parameter validation: edits that fail here never reach the service.

import type { ParameterSpec } from "./types.js";

export type ValidationResult =
  | { ok: true; value: number | boolean | string }
  | { ok: false; reason: string };

export function validateParamValue(spec: ParameterSpec, raw: string): ValidationResult {
  switch (spec.type) {
    case "int": {
      if (!/^[+-]?\d+$/.test(raw.trim())) {
        return { ok: false, reason: `${spec.long_name}: not an integer` };
      }
      return checkBounds(spec, parseInt(raw, 10));
    }
    case "real": {
      const value = Number(raw);
      if (raw.trim() === "" || Number.isNaN(value)) {
        return { ok: false, reason: `${spec.long_name}: not a number` };
      }
      return checkBounds(spec, value);
    }
    case "bool": {
      const lowered = raw.trim().toLowerCase();
      if (lowered === "true" || lowered === "1") return { ok: true, value: true };
      if (lowered === "false" || lowered === "0") return { ok: true, value: false };
      return { ok: false, reason: `${spec.long_name}: expected true or false` };
    }
    case "string":
      return { ok: true, value: raw };
  }
}

function checkBounds(spec: ParameterSpec, value: number): ValidationResult {
  if (spec.bounds) {
    const [lo, hi] = spec.bounds;
    if (value < lo || value > hi) {
      return { ok: false, reason: `${spec.long_name}: ${value} outside bounds [${lo}, ${hi}]` };
    }
  }
  return { ok: true, value };
}
