/**
 * Wire protocol shared with the evaluation harness.
 *
 * Both sides speak newline-delimited JSON over stdin/stdout and open
 * with a `{"protocol": ...}` handshake line before anything else.
 * Requests carry an integer id echoed back on the matching response;
 * a response is either `{"id", "logprobs"}` or `{"id", "error"}`.
 */

export const PROTOCOL = "agreement-probe/1";

export interface ScoreRequest {
  id: number;
  prefix: string[];
  candidates: string[];
}

export interface ScoreResponse {
  id: number;
  logprobs: number[];
}

export interface ErrorResponse {
  id: number | null;
  error: string;
}

export type ParsedLine =
  | { ok: true; request: ScoreRequest }
  | { ok: false; id: number | null; error: string };

function isStringArray(value: unknown): value is string[] {
  return Array.isArray(value) && value.every((v) => typeof v === "string");
}

/** Parse one request line, classifying every way it can be malformed. */
export function parseRequest(line: string): ParsedLine {
  let obj: unknown;
  try {
    obj = JSON.parse(line);
  } catch (err) {
    return { ok: false, id: null, error: `bad JSON: ${String(err)}` };
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    return { ok: false, id: null, error: "request must be a JSON object" };
  }
  const record = obj as Record<string, unknown>;
  const id = Number.isInteger(record.id) ? (record.id as number) : null;
  if (id === null) {
    return { ok: false, id: null, error: "request id must be an integer" };
  }
  if (!isStringArray(record.prefix)) {
    return { ok: false, id, error: "prefix must be an array of strings" };
  }
  if (!isStringArray(record.candidates) || record.candidates.length === 0) {
    return { ok: false, id, error: "candidates must be a non-empty array of strings" };
  }
  return {
    ok: true,
    request: { id, prefix: record.prefix, candidates: record.candidates },
  };
}
