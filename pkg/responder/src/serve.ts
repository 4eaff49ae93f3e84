/**
 * Request loop: handshake, then one response line per request line
 * until stdin closes.
 *
 * Responses may be held back and emitted together, but only within the
 * configured batch window; the remainder is flushed at end of input.
 * Malformed requests get an error response instead of killing the
 * process, so one bad line never strands the harness.  Exit codes:
 * 0 clean end of input, 3 handshake mismatch.
 */

import * as fs from "node:fs";
import * as readline from "node:readline";
import { PROTOCOL, parseRequest } from "./protocol.js";
import { Model } from "./unigram.js";

interface LineSink {
  write(chunk: string): unknown;
}

export interface ServeConfig {
  model: Model;
  /** Hold up to this many responses before writing them out (default 1). */
  batchSize?: number;
  /** Append one JSON line per exchange here, for debugging runs. */
  logPath?: string;
  input?: NodeJS.ReadableStream;
  output?: LineSink;
}

export async function serve(config: ServeConfig): Promise<number> {
  const input = config.input ?? process.stdin;
  const output: LineSink = config.output ?? process.stdout;
  const batchSize = config.batchSize ?? 1;
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    throw new RangeError("batchSize must be a positive integer");
  }

  // the handshake goes out before any response, and before we even
  // look at the peer's side of it
  output.write(JSON.stringify({ protocol: PROTOCOL }) + "\n");

  const log = (entry: Record<string, unknown>) => {
    if (config.logPath) {
      fs.appendFileSync(config.logPath, JSON.stringify(entry) + "\n");
    }
  };

  const window: string[] = [];
  const flush = () => {
    for (const line of window) {
      output.write(line + "\n");
    }
    window.length = 0;
  };

  let sawHello = false;
  for await (const line of readline.createInterface({ input, crlfDelay: Infinity })) {
    if (line.trim() === "") {
      continue;
    }
    if (!sawHello) {
      let hello: unknown = null;
      try {
        hello = JSON.parse(line);
      } catch {
        // fall through to the mismatch exit below
      }
      const theirs =
        typeof hello === "object" && hello !== null
          ? (hello as Record<string, unknown>).protocol
          : undefined;
      if (theirs !== PROTOCOL) {
        process.stderr.write(
          `protocol mismatch: expected ${JSON.stringify(PROTOCOL)}, ` +
          `got ${JSON.stringify(theirs ?? null)}\n`,
        );
        log({ event: "handshake_mismatch", got: theirs ?? null });
        return 3;
      }
      sawHello = true;
      log({ event: "handshake", model: config.model.name });
      continue;
    }

    const parsed = parseRequest(line);
    let response: string;
    if (!parsed.ok) {
      response = JSON.stringify({ id: parsed.id, error: parsed.error });
      log({ id: parsed.id, error: parsed.error });
    } else {
      const { id, prefix, candidates } = parsed.request;
      try {
        // raw scores straight from the model; normalizing is the
        // harness's business, not ours
        const logprobs = config.model.logprobs(prefix, candidates);
        response = JSON.stringify({ id, logprobs });
        log({ id, candidates: candidates.length });
      } catch (err) {
        response = JSON.stringify({ id, error: String(err) });
        log({ id, error: String(err) });
      }
    }
    window.push(response);
    if (window.length >= batchSize) {
      flush();
    }
  }
  flush();
  return 0;
}
