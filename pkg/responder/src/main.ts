/**
 * CLI entry point: serve the builtin unigram model over stdio.
 *
 *   node dist/main.js --train corpus.txt [--alpha 1.0]
 *                     [--batch-size 1] [--log run.ndjson]
 *
 * Exit codes match the harness convention: 0 clean end of input,
 * 1 usage error, 2 unreadable or empty training data, 3 handshake
 * mismatch.
 */

import { parseArgs } from "node:util";
import { serve } from "./serve.js";
import { loadUnigram } from "./unigram.js";

const USAGE =
  "usage: main.js --train FILE [--alpha F] [--batch-size N] [--log FILE]\n";

function fail(code: number, message: string): never {
  process.stderr.write(message.endsWith("\n") ? message : message + "\n");
  process.exit(code);
}

let values;
try {
  values = parseArgs({
    options: {
      train: { type: "string" },
      alpha: { type: "string", default: "1.0" },
      "batch-size": { type: "string", default: "1" },
      log: { type: "string" },
    },
  }).values;
} catch (err) {
  fail(1, `${String(err)}\n${USAGE}`);
}

if (!values.train) {
  fail(1, `--train is required\n${USAGE}`);
}
const alpha = Number(values.alpha);
if (!Number.isFinite(alpha) || alpha <= 0) {
  fail(1, `--alpha must be a positive number, got ${values.alpha}`);
}
const batchSize = Number(values["batch-size"]);
if (!Number.isInteger(batchSize) || batchSize < 1) {
  fail(1, `--batch-size must be a positive integer, got ${values["batch-size"]}`);
}

let model;
try {
  model = loadUnigram(values.train, alpha);
} catch (err) {
  fail(2, String(err));
}

process.exit(await serve({ model, batchSize, logPath: values.log }));
