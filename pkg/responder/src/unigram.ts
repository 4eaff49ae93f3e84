/**
 * Builtin add-alpha unigram model.
 *
 * Probabilities follow the harness's n-gram scorer restricted to order
 * 1 so the two sides agree on every verdict: the vocabulary is every
 * distinct training form plus one reserved unknown symbol, any token
 * outside it maps to that symbol, and
 *
 *   P(w) = (count(w) + alpha) / (N + alpha * V).
 */

import * as fs from "node:fs";

export const UNK = "<unk>";

/** What serve() needs from a model; implement this to plug in your own. */
export interface Model {
  readonly name: string;
  logprobs(prefix: readonly string[], candidates: readonly string[]): number[];
}

export class UnigramModel implements Model {
  readonly name: string;
  readonly vocabSize: number;
  private readonly counts = new Map<string, number>();
  private readonly known: Set<string>;
  private readonly total: number;
  private readonly alpha: number;

  constructor(tokens: readonly string[], alpha = 1.0, name = "unigram") {
    if (tokens.length === 0) {
      throw new RangeError("empty training corpus");
    }
    if (!Number.isFinite(alpha) || alpha <= 0) {
      throw new RangeError("alpha must be positive");
    }
    for (const token of tokens) {
      this.counts.set(token, (this.counts.get(token) ?? 0) + 1);
    }
    this.known = new Set(tokens);
    this.known.delete(UNK);
    this.total = tokens.length;
    this.vocabSize = this.known.size + 1; // + the unknown symbol
    this.alpha = alpha;
    this.name = name;
  }

  logprob(token: string): number {
    const mapped = this.known.has(token) ? token : UNK;
    const count = this.counts.get(mapped) ?? 0;
    return Math.log(
      (count + this.alpha) / (this.total + this.alpha * this.vocabSize),
    );
  }

  logprobs(prefix: readonly string[], candidates: readonly string[]): number[] {
    void prefix; // a unigram model conditions on nothing
    return candidates.map((c) => this.logprob(c));
  }
}

/** Whitespace-tokenize a text file and train on it. */
export function loadUnigram(path: string, alpha: number): UnigramModel {
  const tokens = fs
    .readFileSync(path, "utf-8")
    .split(/\s+/)
    .filter((t) => t.length > 0);
  return new UnigramModel(tokens, alpha);
}
