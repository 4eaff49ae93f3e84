"""Scorers that judge singular-vs-plural minimal pairs, plus the NDJSON
protocol for talking to scorers living in another process.

A scorer assigns a log probability to each candidate continuation of a
prefix.  The first candidate is always the singular form, the second the
plural form; the higher-scored one is the prediction, with exact ties
resolved to singular and counted as incorrect.

External scorers speak "agreement-probe/1": both sides first write a
handshake line ``{"protocol": "agreement-probe/1"}``, then the driver
streams request objects ``{"id", "prefix", "candidates"}`` and reads
back ``{"id", "logprobs"}`` or ``{"id", "error"}`` lines, one JSON
object per line, in any order within a batch window.
"""

from __future__ import annotations

import json
import math
import os
import queue
import subprocess
import threading
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

if TYPE_CHECKING:
    from .extraction import AgreementInstance

PROTOCOL = "agreement-probe/1"
UNK = "<unk>"
NEG_INF = float("-inf")


class ScorerError(Exception):
    """A single instance could not be scored; the run continues."""


class ScorerProtocolError(Exception):
    """The external scorer is unusable; the run aborts."""


@dataclass(frozen=True)
class ScoreRequest:
    id: int
    prefix: tuple[str, ...]
    candidates: tuple[str, ...]
    # Harness-side context; never serialized onto the wire.
    target_number: str | None = None
    instance: "AgreementInstance | None" = None

    def to_wire(self) -> dict:
        return {"id": self.id, "prefix": list(self.prefix), "candidates": list(self.candidates)}

    @classmethod
    def from_wire(cls, obj: dict) -> "ScoreRequest":
        if not isinstance(obj, dict):
            raise ValueError("request must be a JSON object")
        if not isinstance(obj.get("id"), int):
            raise ValueError("request id must be an integer")
        prefix = obj.get("prefix")
        candidates = obj.get("candidates")
        if not isinstance(prefix, list) or not all(isinstance(f, str) for f in prefix):
            raise ValueError("request prefix must be a list of strings")
        if (not isinstance(candidates, list) or not candidates
                or not all(isinstance(f, str) for f in candidates)):
            raise ValueError("request candidates must be a non-empty list of strings")
        return cls(id=obj["id"], prefix=tuple(prefix), candidates=tuple(candidates))


@dataclass(frozen=True)
class ScorerVerdict:
    id: int
    logprobs: tuple[float, ...]
    predicted_number: str
    correct: bool
    tie: bool = False
    unnormalized: bool = False


class Scorer:
    """Base scorer. Subclasses implement score(); everything else has
    workable defaults."""

    name = "scorer"
    parallel_safe = True

    def score(self, request: ScoreRequest) -> Sequence[float]:
        raise NotImplementedError

    def score_batch(self, requests: Sequence[ScoreRequest]) -> list[Sequence[float] | ScorerError]:
        """One result per request, either logprobs or a ScorerError for
        that instance."""
        out: list[Sequence[float] | ScorerError] = []
        for request in requests:
            try:
                out.append(list(self.score(request)))
            except ScorerError as exc:
                out.append(exc)
        return out

    def knows_form(self, form: str) -> bool | None:
        """True/False for closed-vocabulary scorers, None when the
        notion does not apply."""
        return None

    def close(self) -> None:
        pass


def make_verdict(request: ScoreRequest, logprobs: Sequence[float]) -> ScorerVerdict:
    if len(logprobs) != len(request.candidates):
        raise ValueError(
            f"scorer returned {len(logprobs)} logprobs for {len(request.candidates)} candidates")
    if len(logprobs) != 2:
        raise ValueError("verdicts are defined for singular/plural pairs only")
    if request.target_number is None:
        raise ValueError("request carries no target_number to judge against")
    sing_lp, plur_lp = float(logprobs[0]), float(logprobs[1])
    tie = sing_lp == plur_lp
    predicted = "Sing" if tie or sing_lp > plur_lp else "Plur"
    return ScorerVerdict(
        id=request.id,
        logprobs=(sing_lp, plur_lp),
        predicted_number=predicted,
        correct=(not tie) and predicted == request.target_number,
        tie=tie,
        unnormalized=sing_lp > 0 or plur_lp > 0,
    )


def score_candidates(scorer: Scorer, request: ScoreRequest) -> ScorerVerdict:
    return make_verdict(request, scorer.score(request))


def score_sequence(scorer: Scorer, tokens: Sequence[str]) -> float:
    """Chain-rule log probability of a whole token sequence under a
    scorer that exposes per-token conditionals."""
    if not tokens:
        raise ValueError("cannot score an empty sequence")
    token_logprob = getattr(scorer, "token_logprob", None)
    if token_logprob is None:
        raise TypeError(f"{scorer.name} does not expose token-level probabilities")
    return sum(token_logprob(tuple(tokens[:i]), tok) for i, tok in enumerate(tokens))


class OracleScorer(Scorer):
    """Reads the gold label; upper bound and plumbing check."""

    name = "oracle"

    def score(self, request: ScoreRequest) -> list[float]:
        if request.target_number is None:
            raise ValueError("oracle needs target_number on the request")
        hit = 0 if request.target_number == "Sing" else 1
        return [0.0 if i == hit else NEG_INF for i in range(len(request.candidates))]


class AntiOracleScorer(Scorer):
    """Always picks the wrong member of the pair."""

    name = "anti_oracle"

    def score(self, request: ScoreRequest) -> list[float]:
        if request.target_number is None:
            raise ValueError("anti-oracle needs target_number on the request")
        miss = 1 if request.target_number == "Sing" else 0
        return [0.0 if i == miss else NEG_INF for i in range(len(request.candidates))]


class MajoritySingScorer(Scorer):
    """Class-prior baseline: always singular."""

    name = "majority_sing"

    def score(self, request: ScoreRequest) -> list[float]:
        return [0.0] + [NEG_INF] * (len(request.candidates) - 1)


class UniformScorer(Scorer):
    """1/V for every form; ties everywhere by construction."""

    name = "uniform"

    def __init__(self, vocab_size: int):
        if vocab_size < 1:
            raise ValueError("vocab_size must be positive")
        self.vocab_size = vocab_size
        self._lp = -math.log(vocab_size)

    def score(self, request: ScoreRequest) -> list[float]:
        return [self._lp] * len(request.candidates)

    def token_logprob(self, prefix: Sequence[str], token: str) -> float:
        return self._lp


class HeuristicScorer(Scorer):
    """Wraps one surface heuristic as a scorer.  Requests must carry the
    instance so the heuristic can see token annotations, not just forms."""

    def __init__(self, heuristic: str):
        from .heuristics import HEURISTICS

        if heuristic not in HEURISTICS:
            raise ValueError(f"unknown heuristic {heuristic!r}")
        self.name = heuristic
        self._fn = HEURISTICS[heuristic]

    def score(self, request: ScoreRequest) -> list[float]:
        if request.instance is None:
            raise ValueError(f"{self.name} needs instance-bearing requests")
        prediction = self._fn(request.instance)
        if prediction is None:
            return [0.0, 0.0]  # deliberate tie; judged incorrect downstream
        return [0.0, NEG_INF] if prediction == "Sing" else [NEG_INF, 0.0]


class NgramScorer(Scorer):
    """Add-alpha n-gram model with backoff to shorter contexts.

    P(w | ctx) = (c(ctx,w) + alpha) / (c(ctx) + alpha * V) when ctx was
    seen in training, else the same quantity under ctx shortened from
    the left.  V counts the known forms plus the reserved unknown
    symbol, and every out-of-vocabulary token maps to that symbol.
    """

    def __init__(self, order: int, alpha: float,
                 counts: dict[tuple[str, ...], dict[str, int]],
                 totals: dict[tuple[str, ...], int],
                 known_forms: frozenset[str],
                 name: str | None = None):
        self.order = order
        self.alpha = alpha
        self._counts = counts
        self._totals = totals
        self._known = known_forms
        self.vocab_size = len(known_forms) + 1  # + <unk>
        self.name = name or f"{order}-gram"

    def knows_form(self, form: str) -> bool:
        return form in self._known

    def _map(self, token: str) -> str:
        return token if token in self._known else UNK

    def token_logprob(self, prefix: Sequence[str], token: str) -> float:
        w = self._map(token)
        context = tuple(self._map(t) for t in prefix[max(0, len(prefix) - self.order + 1):])
        while context and context not in self._totals:
            context = context[1:]
        count = self._counts.get(context, {}).get(w, 0)
        total = self._totals.get(context, 0)
        return math.log((count + self.alpha) / (total + self.alpha * self.vocab_size))

    def score(self, request: ScoreRequest) -> list[float]:
        return [self.token_logprob(request.prefix, c) for c in request.candidates]


def train_ngram(corpus: Iterable[str], order: int = 2, alpha: float = 1.0,
                vocab=None) -> NgramScorer:
    """Count 1..order grams over a flat token stream.

    `vocab` (a Vocabulary or any container of forms) caps the known
    forms; tokens outside it are counted as the unknown symbol.  Without
    it every distinct form in the stream is known.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    stream = [t for t in corpus]
    if not stream:
        raise ValueError("empty training corpus")
    if vocab is not None:
        known = frozenset(getattr(vocab, "forms", vocab)) - {UNK}
        stream = [t if t in known else UNK for t in stream]
    else:
        known = frozenset(t for t in stream if t != UNK)
    counts: dict[tuple[str, ...], dict[str, int]] = {}
    totals: dict[tuple[str, ...], int] = {}
    for i, w in enumerate(stream):
        for k in range(order):
            if i - k < 0:
                break
            context = tuple(stream[i - k : i])
            by_form = counts.setdefault(context, {})
            by_form[w] = by_form.get(w, 0) + 1
            totals[context] = totals.get(context, 0) + 1
    return NgramScorer(order, alpha, counts, totals, known)


class _BatchFailure(Exception):
    """Internal: one protocol exchange went wrong."""


class ExternalScorer(Scorer):
    """Drives a scorer subprocess over the NDJSON protocol.

    Requests go out in batches; responses may arrive in any order within
    the batch.  A malformed exchange, a timeout, or an id mismatch fails
    the whole batch (those instances are skipped); three consecutive
    failed batches raise ScorerProtocolError.  Per-instance ``error``
    responses skip just that instance and count as a healthy exchange.
    """

    parallel_safe = False
    MAX_CONSECUTIVE_FAILURES = 3

    def __init__(self, command: Sequence[str], timeout: float = 60.0,
                 batch_size: int = 32, name: str | None = None):
        if not command:
            raise ValueError("empty scorer command")
        if batch_size < 1:
            raise ValueError("batch_size must be positive")
        self.command = [str(c) for c in command]
        self.timeout = timeout
        self.batch_size = batch_size
        self.name = name or os.path.basename(self.command[0])
        self._failures = 0
        self._proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            encoding="utf-8",
            bufsize=1,
        )
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._eof = False
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        try:
            self._send({"protocol": PROTOCOL})
            greeting = self._read_object(self.timeout)
            if greeting.get("protocol") != PROTOCOL:
                raise _BatchFailure(f"unexpected handshake {greeting!r}")
        except _BatchFailure as exc:
            self.close()
            raise ScorerProtocolError(f"{self.name}: handshake failed: {exc}") from None

    def _pump(self) -> None:
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _send(self, obj: dict) -> None:
        assert self._proc.stdin is not None
        try:
            self._proc.stdin.write(json.dumps(obj, ensure_ascii=False) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise _BatchFailure(f"scorer pipe closed: {exc}") from None

    def _read_object(self, timeout: float) -> dict:
        if self._eof:
            raise _BatchFailure("scorer closed its output")
        try:
            line = self._lines.get(timeout=timeout)
        except queue.Empty:
            raise _BatchFailure(f"no response within {timeout}s") from None
        if line is None:
            self._eof = True  # stay failed fast; don't wait out timeouts
            raise _BatchFailure("scorer closed its output")
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise _BatchFailure(f"bad JSON from scorer: {exc}") from None
        if not isinstance(obj, dict):
            raise _BatchFailure(f"expected a JSON object, got {type(obj).__name__}")
        return obj

    def score_batch(self, requests: Sequence[ScoreRequest]) -> list[Sequence[float] | ScorerError]:
        try:
            results = self._exchange(requests)
        except _BatchFailure as exc:
            self._failures += 1
            if self._failures >= self.MAX_CONSECUTIVE_FAILURES:
                raise ScorerProtocolError(
                    f"{self.name}: {self._failures} consecutive failed batches, last: {exc}")
            return [ScorerError(f"batch failed: {exc}")] * len(requests)
        self._failures = 0
        return results

    def _exchange(self, requests: Sequence[ScoreRequest]) -> list[Sequence[float] | ScorerError]:
        by_id = {r.id: r for r in requests}
        if len(by_id) != len(requests):
            raise ValueError("duplicate request ids in one batch")
        for request in requests:
            self._send(request.to_wire())
        collected: dict[int, Sequence[float] | ScorerError] = {}
        while len(collected) < len(requests):
            obj = self._read_object(self.timeout)
            rid = obj.get("id")
            if rid not in by_id:
                raise _BatchFailure(f"response for unknown id {rid!r}")
            if rid in collected:
                raise _BatchFailure(f"duplicate response for id {rid}")
            if "error" in obj:
                collected[rid] = ScorerError(str(obj["error"]))
                continue
            logprobs = obj.get("logprobs")
            expected = len(by_id[rid].candidates)
            if (not isinstance(logprobs, list) or len(logprobs) != expected
                    or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in logprobs)):
                raise _BatchFailure(f"malformed logprobs for id {rid}: {logprobs!r}")
            collected[rid] = [float(v) for v in logprobs]
        return [collected[r.id] for r in requests]

    def score(self, request: ScoreRequest) -> Sequence[float]:
        result = self.score_batch([request])[0]
        if isinstance(result, ScorerError):
            raise result
        return result

    def close(self) -> None:
        proc = getattr(self, "_proc", None)
        if proc is None:
            return
        if proc.stdin is not None:
            try:
                proc.stdin.close()
            except OSError:
                pass
        try:
            proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()

    def __enter__(self) -> "ExternalScorer":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
