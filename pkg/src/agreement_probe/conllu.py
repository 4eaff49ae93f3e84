"""Reading and writing the CoNLL-U dependency format.

Only the core of the format is supported: ten tab-separated columns,
``#`` comment lines, sentences separated by blank lines, UTF-8 text.
Multiword token ranges (``3-4``) and empty nodes (``3.1``) are dropped
at parse time; the syntactic words they cover are kept.  The XPOS, DEPS
and MISC columns are ignored on input and written back as ``_``.

Parsed sentences are validated: token ids must be contiguous from 1,
heads must reference existing tokens or 0, the head graph must form a
single tree, forms must be non-empty, and any ``Number`` feature must
be ``Sing`` or ``Plur``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator

NUMBER_VALUES = ("Sing", "Plur")


class ConlluError(ValueError):
    """Malformed CoNLL-U input, with the 1-based line number when known."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Token:
    """One syntactic word. `feats` maps feature names to values and is
    treated as immutable after construction."""

    id: int
    form: str
    lemma: str
    upos: str
    feats: dict[str, str]
    head: int
    deprel: str

    @property
    def number(self) -> str | None:
        return self.feats.get("Number")

    @property
    def gender(self) -> str | None:
        return self.feats.get("Gender")

    def with_(self, **changes) -> "Token":
        return replace(self, **changes)


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    sent_id: str | None = None
    text: str | None = None

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)

    def token(self, token_id: int) -> Token:
        """Look up a token by its 1-based id."""
        return self.tokens[token_id - 1]

    def children(self, head_id: int) -> tuple[Token, ...]:
        return tuple(t for t in self.tokens if t.head == head_id)


def feats_to_str(feats: dict[str, str]) -> str:
    if not feats:
        return "_"
    return "|".join(f"{k}={v}" for k, v in sorted(feats.items(), key=lambda kv: kv[0].lower()))


def parse_feats(column: str, line_no: int | None = None) -> dict[str, str]:
    if column == "_":
        return {}
    feats: dict[str, str] = {}
    for pair in column.split("|"):
        name, sep, value = pair.partition("=")
        if not sep or not name or not value:
            raise ConlluError(f"malformed feature {pair!r}", line_no)
        feats[name] = value
    return feats


def validate_sentence(tokens: list[Token], line_nos: dict[int, int] | None = None) -> None:
    """Raise ConlluError unless `tokens` form a well-formed sentence."""

    def where(token_id: int) -> int | None:
        return line_nos.get(token_id) if line_nos else None

    if not tokens:
        raise ConlluError("empty sentence")
    for i, tok in enumerate(tokens, start=1):
        if tok.id != i:
            raise ConlluError(f"token ids not contiguous: expected {i}, got {tok.id}", where(tok.id))
        if not tok.form:
            raise ConlluError("empty form", where(tok.id))
        number = tok.feats.get("Number")
        if number is not None and number not in NUMBER_VALUES:
            raise ConlluError(f"bad Number value {number!r}", where(tok.id))
    n = len(tokens)
    roots = []
    for tok in tokens:
        if tok.head == tok.id:
            raise ConlluError(f"token {tok.id} is its own head", where(tok.id))
        if tok.head == 0:
            roots.append(tok.id)
        elif not 1 <= tok.head <= n:
            raise ConlluError(f"token {tok.id} has dangling head {tok.head}", where(tok.id))
    if len(roots) != 1:
        raise ConlluError(f"expected exactly one root, found {len(roots)}", where(tokens[0].id))
    # A single root plus valid parent pointers still allows cycles among
    # non-root tokens; walk up from every token to be sure.
    for tok in tokens:
        seen = set()
        node = tok
        while node.head != 0:
            if node.id in seen:
                raise ConlluError(f"cycle through token {tok.id}", where(tok.id))
            seen.add(node.id)
            node = tokens[node.head - 1]


def _parse_token_line(line: str, line_no: int) -> Token | None:
    """Parse one token line. Returns None for range and empty-node lines."""
    cols = line.split("\t")
    if len(cols) != 10:
        raise ConlluError(f"expected 10 columns, got {len(cols)}", line_no)
    raw_id = cols[0]
    if "-" in raw_id or "." in raw_id:
        return None
    try:
        token_id = int(raw_id)
    except ValueError:
        raise ConlluError(f"non-integer token id {raw_id!r}", line_no) from None
    try:
        head = int(cols[6])
    except ValueError:
        raise ConlluError(f"non-integer head {cols[6]!r}", line_no) from None
    return Token(
        id=token_id,
        form=cols[1],
        lemma=cols[2],
        upos=cols[3],
        feats=parse_feats(cols[5], line_no),
        head=head,
        deprel=cols[7],
    )


def parse_conllu(
    text: str,
    on_error: str = "abort",
    errors: list[ConlluError] | None = None,
) -> list[Sentence]:
    """Parse CoNLL-U text into a list of sentences.

    on_error="abort" raises on the first malformed sentence;
    on_error="skip" drops malformed sentences, appending the error to
    `errors` when a list is given.
    """
    if on_error not in ("abort", "skip"):
        raise ValueError(f"on_error must be 'abort' or 'skip', got {on_error!r}")

    sentences: list[Sentence] = []
    tokens: list[Token] = []
    line_nos: dict[int, int] = {}
    sent_id: str | None = None
    sent_text: str | None = None
    broken: ConlluError | None = None

    def flush() -> None:
        nonlocal tokens, line_nos, sent_id, sent_text, broken
        if broken is None and tokens:
            try:
                validate_sentence(tokens, line_nos)
            except ConlluError as exc:
                broken = exc
        if broken is not None:
            if on_error == "abort":
                raise broken
            if errors is not None:
                errors.append(broken)
        elif tokens:
            sentences.append(Sentence(tuple(tokens), sent_id, sent_text))
        tokens = []
        line_nos = {}
        sent_id = None
        sent_text = None
        broken = None

    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.rstrip("\r")
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            name, sep, value = body.partition("=")
            if sep:
                name = name.strip()
                if name == "sent_id":
                    sent_id = value.strip()
                elif name == "text":
                    sent_text = value.strip()
            continue
        if broken is not None:
            continue  # already failed; consume the rest of the sentence
        try:
            token = _parse_token_line(line, line_no)
        except ConlluError as exc:
            broken = exc
            continue
        if token is not None:
            tokens.append(token)
            line_nos[token.id] = line_no
    flush()
    return sentences


def parse_conllu_file(path: str | Path, on_error: str = "abort",
                      errors: list[ConlluError] | None = None) -> list[Sentence]:
    return parse_conllu(Path(path).read_text(encoding="utf-8"), on_error, errors)


def write_conllu(sentences: Iterable[Sentence]) -> str:
    """Serialize sentences back to CoNLL-U. Inverse of parse_conllu up to
    dropped comments, ranges and empty nodes."""
    out: list[str] = []
    for sentence in sentences:
        validate_sentence(list(sentence.tokens))
        if sentence.sent_id is not None:
            out.append(f"# sent_id = {sentence.sent_id}")
        if sentence.text is not None:
            out.append(f"# text = {sentence.text}")
        for tok in sentence.tokens:
            out.append("\t".join([
                str(tok.id), tok.form, tok.lemma, tok.upos, "_",
                feats_to_str(tok.feats), str(tok.head), tok.deprel, "_", "_",
            ]))
        out.append("")
    return "\n".join(out) + ("\n" if out else "")


def write_conllu_file(path: str | Path, sentences: Iterable[Sentence]) -> None:
    Path(path).write_text(write_conllu(sentences), encoding="utf-8")
