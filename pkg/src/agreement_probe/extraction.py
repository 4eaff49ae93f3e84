"""Mining object/past-participle agreement contexts from parsed French.

The construction of interest is a relative clause headed by *que* whose
verb is a past participle with auxiliary *avoir*: "les offres que les
directeurs ont acceptées".  In that configuration the participle agrees
in number (and gender) with the antecedent of *que*, so a singular and a
plural form of the participle make a minimal pair whose correct member
is decided by material arbitrarily far to the left.

A candidate is any VERB token governing an ``obj`` pronoun with lemma
*que* inside a relative clause.  Candidates are either turned into
:class:`AgreementInstance` values or rejected with a reason; exactly one
of the two happens per candidate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

from .conllu import Sentence, Token

if TYPE_CHECKING:
    from .controls import Inflector

NOMINAL_UPOS = ("NOUN", "PROPN")
AVOIR_DEPRELS = ("aux", "aux:tense")
CLAUSE_DEPRELS = ("ccomp", "xcomp")

# Rejection reasons, in the order the checks run.
REJECTION_REASONS = (
    "long_distance",
    "antecedent_not_nominal",
    "coordinated_antecedent",
    "no_avoir_aux",
    "malformed_order",
    "agreement_mismatch",
    "out_of_vocabulary",
    "uninflectable",
)


def base_deprel(deprel: str) -> str:
    return deprel.split(":", 1)[0]


def other_number(number: str) -> str:
    if number == "Sing":
        return "Plur"
    if number == "Plur":
        return "Sing"
    raise ValueError(f"not a number value: {number!r}")


@dataclass(frozen=True)
class AgreementInstance:
    """One test item: a sentence with a marked antecedent/pronoun/aux/
    participle configuration plus the two candidate participle forms.

    Indices are 1-based token ids into `sentence`.
    """

    sentence: Sentence
    antecedent_idx: int
    pronoun_idx: int
    auxiliary_idx: int
    target_idx: int
    target_number: str
    target_gender: str
    form_sing: str
    form_plur: str

    @property
    def prefix(self) -> tuple[Token, ...]:
        """Everything strictly before the target participle."""
        return self.sentence.tokens[: self.target_idx - 1]

    @property
    def distance(self) -> int:
        """Tokens strictly between antecedent and target."""
        return self.target_idx - self.antecedent_idx - 1

    @property
    def antecedent(self) -> Token:
        return self.sentence.token(self.antecedent_idx)

    @property
    def target(self) -> Token:
        return self.sentence.token(self.target_idx)

    @property
    def correct_form(self) -> str:
        return self.form_sing if self.target_number == "Sing" else self.form_plur

    @property
    def prefix_forms(self) -> tuple[str, ...]:
        return tuple(t.form for t in self.prefix)


def validate_instance(instance: AgreementInstance) -> None:
    """Raise ValueError unless the cross-field invariants hold."""
    sent = instance.sentence
    n = len(sent)
    for name in ("antecedent_idx", "pronoun_idx", "auxiliary_idx", "target_idx"):
        idx = getattr(instance, name)
        if not 1 <= idx <= n:
            raise ValueError(f"{name}={idx} out of range 1..{n}")
    if not (instance.antecedent_idx < instance.pronoun_idx < instance.target_idx):
        raise ValueError("expected antecedent < pronoun < target order")
    if not (instance.antecedent_idx < instance.auxiliary_idx < instance.target_idx):
        raise ValueError("expected antecedent < auxiliary < target order")
    if instance.target_number not in ("Sing", "Plur"):
        raise ValueError(f"bad target_number {instance.target_number!r}")
    if instance.form_sing == instance.form_plur:
        raise ValueError("candidate forms must differ")
    antecedent = instance.antecedent
    target = instance.target
    if antecedent.number != instance.target_number:
        raise ValueError("antecedent Number does not match target_number")
    if target.number != instance.target_number:
        raise ValueError("target Number does not match target_number")
    expected = instance.form_sing if instance.target_number == "Sing" else instance.form_plur
    if target.form != expected:
        raise ValueError("target form does not match the candidate for its number")
    if instance.distance < 2:
        raise ValueError(f"distance {instance.distance} < 2")


@dataclass(frozen=True)
class Rejection:
    sentence: Sentence
    target_idx: int
    reason: str
    detail: str = ""


class Vocabulary:
    """Frequency-ranked form inventory with a reserved unknown symbol."""

    UNK = "<unk>"

    def __init__(self, forms: Iterable[str]):
        self.forms: tuple[str, ...] = tuple(dict.fromkeys(forms))
        self._members = frozenset(self.forms)

    def __contains__(self, form: str) -> bool:
        return form in self._members

    def __len__(self) -> int:
        return len(self.forms)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self.forms == other.forms

    def save(self, path) -> None:
        from pathlib import Path

        Path(path).write_text("".join(f"{f}\n" for f in self.forms), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        from pathlib import Path

        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(line for line in lines if line)


def build_vocabulary(corpus: Iterable[str], size_limit: int) -> Vocabulary:
    """Keep the `size_limit` most frequent forms; ties break toward the
    form seen first.  The literal "<unk>" is reserved and never ranked."""
    if size_limit < 1:
        raise ValueError("size_limit must be positive")
    counts: dict[str, int] = {}
    for form in corpus:
        if form == Vocabulary.UNK:
            continue
        counts[form] = counts.get(form, 0) + 1
    ranked = sorted(counts, key=counts.__getitem__, reverse=True)  # stable: first seen wins ties
    return Vocabulary(ranked[:size_limit])


def _relative_clause_head(sentence: Sentence, verb: Token,
                          lenient_relcl: bool) -> tuple[Token | None, bool]:
    """Walk head links up from `verb` to the first relative-clause arc.

    Returns (clause head, crossed_clause_boundary).  The head is None when
    no relative-clause arc is found before the root.
    """

    def is_relcl(deprel: str) -> bool:
        if deprel == "acl:relcl":
            return True
        return lenient_relcl and base_deprel(deprel) == "acl"

    crossed = False
    node = verb
    while node.head != 0:
        if is_relcl(node.deprel):
            return sentence.token(node.head), crossed
        if base_deprel(node.deprel) in CLAUSE_DEPRELS:
            crossed = True
        node = sentence.token(node.head)
    return None, crossed


def _examine_candidate(
    sentence: Sentence,
    verb: Token,
    pronoun: Token,
    antecedent: Token,
    crossed: bool,
    inflector: "Inflector",
    vocab: Vocabulary | None,
) -> AgreementInstance | Rejection:
    def reject(reason: str, detail: str = "") -> Rejection:
        return Rejection(sentence, verb.id, reason, detail)

    if crossed:
        return reject("long_distance", "clausal boundary between pronoun and participle")
    if antecedent.upos not in NOMINAL_UPOS:
        return reject("antecedent_not_nominal", f"antecedent {antecedent.form!r} is {antecedent.upos}")
    if base_deprel(antecedent.deprel) == "conj" or any(
        base_deprel(t.deprel) == "conj" and t.head == antecedent.id for t in sentence
    ):
        return reject("coordinated_antecedent", f"conjunction at antecedent {antecedent.form!r}")
    auxes = [
        t for t in sentence
        if t.head == verb.id and t.deprel in AVOIR_DEPRELS
        and t.lemma == "avoir" and t.id < verb.id
    ]
    if not auxes:
        return reject("no_avoir_aux", "no preceding avoir auxiliary on the participle")
    aux = auxes[-1]  # closest to the participle
    if not (antecedent.id < pronoun.id < verb.id and antecedent.id < aux.id):
        return reject("malformed_order", "antecedent/pronoun/auxiliary/participle out of order")
    number = antecedent.number
    gender = antecedent.gender
    if (
        number is None or gender is None
        or verb.number != number or verb.gender != gender
    ):
        return reject("agreement_mismatch", "antecedent and participle must both mark the same Number and Gender")
    if vocab is not None:
        for tok in sentence.tokens[antecedent.id - 1 : verb.id]:
            if tok.form not in vocab:
                return reject("out_of_vocabulary", f"form {tok.form!r} not in vocabulary")
    other_form = inflector.inflect(verb.form, verb.lemma, verb.upos, verb.feats, other_number(number))
    if other_form is None or other_form == verb.form:
        return reject("uninflectable", f"no distinct {other_number(number)} form for {verb.form!r}")
    form_sing, form_plur = (
        (verb.form, other_form) if number == "Sing" else (other_form, verb.form)
    )
    instance = AgreementInstance(
        sentence=sentence,
        antecedent_idx=antecedent.id,
        pronoun_idx=pronoun.id,
        auxiliary_idx=aux.id,
        target_idx=verb.id,
        target_number=number,
        target_gender=gender,
        form_sing=form_sing,
        form_plur=form_plur,
    )
    validate_instance(instance)
    return instance


def extract_instances(
    sentences: Iterable[Sentence],
    inflector: "Inflector",
    vocab: Vocabulary | None = None,
    lenient_relcl: bool = False,
) -> tuple[list[AgreementInstance], list[Rejection]]:
    """Scan sentences for candidates and split them into instances and
    rejections.  Order follows the input; the result is deterministic."""
    instances: list[AgreementInstance] = []
    rejections: list[Rejection] = []
    for sentence in sentences:
        for verb in sentence:
            if verb.upos != "VERB":
                continue
            pronouns = [
                t for t in sentence
                if t.head == verb.id and t.deprel == "obj"
                and t.upos == "PRON" and t.lemma == "que"
            ]
            if not pronouns:
                continue
            pronoun = pronouns[0]
            antecedent, crossed = _relative_clause_head(sentence, verb, lenient_relcl)
            if antecedent is None:
                continue  # not a relative clause at all
            outcome = _examine_candidate(sentence, verb, pronoun, antecedent, crossed, inflector, vocab)
            if isinstance(outcome, Rejection):
                rejections.append(outcome)
            else:
                instances.append(outcome)
    return instances, rejections
