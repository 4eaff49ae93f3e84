"""Control variants of agreement instances: nonce, mirror, permuted.

Nonce variants re-sample the content words of a sentence from a lexicon
while keeping part of speech and the full morphological signature of
every slot, so the syntax stays intact but the lexical statistics are
scrambled.  Mirror variants invert the number of the antecedent phrase
and of the target participle, turning every singular-labelled instance
into a plural one and vice versa.  Permuted variants shuffle the prefix
token order while remapping the dependency tree, destroying linear
order but nothing else.

Substitutions and inflections are driven by a :class:`Lexicon` built
from a treebank.  Where the lexicon has no answer, a closed-class
determiner/pronoun table and a last-resort suffix rule step in.  After
editing, determiners adjacent to an edited token are re-elided
(*le/la* + vowel-initial word becomes *l'*, *l'* + consonant-initial
word becomes *le/la*); other French sandhi (e.g. *que/qu'*) is left
as-is.
"""

from __future__ import annotations

import hashlib
import logging
import random
from dataclasses import replace
from typing import Iterable, Sequence

from .conllu import Sentence, Token, feats_to_str
from .extraction import AgreementInstance, other_number, validate_instance

log = logging.getLogger(__name__)

CONTENT_UPOS = ("NOUN", "PROPN", "VERB", "ADJ", "ADV")

# First-character test for elision; aspirated vs. mute h is not modelled.
_VOWELS = set("aàâäeéèêëiîïoôöuùûüyœ")

_CLOSED_TO_PLUR = {
    "le": "les", "la": "les", "l'": "les",
    "un": "des", "une": "des",
    "ce": "ces", "cet": "ces", "cette": "ces",
    "mon": "mes", "ma": "mes", "ton": "tes", "ta": "tes", "son": "ses", "sa": "ses",
    "notre": "nos", "votre": "vos", "leur": "leurs",
    "il": "ils", "elle": "elles",
}

# Plural-to-singular needs a gender; default is Masc when none is known.
_CLOSED_TO_SING = {
    "les": {"Masc": "le", "Fem": "la"},
    "des": {"Masc": "un", "Fem": "une"},
    "ces": {"Masc": "ce", "Fem": "cette"},
    "mes": {"Masc": "mon", "Fem": "ma"},
    "tes": {"Masc": "ton", "Fem": "ta"},
    "ses": {"Masc": "son", "Fem": "sa"},
    "nos": {"Masc": "notre", "Fem": "notre"},
    "vos": {"Masc": "votre", "Fem": "votre"},
    "leurs": {"Masc": "leur", "Fem": "leur"},
    "ils": {"Masc": "il", "Fem": "il"},
    "elles": {"Masc": "elle", "Fem": "elle"},
}


def derive_seed(seed: int, *parts) -> int:
    """Stable sub-seed derivation; avoids correlated RNG streams."""
    payload = "\x1f".join([str(seed), *(str(p) for p in parts)])
    digest = hashlib.sha256(payload.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def fold_case(form: str, upos: str) -> str:
    """Lowercase the first character, except for proper nouns."""
    if upos == "PROPN" or not form:
        return form
    return form[0].lower() + form[1:]


def _match_case(new_form: str, like: str) -> str:
    if like[:1].isupper() and new_form[:1].islower():
        return new_form[0].upper() + new_form[1:]
    return new_form


def starts_with_vowel(form: str) -> bool:
    return bool(form) and form[0].lower() in _VOWELS


def detokenize(forms: Iterable[str]) -> str:
    """Rough surface string for generated sentences: space-joined, with
    apostrophe clitics reattached and no space before punctuation."""
    text = " ".join(forms)
    text = text.replace("' ", "'")
    for punct in (".", ",", "!", "?", ";", ":"):
        text = text.replace(f" {punct}", punct)
    return text


class Lexicon:
    """Form inventory indexed by (upos, morphological signature).

    Signatures are the canonical feature strings of
    :func:`conllu.feats_to_str`.  Non-PROPN forms are case-folded on
    their first character, so "Les" and "les" count as one entry.
    Besides the pools the lexicon tracks, per form, its most frequent
    lemma, whether the form is attested under more than one part of
    speech, and which verb lemmas are seen governing a direct object.
    """

    def __init__(self):
        self._pools: dict[tuple[str, str], list[str]] = {}
        self._form_upos: dict[str, set[str]] = {}
        self._form_lemmas: dict[tuple[str, str, str], dict[str, int]] = {}
        self._lemma_forms: dict[tuple[str, str, str], dict[str, int]] = {}
        self._transitive: set[str] = set()

    def observe(self, token: Token) -> None:
        form = fold_case(token.form, token.upos)
        if not form:
            return
        sig = feats_to_str(token.feats)
        pool = self._pools.setdefault((token.upos, sig), [])
        if form not in pool:
            pool.append(form)
        self._form_upos.setdefault(form, set()).add(token.upos)
        lemmas = self._form_lemmas.setdefault((token.upos, sig, form), {})
        lemmas[token.lemma] = lemmas.get(token.lemma, 0) + 1
        forms = self._lemma_forms.setdefault((token.lemma, token.upos, sig), {})
        forms[form] = forms.get(form, 0) + 1

    def observe_sentence(self, sentence: Sentence) -> None:
        for token in sentence:
            self.observe(token)
        for token in sentence:
            if token.deprel.split(":", 1)[0] == "obj" and token.head:
                head = sentence.token(token.head)
                if head.upos == "VERB":
                    self._transitive.add(head.lemma)

    def pos_ambiguous(self, form: str) -> bool:
        return len(self._form_upos.get(form, ())) > 1

    def pool(self, upos: str, signature: str, unambiguous_only: bool = True) -> list[str]:
        forms = self._pools.get((upos, signature), [])
        if unambiguous_only:
            return [f for f in forms if not self.pos_ambiguous(f)]
        return list(forms)

    def primary_lemma(self, upos: str, signature: str, form: str) -> str | None:
        return _argmax_first(self._form_lemmas.get((upos, signature, form)))

    def inflected_form(self, lemma: str, upos: str, signature: str) -> str | None:
        return _argmax_first(self._lemma_forms.get((lemma, upos, signature)))

    def is_transitive(self, lemma: str) -> bool:
        return lemma in self._transitive


def _argmax_first(counts: dict[str, int] | None) -> str | None:
    """Key with the highest count; insertion order (first seen) breaks ties."""
    if not counts:
        return None
    best, best_count = None, -1
    for key, count in counts.items():
        if count > best_count:
            best, best_count = key, count
    return best


def build_lexicon(sentences: Iterable[Sentence]) -> Lexicon:
    lexicon = Lexicon()
    for sentence in sentences:
        lexicon.observe_sentence(sentence)
    return lexicon


def inflect_number(
    form: str,
    lemma: str,
    upos: str,
    feats: dict[str, str],
    target_number: str,
    lexicon: Lexicon | None = None,
) -> str | None:
    """Best-effort re-inflection of `form` to `target_number`.

    Tries, in order: the form itself (already the right number), a
    lexicon lookup under the same signature with Number swapped, the
    closed-class table for determiners and pronouns, and finally the
    regular French suffix rule (+s for plural, strip final -s for
    singular).  Returns None when none of these produce a form.
    """
    if target_number not in ("Sing", "Plur"):
        raise ValueError(f"bad target number {target_number!r}")
    if not form:
        return None
    if feats.get("Number") == target_number:
        return form
    if lexicon is not None and lemma:
        signature = feats_to_str({**feats, "Number": target_number})
        hit = lexicon.inflected_form(lemma, upos, signature)
        if hit is not None:
            return _match_case(hit, form)
    if upos in ("DET", "PRON"):
        low = form.lower()
        if target_number == "Plur":
            hit = _CLOSED_TO_PLUR.get(low)
        else:
            by_gender = _CLOSED_TO_SING.get(low)
            hit = by_gender.get(feats.get("Gender", "Masc"), by_gender["Masc"]) if by_gender else None
        if hit is not None:
            return _match_case(hit, form)
    if target_number == "Plur":
        return form if form[-1] in "sxz" else form + "s"
    if form.endswith("s") and len(form) > 1:
        return form[:-1]
    return None


class Inflector:
    """inflect_number with a lexicon baked in (which may be None)."""

    def __init__(self, lexicon: Lexicon | None = None):
        self.lexicon = lexicon

    def inflect(self, form: str, lemma: str, upos: str, feats: dict[str, str],
                target_number: str) -> str | None:
        return inflect_number(form, lemma, upos, feats, target_number, self.lexicon)


def repair_elision(tokens: list[Token], changed_ids: set[int]) -> list[Token]:
    """Fix determiner elision around edited tokens, in place of the
    originals; returns a new list."""
    out = list(tokens)
    for i, tok in enumerate(out[:-1]):
        if tok.upos != "DET":
            continue
        nxt = out[i + 1]
        if tok.id not in changed_ids and nxt.id not in changed_ids:
            continue
        low = tok.form.lower()
        if low in ("le", "la") and starts_with_vowel(nxt.form):
            out[i] = tok.with_(form=_match_case("l'", tok.form))
        elif low == "l'" and not starts_with_vowel(nxt.form):
            gender = tok.gender or nxt.gender or "Masc"
            base = "la" if gender == "Fem" else "le"
            out[i] = tok.with_(form=_match_case(base, tok.form))
    return out


def _capitalize_first(tokens: list[Token]) -> list[Token]:
    first = tokens[0]
    if first.form[:1].islower():
        tokens = [first.with_(form=first.form[0].upper() + first.form[1:])] + tokens[1:]
    return tokens


def _rebuild(instance: AgreementInstance, tokens: list[Token],
             changed: set[int], **field_changes) -> AgreementInstance:
    tokens = repair_elision(tokens, changed)
    tokens = _capitalize_first(tokens)
    sentence = Sentence(
        tokens=tuple(tokens),
        sent_id=instance.sentence.sent_id,
        text=detokenize(t.form for t in tokens),
    )
    return replace(instance, sentence=sentence, **field_changes)


def _nonce_target_pool(lexicon: Lexicon, feats: dict[str, str],
                       target_number: str) -> list[str]:
    """Participle substitutes: transitive lemma, unambiguous form, and a
    derivable number counterpart distinct from the form itself."""
    signature = feats_to_str(feats)
    flip = other_number(target_number)
    pool = []
    for form in lexicon.pool("VERB", signature):
        lemma = lexicon.primary_lemma("VERB", signature, form)
        if lemma is None or not lexicon.is_transitive(lemma):
            continue
        counterpart = inflect_number(form, lemma, "VERB", feats, flip, lexicon)
        if counterpart is not None and counterpart != form:
            pool.append(form)
    return pool


def make_nonce(instance: AgreementInstance, lexicon: Lexicon, seed: int,
               variants: int = 3) -> list[AgreementInstance]:
    """Generate `variants` nonce versions of an instance.

    Every content word is replaced by a form drawn uniformly from the
    lexicon pool sharing its (upos, signature); pools are restricted to
    part-of-speech-unambiguous forms, and the pool for the target
    participle additionally to transitive, re-inflectable verbs.  Slots
    with an empty pool keep the original word.  Draws within one
    sentence avoid repeats while the pool allows.  Deterministic in
    (instance, seed).
    """
    results = []
    flip = other_number(instance.target_number)
    for variant in range(variants):
        rng = random.Random(derive_seed(seed, "nonce", variant))
        used: set[str] = set()
        changed: set[int] = set()
        new_tokens: list[Token] = []
        for tok in instance.sentence:
            if tok.upos not in CONTENT_UPOS:
                new_tokens.append(tok)
                continue
            signature = feats_to_str(tok.feats)
            if tok.id == instance.target_idx:
                pool = _nonce_target_pool(lexicon, tok.feats, instance.target_number)
            else:
                pool = lexicon.pool(tok.upos, signature)
            if not pool:
                log.debug("no substitutes for %r (%s %s); keeping original",
                          tok.form, tok.upos, signature)
                new_tokens.append(tok)
                continue
            fresh = [f for f in pool if f not in used]
            choice = rng.choice(fresh or pool)
            used.add(choice)
            lemma = lexicon.primary_lemma(tok.upos, signature, choice) or tok.lemma
            if choice != fold_case(tok.form, tok.upos):
                changed.add(tok.id)
            new_tokens.append(tok.with_(form=choice, lemma=lemma))
        target = new_tokens[instance.target_idx - 1]
        counterpart = inflect_number(target.form, target.lemma, target.upos,
                                     target.feats, flip, lexicon)
        if counterpart is None or counterpart == target.form:
            # Pool filtering guarantees this for substituted targets; an
            # unsubstitutable slot keeps the original, already-valid pair.
            counterpart = instance.form_plur if instance.target_number == "Sing" else instance.form_sing
        if instance.target_number == "Sing":
            form_sing, form_plur = target.form, counterpart
        else:
            form_sing, form_plur = counterpart, target.form
        nonce = _rebuild(instance, new_tokens, changed,
                         form_sing=form_sing, form_plur=form_plur)
        validate_instance(nonce)
        results.append(nonce)
    return results


def make_mirror(instance: AgreementInstance, lexicon: Lexicon) -> AgreementInstance | None:
    """Invert the number of the antecedent phrase and the target.

    The antecedent noun, its det/amod dependents, the relative pronoun
    (when it marks Number) and the target participle are re-inflected to
    the opposite number; the candidate pair keeps its two forms, which
    swap roles.  Returns None when any required re-inflection fails.
    """
    sentence = instance.sentence
    flip = other_number(instance.target_number)
    antecedent = instance.antecedent
    edits: dict[int, Token] = {}

    def flip_number(feats: dict[str, str]) -> dict[str, str]:
        return {**feats, "Number": flip}

    def invert(tok: Token) -> bool:
        lookup_feats = tok.feats
        if tok.upos == "DET" and "Gender" not in tok.feats and antecedent.gender:
            # plural determiners carry no Gender; borrow the noun's
            lookup_feats = {**tok.feats, "Gender": antecedent.gender}
        new_form = inflect_number(tok.form, tok.lemma, tok.upos, lookup_feats, flip, lexicon)
        if new_form is None:
            return False
        edits[tok.id] = tok.with_(form=new_form, feats=flip_number(tok.feats))
        return True

    if not invert(antecedent):
        return None
    for dep in sentence.children(antecedent.id):
        if dep.deprel.split(":", 1)[0] in ("det", "amod") and dep.number is not None:
            if not invert(dep):
                return None
    pronoun = sentence.token(instance.pronoun_idx)
    if pronoun.number is not None and not invert(pronoun):
        return None
    target = instance.target
    new_target_form = instance.form_plur if flip == "Plur" else instance.form_sing
    edits[target.id] = target.with_(form=new_target_form, feats=flip_number(target.feats))

    new_tokens = [edits.get(tok.id, tok) for tok in sentence]
    mirror = _rebuild(instance, new_tokens, set(edits), target_number=flip)
    validate_instance(mirror)
    return mirror


def make_permuted(instance: AgreementInstance, seed: int) -> AgreementInstance:
    """Shuffle the prefix tokens, remapping heads and instance indices so
    the dependency tree survives relabelling.  Tokens from the target
    onward stay in place.  Word forms are left untouched."""
    rng = random.Random(derive_seed(seed, "permuted"))
    sentence = instance.sentence
    k = instance.target_idx - 1
    order = list(range(1, k + 1))
    rng.shuffle(order)
    id_map = {old: new for new, old in enumerate(order, start=1)}

    def remap(head: int) -> int:
        return id_map.get(head, head) if head else 0

    new_tokens = [
        sentence.token(old).with_(id=new, head=remap(sentence.token(old).head))
        for new, old in enumerate(order, start=1)
    ]
    new_tokens.extend(tok.with_(head=remap(tok.head)) for tok in sentence.tokens[k:])
    shuffled = Sentence(
        tokens=tuple(new_tokens),
        sent_id=sentence.sent_id,
        text=detokenize(t.form for t in new_tokens),
    )
    return replace(
        instance,
        sentence=shuffled,
        antecedent_idx=id_map[instance.antecedent_idx],
        pronoun_idx=id_map[instance.pronoun_idx],
        auxiliary_idx=id_map[instance.auxiliary_idx],
    )


def nonce_batch(instances: Sequence[AgreementInstance], lexicon: Lexicon,
                seed: int, variants: int = 3) -> list[list[AgreementInstance]]:
    return [make_nonce(inst, lexicon, derive_seed(seed, i), variants)
            for i, inst in enumerate(instances)]


def mirror_batch(instances: Sequence[AgreementInstance],
                 lexicon: Lexicon) -> list[AgreementInstance | None]:
    """Mirrors aligned with the input; failures stay as None."""
    return [make_mirror(inst, lexicon) for inst in instances]


def permuted_batch(instances: Sequence[AgreementInstance], seed: int) -> list[AgreementInstance]:
    return [make_permuted(inst, derive_seed(seed, i)) for i, inst in enumerate(instances)]
