"""Candidate mining: fixture vectors, one inline vector per rejection
reason, check ordering, and the instance/rejection partition."""

from __future__ import annotations

import pytest

from agreement_probe.conllu import Sentence, Token, validate_sentence
from agreement_probe.controls import Inflector
from agreement_probe.extraction import (
    REJECTION_REASONS,
    Vocabulary,
    base_deprel,
    build_vocabulary,
    extract_instances,
    other_number,
    validate_instance,
)


def relcl_sentence(tokens) -> Sentence:
    validate_sentence(list(tokens))
    return Sentence(tuple(tokens))


def base_tokens() -> list[Token]:
    """Les offres que il a acceptées . (minimal extractable shape)"""
    return [
        Token(1, "les", "le", "DET",
              {"Definite": "Def", "Number": "Plur", "PronType": "Art"}, 2, "det"),
        Token(2, "offres", "offre", "NOUN", {"Gender": "Fem", "Number": "Plur"}, 0, "root"),
        Token(3, "que", "que", "PRON", {"PronType": "Rel"}, 6, "obj"),
        Token(4, "il", "il", "PRON",
              {"Gender": "Masc", "Number": "Sing", "Person": "3", "PronType": "Prs"}, 6, "nsubj"),
        Token(5, "a", "avoir", "AUX",
              {"Mood": "Ind", "Number": "Sing", "Person": "3",
               "Tense": "Pres", "VerbForm": "Fin"}, 6, "aux:tense"),
        Token(6, "acceptées", "accepter", "VERB",
              {"Gender": "Fem", "Number": "Plur", "Tense": "Past", "VerbForm": "Part"},
              2, "acl:relcl"),
        Token(7, ".", ".", "PUNCT", {}, 2, "punct"),
    ]


def extract_one(tokens, vocab=None, lenient_relcl=False):
    return extract_instances([relcl_sentence(tokens)], Inflector(), vocab, lenient_relcl)


def only_rejection(tokens, vocab=None):
    instances, rejections = extract_one(tokens, vocab)
    assert not instances
    (rejection,) = rejections
    return rejection


def test_base_shape_extracts():
    instances, rejections = extract_one(base_tokens())
    assert not rejections
    (instance,) = instances
    assert (instance.antecedent_idx, instance.pronoun_idx,
            instance.auxiliary_idx, instance.target_idx) == (2, 3, 5, 6)
    assert instance.target_number == "Plur"
    assert instance.target_gender == "Fem"
    assert (instance.form_sing, instance.form_plur) == ("acceptée", "acceptées")
    assert instance.correct_form == "acceptées"
    assert instance.distance == 3
    assert instance.prefix_forms == ("les", "offres", "que", "il", "a")
    validate_instance(instance)


def test_fixture_vectors(vector_sentences):
    instances, rejections = extract_instances(vector_sentences, Inflector())
    assert [i.sentence.sent_id for i in instances] == ["fig1-2", "fig3-3"]
    assert [(r.sentence.sent_id, r.reason) for r in rejections] == [
        ("fig3-1", "long_distance"),
        ("fig3-2", "coordinated_antecedent"),
    ]


def test_lexicon_corpus_extraction(lex_extraction):
    instances, rejections = lex_extraction
    assert len(instances) == 10
    assert [(r.sentence.sent_id, r.reason) for r in rejections] == [
        ("lex-24", "uninflectable"),
    ]


def test_long_distance_crossing_xcomp():
    toks = [
        Token(1, "les", "le", "DET", {"Number": "Plur"}, 2, "det"),
        Token(2, "offres", "offre", "NOUN", {"Gender": "Fem", "Number": "Plur"}, 0, "root"),
        Token(3, "que", "que", "PRON", {"PronType": "Rel"}, 7, "obj"),
        Token(4, "il", "il", "PRON", {"Number": "Sing"}, 6, "nsubj"),
        Token(5, "a", "avoir", "AUX", {"Number": "Sing"}, 6, "aux:tense"),
        Token(6, "voulu", "vouloir", "VERB",
              {"Gender": "Masc", "Number": "Sing", "Tense": "Past", "VerbForm": "Part"},
              2, "acl:relcl"),
        Token(7, "accepter", "accepter", "VERB", {"VerbForm": "Inf"}, 6, "xcomp"),
        Token(8, ".", ".", "PUNCT", {}, 2, "punct"),
    ]
    rejection = only_rejection(toks)
    assert rejection.reason == "long_distance"
    assert rejection.target_idx == 7


def test_antecedent_not_nominal():
    toks = base_tokens()
    toks[1] = toks[1].with_(form="celles", lemma="celui", upos="PRON")
    rejection = only_rejection(toks)
    assert rejection.reason == "antecedent_not_nominal"
    assert "celles" in rejection.detail


def test_coordinated_antecedent_conj_child():
    toks = base_tokens()
    toks.insert(6, Token(7, "lettres", "lettre", "NOUN",
                         {"Gender": "Fem", "Number": "Plur"}, 2, "conj"))
    toks = toks[:7] + [toks[7].with_(id=8, head=2)]
    toks[5] = toks[5].with_(head=2)
    rejection = only_rejection(toks)
    assert rejection.reason == "coordinated_antecedent"


def test_coordinated_antecedent_conj_head():
    # relative clause hangs off the second conjunct itself
    toks = [
        Token(1, "lettres", "lettre", "NOUN", {"Gender": "Fem", "Number": "Plur"}, 0, "root"),
        Token(2, "et", "et", "CCONJ", {}, 3, "cc"),
        Token(3, "offres", "offre", "NOUN", {"Gender": "Fem", "Number": "Plur"}, 1, "conj"),
        Token(4, "que", "que", "PRON", {"PronType": "Rel"}, 7, "obj"),
        Token(5, "il", "il", "PRON", {"Number": "Sing"}, 7, "nsubj"),
        Token(6, "a", "avoir", "AUX", {"Number": "Sing"}, 7, "aux:tense"),
        Token(7, "acceptées", "accepter", "VERB",
              {"Gender": "Fem", "Number": "Plur", "Tense": "Past", "VerbForm": "Part"},
              3, "acl:relcl"),
    ]
    rejection = only_rejection(toks)
    assert rejection.reason == "coordinated_antecedent"


def test_no_avoir_aux_on_etre():
    toks = base_tokens()
    toks[4] = toks[4].with_(form="sont", lemma="être")
    assert only_rejection(toks).reason == "no_avoir_aux"


def test_no_avoir_aux_when_aux_arc_missing():
    toks = base_tokens()
    toks[4] = toks[4].with_(deprel="advmod")
    assert only_rejection(toks).reason == "no_avoir_aux"


def test_malformed_order_pronoun_after_participle():
    toks = [
        Token(1, "les", "le", "DET", {"Number": "Plur"}, 2, "det"),
        Token(2, "offres", "offre", "NOUN", {"Gender": "Fem", "Number": "Plur"}, 0, "root"),
        Token(3, "il", "il", "PRON", {"Number": "Sing"}, 5, "nsubj"),
        Token(4, "a", "avoir", "AUX", {"Number": "Sing"}, 5, "aux:tense"),
        Token(5, "acceptées", "accepter", "VERB",
              {"Gender": "Fem", "Number": "Plur", "Tense": "Past", "VerbForm": "Part"},
              2, "acl:relcl"),
        Token(6, "que", "que", "PRON", {"PronType": "Rel"}, 5, "obj"),
    ]
    assert only_rejection(toks).reason == "malformed_order"


@pytest.mark.parametrize(
    "mutate",
    [
        lambda t: t.with_(feats={**t.feats, "Number": "Sing"}, form="acceptée"),
        lambda t: t.with_(feats={k: v for k, v in t.feats.items() if k != "Gender"}),
        lambda t: t.with_(feats={**t.feats, "Gender": "Masc"}, form="acceptés"),
    ],
    ids=["number-differs", "gender-missing", "gender-differs"],
)
def test_agreement_mismatch_on_target(mutate):
    toks = base_tokens()
    toks[5] = mutate(toks[5])
    assert only_rejection(toks).reason == "agreement_mismatch"


def test_agreement_mismatch_on_unnumbered_antecedent():
    toks = base_tokens()
    toks[1] = toks[1].with_(feats={"Gender": "Fem"})
    assert only_rejection(toks).reason == "agreement_mismatch"


def test_out_of_vocabulary_inside_window():
    vocab = Vocabulary(["offres", "que", "a", "acceptées"])  # "il" missing
    assert only_rejection(base_tokens(), vocab).reason == "out_of_vocabulary"


def test_vocabulary_window_excludes_outside_tokens():
    # forms before the antecedent and after the participle don't matter
    vocab = Vocabulary(["offres", "que", "il", "a", "acceptées"])  # no "les", no "."
    instances, rejections = extract_one(base_tokens(), vocab)
    assert len(instances) == 1 and not rejections


def test_uninflectable_sigmatic_participle():
    toks = [
        Token(1, "le", "le", "DET", {"Number": "Sing"}, 2, "det"),
        Token(2, "risque", "risque", "NOUN", {"Gender": "Masc", "Number": "Sing"}, 0, "root"),
        Token(3, "que", "que", "PRON", {"PronType": "Rel"}, 6, "obj"),
        Token(4, "il", "il", "PRON", {"Number": "Sing"}, 6, "nsubj"),
        Token(5, "a", "avoir", "AUX", {"Number": "Sing"}, 6, "aux:tense"),
        Token(6, "pris", "prendre", "VERB",
              {"Gender": "Masc", "Number": "Sing", "Tense": "Past", "VerbForm": "Part"},
              2, "acl:relcl"),
    ]
    rejection = only_rejection(toks)
    assert rejection.reason == "uninflectable"
    assert "pris" in rejection.detail


def test_check_order_mismatch_before_vocab():
    toks = base_tokens()
    toks[5] = toks[5].with_(feats={**toks[5].feats, "Number": "Sing"}, form="acceptée")
    vocab = Vocabulary(["offres"])  # nearly everything is OOV too
    assert only_rejection(toks, vocab).reason == "agreement_mismatch"


def test_silent_skip_without_relative_clause():
    toks = [
        Token(1, "Que", "que", "PRON", {"PronType": "Int"}, 2, "obj"),
        Token(2, "veut", "vouloir", "VERB", {"Number": "Sing"}, 0, "root"),
        Token(3, "il", "il", "PRON", {"Number": "Sing"}, 2, "nsubj"),
    ]
    instances, rejections = extract_one(toks)
    assert not instances and not rejections


def test_silent_skip_non_verb_target():
    toks = base_tokens()
    toks[5] = toks[5].with_(upos="AUX")
    instances, rejections = extract_one(toks)
    assert not instances and not rejections


def test_lenient_relcl_accepts_bare_acl():
    toks = base_tokens()
    toks[5] = toks[5].with_(deprel="acl")
    strict_instances, strict_rejections = extract_one(toks)
    assert not strict_instances and not strict_rejections
    instances, rejections = extract_one(toks, lenient_relcl=True)
    assert len(instances) == 1 and not rejections


def test_partition_is_exhaustive_and_valid(synth_bundle, lexicon_sentences, inflector):
    records, _, corpus = synth_bundle
    instances, rejections = extract_instances(lexicon_sentences, inflector)
    for instance in instances + [r.instance for r in records[:50]]:
        validate_instance(instance)
        assert instance.target.upos == "VERB"
        assert instance.sentence.token(instance.pronoun_idx).lemma == "que"
    assert all(r.reason in REJECTION_REASONS for r in rejections)


def test_base_deprel_and_other_number():
    assert base_deprel("aux:tense") == "aux"
    assert base_deprel("obj") == "obj"
    assert other_number("Sing") == "Plur"
    assert other_number("Plur") == "Sing"
    with pytest.raises(ValueError):
        other_number("Dual")


def test_validate_instance_rejects_short_distance():
    # The ordering constraints allow distance 1 only when pronoun and
    # auxiliary indices collide; the distance check still catches it.
    toks = [
        Token(1, "offres", "offre", "NOUN", {"Gender": "Fem", "Number": "Plur"}, 0, "root"),
        Token(2, "que", "que", "PRON", {"PronType": "Rel"}, 3, "obj"),
        Token(3, "acceptées", "accepter", "VERB",
              {"Gender": "Fem", "Number": "Plur", "Tense": "Past", "VerbForm": "Part"},
              1, "acl:relcl"),
    ]
    from agreement_probe.extraction import AgreementInstance

    instance = AgreementInstance(
        sentence=relcl_sentence(toks), antecedent_idx=1, pronoun_idx=2,
        auxiliary_idx=2, target_idx=3, target_number="Plur", target_gender="Fem",
        form_sing="acceptée", form_plur="acceptées",
    )
    with pytest.raises(ValueError, match="distance"):
        validate_instance(instance)


def test_vocabulary_basics(tmp_path):
    vocab = Vocabulary(["x", "y", "x", "z"])
    assert vocab.forms == ("x", "y", "z")
    assert "y" in vocab and "w" not in vocab
    assert len(vocab) == 3
    path = tmp_path / "vocab.txt"
    vocab.save(path)
    assert Vocabulary.load(path) == vocab


def test_build_vocabulary_ranking_and_unk():
    corpus = ["b", "b", "a", "a", "c", "<unk>", "<unk>", "<unk>"]
    vocab = build_vocabulary(corpus, 2)
    assert vocab.forms == ("b", "a")  # tie between a/b broken by first appearance
    assert build_vocabulary(corpus, 10).forms == ("b", "a", "c")
    with pytest.raises(ValueError):
        build_vocabulary(corpus, 0)
