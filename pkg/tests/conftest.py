"""Shared fixtures: parsed data files, a fixture lexicon, and a large
seeded synthetic corpus reused by the property suites."""

from __future__ import annotations

import pathlib

import pytest

from agreement_probe.conllu import parse_conllu_file
from agreement_probe.controls import Inflector, build_lexicon
from agreement_probe.extraction import extract_instances
from agreement_probe.records import original_records, stratify_records

from tests.synth import synth_records

DATA = pathlib.Path(__file__).parent / "data"
SYNTH_SEED = 20240817
SYNTH_SIZE = 1000


@pytest.fixture(scope="session")
def data_dir() -> pathlib.Path:
    return DATA


@pytest.fixture(scope="session")
def lexicon_sentences():
    return parse_conllu_file(DATA / "lexicon_corpus.conllu")


@pytest.fixture(scope="session")
def lexicon(lexicon_sentences):
    return build_lexicon(lexicon_sentences)


@pytest.fixture(scope="session")
def inflector(lexicon):
    return Inflector(lexicon)


@pytest.fixture(scope="session")
def appendix_sentences():
    return parse_conllu_file(DATA / "appendix_five.conllu")


@pytest.fixture(scope="session")
def appendix_instances(appendix_sentences, lexicon_sentences):
    inflector = Inflector(build_lexicon(appendix_sentences + lexicon_sentences))
    instances, rejections = extract_instances(appendix_sentences, inflector)
    assert not rejections
    return instances


@pytest.fixture(scope="session")
def vector_sentences():
    return parse_conllu_file(DATA / "extraction_vectors.conllu")


@pytest.fixture(scope="session")
def lex_extraction(lexicon_sentences, inflector):
    """(instances, rejections) over the lexicon corpus itself."""
    return extract_instances(lexicon_sentences, inflector)


@pytest.fixture(scope="session")
def synth_bundle():
    """(stratified records, lexicon, corpus) for the big synthetic set."""
    return synth_records(SYNTH_SIZE, SYNTH_SEED)


@pytest.fixture(scope="session")
def synth_recs(synth_bundle):
    return synth_bundle[0]


@pytest.fixture(scope="session")
def appendix_records(appendix_instances):
    return stratify_records(original_records(appendix_instances))
