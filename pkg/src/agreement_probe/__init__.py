"""Probe French object/past-participle number agreement in language models.

The package mines test instances from CoNLL-U treebanks, stratifies
them by how many shallow surface heuristics solve them, generates
nonce, mirror and permuted control variants, and evaluates any scorer
that can assign log probabilities to a singular/plural minimal pair,
in-process or over a line-oriented JSON protocol.
"""

__version__ = "0.1.0"

from .conllu import (
    ConlluError,
    Sentence,
    Token,
    parse_conllu,
    parse_conllu_file,
    write_conllu,
    write_conllu_file,
)
from .controls import (
    Inflector,
    Lexicon,
    build_lexicon,
    derive_seed,
    inflect_number,
    make_mirror,
    make_nonce,
    make_permuted,
    mirror_batch,
    nonce_batch,
    permuted_batch,
)
from .evaluation import (
    Cell,
    EvaluationReport,
    VariantReport,
    distance_bucket,
    evaluate,
    render_report,
    report_from_csv,
    report_from_json,
)
from .extraction import (
    AgreementInstance,
    Rejection,
    Vocabulary,
    build_vocabulary,
    extract_instances,
    validate_instance,
)
from .heuristics import (
    HEURISTICS,
    HeuristicProfile,
    heuristic_accuracy,
    profile,
)
from .records import (
    InstanceRecord,
    SchemaError,
    child_record,
    dump_records,
    load_records,
    original_records,
    read_records,
    stratify_records,
    write_records,
)
from .scoring import (
    PROTOCOL,
    ExternalScorer,
    HeuristicScorer,
    MajoritySingScorer,
    NgramScorer,
    OracleScorer,
    AntiOracleScorer,
    ScoreRequest,
    Scorer,
    ScorerError,
    ScorerProtocolError,
    ScorerVerdict,
    UniformScorer,
    score_candidates,
    score_sequence,
    train_ngram,
)
