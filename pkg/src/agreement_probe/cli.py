"""Command line pipeline: extract, stratify, controls, evaluate, report.

Stages communicate through files only, so any stage can be rerun or
swapped in isolation.  Every file-producing run also writes
``<output>.manifest.json`` recording tool version, configuration, seeds
and sha256 hashes of the inputs; reruns with identical inputs produce
byte-identical outputs and manifests (no timestamps anywhere).

Exit codes: 0 success, 1 usage error, 2 data error (unreadable or
inconsistent input), 3 scorer protocol error.  On a mid-run scorer
abort the partial report is still written, marked ``complete: false``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import shlex
import sys
from pathlib import Path

from . import __version__
from .conllu import ConlluError, parse_conllu_file
from .controls import build_lexicon, derive_seed, make_mirror, make_nonce, make_permuted, Inflector
from .evaluation import evaluate, render_report, report_from_json
from .extraction import Vocabulary, build_vocabulary, extract_instances
from .records import (
    SchemaError,
    child_record,
    dump_records,
    original_records,
    read_records,
    stratify_records,
)
from .scoring import (
    AntiOracleScorer,
    ExternalScorer,
    HeuristicScorer,
    MajoritySingScorer,
    OracleScorer,
    ScorerProtocolError,
    UniformScorer,
    train_ngram,
)

BUILTIN_SCORERS = ("oracle", "anti_oracle", "majority_sing", "uniform",
                   "ngram", "h1", "h2", "h3", "h4")

CONTROL_VARIANTS = ("nonce", "mirror", "permuted")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; this pipeline reserves 2 for
    # data errors, so route usage problems to exit code 1 instead.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise _UsageError(message)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def write_manifest(output: Path, inputs: list[Path], config: dict) -> None:
    manifest = {
        "schema_version": 1,
        "tool": {"name": "agreement-probe", "version": __version__},
        "inputs": {str(p): _sha256(p) for p in sorted(set(inputs))},
        "config": config,
        "output": output.name,
    }
    text = json.dumps(manifest, ensure_ascii=False, indent=2, sort_keys=True) + "\n"
    Path(str(output) + ".manifest.json").write_text(text, encoding="utf-8")


def _load_treebank(paths: list[Path], on_error: str):
    sentences = []
    skipped: list[ConlluError] = []
    for path in paths:
        sentences.extend(parse_conllu_file(path, on_error=on_error, errors=skipped))
    return sentences, skipped


def cmd_extract(args) -> int:
    treebanks = [Path(p) for p in args.treebank]
    sentences, skipped = _load_treebank(treebanks, args.on_error)
    if skipped:
        print(f"skipped {len(skipped)} malformed sentences", file=sys.stderr)

    inputs = list(treebanks)
    if args.lexicon_treebank:
        lex_path = Path(args.lexicon_treebank)
        lexicon_sentences, _ = _load_treebank([lex_path], args.on_error)
        inputs.append(lex_path)
    else:
        lexicon_sentences = sentences
    lexicon = build_lexicon(lexicon_sentences)

    vocab = None
    if args.vocab:
        vocab = Vocabulary.load(args.vocab)
        inputs.append(Path(args.vocab))
    elif args.vocab_corpus:
        corpus_path = Path(args.vocab_corpus)
        vocab = build_vocabulary(
            corpus_path.read_text(encoding="utf-8").split(), args.vocab_size)
        inputs.append(corpus_path)

    instances, rejections = extract_instances(
        sentences, Inflector(lexicon), vocab, lenient_relcl=args.lenient_relcl)
    records = original_records(instances)

    output = Path(args.output)
    output.write_text(dump_records(records), encoding="utf-8")
    config = {
        "command": "extract",
        "lenient_relcl": args.lenient_relcl,
        "on_error": args.on_error,
        "vocab_size": args.vocab_size if args.vocab_corpus else None,
    }
    write_manifest(output, inputs, config)

    if args.rejections:
        rej_path = Path(args.rejections)
        lines = [
            json.dumps({
                "schema_version": 1,
                "sent_id": r.sentence.sent_id,
                "target_idx": r.target_idx,
                "reason": r.reason,
                "detail": r.detail,
            }, ensure_ascii=False, sort_keys=True)
            for r in rejections
        ]
        rej_path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        write_manifest(rej_path, inputs, config)

    by_reason: dict[str, int] = {}
    for rejection in rejections:
        by_reason[rejection.reason] = by_reason.get(rejection.reason, 0) + 1
    singular = sum(1 for r in records if r.instance.target_number == "Sing")
    print(f"{len(sentences)} sentences, {len(records) + len(rejections)} candidates, "
          f"{len(records)} instances ({singular} Sing / {len(records) - singular} Plur), "
          f"{len(rejections)} rejected", file=sys.stderr)
    for reason, count in sorted(by_reason.items()):
        print(f"  rejected {reason}: {count}", file=sys.stderr)
    return 0


def cmd_stratify(args) -> int:
    records = read_records(args.instances)
    tie_break = "Sing" if args.h4_tie == "sing" else None
    stratified = stratify_records(records, tie_break)
    output = Path(args.output)
    output.write_text(dump_records(stratified), encoding="utf-8")
    write_manifest(output, [Path(args.instances)],
                   {"command": "stratify", "h4_tie": args.h4_tie})
    sizes: dict[int, int] = {}
    for record in stratified:
        sizes[record.profile.group] = sizes.get(record.profile.group, 0) + 1
    summary = ", ".join(f"group {g}: {sizes.get(g, 0)}" for g in range(4, -1, -1))
    print(f"{len(stratified)} instances; {summary}", file=sys.stderr)
    return 0


def cmd_controls(args) -> int:
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    parser = args.parser
    for variant in variants:
        if variant not in CONTROL_VARIANTS:
            parser.error(f"unknown variant {variant!r} "
                         f"(choose from {', '.join(CONTROL_VARIANTS)})")
    if not variants:
        parser.error("no variants requested")
    if args.seed is None and ("nonce" in variants or "permuted" in variants):
        parser.error("--seed is required for nonce and permuted variants")

    records = read_records(args.instances)
    inputs = [Path(args.instances)]
    if args.lexicon_treebank:
        lex_path = Path(args.lexicon_treebank)
        lexicon = build_lexicon(parse_conllu_file(lex_path))
        inputs.append(lex_path)
    else:
        # fall back to the instances' own sentences; pools will be thin
        lexicon = build_lexicon([r.instance.sentence for r in records])

    out_records = []
    mirror_failures = 0
    for i, record in enumerate(records):
        if "nonce" in variants:
            instance_seed = derive_seed(args.seed, i)
            for v, nonce in enumerate(
                    make_nonce(record.instance, lexicon, instance_seed, args.nonce_variants)):
                out_records.append(child_record(record, nonce, "nonce", f"nonce{v}", instance_seed))
        if "mirror" in variants:
            mirror = make_mirror(record.instance, lexicon)
            if mirror is None:
                mirror_failures += 1
            else:
                out_records.append(child_record(record, mirror, "mirror", "mirror"))
        if "permuted" in variants:
            instance_seed = derive_seed(args.seed, i)
            permuted = make_permuted(record.instance, instance_seed)
            out_records.append(child_record(record, permuted, "permuted", "permuted", instance_seed))

    output = Path(args.output)
    output.write_text(dump_records(out_records), encoding="utf-8")
    write_manifest(output, inputs, {
        "command": "controls",
        "variants": variants,
        "seed": args.seed,
        "nonce_variants": args.nonce_variants if "nonce" in variants else None,
    })
    print(f"{len(out_records)} control instances from {len(records)} originals"
          + (f"; {mirror_failures} mirror failures" if mirror_failures else ""),
          file=sys.stderr)
    return 0


def _build_scorer(args, parser):
    if args.scorer_command and args.scorer:
        parser.error("--scorer and --scorer-command are mutually exclusive")
    if args.scorer_command:
        command = shlex.split(args.scorer_command)
        return ExternalScorer(command, timeout=args.timeout, batch_size=args.batch_size)
    name = args.scorer
    if name is None:
        parser.error("one of --scorer or --scorer-command is required")
    if name == "oracle":
        return OracleScorer()
    if name == "anti_oracle":
        return AntiOracleScorer()
    if name == "majority_sing":
        return MajoritySingScorer()
    if name == "uniform":
        if args.vocab_size is None:
            parser.error("--vocab-size is required for the uniform scorer")
        return UniformScorer(args.vocab_size)
    if name in ("h1", "h2", "h3", "h4"):
        return HeuristicScorer(name)
    if name == "ngram":
        if not args.train:
            parser.error("--train is required for the ngram scorer")
        corpus = Path(args.train).read_text(encoding="utf-8").split()
        vocab = None
        if args.vocab:
            vocab = Vocabulary.load(args.vocab)
        elif args.vocab_size is not None:
            vocab = build_vocabulary(corpus, args.vocab_size)
        return train_ngram(corpus, args.order, args.alpha, vocab)
    parser.error(f"unknown scorer {name!r}")


def cmd_evaluate(args) -> int:
    records = []
    inputs = []
    for path in args.instances:
        records.extend(read_records(path))
        inputs.append(Path(path))
    scorer = _build_scorer(args, args.parser)
    if args.scorer_command:
        inputs_extra = []
        params = {"command": args.scorer_command, "timeout": args.timeout,
                  "batch_size": args.batch_size}
    else:
        inputs_extra = [Path(args.train)] if args.scorer == "ngram" and args.train else []
        params = {k: v for k, v in (
            ("scorer", args.scorer),
            ("train", args.train),
            ("order", args.order if args.scorer == "ngram" else None),
            ("alpha", args.alpha if args.scorer == "ngram" else None),
            ("vocab_size", args.vocab_size),
        ) if v is not None}
    try:
        report = evaluate(scorer, records, scorer_params=params)
    finally:
        scorer.close()
    output = Path(args.output)
    output.write_text(render_report(report, "json"), encoding="utf-8")
    write_manifest(output, inputs + inputs_extra,
                   {"command": "evaluate", "params": params})
    scored = sum(vr.overall.total for vr in report.variants.values())
    skipped = sum(sum(vr.skipped.values()) for vr in report.variants.values())
    print(f"scored {scored} instances, skipped {skipped}", file=sys.stderr)
    if not report.complete:
        print("run aborted by scorer protocol failure; partial report written",
              file=sys.stderr)
        return 3
    return 0


def cmd_report(args) -> int:
    report = report_from_json(Path(args.input).read_text(encoding="utf-8"))
    rendered = render_report(report, args.format)
    if args.output:
        output = Path(args.output)
        output.write_text(rendered, encoding="utf-8")
        write_manifest(output, [Path(args.input)],
                       {"command": "report", "format": args.format})
    else:
        sys.stdout.write(rendered)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="agreement-probe",
                     description="Object/past-participle agreement probe pipeline")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="mine instances from CoNLL-U treebanks")
    p.add_argument("--treebank", nargs="+", required=True, metavar="CONLLU")
    p.add_argument("--output", required=True, metavar="JSONL")
    p.add_argument("--rejections", metavar="JSONL", help="also write rejected candidates")
    p.add_argument("--vocab", metavar="TXT", help="vocabulary file, one form per line")
    p.add_argument("--vocab-corpus", metavar="TXT",
                   help="build the vocabulary from this tokenized corpus")
    p.add_argument("--vocab-size", type=int, default=50000)
    p.add_argument("--lexicon-treebank", metavar="CONLLU",
                   help="treebank for inflection lookups (default: the input)")
    p.add_argument("--lenient-relcl", action="store_true",
                   help="accept bare acl clauses as relatives")
    p.add_argument("--on-error", choices=("abort", "skip"), default="abort")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("stratify", help="attach heuristic profiles and difficulty groups")
    p.add_argument("--instances", required=True, metavar="JSONL")
    p.add_argument("--output", required=True, metavar="JSONL")
    p.add_argument("--h4-tie", choices=("sing", "abstain"), default="sing")
    p.set_defaults(func=cmd_stratify)

    p = sub.add_parser("controls", help="generate nonce/mirror/permuted variants")
    p.add_argument("--instances", required=True, metavar="JSONL")
    p.add_argument("--output", required=True, metavar="JSONL")
    p.add_argument("--variants", required=True,
                   help="comma list of nonce,mirror,permuted")
    p.add_argument("--seed", type=int)
    p.add_argument("--nonce-variants", type=int, default=3)
    p.add_argument("--lexicon-treebank", metavar="CONLLU")
    p.set_defaults(func=cmd_controls)

    p = sub.add_parser("evaluate", help="score instances and write a report")
    p.add_argument("--instances", nargs="+", required=True, metavar="JSONL")
    p.add_argument("--output", required=True, metavar="JSON")
    p.add_argument("--scorer", choices=BUILTIN_SCORERS)
    p.add_argument("--scorer-command", metavar="CMD",
                   help="external scorer command line (NDJSON protocol)")
    p.add_argument("--train", metavar="TXT", help="training corpus for --scorer ngram")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--vocab", metavar="TXT")
    p.add_argument("--vocab-size", type=int)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--batch-size", type=int, default=32)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="re-render a report")
    p.add_argument("--input", required=True, metavar="JSON")
    p.add_argument("--format", choices=("json", "csv", "text"), default="text")
    p.add_argument("--output")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.parser = parser
        return args.func(args)
    except _UsageError:
        return 1
    except ScorerProtocolError as exc:
        print(f"scorer protocol error: {exc}", file=sys.stderr)
        return 3
    except (ConlluError, SchemaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
