"""JSONL persistence for instances, so pipeline stages are file-pure.

Every line is one instance record carrying the full annotated sentence,
the marked indices, the candidate pair, variant bookkeeping and, once
stratified, the heuristic profile.  Records embed everything needed to
re-evaluate without the source treebank.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from .conllu import Sentence, Token
from .extraction import AgreementInstance, validate_instance
from .heuristics import HEURISTIC_NAMES, HeuristicProfile
from .heuristics import profile as compute_profile

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """Record data that cannot be interpreted."""


@dataclass(frozen=True)
class InstanceRecord:
    instance: AgreementInstance
    instance_id: str
    variant: str = "original"
    parent_id: str | None = None
    seed: int | None = None
    profile: HeuristicProfile | None = None


def original_records(instances: Sequence[AgreementInstance]) -> list[InstanceRecord]:
    """Wrap freshly extracted instances, assigning stable ids."""
    records = []
    for i, instance in enumerate(instances):
        base = instance.sentence.sent_id or f"s{i}"
        records.append(InstanceRecord(instance, f"{base}:{instance.target_idx}"))
    return records


def child_record(parent: InstanceRecord, instance: AgreementInstance,
                 variant: str, suffix: str, seed: int | None = None) -> InstanceRecord:
    return InstanceRecord(
        instance=instance,
        instance_id=f"{parent.instance_id}:{suffix}",
        variant=variant,
        parent_id=parent.instance_id,
        seed=seed,
    )


def stratify_records(records: Sequence[InstanceRecord],
                     tie_break: str | None = "Sing") -> list[InstanceRecord]:
    return [replace(r, profile=compute_profile(r.instance, tie_break)) for r in records]


def _token_to_dict(token: Token) -> dict:
    return {
        "id": token.id,
        "form": token.form,
        "lemma": token.lemma,
        "upos": token.upos,
        "feats": dict(token.feats),
        "head": token.head,
        "deprel": token.deprel,
    }


def _token_from_dict(obj: dict) -> Token:
    try:
        return Token(
            id=obj["id"],
            form=obj["form"],
            lemma=obj["lemma"],
            upos=obj["upos"],
            feats=dict(obj["feats"]),
            head=obj["head"],
            deprel=obj["deprel"],
        )
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"bad token object: {exc}") from None


def record_to_dict(record: InstanceRecord) -> dict:
    instance = record.instance
    out = {
        "schema_version": SCHEMA_VERSION,
        "instance_id": record.instance_id,
        "variant": record.variant,
        "parent_id": record.parent_id,
        "seed": record.seed,
        "sent_id": instance.sentence.sent_id,
        "text": instance.sentence.text,
        "tokens": [_token_to_dict(t) for t in instance.sentence.tokens],
        "antecedent_idx": instance.antecedent_idx,
        "pronoun_idx": instance.pronoun_idx,
        "auxiliary_idx": instance.auxiliary_idx,
        "target_idx": instance.target_idx,
        "target_number": instance.target_number,
        "target_gender": instance.target_gender,
        "form_sing": instance.form_sing,
        "form_plur": instance.form_plur,
        "prefix": list(instance.prefix_forms),
        "distance": instance.distance,
    }
    if record.profile is not None:
        out["heuristics"] = record.profile.as_dict()
        out["group"] = record.profile.group
    return out


def record_from_dict(obj: dict) -> InstanceRecord:
    if not isinstance(obj, dict):
        raise SchemaError("record line is not a JSON object")
    version = obj.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {version!r}")
    try:
        sentence = Sentence(
            tokens=tuple(_token_from_dict(t) for t in obj["tokens"]),
            sent_id=obj.get("sent_id"),
            text=obj.get("text"),
        )
        instance = AgreementInstance(
            sentence=sentence,
            antecedent_idx=obj["antecedent_idx"],
            pronoun_idx=obj["pronoun_idx"],
            auxiliary_idx=obj["auxiliary_idx"],
            target_idx=obj["target_idx"],
            target_number=obj["target_number"],
            target_gender=obj["target_gender"],
            form_sing=obj["form_sing"],
            form_plur=obj["form_plur"],
        )
        record = InstanceRecord(
            instance=instance,
            instance_id=obj["instance_id"],
            variant=obj.get("variant", "original"),
            parent_id=obj.get("parent_id"),
            seed=obj.get("seed"),
        )
    except KeyError as exc:
        raise SchemaError(f"record missing field {exc}") from None
    if obj["distance"] != instance.distance:
        raise SchemaError(
            f"stored distance {obj['distance']} contradicts indices ({instance.distance})")
    if obj["prefix"] != list(instance.prefix_forms):
        raise SchemaError("stored prefix contradicts tokens")
    if "group" in obj or "heuristics" in obj:
        try:
            predictions = tuple(obj["heuristics"][h] for h in HEURISTIC_NAMES)
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"bad heuristics block: {exc}") from None
        prof = HeuristicProfile(
            predictions,
            tuple(p == instance.target_number for p in predictions),
        )
        if prof.group != obj.get("group"):
            raise SchemaError("stored group contradicts heuristic predictions")
        record = replace(record, profile=prof)
    return record


def dump_records(records: Iterable[InstanceRecord]) -> str:
    return "".join(
        json.dumps(record_to_dict(r), ensure_ascii=False, sort_keys=True) + "\n"
        for r in records
    )


def load_records(text: str, validate: bool = True) -> list[InstanceRecord]:
    records = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"line {line_no}: not valid JSON: {exc}") from None
        try:
            record = record_from_dict(obj)
        except SchemaError as exc:
            raise SchemaError(f"line {line_no}: {exc}") from None
        if validate and record.variant != "permuted":
            try:
                validate_instance(record.instance)
            except ValueError as exc:
                raise SchemaError(f"line {line_no}: {exc}") from None
        records.append(record)
    return records


def write_records(path: str | Path, records: Iterable[InstanceRecord]) -> None:
    Path(path).write_text(dump_records(records), encoding="utf-8")


def read_records(path: str | Path, validate: bool = True) -> list[InstanceRecord]:
    return load_records(Path(path).read_text(encoding="utf-8"), validate)
