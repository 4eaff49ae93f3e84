"""Running scorers over instance records and aggregating accuracies.

Results are stratified three ways: by difficulty group (how many of the
four surface heuristics get the instance right), by target number, and
by antecedent-to-participle distance bucket.  Each variant present in
the input gets its own section.  Instances whose candidate forms a
closed-vocabulary scorer does not know are skipped, as are instances an
external scorer fails on; skips are counted per reason, never silently
dropped.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Sequence

from .records import InstanceRecord
from .scoring import ScoreRequest, Scorer, ScorerError, ScorerProtocolError, make_verdict

REPORT_SCHEMA_VERSION = 1

# Stratum sizes of the full 68,497-instance corpus the difficulty groups
# were introduced on; reference only, not reproducible at fixture scale.
REFERENCE_GROUP_SIZES = {4: 32311, 3: 13222, 2: 8869, 1: 10946, 0: 3149}

# Distance histogram of the same corpus (buckets past 14 not published).
REFERENCE_DISTANCE_COUNTS = {
    "2": 1599, "3-4": 44012, "5-6": 14945, "7-8": 4799,
    "9-10": 1729, "11-12": 756, "13-14": 327,
}

DISTANCE_BUCKETS = ("2", "3-4", "5-6", "7-8", "9-10", "11-12", "13-14", "15+")

SKIP_REASONS = ("candidate_oov", "scorer_error")


def distance_bucket(distance: int) -> str:
    """Bucket label for an antecedent-to-participle distance.  Distances
    under 2 only occur in permuted variants and get their own label."""
    if distance < 2:
        return "<2"
    if distance == 2:
        return "2"
    if distance >= 15:
        return "15+"
    low = 3 + 2 * ((distance - 3) // 2)
    return f"{low}-{low + 1}"


@dataclass
class Cell:
    correct: int = 0
    total: int = 0

    @property
    def accuracy(self) -> float | None:
        return self.correct / self.total if self.total else None

    def add(self, correct: bool) -> None:
        self.total += 1
        self.correct += bool(correct)


@dataclass
class VariantReport:
    overall: Cell = field(default_factory=Cell)
    by_group: dict[int, Cell] = field(default_factory=dict)
    by_number: dict[str, Cell] = field(default_factory=dict)
    by_distance: dict[str, Cell] = field(default_factory=dict)
    skipped: dict[str, int] = field(default_factory=dict)

    def tally(self, record: InstanceRecord, correct: bool) -> None:
        instance = record.instance
        self.overall.add(correct)
        self.by_group.setdefault(record.profile.group, Cell()).add(correct)
        self.by_number.setdefault(instance.target_number, Cell()).add(correct)
        self.by_distance.setdefault(distance_bucket(instance.distance), Cell()).add(correct)

    def skip(self, reason: str) -> None:
        self.skipped[reason] = self.skipped.get(reason, 0) + 1


@dataclass
class EvaluationReport:
    scorer_name: str = ""
    scorer_params: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)
    complete: bool = True
    warnings: list[str] = field(default_factory=list)
    variants: dict[str, VariantReport] = field(default_factory=dict)


def evaluate(
    scorer: Scorer,
    records: Sequence[InstanceRecord],
    scorer_params: dict | None = None,
    seeds: dict | None = None,
    batch_size: int | None = None,
) -> EvaluationReport:
    """Score every record and aggregate.  Records must be stratified
    (carry a heuristic profile).  On a scorer protocol abort the partial
    report is returned with complete=False."""
    report = EvaluationReport(
        scorer_name=scorer.name,
        scorer_params=dict(scorer_params or {}),
        seeds=dict(seeds or {}),
    )
    for record in records:
        if record.profile is None:
            raise ValueError(
                f"record {record.instance_id!r} has no heuristic profile; stratify first")

    chunk = batch_size or getattr(scorer, "batch_size", None) or 128
    saw_unnormalized = False
    pending: list[tuple[InstanceRecord, ScoreRequest]] = []
    next_id = 0
    for record in records:
        variant_report = report.variants.setdefault(record.variant, VariantReport())
        instance = record.instance
        known = [scorer.knows_form(f) for f in (instance.form_sing, instance.form_plur)]
        if False in known:
            variant_report.skip("candidate_oov")
            continue
        pending.append((record, ScoreRequest(
            id=next_id,
            prefix=instance.prefix_forms,
            candidates=(instance.form_sing, instance.form_plur),
            target_number=instance.target_number,
            instance=instance,
        )))
        next_id += 1

    for start in range(0, len(pending), chunk):
        batch = pending[start : start + chunk]
        try:
            results = scorer.score_batch([request for _, request in batch])
        except ScorerProtocolError as exc:
            report.complete = False
            report.warnings.append(f"aborted: {exc}")
            break
        for (record, request), result in zip(batch, results):
            variant_report = report.variants[record.variant]
            if isinstance(result, ScorerError):
                variant_report.skip("scorer_error")
                continue
            verdict = make_verdict(request, result)
            if verdict.unnormalized:
                saw_unnormalized = True
            variant_report.tally(record, verdict.correct)
    if saw_unnormalized:
        report.warnings.append(
            f"{scorer.name} returned positive logprobs; scores are not normalized")
    return report


def report_to_dict(report: EvaluationReport) -> dict:
    def cell(c: Cell) -> dict:
        return {"correct": c.correct, "total": c.total, "accuracy": c.accuracy}

    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "scorer": {"name": report.scorer_name, "params": report.scorer_params},
        "seeds": report.seeds,
        "complete": report.complete,
        "warnings": list(report.warnings),
        "variants": {
            tag: {
                "overall": cell(vr.overall),
                "by_group": {str(g): cell(c) for g, c in sorted(vr.by_group.items())},
                "by_number": {n: cell(c) for n, c in sorted(vr.by_number.items())},
                "by_distance": {b: cell(c) for b, c in sorted(vr.by_distance.items())},
                "skipped": dict(sorted(vr.skipped.items())),
            }
            for tag, vr in report.variants.items()
        },
    }


def report_from_dict(obj: dict) -> EvaluationReport:
    def cell(c: dict) -> Cell:
        return Cell(correct=c["correct"], total=c["total"])

    if obj.get("schema_version") != REPORT_SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema_version {obj.get('schema_version')!r}")
    report = EvaluationReport(
        scorer_name=obj["scorer"]["name"],
        scorer_params=dict(obj["scorer"]["params"]),
        seeds=dict(obj.get("seeds", {})),
        complete=obj.get("complete", True),
        warnings=list(obj.get("warnings", [])),
    )
    for tag, vr_obj in obj.get("variants", {}).items():
        report.variants[tag] = VariantReport(
            overall=cell(vr_obj["overall"]),
            by_group={int(g): cell(c) for g, c in vr_obj["by_group"].items()},
            by_number={n: cell(c) for n, c in vr_obj["by_number"].items()},
            by_distance={b: cell(c) for b, c in vr_obj["by_distance"].items()},
            skipped=dict(vr_obj.get("skipped", {})),
        )
    return report


def _csv_rows(report: EvaluationReport) -> list[list[str]]:
    rows = [["variant", "section", "key", "correct", "total", "accuracy"]]

    def meta(key: str, value) -> None:
        rows.append(["", "meta", key, "", "", json.dumps(value, ensure_ascii=False)])

    if report.scorer_name:
        meta("scorer_name", report.scorer_name)
    if report.scorer_params:
        meta("scorer_params", report.scorer_params)
    if report.seeds:
        meta("seeds", report.seeds)
    if not report.complete:
        meta("complete", False)
    if report.warnings:
        meta("warnings", report.warnings)

    def cell_row(tag: str, section: str, key: str, c: Cell) -> None:
        accuracy = "" if c.accuracy is None else repr(c.accuracy)
        rows.append([tag, section, key, str(c.correct), str(c.total), accuracy])

    for tag, vr in report.variants.items():
        cell_row(tag, "overall", "", vr.overall)
        for group, c in sorted(vr.by_group.items()):
            cell_row(tag, "group", str(group), c)
        for number, c in sorted(vr.by_number.items()):
            cell_row(tag, "number", number, c)
        for bucket, c in sorted(vr.by_distance.items()):
            cell_row(tag, "distance", bucket, c)
        for reason, count in sorted(vr.skipped.items()):
            rows.append([tag, "skipped", reason, "", str(count), ""])
    return rows


def report_from_csv(text: str) -> EvaluationReport:
    report = EvaluationReport()
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != ["variant", "section", "key", "correct", "total", "accuracy"]:
        raise ValueError("not a report CSV: bad header")
    for row in reader:
        tag, section, key, correct, total, accuracy = row
        if section == "meta":
            value = json.loads(accuracy)
            if key == "scorer_name":
                report.scorer_name = value
            elif key == "scorer_params":
                report.scorer_params = value
            elif key == "seeds":
                report.seeds = value
            elif key == "complete":
                report.complete = value
            elif key == "warnings":
                report.warnings = value
            else:
                raise ValueError(f"unknown meta key {key!r}")
            continue
        vr = report.variants.setdefault(tag, VariantReport())
        if section == "overall":
            vr.overall = Cell(int(correct), int(total))
        elif section == "group":
            vr.by_group[int(key)] = Cell(int(correct), int(total))
        elif section == "number":
            vr.by_number[key] = Cell(int(correct), int(total))
        elif section == "distance":
            vr.by_distance[key] = Cell(int(correct), int(total))
        elif section == "skipped":
            vr.skipped[key] = int(total)
        else:
            raise ValueError(f"unknown section {section!r}")
    return report


def _text_table(report: EvaluationReport) -> str:
    lines = []
    title = report.scorer_name or "(unnamed scorer)"
    lines.append(f"scorer: {title}")
    if report.scorer_params:
        lines.append(f"params: {json.dumps(report.scorer_params, ensure_ascii=False)}")
    if report.seeds:
        lines.append(f"seeds: {json.dumps(report.seeds)}")
    if not report.complete:
        lines.append("NOTE: run incomplete")
    for warning in report.warnings:
        lines.append(f"warning: {warning}")
    for tag, vr in report.variants.items():
        lines.append("")
        lines.append(f"== {tag} ==")
        lines.append(f"{'':<14}{'accuracy':>10}{'correct':>10}{'total':>8}")

        def fmt(label: str, c: Cell) -> str:
            accuracy = "-" if c.accuracy is None else f"{c.accuracy:.3f}"
            return f"{label:<14}{accuracy:>10}{c.correct:>10}{c.total:>8}"

        lines.append(fmt("overall", vr.overall))
        for group, c in sorted(vr.by_group.items()):
            lines.append(fmt(f"group {group}", c))
        for number, c in sorted(vr.by_number.items()):
            lines.append(fmt(number, c))
        for bucket, c in sorted(vr.by_distance.items()):
            lines.append(fmt(f"dist {bucket}", c))
        for reason, count in sorted(vr.skipped.items()):
            lines.append(f"skipped ({reason}): {count}")
    return "\n".join(lines) + "\n"


def render_report(report: EvaluationReport, fmt: str = "json") -> str:
    """Serialize a report as json (lossless), csv (lossless), or text."""
    if fmt == "json":
        return json.dumps(report_to_dict(report), ensure_ascii=False, indent=2,
                          sort_keys=True) + "\n"
    if fmt == "csv":
        out = io.StringIO()
        csv.writer(out, lineterminator="\n").writerows(_csv_rows(report))
        return out.getvalue()
    if fmt == "text":
        return _text_table(report)
    raise ValueError(f"unknown report format {fmt!r}")


def report_from_json(text: str) -> EvaluationReport:
    return report_from_dict(json.loads(text))
