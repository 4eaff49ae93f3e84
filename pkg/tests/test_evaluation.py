"""Evaluation aggregation, skip accounting, abort handling, and the
three report serializations."""

from __future__ import annotations

import dataclasses

import pytest

from agreement_probe.evaluation import (
    Cell,
    EvaluationReport,
    VariantReport,
    distance_bucket,
    evaluate,
    render_report,
    report_from_csv,
    report_from_dict,
    report_from_json,
    report_to_dict,
)
from agreement_probe.records import original_records, stratify_records
from agreement_probe.scoring import (
    NEG_INF,
    AntiOracleScorer,
    MajoritySingScorer,
    OracleScorer,
    Scorer,
    ScorerError,
    ScorerProtocolError,
)


def test_distance_bucket_exhaustive():
    expected = {
        0: "<2", 1: "<2", 2: "2",
        3: "3-4", 4: "3-4", 5: "5-6", 6: "5-6", 7: "7-8", 8: "7-8",
        9: "9-10", 10: "9-10", 11: "11-12", 12: "11-12", 13: "13-14", 14: "13-14",
        15: "15+", 16: "15+", 40: "15+",
    }
    for distance, bucket in expected.items():
        assert distance_bucket(distance) == bucket, distance


def test_cell_accuracy():
    cell = Cell()
    assert cell.accuracy is None
    cell.add(True)
    cell.add(False)
    cell.add(True)
    assert cell == Cell(correct=2, total=3)
    assert cell.accuracy == pytest.approx(2 / 3)


def test_oracle_aggregation_identity(synth_recs):
    report = evaluate(OracleScorer(), synth_recs)
    section = report.variants["original"]
    assert section.overall.total == len(synth_recs)
    assert section.overall.accuracy == 1.0
    assert report.complete and not report.warnings
    # every stratification partitions the same scored set
    for strat in (section.by_group, section.by_number, section.by_distance):
        assert sum(c.total for c in strat.values()) == section.overall.total
        assert sum(c.correct for c in strat.values()) == section.overall.correct
    assert sorted(section.by_group) == [0, 1, 2, 3, 4]
    assert not section.skipped


def test_anti_oracle_and_majority_sing(synth_recs):
    report = evaluate(AntiOracleScorer(), synth_recs)
    assert report.variants["original"].overall.accuracy == 0.0
    report = evaluate(MajoritySingScorer(), synth_recs)
    sing = sum(1 for r in synth_recs if r.instance.target_number == "Sing")
    section = report.variants["original"]
    assert section.overall.correct == sing
    assert section.by_number["Sing"].accuracy == 1.0
    assert section.by_number["Plur"].accuracy == 0.0


def test_unstratified_records_are_refused(appendix_instances):
    with pytest.raises(ValueError, match="stratify"):
        evaluate(OracleScorer(), original_records(appendix_instances))


def test_candidate_oov_skips(appendix_records):
    class NoPlural(OracleScorer):
        def knows_form(self, form):
            return not form.endswith("ées")

    report = evaluate(NoPlural(), appendix_records)
    section = report.variants["original"]
    assert section.overall.total == 0
    assert section.skipped == {"candidate_oov": len(appendix_records)}


def test_scorer_errors_skip_but_keep_going(synth_recs):
    class Flaky(OracleScorer):
        def score(self, request):
            if request.id % 3 == 0:
                raise ScorerError("unlucky")
            return super().score(request)

    sample = synth_recs[:30]
    report = evaluate(Flaky(), sample)
    section = report.variants["original"]
    assert section.skipped == {"scorer_error": 10}
    assert section.overall.total == 20
    assert report.complete


def test_protocol_abort_keeps_partial_report(synth_recs):
    class Dies(Scorer):
        name = "dies"

        def __init__(self):
            self.batches = 0

        def score_batch(self, requests):
            self.batches += 1
            if self.batches > 1:
                raise ScorerProtocolError("pipe torn")
            return [[0.0, NEG_INF] for _ in requests]

    report = evaluate(Dies(), synth_recs[:10], batch_size=4)
    assert not report.complete
    assert any("pipe torn" in w for w in report.warnings)
    assert report.variants["original"].overall.total == 4


def test_scorer_batch_size_attribute_is_used(synth_recs):
    class Counter(OracleScorer):
        batch_size = 3

        def __init__(self):
            self.calls = []

        def score_batch(self, requests):
            self.calls.append(len(requests))
            return super().score_batch(requests)

    scorer = Counter()
    evaluate(scorer, synth_recs[:8])
    assert scorer.calls == [3, 3, 2]
    scorer.calls.clear()
    evaluate(scorer, synth_recs[:8], batch_size=5)
    assert scorer.calls == [5, 3]


def test_unnormalized_warning_appears_once(synth_recs):
    class Positive(Scorer):
        name = "positive"

        def score(self, request):
            return [0.5, -0.5]

    report = evaluate(Positive(), synth_recs[:20])
    assert len([w for w in report.warnings if "not normalized" in w]) == 1


def test_variants_get_separate_sections(synth_recs):
    from agreement_probe.controls import make_permuted
    from agreement_probe.records import stratify_records as strat

    originals = list(synth_recs[:10])
    nonces = [dataclasses.replace(r, variant="nonce") for r in synth_recs[10:16]]
    permuted = strat([
        dataclasses.replace(r, instance=make_permuted(r.instance, seed=i), variant="permuted")
        for i, r in enumerate(synth_recs[16:26])
    ])
    report = evaluate(OracleScorer(), originals + nonces + permuted)
    assert set(report.variants) == {"original", "nonce", "permuted"}
    assert report.variants["original"].overall.total == 10
    assert report.variants["nonce"].overall.total == 6
    assert report.variants["permuted"].overall.total == 10


def test_permuted_short_distances_use_their_own_bucket(synth_recs):
    from agreement_probe.controls import make_permuted
    from agreement_probe.records import stratify_records as strat

    shuffled = []
    for i, record in enumerate(synth_recs[:40]):
        clone = dataclasses.replace(
            record, instance=make_permuted(record.instance, seed=i), variant="permuted")
        shuffled.append(clone)
    report = evaluate(OracleScorer(), strat(shuffled))
    buckets = report.variants["permuted"].by_distance
    assert "<2" in buckets  # 40 shuffles reliably produce at least one


def make_report(synth_recs) -> EvaluationReport:
    records = list(synth_recs[:40]) + [
        dataclasses.replace(r, variant="nonce") for r in synth_recs[40:60]]

    class Sometimes(MajoritySingScorer):
        name = "sometimes"

        def score(self, request):
            if request.id % 7 == 0:
                raise ScorerError("again")
            return super().score(request)

    report = evaluate(Sometimes(), records,
                      scorer_params={"alpha": 0.5, "order": 2},
                      seeds={"controls": 11})
    assert report.variants["original"].skipped  # fixture sanity
    return report


def test_report_dict_round_trip(synth_recs):
    report = make_report(synth_recs)
    clone = report_from_dict(report_to_dict(report))
    assert clone == report


def test_report_json_round_trip(synth_recs):
    report = make_report(synth_recs)
    assert report_from_json(render_report(report, "json")) == report


def test_report_csv_round_trip(synth_recs):
    report = make_report(synth_recs)
    assert report_from_csv(render_report(report, "csv")) == report


def test_incomplete_flag_survives_round_trips(synth_recs):
    report = make_report(synth_recs)
    report.complete = False
    report.warnings.append("aborted: test")
    assert report_from_csv(render_report(report, "csv")) == report
    assert report_from_json(render_report(report, "json")) == report


def test_empty_report_renders_header_only():
    report = EvaluationReport()
    csv_text = render_report(report, "csv")
    assert csv_text == "variant,section,key,correct,total,accuracy\n"
    assert report_from_csv(csv_text) == report


def test_csv_accuracy_is_full_precision(synth_recs):
    report = make_report(synth_recs)
    text = render_report(report, "csv")
    overall = report.variants["original"].overall
    assert repr(overall.accuracy) in text


def test_text_render_mentions_everything(synth_recs):
    report = make_report(synth_recs)
    report.complete = False
    text = render_report(report, "text")
    assert "scorer: sometimes" in text
    assert "== original ==" in text and "== nonce ==" in text
    assert "group 4" in text
    assert "skipped (scorer_error)" in text
    assert "NOTE: run incomplete" in text


def test_render_rejects_unknown_format(synth_recs):
    with pytest.raises(ValueError, match="format"):
        render_report(EvaluationReport(), "yaml")


def test_report_schema_version_checked():
    with pytest.raises(ValueError, match="schema_version"):
        report_from_dict({"schema_version": 9, "scorer": {"name": "", "params": {}}})


def test_csv_header_is_checked():
    with pytest.raises(ValueError, match="header"):
        report_from_csv("a,b,c\n1,2,3\n")


def test_empty_cells_render_blank_accuracy():
    report = EvaluationReport(scorer_name="x")
    report.variants["original"] = VariantReport()
    csv_text = render_report(report, "csv")
    line = [row for row in csv_text.splitlines() if row.startswith("original,overall")][0]
    assert line == "original,overall,,0,0,"
    assert report_from_csv(csv_text) == report
