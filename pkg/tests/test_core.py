import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from autochecklist.core import (
    Answer,
    Checklist,
    ChecklistItem,
    ItemResult,
    Level,
    Metric,
    ScoreReport,
    aggregate_batch,
    compute_score_report,
)
from autochecklist.errors import ScoringError


def make_results(answers):
    return [ItemResult(item_id=f"q{i+1}", answer=Answer(a)) for i, a in enumerate(answers)]


class TestChecklistItem:
    def test_weight_range_enforced(self):
        ChecklistItem(id="q1", question="Is it clear?", weight=0)
        ChecklistItem(id="q2", question="Is it clear?", weight=100)
        with pytest.raises(ValueError, match="weight"):
            ChecklistItem(id="q3", question="Is it clear?", weight=150)
        with pytest.raises(ValueError, match="weight"):
            ChecklistItem(id="q4", question="Is it clear?", weight=-1)

    def test_round_trip_preserves_fields(self):
        item = ChecklistItem(
            id="q1", question="Is it?", weight=70, dimension="clarity", tags=frozenset({"a"})
        )
        assert ChecklistItem.from_dict(item.to_dict()) == item

    def test_empty_question_rejected(self):
        with pytest.raises(ValueError):
            ChecklistItem(id="q1", question="   ")


class TestChecklist:
    def test_duplicate_ids_rejected(self):
        items = (
            ChecklistItem(id="q1", question="One?"),
            ChecklistItem(id="q1", question="Two?"),
        )
        with pytest.raises(ValueError, match="q1"):
            Checklist(id="c", items=items, level=Level.INSTANCE)

    def test_round_trip(self):
        checklist = Checklist(
            id="c",
            items=(ChecklistItem(id="q1", question="One?", weight=30),),
            level=Level.CORPUS,
            source="direct",
            metadata={"k": "v"},
        )
        assert Checklist.from_dict(checklist.to_dict()) == checklist


class TestItemResult:
    def test_invalid_forbids_confidence(self):
        with pytest.raises(ValueError):
            ItemResult(item_id="q1", answer=Answer.INVALID, confidence=0.5)
        with pytest.raises(ValueError):
            ItemResult(item_id="q1", answer=Answer.INVALID, yes_probability=0.5)
        # reasoning may explain why scoring failed
        ItemResult(item_id="q1", answer=Answer.INVALID, reasoning="judge call failed")


class TestComputeScoreReport:
    def test_pass_rate_excludes_invalid(self):
        report = compute_score_report(make_results(["YES", "NO", "INVALID", "YES"]))
        assert report.pass_rate == pytest.approx(2 / 3)
        assert report.invalid_count == 1

    def test_all_invalid_raises(self):
        with pytest.raises(ScoringError):
            compute_score_report(make_results(["INVALID", "INVALID"]))

    def test_no_weights_falls_back_flagged(self):
        report = compute_score_report(
            make_results(["YES", "NO"]), weights={}, primary_metric=Metric.WEIGHTED
        )
        assert report.weighted_fallback
        assert report.weighted_score == report.pass_rate

    def test_partial_weights_default_to_fifty(self):
        results = make_results(["YES", "NO", "YES"])
        report = compute_score_report(results, weights={"q1": 100, "q3": None})
        # q1=100 YES, q2 defaults 50 NO, q3 defaults 50 YES
        assert report.weighted_score == pytest.approx(150 / 200)
        assert not report.weighted_fallback

    def test_zero_total_weight_gives_none(self):
        results = make_results(["YES", "NO"])
        report = compute_score_report(results, weights={"q1": 0, "q2": 0})
        assert report.weighted_score is None

    def test_unknown_weight_ids_rejected(self):
        with pytest.raises(ValueError, match="zz"):
            compute_score_report(make_results(["YES"]), weights={"zz": 10})

    def test_normalized_requires_full_coverage(self):
        results = make_results(["YES", "NO"])
        full = compute_score_report(results, normalized_inputs=[0.9, 0.2])
        assert full.normalized_score == pytest.approx(0.55)
        partial = compute_score_report(results, normalized_inputs=[0.9, None])
        assert partial.normalized_score is None

    def test_normalized_skips_invalid_items(self):
        results = make_results(["YES", "INVALID"])
        report = compute_score_report(results, normalized_inputs=[0.8, None])
        assert report.normalized_score == pytest.approx(0.8)

    def test_primary_unavailable_raises(self):
        with pytest.raises(ScoringError):
            compute_score_report(
                make_results(["YES"]), primary_metric=Metric.NORMALIZED
            )

    def test_report_round_trip(self):
        report = compute_score_report(make_results(["YES", "NO"]))
        assert ScoreReport.from_dict(report.to_dict()) == report

    @given(
        st.lists(st.sampled_from(["YES", "NO", "INVALID"]), min_size=1, max_size=12).filter(
            lambda a: any(x != "INVALID" for x in a)
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_pass_rate_matches_oracle(self, answers):
        report = compute_score_report(make_results(answers))
        assert report.pass_rate == pytest.approx(oracles.pass_rate(answers), abs=1e-12)


class TestAggregateBatch:
    def test_pooled_micro_vs_macro(self):
        batches = [["YES", "YES", "NO"], ["NO"]]
        reports = [compute_score_report(make_results(a)) for a in batches]
        aggregate = aggregate_batch(reports)
        assert aggregate.macro_pass_rate == pytest.approx(oracles.macro_pass_rate(batches))
        assert aggregate.drfr == pytest.approx(oracles.micro_pass_rate(batches))
        # mixed lengths force the two apart
        assert aggregate.macro_pass_rate != aggregate.drfr

    def test_equal_lengths_align_macro_and_micro(self):
        batches = [["YES", "NO"], ["NO", "YES"], ["YES", "YES"]]
        reports = [compute_score_report(make_results(a)) for a in batches]
        aggregate = aggregate_batch(reports)
        assert aggregate.macro_pass_rate == pytest.approx(aggregate.drfr, abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ScoringError):
            aggregate_batch([])
