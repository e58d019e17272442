import json
import random

import pytest

import oracles
from autochecklist.analysis import (
    correlations,
    format_report,
    group_separation,
    point_biserial,
    report_json,
    rescale_to_likert,
    win_loss_tie,
)


class TestWinLossTie:
    def test_counts_and_rates(self):
        stats = win_loss_tie([0.6, 0.0, -0.2, 0.5])
        assert (stats.wins, stats.losses, stats.ties) == (2, 1, 1)
        assert stats.win_rate == pytest.approx(0.5)
        assert stats.mean_delta == pytest.approx((0.6 + 0.0 - 0.2 + 0.5) / 4)

    def test_cohens_d_matches_oracle(self):
        rng = random.Random(3)
        deltas = [rng.uniform(-1, 1) for _ in range(25)]
        stats = win_loss_tie(deltas)
        assert stats.cohens_d == pytest.approx(oracles.cohens_d(deltas), abs=1e-12)

    def test_degenerate_cases(self):
        assert win_loss_tie([0.3]).cohens_d is None
        assert win_loss_tie([0.1, 0.1]).cohens_d is None  # zero variance
        with pytest.raises(ValueError):
            win_loss_tie([])


class TestCorrelations:
    def test_matches_oracles_on_random_data(self):
        rng = random.Random(7)
        for _ in range(30):
            n = rng.randint(3, 40)
            xs = [rng.uniform(0, 1) for _ in range(n)]
            ys = [x + rng.gauss(0, 0.3) for x in xs]
            stats = correlations(xs, ys)
            assert stats.pearson == pytest.approx(oracles.pearson(xs, ys), abs=1e-9)
            assert stats.spearman == pytest.approx(oracles.spearman(xs, ys), abs=1e-9)
            assert stats.kendall_tau == pytest.approx(
                oracles.kendall_tau_b(xs, ys), abs=1e-9
            )
            assert stats.mae == pytest.approx(oracles.mae(xs, ys), abs=1e-12)

    def test_tied_ranks_handled(self):
        xs = [1.0, 1.0, 2.0, 3.0, 3.0]
        ys = [2.0, 1.0, 3.0, 5.0, 4.0]
        stats = correlations(xs, ys)
        assert stats.spearman == pytest.approx(oracles.spearman(xs, ys), abs=1e-9)
        assert stats.kendall_tau == pytest.approx(oracles.kendall_tau_b(xs, ys), abs=1e-9)

    def test_constant_series_gives_none_but_mae(self):
        stats = correlations([0.5, 0.5, 0.5], [1.0, 2.0, 3.0])
        assert stats.spearman is None
        assert stats.pearson is None
        assert stats.kendall_tau is None
        assert stats.mae == pytest.approx((0.5 + 1.5 + 2.5) / 3)

    def test_validation(self):
        with pytest.raises(ValueError):
            correlations([1.0], [1.0])
        with pytest.raises(ValueError):
            correlations([1.0, 2.0], [1.0])


class TestGroupSeparation:
    def test_auc_matches_pair_enumeration(self):
        rng = random.Random(11)
        for _ in range(30):
            pos = [rng.uniform(0, 1) for _ in range(rng.randint(1, 20))]
            neg = [rng.uniform(0, 1) for _ in range(rng.randint(1, 20))]
            stats = group_separation(pos, neg)
            assert stats.auc == pytest.approx(oracles.auc(pos, neg), abs=1e-9)
            assert stats.rank_biserial == pytest.approx(2 * stats.auc - 1, abs=1e-12)
            assert stats.abs_rank_biserial == abs(stats.rank_biserial)

    def test_perfect_separation(self):
        stats = group_separation([0.9, 0.8], [0.1, 0.2])
        assert stats.auc == pytest.approx(1.0)
        assert stats.rank_biserial == pytest.approx(1.0)

    def test_ties_count_half(self):
        stats = group_separation([0.5], [0.5])
        assert stats.auc == pytest.approx(0.5)

    def test_empty_group_rejected(self):
        with pytest.raises(ValueError):
            group_separation([], [0.5])


class TestPointBiserial:
    def test_matches_oracle(self):
        rng = random.Random(13)
        labels = [rng.randint(0, 1) for _ in range(40)]
        if len(set(labels)) == 1:
            labels[0] = 1 - labels[0]
        scores = [l * 0.5 + rng.uniform(0, 0.5) for l in labels]
        got = point_biserial(labels, scores)
        assert got == pytest.approx(oracles.point_biserial(scores, labels), abs=1e-9)

    def test_validation(self):
        with pytest.raises(ValueError):
            point_biserial([0, 2], [0.5, 0.6])
        with pytest.raises(ValueError):
            point_biserial([1, 1], [0.5, 0.6])
        assert point_biserial([0, 1], [0.5, 0.5]) is None


class TestRescale:
    def test_endpoints_exact(self):
        assert rescale_to_likert(0.0) == 1.0
        assert rescale_to_likert(1.0) == 5.0

    def test_linear_interior(self):
        assert rescale_to_likert(0.5) == pytest.approx(3.0)
        assert rescale_to_likert(0.25) == pytest.approx(2.0)

    def test_range_enforced(self):
        with pytest.raises(ValueError):
            rescale_to_likert(-0.01)
        with pytest.raises(ValueError):
            rescale_to_likert(1.01)


class TestReportFormatting:
    def test_format_report_flattens_and_aligns(self):
        stats = correlations([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        text = format_report({"judge": stats, "note": "demo"})
        assert "spearman" in text
        assert "1.0000" in text
        assert "note" in text

    def test_none_renders_as_na(self):
        stats = correlations([1.0, 1.0], [2.0, 3.0])
        assert "n/a" in format_report({"c": stats})

    def test_report_json_round_trips(self):
        stats = group_separation([0.9], [0.1])
        doc = json.loads(report_json({"sep": stats}))
        assert doc["sep"]["auc"] == 1.0
