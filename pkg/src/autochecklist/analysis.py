"""Statistics for validating checklist scores against preferences and humans.

Three views: paired preference discrimination (win/loss/tie and paired
Cohen's d), correlation with human ratings (Spearman, Pearson, Kendall
tau-b, MAE), and group separation (ROC-AUC, rank-biserial). Statistics
that degenerate (zero variance, single class) come back as None rather
than raising; contract violations (empty input, length mismatch) raise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from statistics import fmean, stdev
from typing import Any, Mapping, Optional, Sequence


@dataclass(frozen=True)
class PairedStats:
    """Win/loss/tie discrimination over chosen-minus-rejected deltas."""

    wins: int
    losses: int
    ties: int
    win_rate: float
    mean_delta: float
    cohens_d: Optional[float]

    def to_dict(self) -> dict[str, Any]:
        return {
            "wins": self.wins,
            "losses": self.losses,
            "ties": self.ties,
            "win_rate": self.win_rate,
            "mean_delta": self.mean_delta,
            "cohens_d": self.cohens_d,
        }


@dataclass(frozen=True)
class CorrelationStats:
    spearman: Optional[float]
    pearson: Optional[float]
    kendall_tau: Optional[float]
    mae: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "spearman": self.spearman,
            "pearson": self.pearson,
            "kendall_tau": self.kendall_tau,
            "mae": self.mae,
        }


@dataclass(frozen=True)
class SeparationStats:
    auc: float
    rank_biserial: float
    abs_rank_biserial: float
    mean_diff: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "auc": self.auc,
            "rank_biserial": self.rank_biserial,
            "abs_rank_biserial": self.abs_rank_biserial,
            "mean_diff": self.mean_diff,
        }


def win_loss_tie(deltas: Sequence[float]) -> PairedStats:
    """Count strict wins/losses/exact ties and the paired effect size."""
    if not deltas:
        raise ValueError("win_loss_tie needs at least one delta")
    wins = sum(1 for d in deltas if d > 0)
    losses = sum(1 for d in deltas if d < 0)
    ties = len(deltas) - wins - losses
    mean_delta = fmean(deltas)
    cohens_d: Optional[float] = None
    if len(deltas) >= 2:
        sd = stdev(deltas)
        if sd > 0:
            cohens_d = mean_delta / sd
    return PairedStats(
        wins=wins,
        losses=losses,
        ties=ties,
        win_rate=wins / len(deltas),
        mean_delta=mean_delta,
        cohens_d=cohens_d,
    )


def _constant(values: Sequence[float]) -> bool:
    return min(values) == max(values)


def correlations(x: Sequence[float], y: Sequence[float]) -> CorrelationStats:
    """Spearman rho, Pearson r, Kendall tau-b, and MAE for paired series."""
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise ValueError("correlations need at least two pairs")
    from scipy import stats

    mae = fmean(abs(a - b) for a, b in zip(x, y))
    if _constant(x) or _constant(y):
        return CorrelationStats(spearman=None, pearson=None, kendall_tau=None, mae=mae)
    rho = float(stats.spearmanr(x, y).statistic)
    r = float(stats.pearsonr(x, y).statistic)
    tau = float(stats.kendalltau(x, y, variant="b").statistic)
    return CorrelationStats(
        spearman=None if math.isnan(rho) else rho,
        pearson=None if math.isnan(r) else r,
        kendall_tau=None if math.isnan(tau) else tau,
        mae=mae,
    )


def _average_ranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        # 1-based average rank over the tied run
        shared = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = shared
        i = j + 1
    return ranks


def group_separation(
    scores_pos: Sequence[float], scores_neg: Sequence[float]
) -> SeparationStats:
    """ROC-AUC of pos over neg (ties count half) and rank-biserial effect."""
    if not scores_pos or not scores_neg:
        raise ValueError("group_separation needs both groups non-empty")
    pooled = list(scores_pos) + list(scores_neg)
    ranks = _average_ranks(pooled)
    rank_sum_pos = sum(ranks[: len(scores_pos)])
    n_pos, n_neg = len(scores_pos), len(scores_neg)
    auc = (rank_sum_pos - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)
    rank_biserial = 2 * auc - 1
    return SeparationStats(
        auc=auc,
        rank_biserial=rank_biserial,
        abs_rank_biserial=abs(rank_biserial),
        mean_diff=fmean(scores_pos) - fmean(scores_neg),
    )


def point_biserial(binary: Sequence[int], scores: Sequence[float]) -> Optional[float]:
    """Pearson correlation between a 0/1 indicator and real scores."""
    if len(binary) != len(scores):
        raise ValueError(f"length mismatch: {len(binary)} vs {len(scores)}")
    invalid = sorted({b for b in binary} - {0, 1})
    if invalid:
        raise ValueError(f"binary labels must be 0 or 1, got {invalid}")
    if len(set(binary)) < 2:
        raise ValueError("point_biserial needs both classes present")
    if _constant(scores):
        return None
    from scipy import stats

    r = float(stats.pearsonr(list(binary), list(scores)).statistic)
    return None if math.isnan(r) else r


def rescale_to_likert(pass_rate: float) -> float:
    """Map a pass rate in [0, 1] onto the 1-5 rating scale."""
    if not 0 <= pass_rate <= 1:
        raise ValueError(f"pass rate {pass_rate} outside [0, 1]")
    return pass_rate * 4 + 1


def format_report(stats: Mapping[str, Any]) -> str:
    """Render nested statistics as an aligned two-column text table."""
    rows: list[tuple[str, str]] = []

    def add(prefix: str, value: Any) -> None:
        if hasattr(value, "to_dict"):
            value = value.to_dict()
        if isinstance(value, Mapping):
            for key, sub in value.items():
                add(f"{prefix}.{key}" if prefix else str(key), sub)
            return
        if value is None:
            rendered = "n/a"
        elif isinstance(value, float):
            rendered = f"{value:.4f}"
        else:
            rendered = str(value)
        rows.append((prefix, rendered))

    add("", dict(stats))
    if not rows:
        return ""
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name.ljust(width)}  {value}" for name, value in rows) + "\n"


def report_json(stats: Mapping[str, Any]) -> str:
    """Render the same statistics as machine-readable JSON."""
    plain = {
        key: value.to_dict() if hasattr(value, "to_dict") else value
        for key, value in stats.items()
    }
    return json.dumps(plain, indent=2, sort_keys=True)
