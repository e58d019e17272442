"""Checklist data model and pure scoring arithmetic.

No I/O and no LLM calls live here. Everything is an immutable value
object, safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping, Optional, Sequence

from .errors import ScoringError

DEFAULT_WEIGHT = 50  # mid-scale default for items left unweighted in a partially weighted checklist


class Answer(str, Enum):
    YES = "YES"
    NO = "NO"
    INVALID = "INVALID"


class Level(str, Enum):
    INSTANCE = "instance"
    CORPUS = "corpus"


class Metric(str, Enum):
    PASS = "pass"
    WEIGHTED = "weighted"
    NORMALIZED = "normalized"


def _coerce_metric(value: "Metric | str") -> Metric:
    if isinstance(value, Metric):
        return value
    try:
        return Metric(value)
    except ValueError:
        raise ValueError(
            f"unknown metric {value!r}; expected one of {[m.value for m in Metric]}"
        ) from None


@dataclass(frozen=True)
class ChecklistItem:
    """A single yes/no question, optionally weighted and labeled."""

    id: str
    question: str
    weight: Optional[int] = None
    dimension: Optional[str] = None
    tags: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        if not self.id:
            raise ValueError("checklist item id must be non-empty")
        if not self.question.strip():
            raise ValueError(f"item {self.id!r}: question must be non-empty")
        if self.weight is not None and not (0 <= self.weight <= 100):
            raise ValueError(
                f"item {self.id!r}: weight {self.weight} outside [0, 100]"
            )
        object.__setattr__(self, "tags", frozenset(self.tags))

    def with_tags(self, extra: Iterable[str]) -> "ChecklistItem":
        return ChecklistItem(
            id=self.id,
            question=self.question,
            weight=self.weight,
            dimension=self.dimension,
            tags=self.tags | frozenset(extra),
        )

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"id": self.id, "question": self.question}
        if self.weight is not None:
            d["weight"] = self.weight
        if self.dimension is not None:
            d["dimension"] = self.dimension
        if self.tags:
            d["tags"] = sorted(self.tags)
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ChecklistItem":
        return cls(
            id=str(d["id"]),
            question=d["question"],
            weight=d.get("weight"),
            dimension=d.get("dimension"),
            tags=frozenset(d.get("tags") or ()),
        )


@dataclass(frozen=True)
class Checklist:
    """An ordered set of checklist items plus provenance metadata."""

    id: str
    items: tuple[ChecklistItem, ...]
    level: Level
    source: str = ""
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "level", Level(self.level))
        seen: set[str] = set()
        for item in self.items:
            if item.id in seen:
                raise ValueError(f"duplicate item id {item.id!r} in checklist {self.id!r}")
            seen.add(item.id)

    def __len__(self) -> int:
        return len(self.items)

    def item_ids(self) -> list[str]:
        return [item.id for item in self.items]

    def weights(self) -> dict[str, Optional[int]]:
        return {item.id: item.weight for item in self.items}

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "level": self.level.value,
            "source": self.source,
            "items": [item.to_dict() for item in self.items],
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Checklist":
        try:
            items = tuple(ChecklistItem.from_dict(i) for i in d["items"])
        except KeyError as exc:
            raise ValueError(f"checklist document missing field {exc}") from None
        return cls(
            id=str(d.get("id", "")),
            items=items,
            level=Level(d.get("level", "instance")),
            source=d.get("source", ""),
            metadata=dict(d.get("metadata") or {}),
        )


@dataclass(frozen=True)
class ItemResult:
    """One judged checklist item.

    ``yes_probability`` is the raw per-item YES probability recovered from
    answer-token logprobs, kept alongside ``confidence`` (probability of
    the chosen answer) so callers can apply their own calibration.
    """

    item_id: str
    answer: Answer
    confidence: Optional[float] = None
    reasoning: Optional[str] = None
    yes_probability: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "answer", Answer(self.answer))
        if self.confidence is not None and not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if self.answer is Answer.INVALID and (
            self.confidence is not None or self.yes_probability is not None
        ):
            raise ValueError("INVALID answers must not carry confidence")

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"item_id": self.item_id, "answer": self.answer.value}
        if self.confidence is not None:
            d["confidence"] = self.confidence
        if self.reasoning is not None:
            d["reasoning"] = self.reasoning
        if self.yes_probability is not None:
            d["yes_probability"] = self.yes_probability
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ItemResult":
        return cls(
            item_id=d["item_id"],
            answer=Answer(d["answer"]),
            confidence=d.get("confidence"),
            reasoning=d.get("reasoning"),
            yes_probability=d.get("yes_probability"),
        )


@dataclass(frozen=True)
class ScoreReport:
    """Per-item answers plus the three aggregate metrics for one target."""

    item_results: tuple[ItemResult, ...]
    pass_rate: Optional[float]
    weighted_score: Optional[float]
    normalized_score: Optional[float]
    primary_metric: Metric
    primary_score: float
    invalid_count: int
    weighted_fallback: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "item_results": [r.to_dict() for r in self.item_results],
            "pass_rate": self.pass_rate,
            "weighted_score": self.weighted_score,
            "normalized_score": self.normalized_score,
            "primary_metric": self.primary_metric.value,
            "primary_score": self.primary_score,
            "invalid_count": self.invalid_count,
            "weighted_fallback": self.weighted_fallback,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ScoreReport":
        return cls(
            item_results=tuple(ItemResult.from_dict(r) for r in d["item_results"]),
            pass_rate=d.get("pass_rate"),
            weighted_score=d.get("weighted_score"),
            normalized_score=d.get("normalized_score"),
            primary_metric=Metric(d["primary_metric"]),
            primary_score=d["primary_score"],
            invalid_count=d.get("invalid_count", 0),
            weighted_fallback=d.get("weighted_fallback", False),
        )


@dataclass(frozen=True)
class BatchAggregate:
    """Corpus-level aggregates over a batch of score reports."""

    macro_pass_rate: Optional[float]
    drfr: Optional[float]
    macro_primary: Optional[float]
    n_targets: int
    n_items_scored: int
    n_invalid: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "macro_pass_rate": self.macro_pass_rate,
            "drfr": self.drfr,
            "macro_primary": self.macro_primary,
            "n_targets": self.n_targets,
            "n_items_scored": self.n_items_scored,
            "n_invalid": self.n_invalid,
        }


def compute_score_report(
    item_results: Sequence[ItemResult],
    weights: Optional[Mapping[str, Optional[int]]] = None,
    primary_metric: Metric | str = Metric.PASS,
    normalized_inputs: Optional[Sequence[Optional[float]]] = None,
) -> ScoreReport:
    """Compute pass, weighted, and normalized metrics for one target.

    INVALID answers are excluded from every numerator and denominator
    and surfaced through ``invalid_count``. When no item carries a
    weight, the weighted score falls back to the pass rate (flagged via
    ``weighted_fallback``); partially weighted checklists default the
    missing weights to 50. ``normalized_inputs`` aligns with
    ``item_results`` and holds per-item YES probabilities; the
    normalized score is their mean and is unavailable if any scoreable
    item lacks one.
    """
    if not item_results:
        raise ScoringError("no item results to score")
    primary_metric = _coerce_metric(primary_metric)
    weights = dict(weights or {})
    ids = [r.item_id for r in item_results]
    unknown = set(weights) - set(ids)
    if unknown:
        raise ValueError(f"weights reference unknown item ids: {sorted(unknown)}")
    if normalized_inputs is not None and len(normalized_inputs) != len(item_results):
        raise ValueError(
            f"normalized_inputs length {len(normalized_inputs)} != item count {len(item_results)}"
        )

    scoreable = [r for r in item_results if r.answer is not Answer.INVALID]
    invalid_count = len(item_results) - len(scoreable)
    if not scoreable:
        raise ScoringError("no scoreable items: every answer was INVALID")

    yes_count = sum(1 for r in scoreable if r.answer is Answer.YES)
    pass_rate = yes_count / len(scoreable)

    has_any_weight = any(weights.get(i) is not None for i in ids)
    weighted_fallback = not has_any_weight
    if weighted_fallback:
        weighted_score: Optional[float] = pass_rate
    else:
        w = {i: (weights.get(i) if weights.get(i) is not None else DEFAULT_WEIGHT) for i in ids}
        total = sum(w[r.item_id] for r in scoreable)
        if total == 0:
            weighted_score = None
        else:
            weighted_score = sum(w[r.item_id] for r in scoreable if r.answer is Answer.YES) / total

    normalized_score: Optional[float] = None
    if normalized_inputs is not None:
        probs = [
            p
            for r, p in zip(item_results, normalized_inputs)
            if r.answer is not Answer.INVALID
        ]
        if probs and all(p is not None for p in probs):
            normalized_score = sum(probs) / len(probs)

    by_metric = {
        Metric.PASS: pass_rate,
        Metric.WEIGHTED: weighted_score,
        Metric.NORMALIZED: normalized_score,
    }
    primary_score = by_metric[primary_metric]
    if primary_score is None:
        raise ScoringError(f"primary metric {primary_metric.value!r} is unavailable for this report")

    return ScoreReport(
        item_results=tuple(item_results),
        pass_rate=pass_rate,
        weighted_score=weighted_score,
        normalized_score=normalized_score,
        primary_metric=primary_metric,
        primary_score=primary_score,
        invalid_count=invalid_count,
        weighted_fallback=weighted_fallback,
    )


def aggregate_batch(reports: Sequence[ScoreReport]) -> BatchAggregate:
    """Macro-average the per-target metrics and pool items for the micro rate.

    The micro-average pass rate pools YES answers over all scoreable
    items of all targets, so it diverges from the macro average exactly
    when checklist lengths (or invalid counts) differ across targets.
    """
    if not reports:
        raise ScoringError("cannot aggregate an empty report list")
    pooled_yes = 0
    pooled_scored = 0
    pooled_invalid = 0
    for report in reports:
        for result in report.item_results:
            if result.answer is Answer.YES:
                pooled_yes += 1
            if result.answer is not Answer.INVALID:
                pooled_scored += 1
        pooled_invalid += report.invalid_count
    macro = sum(r.pass_rate for r in reports) / len(reports)
    drfr = pooled_yes / pooled_scored if pooled_scored else None
    macro_primary = sum(r.primary_score for r in reports) / len(reports)
    return BatchAggregate(
        macro_pass_rate=macro,
        drfr=drfr,
        macro_primary=macro_primary,
        n_targets=len(reports),
        n_items_scored=pooled_scored,
        n_invalid=pooled_invalid,
    )
