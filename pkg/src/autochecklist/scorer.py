"""The unified checklist scorer.

One configurable interface covers the scoring styles of the source
methods: batch mode judges the whole checklist in a single structured
call, item mode judges one question per call (concurrently) and can
recover per-item YES probabilities from answer-token logprobs.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping, Optional, Sequence

from .core import (
    Answer,
    Checklist,
    ChecklistItem,
    ItemResult,
    Metric,
    ScoreReport,
    compute_score_report,
)
from .errors import AutoChecklistError, ConfigError, ParseError, ScoringError
from .llm import (
    ChatRequest,
    LLMClient,
    StructuredSchema,
    answer_kind,
    parse_answer_text,
    yes_probability,
)
from .templates import PromptTemplate, get_template

MAX_ITEM_WORKERS = 8


class ScoreMode(str, Enum):
    BATCH = "batch"
    ITEM = "item"


@dataclass(frozen=True)
class ScorerConfig:
    """How a checklist gets judged for one target."""

    mode: ScoreMode = ScoreMode.BATCH
    primary_metric: Metric = Metric.PASS
    capture_reasoning: bool = False
    use_logprobs: bool = False
    model: str = ""
    template: Optional[PromptTemplate] = None
    temperature: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mode", ScoreMode(self.mode))
        object.__setattr__(self, "primary_metric", Metric(self.primary_metric))
        if self.use_logprobs and self.mode is not ScoreMode.ITEM:
            raise ConfigError(
                "use_logprobs requires item mode: the answer token is only "
                "isolatable when one question is asked per call"
            )
        if self.primary_metric is Metric.NORMALIZED and not self.use_logprobs:
            raise ConfigError("the normalized metric requires use_logprobs")

    def resolved_template(self) -> PromptTemplate:
        if self.template is not None:
            return self.template
        return get_template("score_item" if self.mode is ScoreMode.ITEM else "score_batch")


def answers_schema(item_ids: Sequence[str], capture_reasoning: bool) -> StructuredSchema:
    props: dict[str, Any] = {
        "item_id": {"type": "string", "enum": list(item_ids)},
        "answer": {"type": "string", "enum": ["YES", "NO"]},
    }
    required = ["item_id", "answer"]
    if capture_reasoning:
        props["reasoning"] = {"type": "string"}
        required.append("reasoning")
    return StructuredSchema(
        name="checklist_answers",
        schema={
            "type": "object",
            "properties": {
                "answers": {
                    "type": "array",
                    "items": {"type": "object", "properties": props, "required": required},
                }
            },
            "required": ["answers"],
        },
    )


def item_answer_schema(capture_reasoning: bool) -> StructuredSchema:
    props: dict[str, Any] = {"answer": {"type": "string", "enum": ["YES", "NO"]}}
    required = ["answer"]
    if capture_reasoning:
        props["reasoning"] = {"type": "string"}
        required.append("reasoning")
    return StructuredSchema(
        name="item_answer",
        schema={"type": "object", "properties": props, "required": required},
    )


_REASONING = re.compile(r"reasoning\s*:\s*(.+)", re.IGNORECASE | re.DOTALL)


def _extract_reasoning(text: str) -> str:
    match = _REASONING.search(text)
    return (match.group(1) if match else text).strip()


class ChecklistScorer:
    """Judge targets against a checklist per one ScorerConfig."""

    def __init__(self, client: LLMClient, config: ScorerConfig):
        self.client = client
        self.config = config

    def score(
        self,
        checklist: Checklist,
        target: str,
        input: Optional[str] = None,
        reference: Optional[str] = None,
    ) -> ScoreReport:
        if not checklist.items:
            raise ScoringError("cannot score an empty checklist")
        if not target.strip():
            raise ScoringError("cannot score an empty target text")
        bindings: dict[str, str] = {"target": target}
        if input is not None:
            bindings["input"] = input
        if reference is not None:
            bindings["reference"] = reference

        if self.config.mode is ScoreMode.BATCH:
            results = self._score_batch(checklist, bindings)
        else:
            results = self._score_items(checklist, bindings)

        normalized_inputs = None
        if self.config.use_logprobs:
            normalized_inputs = [r.yes_probability for r in results]
        return compute_score_report(
            results,
            weights=checklist.weights(),
            primary_metric=self.config.primary_metric,
            normalized_inputs=normalized_inputs,
        )

    def score_pair(
        self,
        checklist: Checklist,
        chosen: str,
        rejected: str,
        input: Optional[str] = None,
        reference: Optional[str] = None,
    ) -> tuple[ScoreReport, ScoreReport, float]:
        chosen_report = self.score(checklist, chosen, input=input, reference=reference)
        rejected_report = self.score(checklist, rejected, input=input, reference=reference)
        delta = chosen_report.primary_score - rejected_report.primary_score
        return chosen_report, rejected_report, delta

    # -- batch mode -------------------------------------------------------

    def _score_batch(self, checklist: Checklist, bindings: Mapping[str, str]) -> list[ItemResult]:
        listed = "\n".join(f"{i.id}. {i.question}" for i in checklist.items)
        messages = self.config.resolved_template().render({**bindings, "checklist": listed})
        schema = answers_schema(checklist.item_ids(), self.config.capture_reasoning)
        try:
            response = self.client.complete(
                ChatRequest(
                    model=self.config.model,
                    messages=tuple(messages),
                    schema=schema,
                    temperature=self.config.temperature,
                )
            )
        except ParseError as exc:
            raise ScoringError(f"batch scoring output was not parseable: {exc}") from exc
        rows = response.parsed.get("answers") if isinstance(response.parsed, Mapping) else None
        if not isinstance(rows, list):
            raise ScoringError("batch scoring reply has no 'answers' list")

        by_id: dict[str, tuple[str, Optional[str]]] = {}
        for row in rows:
            if not isinstance(row, Mapping):
                continue
            item_id = str(row.get("item_id", ""))
            if item_id in by_id:
                continue
            reasoning = row.get("reasoning")
            by_id[item_id] = (str(row.get("answer", "")), str(reasoning) if reasoning else None)

        missing = [i for i in checklist.item_ids() if i not in by_id]
        if missing:
            raise ScoringError(f"batch answers missing item ids: {missing}")

        results = []
        for item in checklist.items:
            raw, reasoning = by_id[item.id]
            kind = answer_kind(raw)
            results.append(
                ItemResult(
                    item_id=item.id,
                    answer=Answer(kind) if kind else Answer.INVALID,
                    reasoning=reasoning if self.config.capture_reasoning else None,
                )
            )
        return results

    # -- item mode --------------------------------------------------------

    def _score_items(self, checklist: Checklist, bindings: Mapping[str, str]) -> list[ItemResult]:
        def judge(item: ChecklistItem) -> ItemResult:
            last_error: Optional[Exception] = None
            for _ in range(2):
                try:
                    return self._score_one(item, bindings)
                except AutoChecklistError as exc:
                    last_error = exc
            return ItemResult(
                item_id=item.id,
                answer=Answer.INVALID,
                reasoning=f"scoring failed: {last_error}",
            )

        if len(checklist.items) == 1:
            return [judge(checklist.items[0])]
        workers = min(len(checklist.items), MAX_ITEM_WORKERS)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(judge, checklist.items))

    def _score_one(self, item: ChecklistItem, base: Mapping[str, str]) -> ItemResult:
        messages = self.config.resolved_template().render({**base, "question": item.question})
        if self.config.use_logprobs:
            response = self.client.complete(
                ChatRequest(
                    model=self.config.model,
                    messages=tuple(messages),
                    want_logprobs=True,
                    temperature=self.config.temperature,
                )
            )
            verdict = parse_answer_text(response.text)
            if verdict is None:
                raise ScoringError(f"item {item.id}: no YES/NO answer in reply")
            p_yes = yes_probability(response)
            confidence = None
            if p_yes is not None:
                confidence = p_yes if verdict == "YES" else 1.0 - p_yes
            reasoning = None
            if self.config.capture_reasoning:
                reasoning = _extract_reasoning(response.text)
            return ItemResult(
                item_id=item.id,
                answer=Answer(verdict),
                confidence=confidence,
                reasoning=reasoning,
                yes_probability=p_yes,
            )

        schema = item_answer_schema(self.config.capture_reasoning)
        try:
            response = self.client.complete(
                ChatRequest(
                    model=self.config.model,
                    messages=tuple(messages),
                    schema=schema,
                    temperature=self.config.temperature,
                )
            )
        except ParseError as exc:
            raise ScoringError(f"item {item.id}: unparseable reply: {exc}") from exc
        payload = response.parsed if isinstance(response.parsed, Mapping) else None
        if payload is None:
            raise ScoringError(f"item {item.id}: reply carried no structured answer")
        kind = answer_kind(str(payload.get("answer", "")))
        if kind is None:
            raise ScoringError(f"item {item.id}: answer {payload.get('answer')!r} is not YES/NO")
        reasoning = None
        if self.config.capture_reasoning and payload.get("reasoning"):
            reasoning = str(payload["reasoning"])
        return ItemResult(item_id=item.id, answer=Answer(kind), reasoning=reasoning)
