"""Checklist generation strategies.

Two instance-level generators build one checklist per input (direct,
contrastive) and three corpus-level generators build one checklist per
dataset (inductive, deductive, interactive). All five expose the same
``generate(context) -> Checklist`` surface so pipelines can compose any
of them with any scorer.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

from .core import Checklist, ChecklistItem, Level
from .errors import GenerationError, ParseError, TemplateError
from .llm import ChatRequest, LLMClient, StructuredSchema
from .templates import PromptTemplate, get_template

logger = logging.getLogger(__name__)

QUALITY_LADDER = ("excellent", "mediocre", "flawed", "minimal effort")

QUALITY_DESCRIPTIONS = {
    "excellent": "Answer as well as you possibly can: complete, accurate, well organized.",
    "mediocre": "Answer adequately but unevenly: cover the basics, miss some details, keep the polish low.",
    "flawed": "Answer poorly: include mistakes, skip requirements, organize badly.",
    "minimal effort": "Answer with as little effort as possible: one or two careless sentences.",
}


@dataclass(frozen=True)
class Dimension:
    """A named evaluation aspect, optionally split into sub-dimensions."""

    name: str
    description: str = ""
    sub_dimensions: tuple["Dimension", ...] = ()

    def __post_init__(self):
        if not self.name.strip():
            raise ValueError("dimension name must be non-empty")
        object.__setattr__(self, "sub_dimensions", tuple(self.sub_dimensions))

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"name": self.name, "description": self.description}
        if self.sub_dimensions:
            d["sub_dimensions"] = [s.to_dict() for s in self.sub_dimensions]
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Dimension":
        return cls(
            name=d["name"],
            description=d.get("description", ""),
            sub_dimensions=tuple(cls.from_dict(s) for s in d.get("sub_dimensions") or ()),
        )


# Default taxonomies for the dimension-seeded pipelines; override with a
# dimensions file or generator params.
SUMMARY_DIMENSIONS = (
    Dimension("coherence", "The text reads as a connected whole: ideas follow each other and nothing feels out of place."),
    Dimension("consistency", "Every claim in the text is supported by the source material, with no invented facts."),
    Dimension("fluency", "Sentences are grammatical, natural, and free of formatting artifacts."),
    Dimension("relevance", "The text includes the important content and leaves out trivia."),
)

DISCUSSION_DIMENSIONS = (
    Dimension("relevance", "The text addresses the question it was asked and stays on topic."),
    Dimension("argumentation quality", "Claims are supported by evidence and reasoning, and counterpoints are handled honestly."),
    Dimension("communication quality", "The writing is clear, well structured, and appropriately concise."),
)


@dataclass(frozen=True)
class GenerationContext:
    """Everything a generator may draw on for one generation run."""

    input: str = ""
    reference: Optional[str] = None
    preference_pairs: tuple[tuple[str, str], ...] = ()
    corpus: tuple[Any, ...] = ()
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self, "preference_pairs", tuple((c, r) for c, r in self.preference_pairs)
        )
        object.__setattr__(self, "corpus", tuple(self.corpus))
        object.__setattr__(self, "params", dict(self.params))


def checklist_schema(with_weights: bool = False) -> StructuredSchema:
    item_props: dict[str, Any] = {"question": {"type": "string"}}
    required = ["question"]
    if with_weights:
        item_props["weight"] = {"type": "integer", "minimum": 0, "maximum": 100}
        required.append("weight")
    return StructuredSchema(
        name="checklist",
        schema={
            "type": "object",
            "properties": {
                "items": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": item_props,
                        "required": required,
                    },
                }
            },
            "required": ["items"],
        },
    )


def statements_schema(dimension_names: Sequence[str]) -> StructuredSchema:
    return StructuredSchema(
        name="statements",
        schema={
            "type": "object",
            "properties": {
                "statements": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "statement": {"type": "string"},
                            "dimension": {"type": "string", "enum": list(dimension_names)},
                            "polarity": {"type": "string", "enum": ["positive", "negative"]},
                        },
                        "required": ["statement", "dimension", "polarity"],
                    },
                }
            },
            "required": ["statements"],
        },
    )


QUESTION_SCHEMA = StructuredSchema(
    name="question",
    schema={
        "type": "object",
        "properties": {"question": {"type": "string"}},
        "required": ["question"],
    },
)


def _call_structured(
    client: LLMClient, model: str, template: PromptTemplate,
    bindings: Mapping[str, str], schema: StructuredSchema,
) -> Any:
    try:
        messages = template.render(bindings)
    except TemplateError as exc:
        raise GenerationError(str(exc)) from exc
    request = ChatRequest(model=model, messages=tuple(messages), schema=schema)
    try:
        response = client.complete(request)
    except ParseError as exc:
        raise GenerationError(
            f"model output for template {template.name!r} was not parseable: {exc}"
        ) from exc
    if response.parsed is None:
        raise GenerationError(f"model returned no structured output for template {template.name!r}")
    return response.parsed


def _call_text(
    client: LLMClient, model: str, template: PromptTemplate, bindings: Mapping[str, str]
) -> str:
    try:
        messages = template.render(bindings)
    except TemplateError as exc:
        raise GenerationError(str(exc)) from exc
    response = client.complete(ChatRequest(model=model, messages=tuple(messages)))
    return response.text


def _entry_weight(raw: Any, question: str) -> Optional[int]:
    if raw is None:
        return None
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise GenerationError(f"generated weight {raw!r} for {question!r} is not a number")
    if isinstance(raw, float):
        if not raw.is_integer():
            raise GenerationError(f"generated weight {raw} for {question!r} is not an integer")
        raw = int(raw)
    if not 0 <= raw <= 100:
        raise GenerationError(
            f"generated weight {raw} for {question!r} is outside [0, 100]; "
            "refusing to clamp silently"
        )
    return int(raw)


def _questions_from_payload(payload: Any, origin: str) -> list[tuple[str, Optional[int]]]:
    """Pull (question, weight) pairs out of a structured generation reply."""
    entries = payload.get("items") if isinstance(payload, Mapping) else None
    if not isinstance(entries, list):
        raise GenerationError(f"{origin}: reply has no 'items' list")
    out: list[tuple[str, Optional[int]]] = []
    for entry in entries:
        if not isinstance(entry, Mapping):
            continue
        question = str(entry.get("question", "")).strip()
        if not question:
            continue
        out.append((question, _entry_weight(entry.get("weight"), question)))
    return out


def _checklist_id(kind: str, questions: Sequence[str]) -> str:
    digest = hashlib.sha256(("\n".join([kind, *questions])).encode("utf-8")).hexdigest()
    return f"cl-{digest[:12]}"


def _build_checklist(
    kind: str, level: Level, items: Sequence[ChecklistItem],
    metadata: Optional[Mapping[str, str]] = None,
) -> Checklist:
    if not items:
        raise GenerationError(f"{kind} generation produced an empty checklist")
    return Checklist(
        id=_checklist_id(kind, [i.question for i in items]),
        items=tuple(items),
        level=level,
        source=kind,
        metadata=dict(metadata or {}),
    )


class ChecklistGenerator:
    """Common surface: a kind, a level, and generate(context)."""

    kind: str = ""
    level: Level = Level.INSTANCE

    def generate(self, ctx: GenerationContext) -> Checklist:
        raise NotImplementedError

    def _require_input(self, ctx: GenerationContext) -> str:
        if not ctx.input.strip():
            raise GenerationError(f"{self.kind} generation needs a non-empty input")
        return ctx.input


class DirectGenerator(ChecklistGenerator):
    """Single structured call: input (and optionally a reference) to items."""

    kind = "direct"
    level = Level.INSTANCE

    def __init__(
        self,
        client: LLMClient,
        model: str,
        template: Optional[PromptTemplate] = None,
        use_reference: bool = False,
        with_weights: bool = False,
    ):
        self.client = client
        self.model = model
        self.template = template or get_template("tick_gen")
        self.use_reference = use_reference
        self.with_weights = with_weights

    def generate(self, ctx: GenerationContext) -> Checklist:
        text = self._require_input(ctx)
        bindings = {"input": text}
        if self.use_reference and ctx.reference is not None:
            bindings["reference"] = ctx.reference
        payload = _call_structured(
            self.client, self.model, self.template, bindings, checklist_schema(self.with_weights)
        )
        pairs = _questions_from_payload(payload, "direct generation")
        items = [
            ChecklistItem(id=f"q{i + 1}", question=q, weight=w)
            for i, (q, w) in enumerate(pairs)
        ]
        return _build_checklist(self.kind, self.level, items)


def format_candidates(labeled: Sequence[tuple[str, str]]) -> str:
    """Join (label, text) candidate pairs into one prompt block."""
    blocks = [f"--- {label} ---\n{text.strip()}" for label, text in labeled]
    return "\n\n".join(blocks)


class ContrastiveGenerator(ChecklistGenerator):
    """Derive criteria from quality differences between responses.

    With preference pairs in the context, contrasts chosen vs rejected
    directly (no candidate generation). Otherwise generates k candidates
    at descending quality levels first. Pairwise style contrasts one pair
    per call and unions the questions; listwise passes everything at once.
    """

    kind = "contrastive"
    level = Level.INSTANCE

    def __init__(
        self,
        client: LLMClient,
        model: str,
        contrast_template: Optional[PromptTemplate] = None,
        candidate_template: Optional[PromptTemplate] = None,
        style: str = "listwise",
        k: int = 4,
        use_reference: bool = False,
        with_weights: bool = False,
        candidate_model: Optional[str] = None,
    ):
        if style not in ("pairwise", "listwise"):
            raise ValueError(f"unknown contrastive style {style!r}")
        if k < 2:
            raise ValueError(f"contrastive generation needs k >= 2 candidates, got k={k}")
        self.client = client
        self.model = model
        self.contrast_template = contrast_template or get_template(
            "or_pairwise_contrast" if style == "pairwise" else "or_listwise_contrast"
        )
        self.candidate_template = candidate_template or get_template("candidate_gen")
        self.style = style
        self.k = k
        self.use_reference = use_reference
        self.with_weights = with_weights
        self.candidate_model = candidate_model or model

    def generate(self, ctx: GenerationContext) -> Checklist:
        text = self._require_input(ctx)
        if ctx.preference_pairs:
            groups = [
                [("Response A (preferred)", chosen), ("Response B (not preferred)", rejected)]
                for chosen, rejected in ctx.preference_pairs
            ]
        else:
            candidates = self._generate_candidates(text)
            if self.style == "pairwise":
                best_label, best = candidates[0]
                groups = [
                    [(f"Response A ({best_label})", best), (f"Response B ({label})", weaker)]
                    for label, weaker in candidates[1:]
                ]
            else:
                groups = [list(candidates)]

        seen: set[str] = set()
        collected: list[tuple[str, Optional[int]]] = []
        for group in groups:
            bindings = {"input": text, "candidates": format_candidates(group)}
            if self.use_reference and ctx.reference is not None:
                bindings["reference"] = ctx.reference
            payload = _call_structured(
                self.client, self.model, self.contrast_template,
                bindings, checklist_schema(self.with_weights),
            )
            for question, weight in _questions_from_payload(payload, "contrast call"):
                key = question.strip().lower()
                if key in seen:
                    continue
                seen.add(key)
                collected.append((question, weight))

        items = [
            ChecklistItem(id=f"q{i + 1}", question=q, weight=w)
            for i, (q, w) in enumerate(collected)
        ]
        return _build_checklist(self.kind, self.level, items)

    def _generate_candidates(self, text: str) -> list[tuple[str, str]]:
        if self.k < 2:
            raise GenerationError("contrastive candidate mode needs k >= 2 candidates")
        out = []
        for i in range(self.k):
            quality = QUALITY_LADDER[i % len(QUALITY_LADDER)]
            response = _call_text(
                self.client, self.candidate_model, self.candidate_template,
                {
                    "input": text,
                    "quality": quality,
                    "quality_description": QUALITY_DESCRIPTIONS[quality],
                },
            )
            out.append((f"intended quality: {quality}", response))
        return out


class InductiveGenerator(ChecklistGenerator):
    """Generalize a feedback corpus into criteria, then refine them.

    Feedback items are batched into extraction calls; pooled candidates
    flow through the dedup/tag/unit-test/select chain, every stage
    individually toggleable. A per-stage audit trail lands in the
    checklist metadata.
    """

    kind = "inductive"
    level = Level.CORPUS

    def __init__(
        self,
        client: LLMClient,
        model: str,
        extract_template: Optional[PromptTemplate] = None,
        batch_size: int = 8,
        dedup: bool = True,
        dedup_threshold: float = 0.85,
        tag_quality: Optional[tuple[str, str]] = None,
        unit_test_trials: int = 0,
        select_max_len: Optional[int] = None,
        embed_model: Optional[str] = None,
    ):
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        self.client = client
        self.model = model
        self.extract_template = extract_template or get_template("feedback_extract")
        self.batch_size = batch_size
        self.dedup = dedup
        self.dedup_threshold = dedup_threshold
        self.tag_quality = tag_quality
        self.unit_test_trials = unit_test_trials
        self.select_max_len = select_max_len
        self.embed_model = embed_model

    def generate(self, ctx: GenerationContext) -> Checklist:
        feedback = [str(x).strip() for x in ctx.corpus if str(x).strip()]
        if not feedback:
            raise GenerationError("inductive generation needs a non-empty feedback corpus")

        pairs: list[tuple[str, Optional[int]]] = []
        for start in range(0, len(feedback), self.batch_size):
            batch = feedback[start : start + self.batch_size]
            block = "\n".join(f"- {item}" for item in batch)
            payload = _call_structured(
                self.client, self.model, self.extract_template,
                {"feedback_items": block}, checklist_schema(False),
            )
            pairs.extend(_questions_from_payload(payload, "feedback extraction"))
        if not pairs:
            raise GenerationError("feedback extraction produced no candidate questions")

        items = [
            ChecklistItem(id=f"q{i + 1}", question=q, weight=w)
            for i, (q, w) in enumerate(pairs)
        ]
        checklist = Checklist(
            id=_checklist_id(self.kind, [i.question for i in items]),
            items=tuple(items),
            level=self.level,
            source=self.kind,
        )
        checklist, audit = self._refine(checklist, feedback)
        if not checklist.items:
            raise GenerationError("refinement eliminated every candidate question")
        metadata = dict(checklist.metadata)
        metadata["refinement"] = json.dumps(audit)
        return Checklist(
            id=_checklist_id(self.kind, [i.question for i in checklist.items]),
            items=checklist.items,
            level=self.level,
            source=self.kind,
            metadata=metadata,
        )

    def _refine(
        self, checklist: Checklist, signals: Sequence[str]
    ) -> tuple[Checklist, list[dict[str, Any]]]:
        from . import refiners

        audit: list[dict[str, Any]] = []

        def run(stage_name: str, fn) -> None:
            nonlocal checklist
            refined, report = fn(checklist)
            audit.append(
                {"stage": stage_name, "items_in": report.items_in, "items_out": report.items_out}
            )
            if not refined.items:
                raise GenerationError(f"refinement stage {stage_name!r} eliminated all items")
            checklist = refined

        if self.dedup:
            run(
                "dedup",
                lambda cl: refiners.Deduplicator(
                    self.client, self.model,
                    threshold=self.dedup_threshold, embed_model=self.embed_model,
                ).refine(cl),
            )
        if self.tag_quality is not None:
            quality, description = self.tag_quality
            run(
                "tag",
                lambda cl: refiners.Tagger(
                    self.client, self.model, quality=quality, description=description,
                    keep_policy="drop_fail",
                ).refine(cl),
            )
        if self.unit_test_trials > 0:
            run(
                "unit_test",
                lambda cl: refiners.UnitTester(
                    self.client, self.model, trials=self.unit_test_trials
                ).refine(cl),
            )
        if self.select_max_len is not None:

            def select_stage(cl: Checklist):
                matches = refiners.build_match_matrix(self.client, self.model, cl, signals)
                objective = refiners.coverage_objective(matches, len(signals))
                return refiners.Selector(objective, max_len=self.select_max_len).refine(cl)

            run("select", select_stage)
        return checklist, audit


class DeductiveGenerator(ChecklistGenerator):
    """Expand expert-defined dimensions into labeled questions."""

    kind = "deductive"
    level = Level.CORPUS

    def __init__(
        self,
        client: LLMClient,
        model: str,
        dimensions: Sequence[Dimension] = (),
        template: Optional[PromptTemplate] = None,
        augment_template: Optional[PromptTemplate] = None,
        augment: bool = False,
    ):
        self.client = client
        self.model = model
        self.dimensions = tuple(dimensions)
        self.template = template or get_template("checkeval_gen")
        self.augment_template = augment_template or get_template("checkeval_augment")
        self.augment = augment

    def generate(self, ctx: GenerationContext) -> Checklist:
        dimensions = self._resolve_dimensions(ctx)
        units = self._flatten(dimensions)

        groups: list[tuple[str, list[str]]] = []
        for name, description in units:
            payload = _call_structured(
                self.client, self.model, self.template,
                {"dimension": name, "dimension_description": description, "input": ctx.input},
                checklist_schema(False),
            )
            questions = [q for q, _ in _questions_from_payload(payload, f"dimension {name!r}")]
            if not questions:
                raise GenerationError(f"dimension {name!r} produced no checklist items")
            groups.append((name, questions))

        if self.augment:
            for i, (name, questions) in enumerate(groups):
                description = units[i][1]
                listed = "\n".join(f"- {q}" for q in questions)
                payload = _call_structured(
                    self.client, self.model, self.augment_template,
                    {"dimension": name, "dimension_description": description, "checklist": listed},
                    checklist_schema(False),
                )
                known = {q.strip() for q in questions}
                for q, _ in _questions_from_payload(payload, f"augment {name!r}"):
                    if q.strip() not in known:
                        known.add(q.strip())
                        questions.append(q)

        items: list[ChecklistItem] = []
        for name, questions in groups:
            for q in questions:
                items.append(ChecklistItem(id=f"q{len(items) + 1}", question=q, dimension=name))
        return _build_checklist(self.kind, self.level, items)

    def _resolve_dimensions(self, ctx: GenerationContext) -> tuple[Dimension, ...]:
        raw = ctx.params.get("dimensions")
        if raw:
            return tuple(d if isinstance(d, Dimension) else Dimension.from_dict(d) for d in raw)
        if ctx.corpus and all(isinstance(d, (Dimension, Mapping)) for d in ctx.corpus):
            return tuple(
                d if isinstance(d, Dimension) else Dimension.from_dict(d) for d in ctx.corpus
            )
        if self.dimensions:
            return self.dimensions
        raise GenerationError("deductive generation needs a non-empty dimension list")

    @staticmethod
    def _flatten(dimensions: Sequence[Dimension]) -> list[tuple[str, str]]:
        units: list[tuple[str, str]] = []
        for dim in dimensions:
            if dim.sub_dimensions:
                for sub in dim.sub_dimensions:
                    units.append((sub.name, f"{sub.description} (part of {dim.name})".strip()))
            else:
                units.append((dim.name, dim.description))
        return units


class InteractiveGenerator(ChecklistGenerator):
    """Distill think-aloud evaluation transcripts into questions.

    Per transcript, atomic evaluation statements are extracted and
    labeled with a dimension; statements are embedded and clustered per
    dimension; each cluster becomes one question; exact duplicates are
    dropped across dimensions.
    """

    kind = "interactive"
    level = Level.CORPUS

    def __init__(
        self,
        client: LLMClient,
        model: str,
        dimensions: Sequence[Dimension] = DISCUSSION_DIMENSIONS,
        extract_template: Optional[PromptTemplate] = None,
        question_template: Optional[PromptTemplate] = None,
        cluster_threshold: float = 0.85,
        embed_model: Optional[str] = None,
    ):
        if not dimensions:
            raise ValueError("interactive generation needs at least one dimension")
        if not 0 < cluster_threshold <= 1:
            raise ValueError("cluster_threshold must be in (0, 1]")
        self.client = client
        self.model = model
        self.dimensions = tuple(dimensions)
        self.extract_template = extract_template or get_template("interacteval_extract")
        self.question_template = question_template or get_template("interacteval_cluster_label")
        self.cluster_threshold = cluster_threshold
        self.embed_model = embed_model

    def generate(self, ctx: GenerationContext) -> Checklist:
        transcripts = [str(t).strip() for t in ctx.corpus if str(t).strip()]
        if not transcripts:
            raise GenerationError("interactive generation needs a non-empty transcript corpus")

        names = [d.name for d in self.dimensions]
        described = "\n".join(f"- {d.name}: {d.description}" for d in self.dimensions)
        schema = statements_schema(names)

        # (statement, dimension, polarity), in transcript order
        statements: list[tuple[str, str, str]] = []
        for transcript in transcripts:
            payload = _call_structured(
                self.client, self.model, self.extract_template,
                {"transcript": transcript, "dimensions": described}, schema,
            )
            rows = payload.get("statements") if isinstance(payload, Mapping) else None
            if not isinstance(rows, list):
                raise GenerationError("statement extraction reply has no 'statements' list")
            for row in rows:
                if not isinstance(row, Mapping):
                    continue
                text = str(row.get("statement", "")).strip()
                dim = str(row.get("dimension", "")).strip()
                if not text or dim not in names:
                    continue
                polarity = str(row.get("polarity", "")).strip() or "unspecified"
                statements.append((text, dim, polarity))
        if not statements:
            raise GenerationError("no evaluation statements were extracted from the transcripts")

        from .refiners import cluster_indexes

        items: list[ChecklistItem] = []
        seen_questions: set[str] = set()
        for name in names:
            members = [(i, s) for i, s in enumerate(statements) if s[1] == name]
            if not members:
                continue
            vectors = self.client.embed([s[0] for _, s in members], model=self.embed_model)
            for cluster in cluster_indexes(vectors, self.cluster_threshold):
                texts = [members[j][1][0] for j in cluster]
                polarities = {members[j][1][2] for j in cluster}
                payload = _call_structured(
                    self.client, self.model, self.question_template,
                    {"dimension": name, "statements": "\n".join(f"- {t}" for t in texts)},
                    QUESTION_SCHEMA,
                )
                question = ""
                if isinstance(payload, Mapping):
                    question = str(payload.get("question", "")).strip()
                if not question:
                    raise GenerationError(f"cluster labeling returned no question for {name!r}")
                key = question.lower()
                if key in seen_questions:
                    continue
                seen_questions.add(key)
                items.append(
                    ChecklistItem(
                        id=f"q{len(items) + 1}",
                        question=question,
                        dimension=name,
                        tags=frozenset(f"polarity:{p}" for p in sorted(polarities)),
                    )
                )
        return _build_checklist(self.kind, self.level, items)


GENERATOR_KINDS = ("direct", "contrastive", "inductive", "deductive", "interactive")
