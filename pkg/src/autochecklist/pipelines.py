"""Pipeline registry, factory, and JSON config round-tripping.

A pipeline pairs one generator with an optional refiner chain and a
scorer configuration. Ten built-in configurations are registered at
import; custom pipelines register alongside them and behave identically
across the factory, the CLI, and the service.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

from .core import Checklist, Metric, ScoreReport
from .errors import ConfigError
from .generators import (
    GENERATOR_KINDS,
    ChecklistGenerator,
    ContrastiveGenerator,
    DeductiveGenerator,
    Dimension,
    DirectGenerator,
    DISCUSSION_DIMENSIONS,
    GenerationContext,
    InductiveGenerator,
    InteractiveGenerator,
    SUMMARY_DIMENSIONS,
)
from .llm import LLMClient, make_client
from .refiners import (
    DEFAULT_PROBE_TARGET,
    Deduplicator,
    Refiner,
    RefinerReport,
    Selector,
    Tagger,
    UnitTester,
    apply_refiners,
    build_match_matrix,
    coverage_objective,
    discrimination_objective,
    load_match_matrix,
)
from .scorer import ChecklistScorer, ScoreMode, ScorerConfig
from .templates import (
    PromptTemplate,
    get_template,
    has_template,
    is_builtin_template,
    load_template,
    register_template,
)

REFINER_STAGES = ("dedup", "tag", "unit_test", "select")

REFINER_ALIASES = {
    "deduplicator": "dedup",
    "dedup": "dedup",
    "tagger": "tag",
    "tag": "tag",
    "unit_tester": "unit_test",
    "unit_test": "unit_test",
    "selector": "select",
    "select": "select",
}

# qualities the tag stage knows out of the box; params may supply others
QUALITY_DESCRIPTIONS = {
    "generality": "The question applies beyond one specific response and could be asked about any response to a similar task.",
    "specificity": "The question tests one concrete, observable property rather than a vague impression.",
    "objectivity": "Two careful judges reading the same response would give the same answer.",
    "atomicity": "The question asks about exactly one thing.",
}

_SCORE_BINDINGS = {
    ScoreMode.BATCH: frozenset({"target", "checklist", "input", "reference"}),
    ScoreMode.ITEM: frozenset({"target", "question", "input", "reference"}),
}


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    templates: Mapping[str, str] = field(default_factory=dict)
    params: Mapping[str, Any] = field(default_factory=dict)
    model: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "templates", dict(self.templates))
        object.__setattr__(self, "params", dict(self.params))
        if self.kind not in GENERATOR_KINDS:
            raise ConfigError(
                f"unknown generator kind {self.kind!r}; expected one of {GENERATOR_KINDS}"
            )


@dataclass(frozen=True)
class RefinerSpec:
    stage: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "params", dict(self.params))
        if self.stage not in REFINER_STAGES:
            raise ConfigError(
                f"unknown refiner stage {self.stage!r}; expected one of {REFINER_STAGES}"
            )


@dataclass(frozen=True)
class ScorerSpec:
    mode: str = "batch"
    primary_metric: str = "pass"
    use_logprobs: bool = False
    capture_reasoning: bool = False
    template: str = "score_batch"

    def __post_init__(self):
        object.__setattr__(self, "mode", ScoreMode(self.mode).value)
        object.__setattr__(self, "primary_metric", Metric(self.primary_metric).value)


@dataclass(frozen=True)
class PipelineConfig:
    name: str
    generator: GeneratorSpec
    refiners: tuple[RefinerSpec, ...] = ()
    scorer: ScorerSpec = field(default_factory=ScorerSpec)
    uses_reference: bool = False

    def __post_init__(self):
        object.__setattr__(self, "refiners", tuple(self.refiners))
        if not self.name:
            raise ConfigError("pipeline name must be non-empty")
        for stage, name in self.generator.templates.items():
            if not has_template(name):
                raise ConfigError(
                    f"pipeline {self.name!r}: generator template {name!r} ({stage}) is not registered"
                )
        if not has_template(self.scorer.template):
            raise ConfigError(
                f"pipeline {self.name!r}: scorer template {self.scorer.template!r} is not registered"
            )
        # delegate the mode/metric/logprob invariants to the scorer config
        ScorerConfig(
            mode=self.scorer.mode,
            primary_metric=self.scorer.primary_metric,
            use_logprobs=self.scorer.use_logprobs,
            capture_reasoning=self.scorer.capture_reasoning,
        )
        mode = ScoreMode(self.scorer.mode)
        allowed = _SCORE_BINDINGS[mode]
        needed = get_template(self.scorer.template).required_placeholders
        extra = needed - allowed
        if extra:
            raise ConfigError(
                f"pipeline {self.name!r}: scorer template {self.scorer.template!r} requires "
                f"{sorted(extra)} which {mode.value} mode does not bind"
            )

    def to_dict(self) -> dict[str, Any]:
        generator: dict[str, Any] = {
            "kind": self.generator.kind,
            "templates": dict(self.generator.templates),
            "params": _jsonable(self.generator.params),
        }
        if self.generator.model is not None:
            generator["model"] = self.generator.model
        return {
            "name": self.name,
            "generator": generator,
            "refiners": [
                {"stage": r.stage, "params": _jsonable(r.params)} for r in self.refiners
            ],
            "scorer": {
                "mode": self.scorer.mode,
                "primary_metric": self.scorer.primary_metric,
                "use_logprobs": self.scorer.use_logprobs,
                "capture_reasoning": self.scorer.capture_reasoning,
                "template": self.scorer.template,
            },
            "uses_reference": self.uses_reference,
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "PipelineConfig":
        if not isinstance(doc, Mapping):
            raise ConfigError("pipeline config must be a JSON object")
        for required in ("name", "generator"):
            if required not in doc:
                raise ConfigError(f"pipeline config missing field {required!r}")
        gen = doc["generator"]
        if not isinstance(gen, Mapping) or "kind" not in gen:
            raise ConfigError("pipeline config field 'generator' needs a 'kind'")
        scorer_doc = doc.get("scorer") or {}
        known = {"mode", "primary_metric", "use_logprobs", "capture_reasoning", "template"}
        unknown = set(scorer_doc) - known
        if unknown:
            raise ConfigError(f"pipeline config scorer has unknown fields {sorted(unknown)}")
        return cls(
            name=str(doc["name"]),
            generator=GeneratorSpec(
                kind=gen["kind"],
                templates=dict(gen.get("templates") or {}),
                params=dict(gen.get("params") or {}),
                model=gen.get("model"),
            ),
            refiners=tuple(
                RefinerSpec(stage=r["stage"], params=dict(r.get("params") or {}))
                for r in doc.get("refiners") or ()
            ),
            scorer=ScorerSpec(**scorer_doc),
            uses_reference=bool(doc.get("uses_reference", False)),
        )


def _jsonable(value: Any) -> Any:
    return json.loads(json.dumps(value))


# -- registry -------------------------------------------------------------

_pipelines: dict[str, PipelineConfig] = {}
_custom_names: set[str] = set()
_lock = threading.Lock()

BUILTIN_PIPELINES = (
    "tick",
    "rocketeval",
    "rlcf_direct",
    "rlcf_candidate",
    "rlcf_candidate_only",
    "or_pairwise",
    "or_listwise",
    "checkeval",
    "interacteval",
    "feedback",
)


def _builtin_configs() -> list[PipelineConfig]:
    summary_dims = [d.to_dict() for d in SUMMARY_DIMENSIONS]
    discussion_dims = [d.to_dict() for d in DISCUSSION_DIMENSIONS]
    return [
        PipelineConfig(
            name="tick",
            generator=GeneratorSpec(kind="direct", templates={"generate": "tick_gen"}),
            scorer=ScorerSpec(mode="batch", primary_metric="pass", template="tick_score"),
            uses_reference=False,
        ),
        PipelineConfig(
            name="rocketeval",
            generator=GeneratorSpec(kind="direct", templates={"generate": "rocketeval_gen"}),
            scorer=ScorerSpec(
                mode="item",
                primary_metric="normalized",
                use_logprobs=True,
                template="rocketeval_score",
            ),
            uses_reference=True,
        ),
        PipelineConfig(
            name="rlcf_direct",
            generator=GeneratorSpec(
                kind="direct",
                templates={"generate": "rlcf_direct_gen"},
                params={"with_weights": True},
            ),
            scorer=ScorerSpec(mode="batch", primary_metric="weighted"),
            uses_reference=True,
        ),
        PipelineConfig(
            name="rlcf_candidate",
            generator=GeneratorSpec(
                kind="contrastive",
                templates={"contrast": "rlcf_candidate_contrast", "candidate": "candidate_gen"},
                params={"style": "listwise", "k": 4, "with_weights": True},
            ),
            scorer=ScorerSpec(mode="batch", primary_metric="weighted"),
            uses_reference=True,
        ),
        PipelineConfig(
            name="rlcf_candidate_only",
            generator=GeneratorSpec(
                kind="contrastive",
                templates={
                    "contrast": "rlcf_candidate_only_contrast",
                    "candidate": "candidate_gen",
                },
                params={"style": "listwise", "k": 4, "with_weights": True},
            ),
            scorer=ScorerSpec(mode="batch", primary_metric="weighted"),
            uses_reference=False,
        ),
        PipelineConfig(
            name="or_pairwise",
            generator=GeneratorSpec(
                kind="contrastive",
                templates={"contrast": "or_pairwise_contrast", "candidate": "candidate_gen"},
                params={"style": "pairwise", "k": 4},
            ),
            scorer=ScorerSpec(mode="batch", primary_metric="pass"),
            uses_reference=False,
        ),
        PipelineConfig(
            name="or_listwise",
            generator=GeneratorSpec(
                kind="contrastive",
                templates={"contrast": "or_listwise_contrast", "candidate": "candidate_gen"},
                params={"style": "listwise", "k": 4},
            ),
            scorer=ScorerSpec(mode="batch", primary_metric="pass"),
            uses_reference=False,
        ),
        PipelineConfig(
            name="checkeval",
            generator=GeneratorSpec(
                kind="deductive",
                templates={"generate": "checkeval_gen", "augment": "checkeval_augment"},
                params={"dimensions": summary_dims, "augment": False},
            ),
            scorer=ScorerSpec(mode="batch", primary_metric="pass", template="checkeval_score"),
            uses_reference=False,
        ),
        PipelineConfig(
            name="interacteval",
            generator=GeneratorSpec(
                kind="interactive",
                templates={
                    "extract": "interacteval_extract",
                    "cluster_label": "interacteval_cluster_label",
                },
                params={"dimensions": discussion_dims, "cluster_threshold": 0.85},
            ),
            scorer=ScorerSpec(mode="batch", primary_metric="pass"),
            uses_reference=False,
        ),
        PipelineConfig(
            name="feedback",
            generator=GeneratorSpec(
                kind="inductive",
                templates={"extract": "feedback_extract"},
                params={"batch_size": 8, "dedup": True},
            ),
            scorer=ScorerSpec(mode="batch", primary_metric="pass"),
            uses_reference=False,
        ),
    ]


def _ensure_builtins() -> None:
    with _lock:
        if _pipelines:
            return
        for config in _builtin_configs():
            _pipelines[config.name] = config


def registered_pipelines() -> list[str]:
    _ensure_builtins()
    with _lock:
        return list(_pipelines)


def get_pipeline_config(name: str) -> PipelineConfig:
    _ensure_builtins()
    with _lock:
        config = _pipelines.get(name)
    if config is None:
        known = ", ".join(registered_pipelines())
        raise ConfigError(f"unknown pipeline {name!r}; registered pipelines: {known}")
    return config


def register_pipeline_config(config: PipelineConfig, replace_existing: bool = False) -> PipelineConfig:
    _ensure_builtins()
    with _lock:
        existing = _pipelines.get(config.name)
        if existing is not None and not replace_existing:
            if config.name in BUILTIN_PIPELINES:
                raise ConfigError(f"pipeline name {config.name!r} is reserved for a built-in")
            if existing == config:
                return existing
            raise ConfigError(f"a different pipeline named {config.name!r} is already registered")
        if config.name in BUILTIN_PIPELINES:
            raise ConfigError(f"pipeline name {config.name!r} is reserved for a built-in")
        _pipelines[config.name] = config
        _custom_names.add(config.name)
    return config


def _reset_custom_pipelines() -> None:
    """Drop custom registrations; used by tests to simulate a fresh process."""
    with _lock:
        for name in list(_custom_names):
            _pipelines.pop(name, None)
        _custom_names.clear()


def register_custom_pipeline(
    name: str,
    generator_prompt: Optional[str | Path | PromptTemplate] = None,
    *,
    generator_kind: str = "direct",
    scorer: Optional[str | Mapping[str, Any] | ScorerSpec] = None,
    refiners: Sequence[str | Mapping[str, Any] | RefinerSpec] = (),
    uses_reference: bool = False,
    params: Optional[Mapping[str, Any]] = None,
    generator_model: Optional[str] = None,
) -> PipelineConfig:
    """Register a pipeline under a new name, optionally from a prompt file."""
    templates: dict[str, str] = {}
    if generator_prompt is not None:
        template = (
            generator_prompt
            if isinstance(generator_prompt, PromptTemplate)
            else load_template(generator_prompt)
        )
        if not has_template(template.name):
            register_template(template)
        elif get_template(template.name) != template:
            raise ConfigError(
                f"a different template named {template.name!r} is already registered; "
                "rename the prompt's front-matter `name:`"
            )
        stage = "extract" if generator_kind in ("inductive", "interactive") else "generate"
        if generator_kind == "contrastive":
            stage = "contrast"
        templates[stage] = template.name

    config = PipelineConfig(
        name=name,
        generator=GeneratorSpec(
            kind=generator_kind,
            templates=templates,
            params=dict(params or {}),
            model=generator_model,
        ),
        refiners=tuple(_coerce_refiner(r) for r in refiners),
        scorer=_coerce_scorer(ScorerSpec(), scorer),
        uses_reference=uses_reference,
    )
    return register_pipeline_config(config)


def config_to_portable_doc(config: PipelineConfig) -> dict[str, Any]:
    """Config as JSON with non-shipped templates inlined, safe to move between processes."""
    doc = config.to_dict()
    for stage, template_name in list(doc["generator"]["templates"].items()):
        doc["generator"]["templates"][stage] = _inline_template(template_name)
    doc["scorer"]["template"] = _inline_template(doc["scorer"]["template"])
    return doc


def save_pipeline_config(name: str, path: str | Path) -> None:
    """Write a registered pipeline to JSON, inlining non-shipped templates."""
    doc = config_to_portable_doc(get_pipeline_config(name))
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _inline_template(name: str) -> Any:
    if is_builtin_template(name):
        return name
    template = get_template(name)
    return {
        "name": template.name,
        "body": template.body,
        "requires": sorted(template.required_placeholders),
    }


def config_from_portable_doc(doc: Mapping[str, Any], register: bool = False) -> PipelineConfig:
    """Build a config from a JSON document, registering any inlined templates."""
    if not isinstance(doc, Mapping):
        raise ConfigError("pipeline config must hold a JSON object")
    doc = json.loads(json.dumps(doc))  # private copy; template entries get rewritten
    generator = doc.get("generator")
    if isinstance(generator, Mapping):
        templates = generator.get("templates")
        if isinstance(templates, Mapping):
            for stage, value in list(templates.items()):
                templates[stage] = _register_inlined(value)
    scorer = doc.get("scorer")
    if isinstance(scorer, Mapping) and "template" in scorer:
        scorer["template"] = _register_inlined(scorer["template"])

    config = PipelineConfig.from_dict(doc)
    if register:
        register_pipeline_config(config)
    return config


def load_pipeline_config(path: str | Path, register: bool = True) -> PipelineConfig:
    """Read a pipeline config JSON, registering any inlined templates."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read pipeline config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"pipeline config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, Mapping):
        raise ConfigError(f"pipeline config {path} must hold a JSON object")
    return config_from_portable_doc(doc, register=register)


def _register_inlined(value: Any) -> str:
    if isinstance(value, str):
        return value
    if not isinstance(value, Mapping) or "name" not in value or "body" not in value:
        raise ConfigError(
            "template entries must be a registered name or an object with 'name' and 'body'"
        )
    template = PromptTemplate(
        name=str(value["name"]),
        body=str(value["body"]),
        required_placeholders=frozenset(value.get("requires") or ()),
    )
    if has_template(template.name) and get_template(template.name) == template:
        return template.name
    register_template(template, replace=not is_builtin_template(template.name))
    return template.name


# -- overrides ------------------------------------------------------------


def _coerce_refiner(value: str | Mapping[str, Any] | RefinerSpec) -> RefinerSpec:
    if isinstance(value, RefinerSpec):
        return value
    if isinstance(value, str):
        stage = REFINER_ALIASES.get(value)
        if stage is None:
            raise ConfigError(
                f"unknown refiner {value!r}; expected one of {sorted(REFINER_ALIASES)}"
            )
        return RefinerSpec(stage=stage)
    if isinstance(value, Mapping):
        doc = dict(value)
        stage = REFINER_ALIASES.get(str(doc.pop("stage", "")))
        if stage is None:
            raise ConfigError("refiner overrides need a 'stage' field")
        return RefinerSpec(stage=stage, params=doc.pop("params", doc))
    raise ConfigError(f"cannot interpret refiner override {value!r}")


def _coerce_scorer(
    base: ScorerSpec, override: Optional[str | Mapping[str, Any] | ScorerSpec]
) -> ScorerSpec:
    if override is None:
        return base
    if isinstance(override, ScorerSpec):
        return override
    if isinstance(override, str):
        metric = Metric(override)
        if metric is Metric.NORMALIZED:
            template = base.template
            if ScoreMode(base.mode) is ScoreMode.BATCH:
                template = "score_item"
            return ScorerSpec(
                mode="item",
                primary_metric="normalized",
                use_logprobs=True,
                capture_reasoning=base.capture_reasoning,
                template=template,
            )
        return replace(base, primary_metric=metric.value)
    if isinstance(override, Mapping):
        merged = {
            "mode": base.mode,
            "primary_metric": base.primary_metric,
            "use_logprobs": base.use_logprobs,
            "capture_reasoning": base.capture_reasoning,
            "template": base.template,
        }
        unknown = set(override) - set(merged)
        if unknown:
            raise ConfigError(f"unknown scorer override fields {sorted(unknown)}")
        merged.update(override)
        if "template" not in override and ScoreMode(merged["mode"]) != ScoreMode(base.mode):
            merged["template"] = (
                "score_item" if ScoreMode(merged["mode"]) is ScoreMode.ITEM else "score_batch"
            )
        return ScorerSpec(**merged)
    raise ConfigError(f"cannot interpret scorer override {override!r}")


# -- executable pipeline ----------------------------------------------------


@dataclass(frozen=True)
class PipelineResult:
    """A generated checklist plus the score report for one target."""

    checklist: Checklist
    report: ScoreReport

    def __iter__(self):
        yield self.checklist
        yield self.report

    @property
    def pass_rate(self):
        return self.report.pass_rate

    @property
    def weighted_score(self):
        return self.report.weighted_score

    @property
    def normalized_score(self):
        return self.report.normalized_score

    @property
    def primary_score(self):
        return self.report.primary_score

    @property
    def item_results(self):
        return self.report.item_results


def _parse_dimensions(raw: Any, fallback: Sequence[Dimension]) -> tuple[Dimension, ...]:
    if not raw:
        return tuple(fallback)
    return tuple(d if isinstance(d, Dimension) else Dimension.from_dict(d) for d in raw)


def build_generator(
    spec: GeneratorSpec, client: LLMClient, model: str, uses_reference: bool
) -> ChecklistGenerator:
    t = {stage: get_template(name) for stage, name in spec.templates.items()}
    p = dict(spec.params)
    if spec.kind == "direct":
        return DirectGenerator(
            client,
            model,
            template=t.get("generate"),
            use_reference=uses_reference,
            with_weights=bool(p.get("with_weights", False)),
        )
    if spec.kind == "contrastive":
        return ContrastiveGenerator(
            client,
            model,
            contrast_template=t.get("contrast"),
            candidate_template=t.get("candidate"),
            style=p.get("style", "listwise"),
            k=int(p.get("k", 4)),
            use_reference=uses_reference,
            with_weights=bool(p.get("with_weights", False)),
        )
    if spec.kind == "inductive":
        tag_quality = p.get("tag_quality")
        return InductiveGenerator(
            client,
            model,
            extract_template=t.get("extract"),
            batch_size=int(p.get("batch_size", 8)),
            dedup=bool(p.get("dedup", True)),
            dedup_threshold=float(p.get("dedup_threshold", 0.85)),
            tag_quality=tuple(tag_quality) if tag_quality else None,
            unit_test_trials=int(p.get("unit_test_trials", 0)),
            select_max_len=p.get("select_max_len"),
        )
    if spec.kind == "deductive":
        return DeductiveGenerator(
            client,
            model,
            dimensions=_parse_dimensions(p.get("dimensions"), SUMMARY_DIMENSIONS),
            template=t.get("generate"),
            augment_template=t.get("augment"),
            augment=bool(p.get("augment", False)),
        )
    if spec.kind == "interactive":
        return InteractiveGenerator(
            client,
            model,
            dimensions=_parse_dimensions(p.get("dimensions"), DISCUSSION_DIMENSIONS),
            extract_template=t.get("extract"),
            question_template=t.get("cluster_label"),
            cluster_threshold=float(p.get("cluster_threshold", 0.85)),
        )
    raise ConfigError(f"unknown generator kind {spec.kind!r}")


class _SelectStage(Refiner):
    """Selector whose objective is resolved from config params at run time."""

    stage = "select"

    def __init__(self, client: LLMClient, model: str, params: Mapping[str, Any]):
        self.client = client
        self.model = model
        self.params = dict(params)

    def refine(self, checklist: Checklist) -> tuple[Checklist, RefinerReport]:
        p = self.params
        kind = p.get("objective", "coverage")
        if kind == "coverage":
            if "match_matrix" in p:
                source = p["match_matrix"]
                if isinstance(source, Mapping):
                    matches = {
                        str(item): frozenset(i for i, flag in enumerate(row) if flag)
                        for item, row in zip(source["items"], source["matrix"])
                    }
                    n_signals = len(source["signals"])
                else:
                    matches, n_signals = load_match_matrix(source)
            elif p.get("signals"):
                signals = [str(s) for s in p["signals"]]
                matches = build_match_matrix(self.client, self.model, checklist, signals)
                n_signals = len(signals)
            else:
                raise ConfigError(
                    "select stage with a coverage objective needs 'match_matrix' or 'signals'"
                )
            objective = coverage_objective(matches, n_signals)
        elif kind == "discrimination":
            pairs = p.get("pair_answers")
            if not pairs:
                raise ConfigError(
                    "select stage with a discrimination objective needs 'pair_answers'"
                )
            objective = discrimination_objective(
                [(dict(chosen), dict(rejected)) for chosen, rejected in pairs]
            )
        else:
            raise ConfigError(f"unknown selection objective {kind!r}")
        selector = Selector(
            objective,
            length_penalty=float(p.get("length_penalty", 0.1)),
            beam_width=int(p.get("beam_width", 5)),
            max_len=p.get("max_len"),
        )
        return selector.refine(checklist)


def build_refiner(spec: RefinerSpec, client: LLMClient, model: str) -> Refiner:
    p = dict(spec.params)
    if spec.stage == "dedup":
        return Deduplicator(
            client,
            model,
            threshold=float(p.get("threshold", 0.85)),
            embed_model=p.get("embed_model"),
        )
    if spec.stage == "tag":
        quality = str(p.get("quality", "specificity"))
        description = p.get("description") or QUALITY_DESCRIPTIONS.get(quality)
        if not description:
            raise ConfigError(
                f"tag refiner: unknown quality {quality!r}; supply a 'description' param"
            )
        return Tagger(
            client,
            model,
            quality=quality,
            description=description,
            keep_policy=p.get("keep_policy", "drop_fail"),
        )
    if spec.stage == "unit_test":
        return UnitTester(
            client,
            model,
            probe_targets=tuple(p.get("probe_targets") or (DEFAULT_PROBE_TARGET,)),
            trials=int(p.get("trials", 2)),
        )
    if spec.stage == "select":
        return _SelectStage(client, model, p)
    raise ConfigError(f"unknown refiner stage {spec.stage!r}")


class ChecklistPipeline:
    """A composed generator, refiner chain, and scorer."""

    def __init__(
        self,
        config: PipelineConfig,
        client: LLMClient,
        generator_model: str = "",
        scorer_model: str = "",
    ):
        self.config = config
        self.client = client
        self.generator_model = generator_model or config.generator.model or ""
        self.scorer_model = scorer_model
        self.generator = build_generator(
            config.generator, client, self.generator_model, config.uses_reference
        )
        self.refiners = [
            build_refiner(spec, client, self.generator_model) for spec in config.refiners
        ]
        self.scorer = ChecklistScorer(
            client,
            ScorerConfig(
                mode=config.scorer.mode,
                primary_metric=config.scorer.primary_metric,
                capture_reasoning=config.scorer.capture_reasoning,
                use_logprobs=config.scorer.use_logprobs,
                model=scorer_model,
                template=get_template(config.scorer.template),
            ),
        )

    @property
    def name(self) -> str:
        return self.config.name

    @property
    def level(self):
        return self.generator.level

    def generate(
        self,
        input: str = "",
        reference: Optional[str] = None,
        preference_pairs: Sequence[tuple[str, str]] = (),
        corpus: Sequence[Any] = (),
        params: Optional[Mapping[str, Any]] = None,
    ) -> Checklist:
        ctx = GenerationContext(
            input=input,
            reference=reference,
            preference_pairs=tuple(preference_pairs),
            corpus=tuple(corpus),
            params=dict(params or {}),
        )
        checklist = self.generator.generate(ctx)
        checklist, _ = apply_refiners(checklist, self.refiners)
        return checklist

    def score(
        self,
        checklist: Checklist,
        target: str,
        input: Optional[str] = None,
        reference: Optional[str] = None,
    ) -> ScoreReport:
        return self.scorer.score(checklist, target, input=input, reference=reference)

    def __call__(
        self,
        target: str,
        input: str = "",
        reference: Optional[str] = None,
        preference_pairs: Sequence[tuple[str, str]] = (),
        corpus: Sequence[Any] = (),
        params: Optional[Mapping[str, Any]] = None,
    ) -> PipelineResult:
        checklist = self.generate(
            input=input,
            reference=reference,
            preference_pairs=preference_pairs,
            corpus=corpus,
            params=params,
        )
        report = self.score(checklist, target, input=input or None, reference=reference)
        return PipelineResult(checklist=checklist, report=report)

    def run_batch(self, data, **kwargs):
        from .batch import run_batch

        return run_batch(self, data, **kwargs)


def pipeline(
    name: str,
    *,
    model: Optional[str] = None,
    generator_model: Optional[str] = None,
    scorer_model: Optional[str] = None,
    provider: Optional[str] = None,
    base_url: Optional[str] = None,
    api_key_env: Optional[str] = None,
    client: Optional[LLMClient] = None,
    refiners: Optional[Sequence[str | Mapping[str, Any] | RefinerSpec]] = None,
    scorer: Optional[str | Mapping[str, Any] | ScorerSpec] = None,
    params: Optional[Mapping[str, Any]] = None,
    capture_reasoning: Optional[bool] = None,
) -> ChecklistPipeline:
    """Resolve a registered pipeline name into an executable pipeline."""
    config = get_pipeline_config(name)

    if params:
        merged = dict(config.generator.params)
        merged.update(params)
        config = replace(config, generator=replace(config.generator, params=merged))
    if refiners is not None:
        config = replace(config, refiners=tuple(_coerce_refiner(r) for r in refiners))
    scorer_spec = _coerce_scorer(config.scorer, scorer)
    if capture_reasoning is not None:
        scorer_spec = replace(scorer_spec, capture_reasoning=capture_reasoning)
    if scorer_spec != config.scorer:
        config = replace(config, scorer=scorer_spec)

    if client is None:
        client = make_client(
            provider=provider or "openai", base_url=base_url, api_key_env=api_key_env
        )
    elif provider is not None or base_url is not None:
        raise ConfigError("pass either an explicit client or provider settings, not both")

    return ChecklistPipeline(
        config,
        client,
        generator_model=generator_model or model or "",
        scorer_model=scorer_model or model or "",
    )
