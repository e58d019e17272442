"""Composable checklist evaluation for LLM outputs.

Build a pipeline from a registered name, evaluate one target or a whole
dataset, and read scores off the report:

    from autochecklist import pipeline

    pipe = pipeline("tick", generator_model="openai/gpt-5-mini",
                    scorer_model="openai/gpt-5-mini")
    result = pipe(input="Write a haiku about autumn",
                  target="Leaves drift past my door...")
    print(result.pass_rate)
"""

from .core import (
    Answer,
    BatchAggregate,
    Checklist,
    ChecklistItem,
    ItemResult,
    Level,
    Metric,
    ScoreReport,
    aggregate_batch,
    compute_score_report,
)
from .errors import (
    AutoChecklistError,
    ConfigError,
    DatasetError,
    GenerationError,
    ParseError,
    RefinerError,
    ScoringError,
    TemplateError,
    TransportError,
)
from .generators import (
    ContrastiveGenerator,
    DeductiveGenerator,
    Dimension,
    DirectGenerator,
    GenerationContext,
    InductiveGenerator,
    InteractiveGenerator,
)
from .llm import LLMClient, MockLLMClient, make_client
from .pipelines import (
    BUILTIN_PIPELINES,
    ChecklistPipeline,
    GeneratorSpec,
    PipelineConfig,
    PipelineResult,
    RefinerSpec,
    ScorerSpec,
    get_pipeline_config,
    load_pipeline_config,
    pipeline,
    register_custom_pipeline,
    registered_pipelines,
    save_pipeline_config,
)
from .refiners import Deduplicator, Selector, Tagger, UnitTester
from .scorer import ChecklistScorer, ScoreMode, ScorerConfig

__version__ = "0.1.0"

__all__ = [
    "Answer",
    "AutoChecklistError",
    "BatchAggregate",
    "BUILTIN_PIPELINES",
    "Checklist",
    "ChecklistItem",
    "ChecklistPipeline",
    "ChecklistScorer",
    "ConfigError",
    "ContrastiveGenerator",
    "DatasetError",
    "DeductiveGenerator",
    "Deduplicator",
    "Dimension",
    "DirectGenerator",
    "GenerationContext",
    "GenerationError",
    "GeneratorSpec",
    "InductiveGenerator",
    "InteractiveGenerator",
    "ItemResult",
    "Level",
    "LLMClient",
    "make_client",
    "Metric",
    "MockLLMClient",
    "ParseError",
    "pipeline",
    "PipelineConfig",
    "PipelineResult",
    "RefinerError",
    "RefinerSpec",
    "register_custom_pipeline",
    "registered_pipelines",
    "save_pipeline_config",
    "load_pipeline_config",
    "get_pipeline_config",
    "ScoreMode",
    "ScoreReport",
    "ScorerConfig",
    "ScorerSpec",
    "ScoringError",
    "Selector",
    "Tagger",
    "TemplateError",
    "TransportError",
    "UnitTester",
    "aggregate_batch",
    "compute_score_report",
    "__version__",
]
