import json

import pytest

from autochecklist.core import Level, Metric
from autochecklist.errors import ConfigError
from autochecklist.llm import MockLLMClient
from autochecklist.pipelines import (
    BUILTIN_PIPELINES,
    ChecklistPipeline,
    GeneratorSpec,
    PipelineConfig,
    PipelineResult,
    RefinerSpec,
    ScorerSpec,
    _reset_custom_pipelines,
    config_from_portable_doc,
    config_to_portable_doc,
    get_pipeline_config,
    load_pipeline_config,
    pipeline,
    register_custom_pipeline,
    registered_pipelines,
    save_pipeline_config,
)
from autochecklist.scorer import ScoreMode
from autochecklist.templates import get_template, has_template
from conftest import consistent_judge

GEN_PROMPT = """---
name: my_eval_gen
requires: input
---
You write evaluation checklists.
[USER]
Task:
{input}

List yes/no questions that a good response must satisfy.
"""


@pytest.fixture(autouse=True)
def clean_registry():
    _reset_custom_pipelines()
    yield
    _reset_custom_pipelines()


@pytest.fixture
def prompt_file(tmp_path):
    path = tmp_path / "my_eval.md"
    path.write_text(GEN_PROMPT)
    return path


class TestRegistry:
    def test_builtins_present_in_order(self):
        assert BUILTIN_PIPELINES == (
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
        for name in BUILTIN_PIPELINES:
            assert name in registered_pipelines()

    def test_unknown_name_rejected(self):
        with pytest.raises(ConfigError, match="nonesuch"):
            get_pipeline_config("nonesuch")

    def test_builtin_names_reserved(self, prompt_file):
        with pytest.raises(ConfigError, match="tick"):
            register_custom_pipeline("tick", prompt_file)

    def test_custom_registration_and_lookup(self, prompt_file):
        config = register_custom_pipeline("my_eval", prompt_file)
        assert "my_eval" in registered_pipelines()
        assert get_pipeline_config("my_eval") == config
        assert config.generator.templates["generate"] == "my_eval_gen"
        assert has_template("my_eval_gen")

    def test_re_register_same_definition_is_noop(self, prompt_file):
        first = register_custom_pipeline("my_eval", prompt_file)
        second = register_custom_pipeline("my_eval", prompt_file)
        assert first == second

    def test_conflicting_redefinition_rejected(self, prompt_file, tmp_path):
        register_custom_pipeline("my_eval", prompt_file)
        other = tmp_path / "other.md"
        other.write_text(GEN_PROMPT + "\nExtra line.")
        with pytest.raises(ConfigError):
            register_custom_pipeline("my_eval", other)


class TestConfigShape:
    def test_serialized_keys_are_stable(self):
        doc = get_pipeline_config("rocketeval").to_dict()
        assert list(doc) == ["name", "generator", "refiners", "scorer", "uses_reference"]
        assert list(doc["generator"]) == ["kind", "templates", "params"]
        assert list(doc["scorer"]) == [
            "mode",
            "primary_metric",
            "use_logprobs",
            "capture_reasoning",
            "template",
        ]

    def test_round_trip_every_builtin(self):
        for name in BUILTIN_PIPELINES:
            config = get_pipeline_config(name)
            assert PipelineConfig.from_dict(config.to_dict()) == config

    def test_from_dict_validates_required_fields(self):
        with pytest.raises(ConfigError, match="name"):
            PipelineConfig.from_dict({"generator": {"kind": "direct", "templates": {}}})
        with pytest.raises(ConfigError, match="generator"):
            PipelineConfig.from_dict({"name": "x"})

    def test_unknown_scorer_field_rejected(self):
        doc = get_pipeline_config("tick").to_dict()
        doc["scorer"]["certainty"] = True
        with pytest.raises(ConfigError, match="certainty"):
            PipelineConfig.from_dict(doc)

    def test_unknown_generator_kind_rejected(self):
        with pytest.raises(ConfigError, match="sideways"):
            GeneratorSpec(kind="sideways", templates={})

    def test_unknown_refiner_stage_rejected(self):
        with pytest.raises(ConfigError, match="polish"):
            RefinerSpec(stage="polish")

    def test_scorer_spec_invariants_enforced(self):
        with pytest.raises(ConfigError):
            PipelineConfig(
                name="bad",
                generator=GeneratorSpec(kind="direct", templates={"generate": "tick_gen"}),
                scorer=ScorerSpec(primary_metric="normalized", use_logprobs=False),
            )


class TestPersistence:
    def test_save_load_round_trip_with_inlined_template(self, prompt_file, tmp_path):
        register_custom_pipeline("my_eval", prompt_file, scorer="weighted")
        path = tmp_path / "my_eval.json"
        save_pipeline_config("my_eval", path)

        doc = json.loads(path.read_text())
        inlined = doc["generator"]["templates"]["generate"]
        assert inlined["name"] == "my_eval_gen"
        assert "{input}" in inlined["body"]
        assert inlined["requires"] == ["input"]

        _reset_custom_pipelines()
        loaded = load_pipeline_config(path, register=True)
        assert loaded == get_pipeline_config("my_eval")
        assert has_template("my_eval_gen")

    def test_builtin_saves_by_reference(self, tmp_path):
        path = tmp_path / "tick.json"
        save_pipeline_config("tick", path)
        doc = json.loads(path.read_text())
        assert doc["generator"]["templates"]["generate"] == "tick_gen"
        assert doc["scorer"]["template"] == "tick_score"

    def test_portable_doc_round_trip(self, prompt_file):
        config = register_custom_pipeline("my_eval", prompt_file)
        doc = config_to_portable_doc(config)
        _reset_custom_pipelines()
        assert config_from_portable_doc(doc) == config


class TestPipelineFactory:
    def test_client_and_provider_mutually_exclusive(self):
        with pytest.raises(ConfigError, match="not both"):
            pipeline("tick", client=MockLLMClient(), provider="mock")

    def test_model_fans_out_to_both_roles(self):
        pipe = pipeline("tick", client=MockLLMClient(), model="m1")
        assert pipe.generator_model == "m1"
        assert pipe.scorer.config.model == "m1"

    def test_role_specific_models_override(self):
        pipe = pipeline(
            "tick",
            client=MockLLMClient(),
            model="m1",
            generator_model="gen",
            scorer_model="judge",
        )
        assert pipe.generator_model == "gen"
        assert pipe.scorer.config.model == "judge"

    def test_scorer_shorthand_normalized(self):
        pipe = pipeline("tick", client=MockLLMClient(), scorer="normalized")
        assert pipe.config.scorer.primary_metric == "normalized"
        assert pipe.config.scorer.mode == "item"
        assert pipe.config.scorer.use_logprobs is True

    def test_scorer_mapping_merges(self):
        pipe = pipeline("tick", client=MockLLMClient(), scorer={"mode": "item"})
        assert pipe.config.scorer.mode == "item"
        assert pipe.config.scorer.template == "score_item"
        assert pipe.config.scorer.primary_metric == "pass"

    def test_refiner_aliases_accepted(self):
        pipe = pipeline(
            "tick",
            client=MockLLMClient(),
            refiners=["deduplicator", {"stage": "tag", "params": {"quality": "objectivity"}}],
        )
        assert [r.stage for r in pipe.config.refiners] == ["dedup", "tag"]

    def test_params_merge_over_defaults(self):
        pipe = pipeline("feedback", client=MockLLMClient(), params={"batch_size": 3})
        assert pipe.config.generator.params["batch_size"] == 3
        assert pipe.config.generator.params["dedup"] is True

    def test_capture_reasoning_toggle(self):
        pipe = pipeline("tick", client=MockLLMClient(), capture_reasoning=True)
        assert pipe.config.scorer.capture_reasoning is True


class TestChecklistPipeline:
    def test_call_returns_checklist_and_report(self):
        client = MockLLMClient(responder=consistent_judge)
        pipe = pipeline("tick", client=client, model="m")
        result = pipe(target="the response", input="the task")
        assert isinstance(result, PipelineResult)
        checklist, report = result
        assert checklist.level is Level.INSTANCE
        assert result.pass_rate == report.pass_rate
        assert result.primary_score is not None

    def test_generate_then_score_separately(self):
        client = MockLLMClient(responder=consistent_judge)
        pipe = pipeline("tick", client=client, model="m")
        checklist = pipe.generate(input="the task")
        report = pipe.score(checklist, target="the response", input="the task")
        combined = pipe(target="the response", input="the task")
        assert report.pass_rate == combined.report.pass_rate

    def test_corpus_pipeline_generates_once(self):
        client = MockLLMClient(responder=consistent_judge)
        pipe = pipeline("feedback", client=client, model="m")
        checklist = pipe.generate(corpus=("resp one", "resp two"))
        assert checklist.level is Level.CORPUS

    def test_refiners_run_after_generation(self):
        client = MockLLMClient(responder=consistent_judge)
        pipe = pipeline("tick", client=client, model="m", refiners=["deduplicator"])
        checklist = pipe.generate(input="the task")
        assert len(checklist.items) >= 1
        # dedup embedded the generated questions
        assert len(client.embed_calls) == 1

    def test_level_property_tracks_generator(self):
        assert pipeline("tick", client=MockLLMClient()).level is Level.INSTANCE
        assert pipeline("feedback", client=MockLLMClient()).level is Level.CORPUS
