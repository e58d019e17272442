import json

import pytest

from autochecklist.core import Level
from autochecklist.errors import GenerationError, TemplateError
from autochecklist.templates import get_template
from autochecklist.generators import (
    SUMMARY_DIMENSIONS,
    ContrastiveGenerator,
    DeductiveGenerator,
    Dimension,
    DirectGenerator,
    GenerationContext,
    InductiveGenerator,
    InteractiveGenerator,
)
from autochecklist.llm import MockLLMClient, MockReply

MODEL = "mock-model"


def ctx(**kwargs):
    return GenerationContext(**kwargs)


class TestDimension:
    def test_nested_round_trip(self):
        dim = Dimension(
            "clarity", "is it clear", sub_dimensions=(Dimension("wording", "word choice"),)
        )
        assert Dimension.from_dict(dim.to_dict()) == dim

    def test_blank_name_rejected(self):
        with pytest.raises(ValueError):
            Dimension("  ")


class TestDirect:
    def test_builds_instance_checklist(self, mock_client):
        gen = DirectGenerator(mock_client, MODEL)
        checklist = gen.generate(ctx(input="Write a haiku about rain."))
        assert checklist.level is Level.INSTANCE
        assert checklist.source == "direct"
        assert len(checklist.items) >= 1
        assert len({item.id for item in checklist.items}) == len(checklist.items)

    def test_deterministic_ids_for_same_input(self, mock_client):
        gen = DirectGenerator(mock_client, MODEL)
        a = gen.generate(ctx(input="same prompt"))
        b = gen.generate(ctx(input="same prompt"))
        assert a.id == b.id
        assert [i.question for i in a.items] == [i.question for i in b.items]

    def test_requires_input(self, mock_client):
        gen = DirectGenerator(mock_client, MODEL)
        with pytest.raises(GenerationError, match="input"):
            gen.generate(ctx(input="   "))

    def test_weights_requested_and_kept(self, mock_client):
        gen = DirectGenerator(mock_client, MODEL, with_weights=True)
        checklist = gen.generate(ctx(input="weighted task"))
        assert all(item.weight is not None for item in checklist.items)
        assert all(0 <= item.weight <= 100 for item in checklist.items)

    def test_reference_flows_into_prompt(self, mock_client):
        template = get_template("rlcf_direct_gen")
        gen = DirectGenerator(mock_client, MODEL, template=template, use_reference=True)
        gen.generate(ctx(input="task text", reference="the gold answer"))
        rendered = "\n".join(m.content for m in mock_client.calls[-1].messages)
        assert "the gold answer" in rendered

    def test_reference_template_without_reference_fails(self, mock_client):
        template = get_template("rlcf_direct_gen")
        gen = DirectGenerator(mock_client, MODEL, template=template, use_reference=True)
        with pytest.raises((GenerationError, TemplateError)):
            gen.generate(ctx(input="task text"))

    def test_malformed_payload_surfaces_generation_error(self):
        client = MockLLMClient(script=[MockReply(data={"items": "not-a-list"})])
        gen = DirectGenerator(client, MODEL)
        with pytest.raises(GenerationError):
            gen.generate(ctx(input="task"))


class TestContrastive:
    def test_listwise_generates_candidates_then_contrasts(self, mock_client):
        gen = ContrastiveGenerator(mock_client, MODEL, style="listwise", k=4)
        checklist = gen.generate(ctx(input="Explain tides."))
        assert checklist.source == "contrastive"
        assert checklist.level is Level.INSTANCE
        # k candidate completions plus one contrast call
        assert len(mock_client.calls) == 5
        assert len(checklist.items) >= 1

    def test_pairwise_contrasts_best_against_each(self, mock_client):
        gen = ContrastiveGenerator(mock_client, MODEL, style="pairwise", k=3)
        gen.generate(ctx(input="Explain tides."))
        # 3 candidates + (k-1) pairwise contrast calls
        assert len(mock_client.calls) == 3 + 2

    def test_preference_pairs_skip_candidate_generation(self, mock_client):
        gen = ContrastiveGenerator(mock_client, MODEL, style="pairwise")
        pairs = (("good answer", "bad answer"),)
        checklist = gen.generate(ctx(input="task", preference_pairs=pairs))
        assert len(mock_client.calls) == 1
        assert len(checklist.items) >= 1

    def test_k_below_two_rejected(self, mock_client):
        with pytest.raises(ValueError, match="k"):
            ContrastiveGenerator(mock_client, MODEL, k=1)

    def test_unknown_style_rejected(self, mock_client):
        with pytest.raises(ValueError, match="style"):
            ContrastiveGenerator(mock_client, MODEL, style="tripwise")


class TestInductive:
    def test_corpus_level_with_dedup_audit(self, mock_client):
        gen = InductiveGenerator(mock_client, MODEL, batch_size=2)
        corpus = ["answer one", "answer two", "answer three"]
        checklist = gen.generate(ctx(corpus=tuple(corpus)))
        assert checklist.level is Level.CORPUS
        assert checklist.source == "inductive"
        audit = json.loads(checklist.metadata["refinement"])
        assert any(entry["stage"] == "dedup" for entry in audit)

    def test_batching_splits_corpus(self, mock_client):
        gen = InductiveGenerator(mock_client, MODEL, batch_size=2, dedup=False)
        gen.generate(ctx(corpus=("a", "b", "c", "d", "e")))
        extract_calls = [c for c in mock_client.calls if c.schema is not None]
        assert len(extract_calls) == 3

    def test_empty_corpus_rejected(self, mock_client):
        gen = InductiveGenerator(mock_client, MODEL)
        with pytest.raises(GenerationError, match="corpus"):
            gen.generate(ctx())


class TestDeductive:
    def test_dimension_seeded_generation(self, mock_client):
        gen = DeductiveGenerator(mock_client, MODEL, dimensions=SUMMARY_DIMENSIONS)
        checklist = gen.generate(ctx(input="summarize articles"))
        assert checklist.level is Level.CORPUS
        assert checklist.source == "deductive"
        covered = {item.dimension for item in checklist.items}
        assert covered == {d.name for d in SUMMARY_DIMENSIONS}

    def test_dimensions_overridable_via_params(self, mock_client):
        gen = DeductiveGenerator(mock_client, MODEL, dimensions=SUMMARY_DIMENSIONS)
        custom = [{"name": "depth", "description": "digs into detail"}]
        checklist = gen.generate(ctx(params={"dimensions": custom}))
        assert {item.dimension for item in checklist.items} == {"depth"}

    def test_no_dimensions_anywhere_rejected(self, mock_client):
        gen = DeductiveGenerator(mock_client, MODEL, dimensions=())
        with pytest.raises(GenerationError, match="dimension"):
            gen.generate(ctx(input="task"))

    def test_augment_adds_second_pass(self, mock_client):
        plain = DeductiveGenerator(mock_client, MODEL, dimensions=SUMMARY_DIMENSIONS[:1])
        plain.generate(ctx())
        baseline = len(mock_client.calls)
        augmented = DeductiveGenerator(
            mock_client, MODEL, dimensions=SUMMARY_DIMENSIONS[:1], augment=True
        )
        augmented.generate(ctx())
        assert len(mock_client.calls) - baseline == baseline + 1


class TestInteractive:
    def test_transcripts_become_checklist(self, mock_client):
        transcripts = ("Q: why?\nA: because.", "Q: how?\nA: carefully.")
        gen = InteractiveGenerator(mock_client, MODEL)
        checklist = gen.generate(ctx(corpus=transcripts))
        assert checklist.level is Level.CORPUS
        assert checklist.source == "interactive"
        assert len(checklist.items) >= 1

    def test_clustered_items_carry_dimension(self, mock_client):
        gen = InteractiveGenerator(mock_client, MODEL)
        checklist = gen.generate(ctx(corpus=("discussion transcript",)))
        assert all(item.dimension for item in checklist.items)

    def test_requires_transcripts(self, mock_client):
        gen = InteractiveGenerator(mock_client, MODEL)
        with pytest.raises(GenerationError, match="corpus"):
            gen.generate(ctx(input="no transcripts"))
