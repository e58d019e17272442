import pytest

from autochecklist.templates import (
    Message,
    PromptTemplate,
    TemplateError,
    discover_placeholders,
    escape,
    get_template,
    has_template,
    is_builtin_template,
    list_templates,
    parse_template_text,
    register_template,
)

EXPECTED_BUILTINS = {
    "tick_gen",
    "tick_score",
    "rocketeval_gen",
    "rocketeval_score",
    "rlcf_direct_gen",
    "rlcf_candidate_contrast",
    "rlcf_candidate_only_contrast",
    "or_pairwise_contrast",
    "or_listwise_contrast",
    "checkeval_gen",
    "checkeval_augment",
    "checkeval_score",
    "interacteval_extract",
    "interacteval_cluster_label",
    "feedback_extract",
    "candidate_gen",
    "dedup_merge",
    "tag_quality",
    "match_matrix",
    "score_batch",
    "score_item",
}


def test_builtin_catalog_present():
    names = set(list_templates())
    assert EXPECTED_BUILTINS <= names
    for name in EXPECTED_BUILTINS:
        assert is_builtin_template(name)
        assert has_template(name)


def test_placeholder_discovery_ignores_escapes():
    assert discover_placeholders("x {a} {{b}} {a}") == frozenset({"a"})


def test_escape_round_trips_braces():
    template = PromptTemplate(name="t", body="prefix " + escape("a{b}c"))
    (message,) = template.render({})
    assert message.content == "prefix a{b}c"


def test_role_split_and_substitution():
    template = PromptTemplate(name="t", body="sys {a}\n[USER]\nuser {a} {b}")
    messages = template.render({"a": "1", "b": "2"})
    assert messages == [
        Message(role="system", content="sys 1"),
        Message(role="user", content="user 1 2"),
    ]


def test_body_without_split_is_all_user():
    template = PromptTemplate(name="t", body="just text {x}")
    (message,) = template.render({"x": "v"})
    assert message.role == "user"


def test_missing_required_binding_raises():
    template = PromptTemplate(name="t", body="{a}", required_placeholders=frozenset({"a"}))
    with pytest.raises(TemplateError, match="'a'"):
        template.render({})


def test_optional_placeholder_defaults_empty():
    template = PromptTemplate(name="t", body="[{gap}]")
    (message,) = template.render({})
    assert message.content == "[]"


def test_required_must_appear_in_body():
    with pytest.raises(TemplateError, match="zz"):
        PromptTemplate(name="t", body="{a}", required_placeholders=frozenset({"zz"}))


def test_builtin_names_are_reserved():
    clone = PromptTemplate(name="score_batch", body="{target} {checklist}")
    with pytest.raises(TemplateError, match="already registered"):
        register_template(clone)


def test_register_and_replace_custom():
    first = PromptTemplate(name="custom_probe_tpl", body="one {x}")
    register_template(first, replace=True)
    assert get_template("custom_probe_tpl").body == "one {x}"
    second = PromptTemplate(name="custom_probe_tpl", body="two {x}")
    register_template(second, replace=True)
    assert get_template("custom_probe_tpl").body == "two {x}"


def test_unknown_template_lookup_raises():
    with pytest.raises(TemplateError, match="no-such-template"):
        get_template("no-such-template")


def test_parse_template_text_frontmatter():
    text = "---\nname: parsed_tpl\nrequires: alpha, beta\n---\nHello {alpha} {beta} {gamma}"
    template = parse_template_text(text, fallback_name="ignored")
    assert template.name == "parsed_tpl"
    assert template.required_placeholders == frozenset({"alpha", "beta"})
    assert template.placeholders == frozenset({"alpha", "beta", "gamma"})


def test_score_templates_require_core_slots():
    batch = get_template("score_batch")
    assert {"target", "checklist"} <= batch.required_placeholders
    item = get_template("score_item")
    assert {"target", "question"} <= item.required_placeholders
