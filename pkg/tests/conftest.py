import hashlib
import math
import re
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from autochecklist.llm import MockLLMClient
from autochecklist.llm.base import TokenLogprob
from autochecklist.llm.mock import MockReply, default_responder

_ID_LINE = re.compile(r"^(\S+)\. (.+)$", re.MULTILINE)
_QUESTION_LINE = re.compile(r"^Question: (.+)$", re.MULTILINE)


def question_verdict(question: str) -> str:
    """Deterministic YES/NO keyed on the question text alone."""
    digest = hashlib.sha256(question.strip().encode("utf-8")).hexdigest()
    return "YES" if int(digest[:8], 16) % 100 < 60 else "NO"


def question_probability(question: str) -> float:
    """Deterministic YES probability consistent with question_verdict."""
    digest = hashlib.sha256(question.strip().encode("utf-8")).hexdigest()
    spread = (int(digest[8:16], 16) % 1000) / 1000 * 0.35
    return 0.55 + spread if question_verdict(question) == "YES" else 0.45 - spread


def consistent_judge(request):
    """Mock responder whose answer depends only on the question text.

    Batch and item scoring therefore agree item for item, which the
    mode-equivalence tests rely on.
    """
    prompt = request.rendered_prompt()
    if request.schema is not None and request.schema.name == "checklist_answers":
        by_id = {m.group(1): m.group(2) for m in _ID_LINE.finditer(prompt)}
        props = request.schema.schema.get("properties", {})
        ids = props["answers"]["items"]["properties"]["item_id"]["enum"]
        with_reasoning = "reasoning" in props["answers"]["items"]["properties"]
        answers = []
        for item_id in ids:
            entry = {"item_id": item_id, "answer": question_verdict(by_id[item_id])}
            if with_reasoning:
                entry["reasoning"] = f"judged {item_id} on its text"
            answers.append(entry)
        return MockReply(data={"answers": answers})
    if request.schema is not None and request.schema.name == "item_answer":
        question = _QUESTION_LINE.search(prompt).group(1)
        entry = {"answer": question_verdict(question)}
        if "reasoning" in request.schema.schema.get("properties", {}):
            entry["reasoning"] = "judged on the question text"
        return MockReply(data=entry)
    if request.schema is None and request.want_logprobs:
        question = _QUESTION_LINE.search(prompt).group(1)
        p_yes = question_probability(question)
        chosen = "YES" if p_yes >= 0.5 else "NO"
        p_chosen = p_yes if chosen == "YES" else 1.0 - p_yes
        other = "NO" if chosen == "YES" else "YES"
        logprobs = (
            TokenLogprob(
                f" {chosen}",
                math.log(p_chosen),
                (
                    (f" {chosen}", math.log(p_chosen)),
                    (f" {other}", math.log(max(1e-9, 1 - p_chosen))),
                ),
            ),
        )
        return MockReply(text=f"Answer: {chosen}", token_logprobs=logprobs)
    return default_responder(request)


@pytest.fixture
def mock_client():
    return MockLLMClient()


@pytest.fixture
def judge_client():
    return MockLLMClient(responder=consistent_judge)


def make_planted_embedder(groups):
    """Embedder placing each text exactly on its group's axis.

    `groups` maps text -> group index; unlisted texts go to their own
    axis, so cosine similarity is 1 within a group and 0 across groups.
    """
    axis_count = max(groups.values(), default=-1) + 1
    extras: dict[str, int] = {}

    def embed(texts):
        vectors = []
        for text in texts:
            if text in groups:
                axis = groups[text]
            else:
                axis = extras.setdefault(text, axis_count + len(extras))
            vector = [0.0] * (axis_count + len(extras) + len(texts) + 4)
            vector[axis] = 1.0
            vectors.append(vector)
        width = max(len(v) for v in vectors)
        return [v + [0.0] * (width - len(v)) for v in vectors]

    return embed


@pytest.fixture
def planted_embedder():
    return make_planted_embedder
