"""Deterministic offline LLM provider.

The default responder is keyed by a sha256 digest of the rendered
prompt, so identical requests get byte-identical responses across runs
and processes. Tests can override behavior with a FIFO ``script`` or a
``responder`` callable; both may inject exceptions.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
import threading
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

from .base import ChatRequest, ChatResponse, LLMClient, TokenLogprob, Usage
from .parsing import parse_with_schema

_QUALITY_PHRASES = [
    "directly address the stated task",
    "stay factually consistent with the given input",
    "avoid making unsupported claims",
    "use a clear and well-organized structure",
    "maintain a tone appropriate for the audience",
    "cover every explicit requirement in the input",
    "avoid contradicting itself",
    "stay within a reasonable length for the task",
    "make specific rather than generic statements",
    "acknowledge relevant limitations or caveats",
    "follow the requested output format",
    "avoid repeating the same point",
]

_STATEMENT_PHRASES = [
    "the response addresses the main question head on",
    "several claims are missing supporting evidence",
    "the structure makes the argument easy to follow",
    "key requirements from the task are skipped",
    "the wording is precise and unambiguous",
    "the conclusion does not follow from the body",
]

_TAG_POOL = ["clarity", "coverage", "specificity", "grounding", "style", "structure"]


@dataclass
class MockReply:
    """One scripted turn: structured data, raw text, or an injected error."""

    data: Any = None
    text: Optional[str] = None
    token_logprobs: Optional[tuple[TokenLogprob, ...]] = None
    error: Optional[Exception] = None


Responder = Callable[[ChatRequest], Any]


def prompt_digest(request: ChatRequest) -> str:
    return hashlib.sha256(
        f"{request.model}\n{request.rendered_prompt()}".encode("utf-8")
    ).hexdigest()


def _rng_for(request: ChatRequest) -> random.Random:
    return random.Random(int(prompt_digest(request)[:16], 16))


def _schema_properties(request: ChatRequest) -> dict:
    if request.schema is None:
        return {}
    return dict(request.schema.schema.get("properties", {}))


def _enum_under(properties: dict, list_field: str, item_field: str) -> Optional[list]:
    try:
        return list(properties[list_field]["items"]["properties"][item_field]["enum"])
    except (KeyError, TypeError):
        return None


def _instantiate(schema: dict, rng: random.Random) -> Any:
    """Fabricate a minimal value conforming to an arbitrary object schema."""
    if "enum" in schema:
        return rng.choice(list(schema["enum"]))
    kind = schema.get("type")
    if kind == "object":
        return {k: _instantiate(v, rng) for k, v in schema.get("properties", {}).items()}
    if kind == "array":
        n = max(1, schema.get("minItems", 1))
        return [_instantiate(schema.get("items", {}), rng) for _ in range(n)]
    if kind == "integer":
        return rng.randint(schema.get("minimum", 0), schema.get("maximum", 10))
    if kind == "number":
        return round(rng.uniform(0, 1), 3)
    if kind == "boolean":
        return rng.random() < 0.5
    return f"mock-{rng.randrange(16**6):06x}"


def default_responder(request: ChatRequest) -> MockReply:
    """Synthesize a deterministic, plausible reply for any request shape."""
    rng = _rng_for(request)
    digest8 = prompt_digest(request)[:8]
    props = _schema_properties(request)

    if request.schema is not None:
        name = request.schema.name
        if name == "checklist":
            item_props = props.get("items", {}).get("items", {}).get("properties", {})
            with_weights = "weight" in item_props
            phrases = rng.sample(_QUALITY_PHRASES, rng.randint(4, 6))
            items = []
            for phrase in phrases:
                entry: dict[str, Any] = {"question": f"Does the response {phrase}?"}
                if with_weights:
                    entry["weight"] = rng.randrange(1, 21) * 5
                items.append(entry)
            return MockReply(data={"items": items})
        if name == "checklist_answers":
            ids = _enum_under(props, "answers", "item_id") or []
            with_reasoning = "reasoning" in props.get("answers", {}).get("items", {}).get("properties", {})
            answers = []
            for item_id in ids:
                flip = random.Random(int(hashlib.sha256(f"{digest8}:{item_id}".encode()).hexdigest()[:12], 16))
                entry: dict[str, Any] = {
                    "item_id": item_id,
                    "answer": "YES" if flip.random() < 0.6 else "NO",
                }
                if with_reasoning:
                    entry["reasoning"] = f"Deterministic mock judgment for {item_id}."
                answers.append(entry)
            return MockReply(data={"answers": answers})
        if name == "item_answer":
            p_yes = rng.uniform(0.05, 1.0)
            entry = {"answer": "YES" if p_yes >= 0.5 else "NO"}
            if "reasoning" in props:
                entry["reasoning"] = f"Deterministic mock judgment ({digest8})."
            return MockReply(data=entry)
        if name == "statements":
            dims = _enum_under(props, "statements", "dimension") or ["general"]
            count = rng.randint(2, 4)
            statements = []
            for i in range(count):
                statements.append(
                    {
                        "statement": f"{rng.choice(_STATEMENT_PHRASES).capitalize()} ({digest8}-{i}).",
                        "dimension": dims[(rng.randrange(len(dims)) + i) % len(dims)],
                        "polarity": rng.choice(["positive", "negative"]),
                    }
                )
            return MockReply(data={"statements": statements})
        if name == "question":
            phrase = rng.choice(_QUALITY_PHRASES)
            return MockReply(data={"question": f"Does the response {phrase}?"})
        if name == "tag_labels":
            ids = _enum_under(props, "labels", "item_id") or []
            labels = []
            for item_id in ids:
                flip = random.Random(int(hashlib.sha256(f"{digest8}:tag:{item_id}".encode()).hexdigest()[:12], 16))
                labels.append(
                    {
                        "item_id": item_id,
                        "verdict": "pass" if flip.random() < 0.8 else "fail",
                        "tags": [flip.choice(_TAG_POOL)],
                    }
                )
            return MockReply(data={"labels": labels})
        if name == "match_matrix":
            ids = _enum_under(props, "matches", "item_id") or []
            try:
                top = props["matches"]["items"]["properties"]["signal_indexes"]["items"]["maximum"]
            except (KeyError, TypeError):
                top = 7
            n_signals = int(top) + 1
            matches = [
                {
                    "item_id": item_id,
                    "signal_indexes": sorted(
                        rng.sample(range(n_signals), rng.randint(1, min(4, n_signals)))
                    ),
                }
                for item_id in ids
            ]
            return MockReply(data={"matches": matches})
        return MockReply(data=_instantiate(dict(request.schema.schema), rng))

    if request.want_logprobs:
        p_yes = rng.uniform(0.05, 1.0)
        chosen = "YES" if p_yes >= 0.5 else "NO"
        p_chosen = p_yes if chosen == "YES" else 1.0 - p_yes
        p_other = max(1e-9, 1.0 - p_chosen)
        other = "NO" if chosen == "YES" else "YES"
        logprobs = (
            TokenLogprob("Answer", -0.001, (("Answer", -0.001),)),
            TokenLogprob(":", -0.001, ((":", -0.001),)),
            TokenLogprob(
                f" {chosen}",
                math.log(p_chosen),
                ((f" {chosen}", math.log(p_chosen)), (f" {other}", math.log(p_other))),
            ),
        )
        return MockReply(
            text=f"Answer: {chosen}\nReasoning: Deterministic mock judgment ({digest8}).",
            token_logprobs=logprobs,
        )

    return MockReply(text=f"Mock response {digest8}: a candidate answer drafted for evaluation.")


class MockLLMClient(LLMClient):
    """Offline stand-in for an HTTP provider.

    Resolution order per call: scripted replies (FIFO), then the
    ``responder`` callable, then the deterministic default. All calls
    are recorded on ``self.calls`` for call-count assertions.
    """

    def __init__(
        self,
        script: Optional[Sequence[Any]] = None,
        responder: Optional[Responder] = None,
        embedder: Optional[Callable[[Sequence[str]], list[list[float]]]] = None,
        embedding_dim: int = 32,
    ):
        self._script: list[Any] = list(script or [])
        self._responder = responder
        self._embedder = embedder
        self._dim = embedding_dim
        self._lock = threading.Lock()
        self.calls: list[ChatRequest] = []
        self.embed_calls: list[tuple[str, ...]] = []

    def enqueue(self, *replies: Any) -> None:
        with self._lock:
            self._script.extend(replies)

    def complete(self, request: ChatRequest) -> ChatResponse:
        with self._lock:
            self.calls.append(request)
            reply = self._script.pop(0) if self._script else None
        if reply is None:
            reply = self._responder(request) if self._responder else default_responder(request)
        return self._to_response(request, reply)

    def _to_response(self, request: ChatRequest, reply: Any) -> ChatResponse:
        if isinstance(reply, Exception):
            raise reply
        if isinstance(reply, ChatResponse):
            return reply
        if not isinstance(reply, MockReply):
            reply = MockReply(data=reply) if isinstance(reply, (dict, list)) else MockReply(text=str(reply))
        if reply.error is not None:
            raise reply.error
        if reply.data is not None:
            text = reply.text if reply.text is not None else json.dumps(reply.data, indent=1)
            parsed: Any = reply.data if request.schema is not None else None
        else:
            text = reply.text or ""
            parsed = parse_with_schema(request.schema, text) if request.schema is not None else None
        logprobs = reply.token_logprobs if request.want_logprobs else None
        return ChatResponse(
            text=text,
            parsed=parsed,
            token_logprobs=logprobs,
            usage=Usage(
                prompt_tokens=len(request.rendered_prompt()) // 4,
                completion_tokens=len(text) // 4,
            ),
        )

    def embed(self, texts: Sequence[str], model: Optional[str] = None) -> list[list[float]]:
        if not texts:
            raise ValueError("embed() needs at least one text")
        with self._lock:
            self.embed_calls.append(tuple(texts))
        if self._embedder is not None:
            return self._embedder(texts)
        return [self._hash_vector(t) for t in texts]

    def _hash_vector(self, text: str) -> list[float]:
        seed = int(hashlib.sha256(text.encode("utf-8")).hexdigest()[:16], 16)
        rng = random.Random(seed)
        raw = [rng.gauss(0, 1) for _ in range(self._dim)]
        norm = math.sqrt(sum(x * x for x in raw))
        return [x / norm for x in raw]
