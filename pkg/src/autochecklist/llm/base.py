"""Provider-neutral chat/embedding types and the client interface."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

DEFAULT_MAX_CONCURRENCY = 8
DEFAULT_MAX_ATTEMPTS = 3
DEFAULT_BACKOFF_BASE = 0.5
DEFAULT_TIMEOUT = 60.0


@dataclass(frozen=True)
class Message:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"unknown message role {self.role!r}")


@dataclass(frozen=True)
class StructuredSchema:
    """A named JSON object schema used for provider-enforced output."""

    name: str
    schema: Mapping[str, Any]

    def required_fields(self) -> list[str]:
        return list(self.schema.get("required", []))


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[Message, ...]
    schema: Optional[StructuredSchema] = None
    want_logprobs: bool = False
    top_logprobs: int = 5
    temperature: float = 0.0
    max_tokens: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(self.messages))
        if not self.messages:
            raise ValueError("chat request needs at least one message")
        if self.want_logprobs and self.top_logprobs < 2:
            raise ValueError("top_logprobs must be >= 2 so both answer tokens are observable")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    def rendered_prompt(self) -> str:
        return "\n".join(f"{m.role}: {m.content}" for m in self.messages)


@dataclass(frozen=True)
class TokenLogprob:
    token: str
    logprob: float
    alternatives: tuple[tuple[str, float], ...] = ()


@dataclass(frozen=True)
class Usage:
    prompt_tokens: int = 0
    completion_tokens: int = 0


@dataclass(frozen=True)
class ChatResponse:
    text: str
    parsed: Optional[Any] = None
    token_logprobs: Optional[tuple[TokenLogprob, ...]] = None
    usage: Usage = field(default_factory=Usage)


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "openai"
    base_url: str = ""
    api_key_env: Optional[str] = None
    max_concurrency: int = DEFAULT_MAX_CONCURRENCY
    max_attempts: int = DEFAULT_MAX_ATTEMPTS
    backoff_base: float = DEFAULT_BACKOFF_BASE
    timeout: float = DEFAULT_TIMEOUT

    def __post_init__(self):
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


class LLMClient:
    """Interface shared by the HTTP and mock providers."""

    def complete(self, request: ChatRequest) -> ChatResponse:
        raise NotImplementedError

    def embed(self, texts: Sequence[str], model: Optional[str] = None) -> list[list[float]]:
        raise NotImplementedError


_YES_FORMS = {"YES", "Y", "TRUE"}
_NO_FORMS = {"NO", "N", "FALSE"}
_LETTERS = re.compile(r"[^a-zA-Z]")


def answer_kind(token: str) -> Optional[str]:
    """Classify a token surface form as 'YES', 'NO', or neither."""
    cleaned = _LETTERS.sub("", token).upper()
    if cleaned in _YES_FORMS:
        return "YES"
    if cleaned in _NO_FORMS:
        return "NO"
    return None


_ANSWER_LINE = re.compile(r"answer\s*[:\-]\s*\**\s*(yes|no)\b", re.IGNORECASE)


def parse_answer_text(text: str) -> Optional[str]:
    """Read a YES/NO verdict from free text.

    Looks for an "Answer: YES/NO" line first, then falls back to
    classifying the first token. Returns None when neither yields a
    verdict, so callers can treat the reply as unparseable.
    """
    match = _ANSWER_LINE.search(text)
    if match:
        return match.group(1).upper()
    first = text.strip().split(None, 1)
    return answer_kind(first[0]) if first else None


def yes_probability(response: ChatResponse) -> Optional[float]:
    """Recover P(YES) from the logprobs of the first answer token.

    When both YES and NO surface forms are visible at that position, the
    two masses are renormalized against each other. When only the chosen
    form is visible, its own mass is used (complemented for NO). Returns
    None when no token at any position normalizes to an answer.
    """
    if not response.token_logprobs:
        return None
    for entry in response.token_logprobs:
        kind = answer_kind(entry.token)
        if kind is None:
            continue
        seen: dict[str, float] = {entry.token: entry.logprob}
        for token, logprob in entry.alternatives:
            seen.setdefault(token, logprob)
        yes_mass = sum(math.exp(lp) for tok, lp in seen.items() if answer_kind(tok) == "YES")
        no_mass = sum(math.exp(lp) for tok, lp in seen.items() if answer_kind(tok) == "NO")
        if yes_mass > 0 and no_mass > 0:
            return yes_mass / (yes_mass + no_mass)
        if kind == "YES":
            return min(1.0, math.exp(entry.logprob))
        return max(0.0, 1.0 - math.exp(entry.logprob))
    return None
