"""LLM access: provider-neutral types, HTTP client, and the offline mock."""

from __future__ import annotations

from typing import Optional

from ..errors import ConfigError
from .base import (
    DEFAULT_BACKOFF_BASE,
    DEFAULT_MAX_ATTEMPTS,
    DEFAULT_MAX_CONCURRENCY,
    DEFAULT_TIMEOUT,
    ChatRequest,
    ChatResponse,
    LLMClient,
    Message,
    ProviderConfig,
    StructuredSchema,
    TokenLogprob,
    Usage,
    answer_kind,
    parse_answer_text,
    yes_probability,
)
from .http import HTTPClient
from .mock import MockLLMClient, MockReply, default_responder, prompt_digest
from .parsing import extract_structured, format_instructions, parse_with_schema

PROVIDERS = ("openai", "openrouter", "openai_compatible", "mock")

# local OpenAI-compatible servers people commonly point at
PROVIDER_ALIASES = {"vllm": "openai_compatible", "ollama": "openai_compatible"}


def make_client(
    provider: str = "openai",
    base_url: Optional[str] = None,
    api_key_env: Optional[str] = None,
    max_concurrency: int = DEFAULT_MAX_CONCURRENCY,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    backoff_base: float = DEFAULT_BACKOFF_BASE,
    timeout: float = DEFAULT_TIMEOUT,
) -> LLMClient:
    """Build a client for one of the supported providers."""
    provider = PROVIDER_ALIASES.get(provider, provider)
    if provider not in PROVIDERS:
        raise ConfigError(f"unknown provider {provider!r}; expected one of {PROVIDERS}")
    if provider == "mock":
        return MockLLMClient()
    return HTTPClient(
        ProviderConfig(
            kind=provider,
            base_url=base_url or "",
            api_key_env=api_key_env,
            max_concurrency=max_concurrency,
            max_attempts=max_attempts,
            backoff_base=backoff_base,
            timeout=timeout,
        )
    )


__all__ = [
    "ChatRequest",
    "ChatResponse",
    "HTTPClient",
    "LLMClient",
    "Message",
    "MockLLMClient",
    "MockReply",
    "PROVIDERS",
    "PROVIDER_ALIASES",
    "ProviderConfig",
    "StructuredSchema",
    "TokenLogprob",
    "Usage",
    "answer_kind",
    "default_responder",
    "extract_structured",
    "format_instructions",
    "make_client",
    "parse_answer_text",
    "parse_with_schema",
    "prompt_digest",
    "yes_probability",
]
