"""Chat-completion and embedding client for OpenAI-compatible endpoints."""

from __future__ import annotations

import json
import math
import os
import random
import threading
import time
from typing import Any, Callable, Optional, Sequence

import httpx

from ..errors import ConfigError, ParseError, TransportError
from .base import (
    ChatRequest,
    ChatResponse,
    LLMClient,
    Message,
    ProviderConfig,
    TokenLogprob,
    Usage,
)
from .parsing import format_instructions, parse_with_schema

KNOWN_BASE_URLS = {
    "openai": "https://api.openai.com/v1",
    "openrouter": "https://openrouter.ai/api/v1",
}
DEFAULT_KEY_ENVS = {
    "openai": "OPENAI_API_KEY",
    "openrouter": "OPENROUTER_API_KEY",
    "openai_compatible": "OPENAI_API_KEY",
}

# transport(url, payload, headers, timeout) -> (status, body, response_headers)
Transport = Callable[[str, dict, dict, float], tuple[int, Any, dict]]


class _SchemaRejected(Exception):
    """Provider refused the response_format payload."""


def _httpx_transport(url: str, payload: dict, headers: dict, timeout: float) -> tuple[int, Any, dict]:
    response = httpx.post(url, json=payload, headers=headers, timeout=timeout)
    try:
        body = response.json()
    except json.JSONDecodeError:
        body = response.text
    return response.status_code, body, dict(response.headers)


class HTTPClient(LLMClient):
    """Synchronous client with bounded concurrency, retries, and a
    structured-output fallback path.

    Safe to share across threads: in-flight requests are capped by a
    semaphore of size ``max_concurrency``.
    """

    def __init__(
        self,
        config: ProviderConfig,
        transport: Optional[Transport] = None,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        if config.kind == "mock":
            raise ConfigError("use MockLLMClient for the mock provider")
        base_url = config.base_url or KNOWN_BASE_URLS.get(config.kind, "")
        if not base_url:
            raise ConfigError(f"provider kind {config.kind!r} requires an explicit base_url")
        self.config = config
        self.base_url = base_url.rstrip("/")
        self._transport = transport or _httpx_transport
        self._sleep = sleeper
        self._slots = threading.BoundedSemaphore(config.max_concurrency)

    # -- auth ----------------------------------------------------------

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        env = self.config.api_key_env or DEFAULT_KEY_ENVS.get(self.config.kind)
        key = os.environ.get(env, "") if env else ""
        if key:
            headers["Authorization"] = f"Bearer {key}"
        elif self.config.kind in ("openai", "openrouter"):
            raise ConfigError(
                f"no API key found in ${env}; export it or use --provider mock"
            )
        return headers

    # -- transport with retries ----------------------------------------

    def _post(self, path: str, payload: dict) -> Any:
        url = f"{self.base_url}{path}"
        headers = self._headers()
        attempts = self.config.max_attempts
        last_error = "no attempts made"
        for attempt in range(1, attempts + 1):
            status: Optional[int] = None
            resp_headers: dict = {}
            try:
                with self._slots:
                    status, body, resp_headers = self._transport(
                        url, payload, headers, self.config.timeout
                    )
            except Exception as exc:
                last_error = f"transport failure: {exc}"
            else:
                if status < 300:
                    return body
                last_error = f"HTTP {status}: {_error_snippet(body)}"
                if 300 <= status < 500 and status != 429:
                    if "response_format" in payload:
                        raise _SchemaRejected(last_error)
                    raise TransportError(last_error, status=status)
            if attempt == attempts:
                break
            self._sleep(self._delay(attempt, status, resp_headers))
        raise TransportError(f"request failed after {attempts} attempts; last: {last_error}")

    def _delay(self, attempt: int, status: Optional[int], resp_headers: dict) -> float:
        if status == 429:
            retry_after = resp_headers.get("retry-after") or resp_headers.get("Retry-After")
            if retry_after:
                try:
                    return max(0.0, float(retry_after))
                except ValueError:
                    pass
        base = self.config.backoff_base * (2 ** (attempt - 1))
        return base + random.uniform(0, self.config.backoff_base / 4)

    # -- chat ----------------------------------------------------------

    def complete(self, request: ChatRequest) -> ChatResponse:
        payload = self._chat_payload(request, enforce_schema=True)
        try:
            body = self._post("/chat/completions", payload)
        except _SchemaRejected:
            return self._complete_with_instructions(request)
        response = self._parse_chat_body(body, request)
        if request.schema is not None and response.parsed is None:
            return self._complete_with_instructions(request)
        return response

    def _complete_with_instructions(self, request: ChatRequest) -> ChatResponse:
        """Single fallback pass: drop response_format, append instructions."""
        assert request.schema is not None
        suffix = format_instructions(request.schema)
        messages = list(request.messages)
        for i in range(len(messages) - 1, -1, -1):
            if messages[i].role == "user":
                messages[i] = Message("user", messages[i].content + suffix)
                break
        else:
            messages.append(Message("user", suffix.strip()))
        fallback = ChatRequest(
            model=request.model,
            messages=tuple(messages),
            schema=request.schema,
            want_logprobs=request.want_logprobs,
            top_logprobs=request.top_logprobs,
            temperature=request.temperature,
            max_tokens=request.max_tokens,
        )
        body = self._post("/chat/completions", self._chat_payload(fallback, enforce_schema=False))
        response = self._parse_chat_body(body, fallback)
        if response.parsed is None:
            raise ParseError(
                f"could not recover a {request.schema.name!r} value from the completion",
                raw_text=response.text,
            )
        return response

    def _chat_payload(self, request: ChatRequest, enforce_schema: bool) -> dict:
        if not request.model:
            raise ConfigError("no model specified for chat completion")
        payload: dict[str, Any] = {
            "model": request.model,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "temperature": request.temperature,
        }
        if request.max_tokens is not None:
            payload["max_tokens"] = request.max_tokens
        if request.want_logprobs:
            payload["logprobs"] = True
            payload["top_logprobs"] = request.top_logprobs
        if request.schema is not None and enforce_schema:
            payload["response_format"] = {
                "type": "json_schema",
                "json_schema": {
                    "name": request.schema.name,
                    "schema": dict(request.schema.schema),
                    "strict": True,
                },
            }
        return payload

    def _parse_chat_body(self, body: Any, request: ChatRequest) -> ChatResponse:
        try:
            choice = body["choices"][0]
            text = choice["message"]["content"] or ""
        except (KeyError, IndexError, TypeError):
            raise TransportError(f"malformed completion body: {_error_snippet(body)}")
        parsed = parse_with_schema(request.schema, text) if request.schema else None
        logprobs = _parse_logprobs(choice) if request.want_logprobs else None
        usage = body.get("usage") or {}
        return ChatResponse(
            text=text,
            parsed=parsed,
            token_logprobs=logprobs,
            usage=Usage(
                prompt_tokens=usage.get("prompt_tokens", 0),
                completion_tokens=usage.get("completion_tokens", 0),
            ),
        )

    # -- embeddings ------------------------------------------------------

    def embed(self, texts: Sequence[str], model: Optional[str] = None) -> list[list[float]]:
        if not texts:
            raise ValueError("embed() needs at least one text")
        if self.config.kind == "openrouter":
            raise ConfigError("openrouter exposes no embeddings endpoint; use an OpenAI-compatible base_url")
        body = self._post("/embeddings", {"model": model or "text-embedding-3-small", "input": list(texts)})
        try:
            rows = sorted(body["data"], key=lambda d: d.get("index", 0))
            vectors = [row["embedding"] for row in rows]
        except (KeyError, TypeError):
            raise TransportError(f"malformed embeddings body: {_error_snippet(body)}")
        if len(vectors) != len(texts):
            raise TransportError(f"expected {len(texts)} embeddings, got {len(vectors)}")
        return [_unit_norm(v) for v in vectors]


def _unit_norm(vector: Sequence[float]) -> list[float]:
    norm = math.sqrt(sum(x * x for x in vector))
    if norm == 0:
        raise TransportError("provider returned a zero embedding vector")
    return [x / norm for x in vector]


def _parse_logprobs(choice: dict) -> Optional[tuple[TokenLogprob, ...]]:
    content = (choice.get("logprobs") or {}).get("content")
    if not content:
        return None
    entries = []
    for item in content:
        alternatives = tuple(
            (alt["token"], alt["logprob"]) for alt in item.get("top_logprobs", [])
        )
        entries.append(TokenLogprob(item["token"], item["logprob"], alternatives))
    return tuple(entries)


def _error_snippet(body: Any) -> str:
    if isinstance(body, dict):
        err = body.get("error")
        if isinstance(err, dict) and "message" in err:
            return str(err["message"])[:200]
    return str(body)[:200]
