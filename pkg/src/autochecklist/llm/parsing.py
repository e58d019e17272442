"""Recovering structured values from raw completion text."""

from __future__ import annotations

import json
import re
from typing import Any, Mapping, Optional

from .base import StructuredSchema

_FENCE = re.compile(r"```(?:json)?\s*\n(.*?)```", re.DOTALL)


def extract_structured(text: str) -> Optional[Any]:
    """Return the first well-formed JSON value found in ``text``.

    Fenced blocks are tried first, then any bare object or array.
    """
    for match in _FENCE.finditer(text):
        candidate = match.group(1).strip()
        try:
            return json.loads(candidate)
        except json.JSONDecodeError:
            continue
    decoder = json.JSONDecoder()
    for start, ch in enumerate(text):
        if ch not in "{[":
            continue
        try:
            value, _ = decoder.raw_decode(text, start)
            return value
        except json.JSONDecodeError:
            continue
    return None


def conforms(schema: StructuredSchema, value: Any) -> bool:
    """Light structural check: an object carrying every required field."""
    if not isinstance(value, Mapping):
        return False
    return all(name in value for name in schema.required_fields())


def parse_with_schema(schema: StructuredSchema, text: str) -> Optional[Any]:
    """Parse completion text against a schema, tolerating surrounding prose."""
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = extract_structured(text)
    if value is not None and conforms(schema, value):
        return value
    return None


def _skeleton(schema: Mapping[str, Any]) -> Any:
    kind = schema.get("type")
    if "enum" in schema:
        return " | ".join(str(v) for v in schema["enum"])
    if kind == "object":
        return {name: _skeleton(sub) for name, sub in schema.get("properties", {}).items()}
    if kind == "array":
        return [_skeleton(schema.get("items", {}))]
    if kind == "integer":
        return 0
    if kind == "number":
        return 0.0
    if kind == "boolean":
        return True
    return "..."


def format_instructions(schema: StructuredSchema) -> str:
    """Suffix appended to the final user message when schema enforcement
    is unavailable: names the fields and shows an example skeleton."""
    skeleton = json.dumps(_skeleton(schema.schema), indent=2)
    required = ", ".join(schema.required_fields()) or "all fields shown"
    return (
        f"\n\nRespond with a single JSON object (no surrounding prose). "
        f"Required fields: {required}. Use exactly this structure:\n{skeleton}"
    )
