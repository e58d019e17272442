"""Prompt template registry: Markdown files with `{placeholder}` slots.

A template file may open with a front-matter header::

    ---
    name: tick_gen
    requires: input
    ---

The body below is the prompt. A line consisting of ``[USER]`` splits the
body into a system segment (above) and user segment (below); without it
the whole body renders as a single user message. ``requires:`` narrows
the set of placeholders that must be bound at render time; every other
discovered placeholder renders as the empty string when unbound.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional

from .errors import TemplateError
from .llm import Message

ROLE_SPLIT_MARKER = "[USER]"

_PLACEHOLDER_NAME = re.compile(r"^[a-z_]+$")
_TOKEN = re.compile(r"\{\{|\}\}|\{([a-z_]+)\}")
_FRONT_MATTER = re.compile(r"\A---\s*\n(.*?)\n---\s*\n", re.DOTALL)


def discover_placeholders(body: str) -> frozenset[str]:
    """Placeholder names used in a body, ignoring `{{`/`}}` escapes."""
    return frozenset(m.group(1) for m in _TOKEN.finditer(body) if m.group(1))


def escape(text: str) -> str:
    """Escape literal braces so the text survives rendering unchanged."""
    return text.replace("{", "{{").replace("}", "}}")


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str
    required_placeholders: frozenset[str] = field(default_factory=frozenset)
    role_split: str = ROLE_SPLIT_MARKER

    def __post_init__(self):
        if not self.name:
            raise TemplateError("template name must be non-empty")
        discovered = discover_placeholders(self.body)
        for name in self.required_placeholders:
            if not _PLACEHOLDER_NAME.match(name):
                raise TemplateError(f"template {self.name!r}: bad placeholder name {name!r}")
            if name not in discovered:
                raise TemplateError(
                    f"template {self.name!r}: required placeholder {{{name}}} does not appear in the body"
                )

    @property
    def placeholders(self) -> frozenset[str]:
        return discover_placeholders(self.body)

    def render(self, bindings: Mapping[str, str]) -> list[Message]:
        """Substitute bindings and split into system/user messages."""
        missing = sorted(self.required_placeholders - set(bindings))
        if missing:
            raise TemplateError(
                f"template {self.name!r}: missing binding for placeholder {missing[0]!r}"
                + (f" (and {len(missing) - 1} more)" if len(missing) > 1 else "")
            )

        def substitute(match: re.Match) -> str:
            token = match.group(0)
            if token == "{{":
                return "{"
            if token == "}}":
                return "}"
            name = match.group(1)
            return str(bindings[name]) if name in bindings else ""

        rendered = _TOKEN.sub(substitute, self.body)
        system, user = _split_roles(rendered, self.role_split)
        messages = []
        if system:
            messages.append(Message("system", system))
        messages.append(Message("user", user))
        return messages


def _split_roles(text: str, marker: str) -> tuple[str, str]:
    lines = text.split("\n")
    for i, line in enumerate(lines):
        if line.strip() == marker:
            return "\n".join(lines[:i]).strip(), "\n".join(lines[i + 1 :]).strip()
    return "", text.strip()


def parse_template_text(text: str, fallback_name: str = "") -> PromptTemplate:
    """Parse front-matter and body from raw template text."""
    name = fallback_name
    requires: Optional[frozenset[str]] = None
    body = text
    match = _FRONT_MATTER.match(text)
    if match:
        body = text[match.end() :]
        for line in match.group(1).splitlines():
            line = line.strip()
            if not line or ":" not in line:
                continue
            key, _, value = line.partition(":")
            key, value = key.strip(), value.strip()
            if key == "name":
                name = value
            elif key == "requires":
                requires = frozenset(p.strip() for p in value.split(",") if p.strip())
    if not name:
        raise TemplateError("template has no name: add a front-matter `name:` entry")
    body = body.strip("\n")
    required = requires if requires is not None else discover_placeholders(body)
    return PromptTemplate(name=name, body=body, required_placeholders=required)


# -- registry -----------------------------------------------------------

_registry: dict[str, PromptTemplate] = {}
_registry_lock = threading.Lock()
_builtins_loaded = False
_builtin_names: set[str] = set()


def register_template(template: PromptTemplate, replace: bool = False) -> PromptTemplate:
    with _registry_lock:
        if not replace and template.name in _registry:
            raise TemplateError(f"a template named {template.name!r} is already registered")
        _registry[template.name] = template
    return template


def get_template(name: str) -> PromptTemplate:
    ensure_builtin_templates()
    try:
        return _registry[name]
    except KeyError:
        known = ", ".join(sorted(_registry))
        raise TemplateError(f"no template named {name!r}; registered: {known}") from None


def has_template(name: str) -> bool:
    ensure_builtin_templates()
    return name in _registry


def is_builtin_template(name: str) -> bool:
    """True when the name belongs to a template shipped with the package."""
    ensure_builtin_templates()
    return name in _builtin_names


def list_templates() -> list[str]:
    ensure_builtin_templates()
    return sorted(_registry)


def load_template(path_or_name: str | Path) -> PromptTemplate:
    """Resolve a registry name, or load (without registering) a template file."""
    ensure_builtin_templates()
    if isinstance(path_or_name, str) and path_or_name in _registry:
        return _registry[path_or_name]
    path = Path(path_or_name)
    if not path.is_file():
        raise TemplateError(f"{path_or_name!r} is neither a registered template nor a readable file")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise TemplateError(f"cannot read template file {path}: {exc}") from exc
    return parse_template_text(text, fallback_name=path.stem)


def ensure_builtin_templates() -> None:
    """Load the shipped template files exactly once."""
    global _builtins_loaded
    if _builtins_loaded:
        return
    with _registry_lock:
        if _builtins_loaded:
            return
        root = resources.files("autochecklist").joinpath("data/templates")
        for pipeline_dir in sorted(root.iterdir(), key=lambda e: e.name):
            if not pipeline_dir.is_dir():
                continue
            for entry in sorted(pipeline_dir.iterdir(), key=lambda e: e.name):
                if not entry.name.endswith(".md"):
                    continue
                template = parse_template_text(entry.read_text(encoding="utf-8"))
                if template.name in _registry:
                    raise TemplateError(
                        f"duplicate built-in template name {template.name!r} in {entry.name}"
                    )
                _registry[template.name] = template
                _builtin_names.add(template.name)
        _builtins_loaded = True
