"""Optional checklist refinement stages, composable in sequence.

Each refiner takes a checklist and returns (refined checklist, report).
The report carries enough bookkeeping to audit exactly which items were
removed or merged and why.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping, Optional, Sequence

from .core import Checklist, ChecklistItem
from .errors import ParseError, RefinerError
from .llm import ChatRequest, LLMClient, StructuredSchema, parse_answer_text
from .templates import PromptTemplate, get_template

logger = logging.getLogger(__name__)

DEFAULT_SIMILARITY_THRESHOLD = 0.85
DEFAULT_BEAM_WIDTH = 5
DEFAULT_LENGTH_PENALTY = 0.1
DEFAULT_TRIALS = 2
DEFAULT_PROBE_TARGET = (
    "This is a deliberately plain probe response. It restates the task in one "
    "sentence, gives a short generic answer, and stops without elaboration."
)


@dataclass(frozen=True)
class RefinerReport:
    """Audit record for one refinement stage."""

    stage: str
    items_in: int
    items_out: int
    removals: tuple[tuple[str, str], ...] = ()
    merges: tuple[tuple[tuple[str, ...], str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "removals", tuple(self.removals))
        object.__setattr__(
            self, "merges", tuple((tuple(members), merged) for members, merged in self.merges)
        )
        collapsed = sum(len(members) - 1 for members, _ in self.merges)
        if self.items_out != self.items_in - len(self.removals) - collapsed:
            raise ValueError(
                f"stage {self.stage!r}: items_out {self.items_out} does not reconcile with "
                f"items_in {self.items_in}, {len(self.removals)} removals, {collapsed} merged away"
            )


class Refiner:
    stage: str = ""

    def refine(self, checklist: Checklist) -> tuple[Checklist, RefinerReport]:
        raise NotImplementedError


def apply_refiners(
    checklist: Checklist, refiners: Sequence[Refiner]
) -> tuple[Checklist, list[RefinerReport]]:
    reports = []
    for refiner in refiners:
        checklist, report = refiner.refine(checklist)
        reports.append(report)
    return checklist, reports


# -- similarity clustering ----------------------------------------------


def cosine_similarity(a: Sequence[float], b: Sequence[float]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    if na == 0 or nb == 0:
        return 0.0
    return dot / (na * nb)


def cluster_indexes(vectors: Sequence[Sequence[float]], threshold: float) -> list[list[int]]:
    """Group vector indexes into transitive clusters of cosine >= threshold.

    Union-find over all pairs, so A~B and B~C land in one cluster even if
    A and C are dissimilar. Clusters come back ordered by their smallest
    member index, members ascending.
    """
    if not 0 < threshold <= 1:
        raise ValueError(f"similarity threshold {threshold} outside (0, 1]")
    n = len(vectors)
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(n):
        for j in range(i + 1, n):
            if cosine_similarity(vectors[i], vectors[j]) >= threshold:
                ri, rj = find(i), find(j)
                if ri != rj:
                    # keep the smaller index as root so ordering is stable
                    parent[max(ri, rj)] = min(ri, rj)

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [sorted(groups[root]) for root in sorted(groups)]


# -- deduplicator --------------------------------------------------------

_MERGE_SCHEMA = StructuredSchema(
    name="question",
    schema={
        "type": "object",
        "properties": {"question": {"type": "string"}},
        "required": ["question"],
    },
)


class Deduplicator(Refiner):
    """Merge semantically redundant questions.

    Questions are embedded and clustered transitively at the similarity
    threshold; each multi-member cluster is rewritten into one question
    by the LLM. The merged item keeps the earliest member's id and
    position, the max member weight, and the union of member tags.
    """

    stage = "dedup"

    def __init__(
        self,
        client: LLMClient,
        model: str,
        template: Optional[PromptTemplate] = None,
        threshold: float = DEFAULT_SIMILARITY_THRESHOLD,
        embed_model: Optional[str] = None,
    ):
        if not 0 < threshold <= 1:
            raise ValueError(f"similarity threshold {threshold} outside (0, 1]")
        self.client = client
        self.model = model
        self.template = template or get_template("dedup_merge")
        self.threshold = threshold
        self.embed_model = embed_model

    def refine(self, checklist: Checklist) -> tuple[Checklist, RefinerReport]:
        items = checklist.items
        if len(items) < 2:
            return checklist, RefinerReport(self.stage, len(items), len(items))

        vectors = self.client.embed([i.question for i in items], model=self.embed_model)
        clusters = cluster_indexes(vectors, self.threshold)

        out: list[ChecklistItem] = []
        merges: list[tuple[tuple[str, ...], str]] = []
        for cluster in clusters:
            members = [items[i] for i in cluster]
            if len(members) == 1:
                out.append(members[0])
                continue
            merged = self._merge(members)
            out.append(merged)
            merges.append((tuple(m.id for m in members), merged.id))

        report = RefinerReport(self.stage, len(items), len(out), merges=tuple(merges))
        refined = Checklist(
            id=checklist.id,
            items=tuple(out),
            level=checklist.level,
            source=checklist.source,
            metadata=checklist.metadata,
        )
        return refined, report

    def _merge(self, members: Sequence[ChecklistItem]) -> ChecklistItem:
        listed = "\n".join(f"- {m.question}" for m in members)
        messages = self.template.render({"questions": listed})
        try:
            response = self.client.complete(
                ChatRequest(model=self.model, messages=tuple(messages), schema=_MERGE_SCHEMA)
            )
        except ParseError as exc:
            raise RefinerError(f"merge call returned unparseable output: {exc}") from exc
        question = ""
        if isinstance(response.parsed, Mapping):
            question = str(response.parsed.get("question", "")).strip()
        if not question:
            raise RefinerError("merge call returned no question")
        weights = [m.weight for m in members if m.weight is not None]
        tags: frozenset[str] = frozenset().union(*(m.tags for m in members))
        head = members[0]
        return ChecklistItem(
            id=head.id,
            question=question,
            weight=max(weights) if weights else None,
            dimension=head.dimension,
            tags=tags,
        )


# -- tagger ---------------------------------------------------------------

KEEP_POLICIES = ("drop_fail", "tag_only")


def _tag_schema(item_ids: Sequence[str]) -> StructuredSchema:
    return StructuredSchema(
        name="tag_labels",
        schema={
            "type": "object",
            "properties": {
                "labels": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "item_id": {"type": "string", "enum": list(item_ids)},
                            "verdict": {"type": "string", "enum": ["pass", "fail"]},
                            "tags": {"type": "array", "items": {"type": "string"}},
                        },
                        "required": ["item_id", "verdict", "tags"],
                    },
                }
            },
            "required": ["labels"],
        },
    )


class Tagger(Refiner):
    """Label every item pass/fail for a named quality in one batched call."""

    stage = "tag"

    def __init__(
        self,
        client: LLMClient,
        model: str,
        quality: str,
        description: str,
        keep_policy: str = "drop_fail",
        template: Optional[PromptTemplate] = None,
    ):
        if not description.strip():
            raise ValueError("quality description must be non-empty")
        if keep_policy not in KEEP_POLICIES:
            raise ValueError(f"keep_policy must be one of {KEEP_POLICIES}, got {keep_policy!r}")
        self.client = client
        self.model = model
        self.quality = quality
        self.description = description
        self.keep_policy = keep_policy
        self.template = template or get_template("tag_quality")

    def refine(self, checklist: Checklist) -> tuple[Checklist, RefinerReport]:
        items = checklist.items
        if not items:
            return checklist, RefinerReport(self.stage, 0, 0)
        listed = "\n".join(f"{i.id}. {i.question}" for i in items)
        messages = self.template.render(
            {"quality": self.quality, "quality_description": self.description, "checklist": listed}
        )
        try:
            response = self.client.complete(
                ChatRequest(
                    model=self.model,
                    messages=tuple(messages),
                    schema=_tag_schema([i.id for i in items]),
                )
            )
        except ParseError as exc:
            raise RefinerError(f"tag call returned unparseable output: {exc}") from exc

        rows = response.parsed.get("labels") if isinstance(response.parsed, Mapping) else None
        if not isinstance(rows, list):
            raise RefinerError("tag call returned no 'labels' list")
        labels: dict[str, tuple[str, tuple[str, ...]]] = {}
        for row in rows:
            if not isinstance(row, Mapping):
                continue
            item_id = str(row.get("item_id", ""))
            verdict = str(row.get("verdict", ""))
            if verdict not in ("pass", "fail"):
                raise RefinerError(f"tag call returned verdict {verdict!r} for {item_id!r}")
            labels[item_id] = (verdict, tuple(str(t) for t in row.get("tags") or ()))
        expected = {i.id for i in items}
        if set(labels) != expected or len(rows) != len(items):
            raise RefinerError(
                f"tag call labeled {len(labels)} of {len(items)} items; "
                "refusing to apply a partial labeling"
            )

        out: list[ChecklistItem] = []
        removals: list[tuple[str, str]] = []
        for item in items:
            verdict, tags = labels[item.id]
            if self.keep_policy == "drop_fail" and verdict == "fail":
                removals.append((item.id, f"failed quality {self.quality!r}"))
                continue
            extra = set(tags)
            if self.keep_policy == "tag_only":
                extra.add(f"{self.quality}={verdict}")
            out.append(item.with_tags(extra) if extra else item)

        report = RefinerReport(self.stage, len(items), len(out), removals=tuple(removals))
        refined = Checklist(
            id=checklist.id,
            items=tuple(out),
            level=checklist.level,
            source=checklist.source,
            metadata=checklist.metadata,
        )
        return refined, report


# -- unit tester ----------------------------------------------------------


class UnitTester(Refiner):
    """Keep only items a judge can answer stably.

    Every item is asked against every probe target for `trials`
    repetitions at temperature 0. An item survives iff every reply
    parses to YES/NO and the replies agree within each probe.
    """

    stage = "unit_test"

    def __init__(
        self,
        client: LLMClient,
        model: str,
        probe_targets: Sequence[str] = (DEFAULT_PROBE_TARGET,),
        trials: int = DEFAULT_TRIALS,
        template: Optional[PromptTemplate] = None,
    ):
        if not probe_targets:
            raise ValueError("unit testing needs at least one probe target")
        if trials < 1:
            raise ValueError("trials must be >= 1")
        self.client = client
        self.model = model
        self.probe_targets = tuple(probe_targets)
        self.trials = trials
        self.template = template or get_template("score_item")

    def refine(self, checklist: Checklist) -> tuple[Checklist, RefinerReport]:
        out: list[ChecklistItem] = []
        removals: list[tuple[str, str]] = []
        for item in checklist.items:
            reason = self._probe_item(item)
            if reason is None:
                out.append(item)
            else:
                removals.append((item.id, reason))
        report = RefinerReport(
            self.stage, len(checklist.items), len(out), removals=tuple(removals)
        )
        refined = Checklist(
            id=checklist.id,
            items=tuple(out),
            level=checklist.level,
            source=checklist.source,
            metadata=checklist.metadata,
        )
        return refined, report

    def _probe_item(self, item: ChecklistItem) -> Optional[str]:
        for probe in self.probe_targets:
            messages = self.template.render({"question": item.question, "target": probe})
            answers = []
            for _ in range(self.trials):
                response = self.client.complete(
                    ChatRequest(model=self.model, messages=tuple(messages), temperature=0.0)
                )
                parsed = parse_answer_text(response.text)
                if parsed is None:
                    return "unparseable"
                answers.append(parsed)
            if len(set(answers)) > 1:
                return "unstable"
        return None


# -- selector -------------------------------------------------------------

Objective = Callable[[frozenset[str]], float]


class Selector(Refiner):
    """Beam-search a subset maximizing objective(S) - penalty * |S|.

    Starts from the empty subset, extends every beam state by every
    unused item, keeps the top `beam_width` states per step, and stops
    when no extension improves the best score seen or states hit
    max_len. Ties break toward smaller subsets, then lexicographic ids.

    When a step produces more states than fit the beam, survivors are
    ranked by the best score reachable one extension ahead instead of
    their standing score: narrow beams otherwise drop the prefixes of
    the optimum on heavily tied objectives. Scores are cached, so the
    lookahead work seeds the next step's evaluations.
    """

    stage = "select"

    def __init__(
        self,
        objective: Objective,
        length_penalty: float = DEFAULT_LENGTH_PENALTY,
        beam_width: int = DEFAULT_BEAM_WIDTH,
        max_len: Optional[int] = None,
    ):
        if beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if length_penalty < 0:
            raise ValueError("length_penalty must be >= 0")
        if max_len is not None and max_len < 0:
            raise ValueError("max_len must be >= 0")
        self.objective = objective
        self.length_penalty = length_penalty
        self.beam_width = beam_width
        self.max_len = max_len

    def refine(self, checklist: Checklist) -> tuple[Checklist, RefinerReport]:
        ids = [item.id for item in checklist.items]
        selected = self.search(ids)
        out = tuple(item for item in checklist.items if item.id in selected)
        removals = tuple(
            (item.id, "not selected") for item in checklist.items if item.id not in selected
        )
        report = RefinerReport(self.stage, len(ids), len(out), removals=removals)
        refined = Checklist(
            id=checklist.id,
            items=out,
            level=checklist.level,
            source=checklist.source,
            metadata=checklist.metadata,
        )
        return refined, report

    def search(self, ids: Sequence[str]) -> frozenset[str]:
        """Run the beam search over item ids and return the best subset."""
        limit = len(ids) if self.max_len is None else min(self.max_len, len(ids))
        cache: dict[frozenset[str], float] = {}

        def score(state: frozenset[str]) -> float:
            if state not in cache:
                cache[state] = self.objective(state) - self.length_penalty * len(state)
            return cache[state]

        def rank_key(state: frozenset[str]) -> tuple:
            return (-score(state), len(state), tuple(sorted(state)))

        def reach(state: frozenset[str]) -> float:
            # best score visible one extension ahead; a state at its
            # peak keeps its own score so it still competes
            value = score(state)
            if len(state) < limit:
                for item_id in ids:
                    if item_id not in state:
                        value = max(value, score(state | {item_id}))
            return value

        def survival_key(state: frozenset[str]) -> tuple:
            return (-reach(state),) + rank_key(state)

        empty: frozenset[str] = frozenset()
        best = empty
        beam = [empty]
        while beam:
            candidates: set[frozenset[str]] = set()
            for state in beam:
                if len(state) >= limit:
                    continue
                for item_id in ids:
                    if item_id not in state:
                        candidates.add(state | {item_id})
            if not candidates:
                break
            improved = any(score(c) > score(best) for c in candidates)
            ordered = sorted(candidates, key=rank_key)
            if rank_key(ordered[0]) < rank_key(best):
                best = ordered[0]
            if not improved:
                break
            if len(ordered) > self.beam_width:
                beam = sorted(candidates, key=survival_key)[: self.beam_width]
            else:
                beam = ordered
        return best


# -- built-in objectives --------------------------------------------------


def coverage_objective(matches: Mapping[str, frozenset[int]], n_signals: int) -> Objective:
    """Fraction of signals covered by at least one selected item."""
    if n_signals < 0:
        raise ValueError("n_signals must be >= 0")

    def objective(state: frozenset[str]) -> float:
        if n_signals == 0 or not state:
            return 0.0
        covered: set[int] = set()
        for item_id in state:
            covered.update(matches.get(item_id, frozenset()))
        return len(covered) / n_signals

    return objective


def discrimination_objective(
    pair_answers: Sequence[tuple[Mapping[str, bool], Mapping[str, bool]]],
) -> Objective:
    """Mean (chosen - rejected) pass-rate delta using cached per-item answers."""
    if not pair_answers:
        raise ValueError("discrimination objective needs at least one answer pair")

    def pass_rate(answers: Mapping[str, bool], state: frozenset[str]) -> float:
        return sum(1.0 for i in state if answers.get(i, False)) / len(state)

    def objective(state: frozenset[str]) -> float:
        if not state:
            return 0.0
        deltas = [
            pass_rate(chosen, state) - pass_rate(rejected, state)
            for chosen, rejected in pair_answers
        ]
        return sum(deltas) / len(deltas)

    return objective


def _match_matrix_schema(item_ids: Sequence[str], n_signals: int) -> StructuredSchema:
    return StructuredSchema(
        name="match_matrix",
        schema={
            "type": "object",
            "properties": {
                "matches": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "item_id": {"type": "string", "enum": list(item_ids)},
                            "signal_indexes": {
                                "type": "array",
                                "items": {
                                    "type": "integer",
                                    "minimum": 0,
                                    "maximum": max(0, n_signals - 1),
                                },
                            },
                        },
                        "required": ["item_id", "signal_indexes"],
                    },
                }
            },
            "required": ["matches"],
        },
    )


def build_match_matrix(
    client: LLMClient,
    model: str,
    checklist: Checklist,
    signals: Sequence[str],
    template: Optional[PromptTemplate] = None,
) -> dict[str, frozenset[int]]:
    """One batched LLM call mapping each item to the signals it covers."""
    if not signals:
        raise ValueError("match matrix needs at least one signal")
    template = template or get_template("match_matrix")
    listed = "\n".join(f"{i.id}. {i.question}" for i in checklist.items)
    numbered = "\n".join(f"{idx}. {s}" for idx, s in enumerate(signals))
    messages = template.render({"checklist": listed, "signals": numbered})
    try:
        response = client.complete(
            ChatRequest(
                model=model,
                messages=tuple(messages),
                schema=_match_matrix_schema(checklist.item_ids(), len(signals)),
            )
        )
    except ParseError as exc:
        raise RefinerError(f"match matrix call returned unparseable output: {exc}") from exc
    rows = response.parsed.get("matches") if isinstance(response.parsed, Mapping) else None
    if not isinstance(rows, list):
        raise RefinerError("match matrix call returned no 'matches' list")
    matches: dict[str, frozenset[int]] = {i: frozenset() for i in checklist.item_ids()}
    for row in rows:
        if not isinstance(row, Mapping):
            continue
        item_id = str(row.get("item_id", ""))
        if item_id not in matches:
            continue
        indexes = row.get("signal_indexes") or ()
        matches[item_id] = frozenset(
            int(i) for i in indexes if isinstance(i, int) and 0 <= i < len(signals)
        )
    return matches


def load_match_matrix(path: str | Path) -> tuple[dict[str, frozenset[int]], int]:
    """Read a saved item-by-signal boolean matrix.

    Expected shape: {"items": [ids], "signals": [ids], "matrix": [[0/1, ...], ...]}
    with one matrix row per item.
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise RefinerError(f"cannot read match matrix file {path}: {exc}") from exc
    try:
        items = list(doc["items"])
        signals = list(doc["signals"])
        matrix = list(doc["matrix"])
    except (KeyError, TypeError) as exc:
        raise RefinerError(f"match matrix file {path} is missing field {exc}") from exc
    if len(matrix) != len(items):
        raise RefinerError(
            f"match matrix file {path}: {len(matrix)} rows for {len(items)} items"
        )
    matches: dict[str, frozenset[int]] = {}
    for item_id, row in zip(items, matrix):
        if len(row) != len(signals):
            raise RefinerError(
                f"match matrix file {path}: row for {item_id!r} has {len(row)} columns, "
                f"expected {len(signals)}"
            )
        matches[str(item_id)] = frozenset(i for i, flag in enumerate(row) if flag)
    return matches, len(signals)


def save_match_matrix(
    path: str | Path,
    matches: Mapping[str, frozenset[int]],
    item_ids: Sequence[str],
    signal_ids: Sequence[str],
) -> None:
    matrix = [
        [1 if i in matches.get(item_id, frozenset()) else 0 for i in range(len(signal_ids))]
        for item_id in item_ids
    ]
    doc = {"items": list(item_ids), "signals": list(signal_ids), "matrix": matrix}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
