"""Local HTTP API behind the web UI.

Routes: single evaluation, side-by-side comparison, library CRUD for
checklists / prompt templates / pipeline configs, asynchronous batch
jobs with polling, the component registry, and static serving of the
built UI bundle. Built for loopback use; there is no authentication.
"""

from __future__ import annotations

import json
import os
import shlex
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

from fastapi import Body, FastAPI, HTTPException
from fastapi.responses import JSONResponse, PlainTextResponse

from .batch import load_results, normalize_rows, run_batch
from .core import Checklist, Level, Metric
from .errors import AutoChecklistError, ConfigError, DatasetError, TemplateError
from .generators import GENERATOR_KINDS
from .llm import LLMClient, make_client
from .pipelines import (
    REFINER_STAGES,
    ChecklistPipeline,
    PipelineConfig,
    config_from_portable_doc,
    config_to_portable_doc,
    get_pipeline_config,
    registered_pipelines,
)
from .scorer import ChecklistScorer, ScorerConfig
from .templates import PromptTemplate

GENERATOR_DESCRIPTIONS = {
    "direct": "One call turns the task (and optional reference) into a checklist.",
    "contrastive": "Candidate or preference responses are contrasted to surface what separates better answers.",
    "inductive": "Checklist items are distilled from a corpus of feedback or signals.",
    "deductive": "A fixed dimension taxonomy is expanded into per-dimension questions.",
    "interactive": "Statements extracted from transcripts are clustered into one question per cluster.",
}

REFINER_DESCRIPTIONS = {
    "dedup": "Embeds questions, clusters near-duplicates, and merges each cluster into one item.",
    "tag": "Labels every item pass/fail for a named quality; can drop failures or only tag.",
    "unit_test": "Probes each question against scripted targets and drops unstable or unparseable ones.",
    "select": "Beam-searches for the subset that best trades objective value against length.",
}

METRIC_DESCRIPTIONS = {
    "pass": "Fraction of scoreable items answered YES.",
    "weighted": "Weight-normalized YES mass; falls back to the pass rate on unweighted checklists.",
    "normalized": "Mean per-item YES probability from answer-token logprobs.",
}

PIPELINE_DESCRIPTIONS = {
    "tick": "Direct generation from the task, batch pass-rate scoring.",
    "rocketeval": "Direct generation with a reference, per-item logprob scoring.",
    "rlcf_direct": "Direct generation of weighted items from task plus reference.",
    "rlcf_candidate": "Contrastive weighted items from sampled candidates plus a reference.",
    "rlcf_candidate_only": "Contrastive weighted items from sampled candidates alone.",
    "or_pairwise": "Pairwise candidate contrasts, pass-rate scoring.",
    "or_listwise": "One listwise candidate contrast, pass-rate scoring.",
    "checkeval": "Per-dimension deductive expansion over a writing-quality taxonomy.",
    "interacteval": "Corpus-level questions clustered from discussion transcripts.",
    "feedback": "Corpus-level items distilled from collected feedback.",
}

COLLECTIONS = ("checklists", "prompts", "pipelines")


# -- library store ----------------------------------------------------------


class LibraryStore:
    """One directory per collection, one JSON document per entity."""

    def __init__(self, root: Path):
        self.root = root
        self._lock = threading.Lock()
        for collection in COLLECTIONS:
            (root / collection).mkdir(parents=True, exist_ok=True)

    def _path(self, collection: str, entity_id: str) -> Path:
        return self.root / collection / f"{entity_id}.json"

    def _index_path(self, collection: str) -> Path:
        return self.root / collection / "index.json"

    def _read_index(self, collection: str) -> dict[str, dict[str, Any]]:
        path = self._index_path(collection)
        if not path.exists():
            return {}
        return json.loads(path.read_text(encoding="utf-8"))

    def _write_atomic(self, path: Path, payload: str) -> None:
        tmp = path.with_suffix(path.suffix + f".{uuid.uuid4().hex}.tmp")
        tmp.write_text(payload, encoding="utf-8")
        os.replace(tmp, path)

    def list(self, collection: str) -> list[dict[str, Any]]:
        with self._lock:
            index = self._read_index(collection)
        entries = [{"id": entity_id, **meta} for entity_id, meta in index.items()]
        entries.sort(key=lambda e: e["name"])
        return entries

    def get(self, collection: str, entity_id: str) -> Optional[dict[str, Any]]:
        path = self._path(collection, entity_id)
        with self._lock:
            if not path.exists():
                return None
            return json.loads(path.read_text(encoding="utf-8"))

    def create(self, collection: str, name: str, doc: Mapping[str, Any]) -> dict[str, Any]:
        entity_id = uuid.uuid4().hex[:12]
        with self._lock:
            index = self._read_index(collection)
            if any(meta["name"] == name for meta in index.values()):
                raise KeyError(name)
            stored = {"id": entity_id, "name": name, **doc, "updated": time.time()}
            self._write_atomic(self._path(collection, entity_id), json.dumps(stored, indent=2))
            index[entity_id] = {"name": name, "updated": stored["updated"]}
            self._write_atomic(self._index_path(collection), json.dumps(index, indent=2))
        return stored

    def update(
        self, collection: str, entity_id: str, name: str, doc: Mapping[str, Any]
    ) -> Optional[dict[str, Any]]:
        with self._lock:
            index = self._read_index(collection)
            if entity_id not in index:
                return None
            for other_id, meta in index.items():
                if other_id != entity_id and meta["name"] == name:
                    raise KeyError(name)
            stored = {"id": entity_id, "name": name, **doc, "updated": time.time()}
            self._write_atomic(self._path(collection, entity_id), json.dumps(stored, indent=2))
            index[entity_id] = {"name": name, "updated": stored["updated"]}
            self._write_atomic(self._index_path(collection), json.dumps(index, indent=2))
        return stored

    def delete(self, collection: str, entity_id: str) -> bool:
        with self._lock:
            index = self._read_index(collection)
            if entity_id not in index:
                return False
            del index[entity_id]
            self._write_atomic(self._index_path(collection), json.dumps(index, indent=2))
            path = self._path(collection, entity_id)
            if path.exists():
                path.unlink()
        return True


# -- batch jobs -------------------------------------------------------------

TERMINAL_STATES = ("done", "failed", "cancelled")


@dataclass
class BatchJob:
    id: str
    config_digest: str
    state: str = "queued"
    completed: int = 0
    total: int = 0
    created: float = field(default_factory=time.time)
    updated: float = field(default_factory=time.time)
    result_path: Optional[str] = None
    error: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "config_digest": self.config_digest,
            "state": self.state,
            "progress": {"completed": self.completed, "total": self.total},
            "created": self.created,
            "updated": self.updated,
            "result_path": self.result_path,
            "error": self.error,
        }


class JobTable:
    def __init__(self):
        self._jobs: dict[str, BatchJob] = {}
        self._cancel: set[str] = set()
        self._lock = threading.Lock()

    def add(self, job: BatchJob) -> None:
        with self._lock:
            self._jobs[job.id] = job

    def get(self, job_id: str) -> Optional[BatchJob]:
        with self._lock:
            return self._jobs.get(job_id)

    def update(self, job_id: str, **changes: Any) -> None:
        with self._lock:
            job = self._jobs[job_id]
            for key, value in changes.items():
                setattr(job, key, value)
            job.updated = time.time()

    def progress(self, job_id: str, completed: int, total: int) -> None:
        with self._lock:
            job = self._jobs[job_id]
            # progress never moves backwards, even on resume bookkeeping
            job.completed = max(job.completed, completed)
            job.total = total
            job.updated = time.time()

    def request_cancel(self, job_id: str) -> None:
        with self._lock:
            self._cancel.add(job_id)

    def cancel_requested(self, job_id: str) -> bool:
        with self._lock:
            return job_id in self._cancel


# -- request plumbing -------------------------------------------------------


def _bad_request(message: str) -> HTTPException:
    return HTTPException(status_code=400, detail=message)


def _require_str(body: Mapping[str, Any], name: str) -> str:
    value = body.get(name)
    if value is None:
        raise _bad_request(f"missing required field {name!r}")
    if not isinstance(value, str):
        raise _bad_request(f"field {name!r} must be a string")
    return value


def _resolve_config(body: Mapping[str, Any]) -> PipelineConfig:
    name = body.get("pipeline")
    inline = body.get("config")
    if (name is None) == (inline is None):
        raise _bad_request("exactly one of 'pipeline' or 'config' is required")
    try:
        if name is not None:
            return get_pipeline_config(str(name))
        return config_from_portable_doc(inline)
    except (ConfigError, TemplateError, ValueError) as exc:
        raise _bad_request(str(exc))


def _method_config(entry: Any) -> tuple[str, PipelineConfig]:
    if isinstance(entry, str):
        return entry, get_pipeline_config(entry)
    if isinstance(entry, Mapping):
        config = config_from_portable_doc(entry)
        return config.name, config
    raise ConfigError(f"methods must be names or config objects, got {type(entry).__name__}")


def create_app(
    store_dir: Optional[str | Path] = None,
    client: Optional[LLMClient] = None,
    ui_dir: Optional[str | Path] = None,
) -> FastAPI:
    app = FastAPI(title="autochecklist", docs_url=None, redoc_url=None)
    root = Path(store_dir) if store_dir else Path.home() / ".autochecklist"
    store = LibraryStore(root)
    jobs = JobTable()
    batches_dir = root / "batches"
    batches_dir.mkdir(parents=True, exist_ok=True)
    default_client = client

    def client_for(body: Mapping[str, Any]) -> LLMClient:
        provider = body.get("provider")
        if provider:
            return make_client(
                provider=str(provider),
                base_url=body.get("base_url"),
                api_key_env=body.get("api_key_env"),
            )
        if default_client is not None:
            return default_client
        return make_client()

    def build_pipe(body: Mapping[str, Any], config: PipelineConfig) -> ChecklistPipeline:
        try:
            return ChecklistPipeline(
                config,
                client_for(body),
                generator_model=str(body.get("generator_model") or body.get("model") or ""),
                scorer_model=str(body.get("scorer_model") or body.get("model") or ""),
            )
        except (ConfigError, TemplateError) as exc:
            raise _bad_request(str(exc))

    # -- evaluation ---------------------------------------------------------

    @app.post("/api/evaluate")
    def evaluate(body: dict = Body(...)):
        target = _require_str(body, "target")
        pipe = build_pipe(body, _resolve_config(body))
        try:
            result = pipe(
                target=target,
                input=str(body.get("input") or ""),
                reference=body.get("reference"),
                corpus=tuple(body.get("corpus") or ()),
                params=body.get("params"),
            )
        except AutoChecklistError as exc:
            raise HTTPException(status_code=502, detail=f"{type(exc).__name__}: {exc}")
        return {
            "pipeline": pipe.name,
            "checklist": result.checklist.to_dict(),
            "report": result.report.to_dict(),
        }

    @app.post("/api/compare")
    def compare(body: dict = Body(...)):
        methods = body.get("methods")
        if not isinstance(methods, list) or len(methods) < 2:
            raise _bad_request("field 'methods' must list at least two pipelines")
        input_text = str(body.get("input") or "")
        target = body.get("target")
        reference = body.get("reference")
        corpus = tuple(body.get("corpus") or ())

        def run_one(entry: Any) -> dict[str, Any]:
            try:
                label, config = _method_config(entry)
                pipe = build_pipe(body, config)
                checklist = pipe.generate(input=input_text, reference=reference, corpus=corpus)
                card: dict[str, Any] = {"method": label, "checklist": checklist.to_dict()}
                if target is not None:
                    report = pipe.score(
                        checklist, str(target), input=input_text or None, reference=reference
                    )
                    card["report"] = report.to_dict()
                return card
            except HTTPException as exc:
                label = entry if isinstance(entry, str) else "config"
                return {"method": str(label), "error": str(exc.detail)}
            except Exception as exc:
                label = entry if isinstance(entry, str) else "config"
                return {"method": str(label), "error": f"{type(exc).__name__}: {exc}"}

        with ThreadPoolExecutor(max_workers=min(8, len(methods))) as pool:
            cards = list(pool.map(run_one, methods))
        return {"results": cards}

    # -- library ------------------------------------------------------------

    def _validate_entity(collection: str, body: Mapping[str, Any]) -> tuple[str, dict[str, Any]]:
        name = body.get("name")
        if not name or not isinstance(name, str):
            raise HTTPException(status_code=422, detail="field 'name' must be a non-empty string")
        try:
            if collection == "checklists":
                doc = body.get("checklist")
                if not isinstance(doc, Mapping):
                    raise ValueError("field 'checklist' must be a checklist document")
                return name, {"checklist": Checklist.from_dict(doc).to_dict()}
            if collection == "prompts":
                template = PromptTemplate(
                    name=name,
                    body=_field_str(body, "body"),
                    required_placeholders=frozenset(body.get("requires") or ()),
                )
                return name, {
                    "body": template.body,
                    "requires": sorted(template.required_placeholders),
                    "placeholders": sorted(template.placeholders),
                }
            doc = body.get("config")
            if not isinstance(doc, Mapping):
                raise ValueError("field 'config' must be a pipeline config document")
            config = config_from_portable_doc(doc)
            return name, {"config": config_to_portable_doc(config)}
        except (ValueError, KeyError, ConfigError, TemplateError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    def _field_str(body: Mapping[str, Any], name: str) -> str:
        value = body.get(name)
        if not isinstance(value, str):
            raise ValueError(f"field {name!r} must be a string")
        return value

    def _check_collection(collection: str) -> None:
        if collection not in COLLECTIONS:
            raise HTTPException(status_code=404, detail=f"unknown collection {collection!r}")

    @app.get("/api/library/{collection}")
    def library_list(collection: str):
        _check_collection(collection)
        return {"items": store.list(collection)}

    @app.get("/api/library/{collection}/{entity_id}")
    def library_get(collection: str, entity_id: str):
        _check_collection(collection)
        doc = store.get(collection, entity_id)
        if doc is None:
            raise HTTPException(status_code=404, detail=f"no {collection} entry {entity_id!r}")
        return doc

    @app.post("/api/library/{collection}", status_code=201)
    def library_create(collection: str, body: dict = Body(...)):
        _check_collection(collection)
        name, doc = _validate_entity(collection, body)
        try:
            return store.create(collection, name, doc)
        except KeyError:
            raise HTTPException(status_code=409, detail=f"name {name!r} already exists")

    @app.put("/api/library/{collection}/{entity_id}")
    def library_update(collection: str, entity_id: str, body: dict = Body(...)):
        _check_collection(collection)
        name, doc = _validate_entity(collection, body)
        try:
            stored = store.update(collection, entity_id, name, doc)
        except KeyError:
            raise HTTPException(status_code=409, detail=f"name {name!r} already exists")
        if stored is None:
            raise HTTPException(status_code=404, detail=f"no {collection} entry {entity_id!r}")
        return stored

    @app.delete("/api/library/{collection}/{entity_id}")
    def library_delete(collection: str, entity_id: str):
        _check_collection(collection)
        if not store.delete(collection, entity_id):
            raise HTTPException(status_code=404, detail=f"no {collection} entry {entity_id!r}")
        return {"deleted": entity_id}

    # -- batch jobs -----------------------------------------------------------

    def _job_or_404(job_id: str) -> BatchJob:
        job = jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"no batch job {job_id!r}")
        return job

    @app.post("/api/batch", status_code=202)
    def batch_start(body: dict = Body(...)):
        raw_rows = body.get("rows")
        if not isinstance(raw_rows, list) or not raw_rows:
            raise _bad_request("field 'rows' must be a non-empty list of data rows")
        try:
            rows = normalize_rows(raw_rows)
        except DatasetError as exc:
            raise _bad_request(str(exc))

        checklist = None
        checklist_id = body.get("checklist_id")
        if checklist_id:
            entry = store.get("checklists", str(checklist_id))
            if entry is None:
                raise HTTPException(
                    status_code=404, detail=f"no checklists entry {checklist_id!r}"
                )
            checklist = Checklist.from_dict(entry["checklist"])

        pipeline_id = body.get("pipeline_id")
        if pipeline_id:
            entry = store.get("pipelines", str(pipeline_id))
            if entry is None:
                raise HTTPException(status_code=404, detail=f"no pipelines entry {pipeline_id!r}")
            config = config_from_portable_doc(entry["config"])
            pipe: Any = build_pipe(body, config)
        elif body.get("pipeline") is not None or body.get("config") is not None:
            config = _resolve_config(body)
            pipe = build_pipe(body, config)
        elif checklist is not None:
            scorer_doc = body.get("scorer") or {}
            try:
                scorer = ChecklistScorer(
                    client_for(body),
                    ScorerConfig(
                        mode=scorer_doc.get("mode", "batch"),
                        primary_metric=scorer_doc.get("primary_metric", "pass"),
                        use_logprobs=bool(scorer_doc.get("use_logprobs", False)),
                        capture_reasoning=bool(scorer_doc.get("capture_reasoning", False)),
                        model=str(body.get("scorer_model") or body.get("model") or ""),
                    ),
                )
            except ConfigError as exc:
                raise _bad_request(str(exc))
            config = None
            pipe = _ScoreOnlyPipe(scorer)
        else:
            raise _bad_request("provide 'pipeline', 'config', 'pipeline_id', or 'checklist_id'")

        job_id = uuid.uuid4().hex[:12]
        result_path = batches_dir / f"{job_id}.jsonl"
        data_path = batches_dir / f"{job_id}.data.jsonl"
        with open(data_path, "w", encoding="utf-8") as handle:
            for row in rows:
                handle.write(json.dumps(row) + "\n")
        digest = ""
        if config is not None:
            config_path = batches_dir / f"{job_id}.config.json"
            config_path.write_text(
                json.dumps(config_to_portable_doc(config), indent=2) + "\n", encoding="utf-8"
            )
            from .batch import config_digest

            digest = config_digest(config)

        job = BatchJob(id=job_id, config_digest=digest, total=len(rows))
        jobs.add(job)
        concurrency = int(body.get("concurrency") or 4)

        def work() -> None:
            jobs.update(job_id, state="running", result_path=str(result_path))
            try:
                result = run_batch(
                    pipe,
                    rows,
                    output=result_path,
                    concurrency=concurrency,
                    checklist=checklist,
                    progress_callback=lambda done, total: jobs.progress(job_id, done, total),
                    should_stop=lambda: jobs.cancel_requested(job_id),
                )
                if jobs.cancel_requested(job_id):
                    jobs.update(job_id, state="cancelled")
                elif result.n_failed:
                    jobs.update(
                        job_id, state="done", error=f"{result.n_failed} rows failed"
                    )
                else:
                    jobs.update(job_id, state="done")
            except Exception as exc:
                jobs.update(job_id, state="failed", error=f"{type(exc).__name__}: {exc}")

        threading.Thread(target=work, name=f"batch-{job_id}", daemon=True).start()
        return {"job_id": job_id}

    @app.get("/api/batch/{job_id}")
    def batch_status(job_id: str):
        return _job_or_404(job_id).to_dict()

    @app.get("/api/batch/{job_id}/results")
    def batch_results(job_id: str):
        job = _job_or_404(job_id)
        if not job.result_path or not Path(job.result_path).exists():
            return {"job": job.to_dict(), "records": [], "aggregate": None}
        result = load_results(job.result_path)
        return {
            "job": job.to_dict(),
            "records": [record.to_dict() for record in result.records],
            "aggregate": result.aggregate.to_dict(),
            "checklist": result.checklist.to_dict() if result.checklist else None,
        }

    @app.get("/api/batch/{job_id}/export")
    def batch_export(job_id: str, lang: str = "script"):
        if lang != "script":
            raise _bad_request(f"unsupported export language {lang!r}; use lang=script")
        job = _job_or_404(job_id)
        data_path = batches_dir / f"{job_id}.data.jsonl"
        config_path = batches_dir / f"{job_id}.config.json"
        if not config_path.exists():
            raise _bad_request("this job ran against a stored checklist; no config to export")
        lines = [
            "#!/bin/sh",
            "# replays this batch through the autochecklist CLI",
            "autochecklist run \\",
            f"  --config {shlex.quote(str(config_path))} \\",
            f"  --data {shlex.quote(str(data_path))} \\",
            f"  --output {shlex.quote(str(batches_dir / (job_id + '.replay.jsonl')))}",
        ]
        return PlainTextResponse("\n".join(lines) + "\n")

    @app.post("/api/batch/{job_id}/cancel")
    def batch_cancel(job_id: str):
        job = _job_or_404(job_id)
        if job.state in TERMINAL_STATES:
            raise HTTPException(
                status_code=409, detail=f"job is already {job.state}; cannot cancel"
            )
        jobs.request_cancel(job_id)
        return {"job_id": job_id, "cancel_requested": True}

    # -- registry -------------------------------------------------------------

    @app.get("/api/registry")
    def registry():
        pipelines = []
        for name in sorted(registered_pipelines()):
            config = get_pipeline_config(name)
            pipelines.append(
                {
                    "name": name,
                    "generator": config.generator.kind,
                    "metric": config.scorer.primary_metric,
                    "mode": config.scorer.mode,
                    "use_logprobs": config.scorer.use_logprobs,
                    "uses_reference": config.uses_reference,
                    "refiners": [r.stage for r in config.refiners],
                    "description": PIPELINE_DESCRIPTIONS.get(name, ""),
                }
            )
        return {
            "pipelines": pipelines,
            "generators": [
                {"name": kind, "description": GENERATOR_DESCRIPTIONS[kind]}
                for kind in sorted(GENERATOR_KINDS)
            ],
            "refiners": [
                {"name": stage, "description": REFINER_DESCRIPTIONS[stage]}
                for stage in sorted(REFINER_STAGES)
            ],
            "metrics": [
                {"name": metric.value, "description": METRIC_DESCRIPTIONS[metric.value]}
                for metric in sorted(Metric, key=lambda m: m.value)
            ],
        }

    # -- static UI ------------------------------------------------------------

    bundle = Path(ui_dir) if ui_dir else Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if bundle.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(bundle), html=True), name="ui")
    else:

        @app.get("/")
        def index():
            return JSONResponse(
                {
                    "service": "autochecklist",
                    "ui": "not built; see frontend/README for build steps",
                    "api": ["/api/evaluate", "/api/compare", "/api/library", "/api/batch",
                            "/api/registry"],
                }
            )

    return app


class _ScoreOnlyPipe:
    """Scoring-only adapter for batch jobs that run against a stored checklist."""

    level = Level.INSTANCE

    def __init__(self, scorer: ChecklistScorer):
        self.scorer = scorer

    def score(self, checklist, target, input=None, reference=None):
        return self.scorer.score(checklist, target, input=input, reference=reference)
