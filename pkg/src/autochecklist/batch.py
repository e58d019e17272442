"""Dataset ingestion, the resumable batch runner, and result export.

Results persist as append-only JSONL: one header record carrying the
pipeline config digest (and, for corpus-level runs, the generated
checklist), then one record per row, committed in input order. A rerun
against an existing output skips rows already done, drops any torn
trailing line, and re-executes rows that previously failed.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import tempfile
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

from .core import BatchAggregate, Checklist, ItemResult, Level, ScoreReport, aggregate_batch
from .errors import DatasetError

log = logging.getLogger(__name__)

ROW_ATTEMPTS = 2

_SCALAR_COLUMNS = (
    "id",
    "pass_rate",
    "weighted_score",
    "normalized_score",
    "primary_score",
    "status",
)


# -- datasets ---------------------------------------------------------------


def load_dataset(path: str | Path, format: Optional[str] = None) -> list[dict[str, Any]]:
    """Read a JSONL or CSV dataset into normalized rows.

    Rows come back as {id, input, target, reference?}; missing ids are
    synthesized as zero-padded row indices.
    """
    path = Path(path)
    if format is None:
        suffix = path.suffix.lower().lstrip(".")
        format = {"jsonl": "jsonl", "json": "jsonl", "csv": "csv"}.get(suffix)
        if format is None:
            raise DatasetError(
                f"cannot infer dataset format from {path.name!r}; pass format='jsonl' or 'csv'"
            )
    if format not in ("jsonl", "csv"):
        raise DatasetError(f"unsupported dataset format {format!r}")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read dataset {path}: {exc}") from exc
    if format == "csv":
        raw = _parse_csv_rows(text)
    elif text.lstrip().startswith("["):
        # a .json file holding one array of row objects
        try:
            docs = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"invalid JSON array dataset: {exc}") from exc
        raw = [(i, doc) for i, doc in enumerate(docs, start=1)]
    else:
        raw = _parse_jsonl_rows(text)
    return normalize_rows(raw)


def _parse_jsonl_rows(text: str) -> list[tuple[int, dict[str, Any]]]:
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
        if not isinstance(doc, dict):
            raise DatasetError(f"line {lineno}: expected a JSON object, got {type(doc).__name__}")
        rows.append((lineno, doc))
    return rows


def _parse_csv_rows(text: str) -> list[tuple[int, dict[str, Any]]]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise DatasetError("CSV dataset is empty; a header row is required")
    for column in ("input", "target"):
        if column not in reader.fieldnames:
            raise DatasetError(f"CSV dataset missing required column {column!r}")
    rows = []
    # header is line 1, first data row line 2
    for lineno, doc in enumerate(reader, start=2):
        if None in doc:
            raise DatasetError(f"line {lineno}: row has more cells than the header")
        cleaned = {k: v for k, v in doc.items() if v not in (None, "")}
        rows.append((lineno, cleaned))
    return rows


def normalize_rows(
    rows: Sequence[tuple[int, Mapping[str, Any]] | Mapping[str, Any]],
) -> list[dict[str, Any]]:
    """Validate row fields, synthesize missing ids, reject duplicates."""
    numbered: list[tuple[Optional[int], Mapping[str, Any]]] = []
    for entry in rows:
        if isinstance(entry, tuple):
            numbered.append(entry)
        else:
            numbered.append((None, entry))

    width = max(len(str(len(numbered))), 3)
    normalized: list[dict[str, Any]] = []
    for index, (lineno, doc) in enumerate(numbered):
        where = f"line {lineno}" if lineno is not None else f"row {index}"
        for column in ("input", "target"):
            value = doc.get(column)
            if value is None:
                raise DatasetError(f"{where}: missing required field {column!r}")
            if not isinstance(value, str):
                raise DatasetError(f"{where}: field {column!r} must be a string")
        row_id = doc.get("id")
        if row_id is None:
            row_id = f"{index:0{width}d}"
        reference = doc.get("reference")
        if reference is not None and not isinstance(reference, str):
            raise DatasetError(f"{where}: field 'reference' must be a string")
        normalized.append(
            {
                "id": str(row_id),
                "input": doc["input"],
                "target": doc["target"],
                "reference": reference,
            }
        )

    seen: dict[str, int] = {}
    duplicates = []
    for row in normalized:
        seen[row["id"]] = seen.get(row["id"], 0) + 1
    duplicates = sorted(rid for rid, count in seen.items() if count > 1)
    if duplicates:
        raise DatasetError(f"duplicate row ids: {duplicates}")
    return normalized


# -- records ----------------------------------------------------------------


@dataclass(frozen=True)
class EvalRecord:
    """The persisted outcome of one row: a scored target or a failure."""

    id: str
    input: str
    target: str
    reference: Optional[str] = None
    checklist: Optional[Any] = None  # inline checklist dict, or a checklist id string
    item_results: tuple[ItemResult, ...] = ()
    scores: Optional[Mapping[str, Any]] = None
    status: str = "done"
    error: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "item_results", tuple(self.item_results))
        if self.status not in ("done", "failed"):
            raise ValueError(f"record status must be 'done' or 'failed', got {self.status!r}")
        if self.status == "done" and self.scores is None:
            raise ValueError("done records must carry scores")
        if self.status == "failed" and not self.error:
            raise ValueError("failed records must carry an error")

    def report(self) -> Optional[ScoreReport]:
        if self.scores is None:
            return None
        doc = dict(self.scores)
        doc["item_results"] = [r.to_dict() for r in self.item_results]
        return ScoreReport.from_dict(doc)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": "record",
            "id": self.id,
            "input": self.input,
            "target": self.target,
            "reference": self.reference,
            "checklist": self.checklist,
            "item_results": [r.to_dict() for r in self.item_results],
            "scores": dict(self.scores) if self.scores is not None else None,
            "status": self.status,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "EvalRecord":
        return cls(
            id=str(doc["id"]),
            input=doc.get("input", ""),
            target=doc.get("target", ""),
            reference=doc.get("reference"),
            checklist=doc.get("checklist"),
            item_results=tuple(ItemResult.from_dict(r) for r in doc.get("item_results") or ()),
            scores=doc.get("scores"),
            status=doc.get("status", "done"),
            error=doc.get("error"),
        )


def _record_from_report(row: Mapping[str, Any], checklist_field: Any, report: ScoreReport) -> EvalRecord:
    scores = {k: v for k, v in report.to_dict().items() if k != "item_results"}
    return EvalRecord(
        id=row["id"],
        input=row["input"],
        target=row["target"],
        reference=row.get("reference"),
        checklist=checklist_field,
        item_results=report.item_results,
        scores=scores,
        status="done",
    )


# -- results ----------------------------------------------------------------


@dataclass(frozen=True)
class BatchResult:
    """All records from one batch plus corpus-level aggregates."""

    records: tuple[EvalRecord, ...]
    aggregate: BatchAggregate
    checklist: Optional[Checklist] = None
    output_path: Optional[str] = None

    @property
    def macro_pass_rate(self) -> Optional[float]:
        return self.aggregate.macro_pass_rate

    @property
    def drfr(self) -> Optional[float]:
        return self.aggregate.drfr

    @property
    def n_failed(self) -> int:
        return sum(1 for r in self.records if r.status == "failed")

    def to_jsonl(self, path: str | Path) -> None:
        Path(path).write_text(export(self.records, "jsonl"), encoding="utf-8")

    def to_csv(self, path: str | Path) -> None:
        Path(path).write_text(export(self.records, "csv"), encoding="utf-8")

    def to_table(self) -> str:
        return export(self.records, "table")

    def to_dataframe(self):
        try:
            import pandas
        except ImportError as exc:  # pragma: no cover - environment dependent
            raise RuntimeError(
                "to_dataframe() needs pandas; install it or use to_csv()/to_jsonl()"
            ) from exc
        return pandas.DataFrame([_flatten_record(r) for r in self.records])


def _flatten_record(record: EvalRecord) -> dict[str, Any]:
    scores = dict(record.scores or {})
    return {
        "id": record.id,
        "pass_rate": scores.get("pass_rate"),
        "weighted_score": scores.get("weighted_score"),
        "normalized_score": scores.get("normalized_score"),
        "primary_score": scores.get("primary_score"),
        "status": record.status,
    }


def _aggregate_records(records: Sequence[EvalRecord]) -> BatchAggregate:
    reports = [r.report() for r in records if r.status == "done"]
    reports = [r for r in reports if r is not None]
    if not reports:
        return BatchAggregate(
            macro_pass_rate=None,
            drfr=None,
            macro_primary=None,
            n_targets=0,
            n_items_scored=0,
            n_invalid=0,
        )
    return aggregate_batch(reports)


def export(records: Sequence[EvalRecord], format: str) -> str:
    """Serialize records as jsonl, csv, or an aligned table with footer."""
    if format == "jsonl":
        return "".join(json.dumps(r.to_dict()) + "\n" for r in records)
    if format == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(_SCALAR_COLUMNS)
        for record in records:
            flat = _flatten_record(record)
            writer.writerow(["" if flat[c] is None else flat[c] for c in _SCALAR_COLUMNS])
        return buffer.getvalue()
    if format == "table":
        if not records:
            raise ValueError("table export needs at least one record")
        rows = [_SCALAR_COLUMNS]
        for record in records:
            flat = _flatten_record(record)
            rows.append(
                tuple(
                    ""
                    if flat[c] is None
                    else (f"{flat[c]:.4f}" if isinstance(flat[c], float) else str(flat[c]))
                    for c in _SCALAR_COLUMNS
                )
            )
        widths = [max(len(row[i]) for row in rows) for i in range(len(_SCALAR_COLUMNS))]
        lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip() for row in rows]
        aggregate = _aggregate_records(records)
        lines.append("")
        lines.append(f"macro pass rate: {_fmt(aggregate.macro_pass_rate)}")
        lines.append(f"DRFR: {_fmt(aggregate.drfr)}")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unsupported export format {format!r}")


def _fmt(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.4f}"


# -- persistence ------------------------------------------------------------


def config_digest(config) -> str:
    doc = config.to_dict() if hasattr(config, "to_dict") else config
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode("utf-8")).hexdigest()


def _read_output(path: Path) -> tuple[Optional[dict], list[EvalRecord], bool]:
    """Parse an existing output file.

    Returns (header, records, dirty) where dirty means the file needs a
    rewrite before appending (torn tail or failed records present).
    """
    text = path.read_text(encoding="utf-8")
    header: Optional[dict] = None
    records: list[EvalRecord] = []
    dirty = False
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    else:
        # no trailing newline: the final line is a torn write
        if lines:
            lines.pop()
            dirty = True
    for index, line in enumerate(lines):
        try:
            doc = json.loads(line)
        except json.JSONDecodeError:
            if index == len(lines) - 1:
                dirty = True
                continue
            raise DatasetError(f"{path}: corrupt record on line {index + 1}")
        if doc.get("kind") == "header":
            header = doc
        elif doc.get("kind") == "record":
            records.append(EvalRecord.from_dict(doc))
        else:
            raise DatasetError(f"{path}: unknown line kind {doc.get('kind')!r}")
    return header, records, dirty


def _rewrite_output(path: Path, header: Optional[dict], records: Sequence[EvalRecord]) -> None:
    fd, tmp_name = tempfile.mkstemp(dir=str(path.parent), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            if header is not None:
                handle.write(json.dumps(header) + "\n")
            for record in records:
                handle.write(json.dumps(record.to_dict()) + "\n")
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def load_results(path: str | Path) -> BatchResult:
    """Rebuild a BatchResult (records + aggregates) from a persisted run."""
    path = Path(path)
    header, records, _ = _read_output(path)
    checklist = None
    if header and header.get("checklist"):
        checklist = Checklist.from_dict(header["checklist"])
    return BatchResult(
        records=tuple(records),
        aggregate=_aggregate_records(records),
        checklist=checklist,
        output_path=str(path),
    )


# -- runner -----------------------------------------------------------------


class _Progress:
    def __init__(self, total: int, enabled: bool):
        self.bar = None
        if enabled:
            try:
                from tqdm import tqdm

                self.bar = tqdm(total=total, unit="row")
            except ImportError:  # pragma: no cover - tqdm is a declared dependency
                self.bar = None

    def advance(self) -> None:
        if self.bar is not None:
            self.bar.update(1)

    def close(self) -> None:
        if self.bar is not None:
            self.bar.close()


def run_batch(
    pipe,
    data: Iterable[Mapping[str, Any]] | str | Path,
    output: Optional[str | Path] = None,
    concurrency: int = 4,
    show_progress: bool = False,
    checklist: Optional[Checklist] = None,
    corpus: Sequence[Any] = (),
    params: Optional[Mapping[str, Any]] = None,
    progress_callback: Optional[Any] = None,
    should_stop: Optional[Any] = None,
) -> BatchResult:
    """Evaluate every row with a pipeline, committing results in row order.

    Instance-level pipelines generate a checklist per row; corpus-level
    pipelines generate exactly once (or reuse `checklist`) and score
    every row against it. With an `output` path the run is resumable:
    done rows are skipped, failed rows re-execute. `progress_callback`
    receives (completed, total) after every commit; a truthy
    `should_stop()` stops the run after the in-flight rows, returning
    the records committed so far.
    """
    if concurrency < 1:
        raise ValueError("concurrency must be >= 1")
    if isinstance(data, (str, Path)):
        rows = load_dataset(data)
    else:
        rows = normalize_rows(list(data))

    out_path = Path(output) if output is not None else None
    header: Optional[dict] = None
    existing: list[EvalRecord] = []
    if out_path is not None and out_path.exists() and out_path.stat().st_size > 0:
        header, existing, dirty = _read_output(out_path)
        if header is not None and hasattr(pipe, "config"):
            digest = config_digest(pipe.config)
            if header.get("config_digest") not in (None, digest):
                log.warning(
                    "resuming %s with a different pipeline config (digest %s != %s)",
                    out_path,
                    header.get("config_digest"),
                    digest,
                )
        failed_ids = {r.id for r in existing if r.status == "failed"}
        if failed_ids:
            existing = [r for r in existing if r.status == "done"]
            dirty = True
        if dirty:
            _rewrite_output(out_path, header, existing)

    done_records = {r.id: r for r in existing}
    row_ids = {row["id"] for row in rows}
    stale = [rid for rid in done_records if rid not in row_ids]
    if stale:
        log.warning("output %s holds %d records absent from the dataset", out_path, len(stale))

    # resolve the checklist once for corpus-level or score-only runs
    shared = checklist
    if shared is None and header and header.get("checklist"):
        shared = Checklist.from_dict(header["checklist"])
    level = getattr(pipe, "level", Level.INSTANCE)
    if shared is None and level is Level.CORPUS:
        ctx_corpus = tuple(corpus) or tuple(row["target"] for row in rows)
        shared = pipe.generate(corpus=ctx_corpus, params=params)

    if out_path is not None and header is None:
        header = {
            "kind": "header",
            "pipeline": getattr(getattr(pipe, "config", None), "name", ""),
            "config_digest": config_digest(pipe.config) if hasattr(pipe, "config") else None,
            "checklist": shared.to_dict() if shared is not None else None,
        }
        out_path.parent.mkdir(parents=True, exist_ok=True)
        with open(out_path, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(header) + "\n")
            handle.flush()
            os.fsync(handle.fileno())

    todo = [row for row in rows if row["id"] not in done_records]
    progress = _Progress(total=len(rows), enabled=show_progress)
    for _ in range(len(rows) - len(todo)):
        progress.advance()
    completed = len(rows) - len(todo)
    if progress_callback is not None:
        progress_callback(completed, len(rows))

    def execute(row: Mapping[str, Any]) -> EvalRecord:
        last_error = None
        for _ in range(ROW_ATTEMPTS):
            try:
                if shared is not None:
                    report = pipe.score(
                        shared,
                        row["target"],
                        input=row["input"] or None,
                        reference=row.get("reference"),
                    )
                    checklist_field: Any = shared.id
                else:
                    result = pipe(
                        target=row["target"],
                        input=row["input"],
                        reference=row.get("reference"),
                        params=params,
                    )
                    report = result.report
                    checklist_field = result.checklist.to_dict()
                return _record_from_report(row, checklist_field, report)
            except Exception as exc:
                last_error = exc
        return EvalRecord(
            id=row["id"],
            input=row["input"],
            target=row["target"],
            reference=row.get("reference"),
            status="failed",
            error=f"{type(last_error).__name__}: {last_error}",
        )

    new_records: dict[str, EvalRecord] = {}
    handle = open(out_path, "a", encoding="utf-8") if out_path is not None else None
    try:
        if todo:
            order = {row["id"]: position for position, row in enumerate(todo)}
            pending: dict[int, EvalRecord] = {}
            next_commit = 0

            def commit_ready() -> None:
                nonlocal next_commit, completed
                while next_commit in pending:
                    record = pending.pop(next_commit)
                    new_records[record.id] = record
                    if handle is not None:
                        handle.write(json.dumps(record.to_dict()) + "\n")
                        handle.flush()
                        os.fsync(handle.fileno())
                    progress.advance()
                    next_commit += 1
                    completed += 1
                    if progress_callback is not None:
                        progress_callback(completed, len(rows))

            if concurrency == 1:
                for row in todo:
                    if should_stop is not None and should_stop():
                        break
                    pending[order[row["id"]]] = execute(row)
                    commit_ready()
            else:
                with ThreadPoolExecutor(max_workers=concurrency) as pool:
                    futures = {pool.submit(execute, row): order[row["id"]] for row in todo}
                    remaining = set(futures)
                    while remaining:
                        if should_stop is not None and should_stop():
                            for future in remaining:
                                future.cancel()
                            remaining = {f for f in remaining if f.running()}
                            if not remaining:
                                break
                        finished, remaining = wait(remaining, return_when=FIRST_COMPLETED)
                        for future in finished:
                            if not future.cancelled():
                                pending[futures[future]] = future.result()
                        commit_ready()
    finally:
        if handle is not None:
            handle.close()
        progress.close()

    available = (done_records.get(row["id"]) or new_records.get(row["id"]) for row in rows)
    ordered = tuple(record for record in available if record is not None)
    if out_path is not None and done_records and todo:
        # interleaved old and new commits can leave the file out of row
        # order; compact it once the batch is complete
        persisted_order = [r.id for r in existing] + [r.id for r in new_records.values()]
        if persisted_order != [r.id for r in ordered]:
            _rewrite_output(out_path, header, ordered)

    return BatchResult(
        records=ordered,
        aggregate=_aggregate_records(ordered),
        checklist=shared,
        output_path=str(out_path) if out_path is not None else None,
    )
