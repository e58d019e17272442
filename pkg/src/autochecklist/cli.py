"""Command-line front: run, generate, score, list, and ui.

Exit codes: 0 success, 1 usage or configuration error, 2 fatal runtime
error, 3 batch completed but some rows failed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Optional

from .batch import load_dataset, run_batch
from .core import Checklist, Level, Metric
from .errors import (
    AutoChecklistError,
    ConfigError,
    DatasetError,
    TemplateError,
)
from .llm import PROVIDER_ALIASES, PROVIDERS, make_client
from .pipelines import (
    REFINER_STAGES,
    ChecklistPipeline,
    get_pipeline_config,
    load_pipeline_config,
    pipeline,
    register_custom_pipeline,
    registered_pipelines,
)
from .scorer import ChecklistScorer, ScoreMode, ScorerConfig
from .generators import GENERATOR_KINDS

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FATAL = 2
EXIT_ROW_FAILURES = 3

CONFIG_DIR_ENV = "AUTOCHECKLIST_CONFIG_DIR"


def _add_provider_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--provider",
        default="openai",
        help="llm backend: %s (aliases: %s)"
        % (", ".join(PROVIDERS), ", ".join(sorted(PROVIDER_ALIASES))),
    )
    parser.add_argument("--base-url", default=None, help="override the provider endpoint")
    parser.add_argument(
        "--api-key-env", default=None, help="environment variable holding the API key"
    )
    parser.add_argument(
        "--config-dir",
        default=None,
        help=f"directory of pipeline config JSON files (default: ${CONFIG_DIR_ENV})",
    )


def _add_selector_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--pipeline", help="a registered pipeline name")
    group.add_argument("--generator-prompt", help="a checklist-generation prompt file")
    group.add_argument("--config", help="a saved pipeline config JSON")


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--generator-model", default=None, help="model for checklist generation")
    parser.add_argument("--scorer-model", default=None, help="model for scoring")
    parser.add_argument("--model", default=None, help="single model for both phases")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="autochecklist",
        description="Checklist-based evaluation of LLM outputs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="generate checklists and score in one step")
    _add_selector_flags(run)
    run.add_argument("--data", required=True, help="JSONL or CSV dataset")
    run.add_argument("--output", required=True, help="results JSONL path (resumable)")
    _add_model_flags(run)
    run.add_argument("--concurrency", type=int, default=4)
    run.add_argument("--quiet", action="store_true", help="suppress the progress bar")
    _add_provider_flags(run)
    run.set_defaults(func=cmd_run)

    generate = sub.add_parser("generate", help="produce checklists without scoring")
    _add_selector_flags(generate)
    generate.add_argument("--data", default=None, help="dataset for per-row generation")
    generate.add_argument("--corpus", default=None, help="text file, one corpus item per line")
    generate.add_argument("--dimensions", default=None, help="JSON file of dimensions")
    generate.add_argument("--output", required=True)
    _add_model_flags(generate)
    _add_provider_flags(generate)
    generate.set_defaults(func=cmd_generate)

    score = sub.add_parser("score", help="score targets against an existing checklist")
    score.add_argument("--checklist", required=True, help="checklist JSON document")
    score.add_argument("--data", required=True)
    score.add_argument("--output", required=True)
    score.add_argument("--scorer-model", default=None)
    score.add_argument("--mode", choices=[m.value for m in ScoreMode], default="batch")
    score.add_argument(
        "--primary-metric", choices=[m.value for m in Metric], default="pass"
    )
    score.add_argument("--use-logprobs", action="store_true")
    score.add_argument("--capture-reasoning", action="store_true")
    score.add_argument("--concurrency", type=int, default=4)
    score.add_argument("--quiet", action="store_true")
    _add_provider_flags(score)
    score.set_defaults(func=cmd_score)

    list_cmd = sub.add_parser("list", help="discover pipelines, generators, and refiners")
    list_cmd.add_argument("--format", choices=["text", "json"], default="text")
    list_cmd.add_argument(
        "--config-dir",
        default=None,
        help=f"directory of pipeline config JSON files (default: ${CONFIG_DIR_ENV})",
    )
    list_cmd.set_defaults(func=cmd_list)

    ui = sub.add_parser("ui", help="launch the local web interface")
    ui.add_argument("--host", default="127.0.0.1")
    ui.add_argument("--port", type=int, default=8321)
    ui.add_argument("--store-dir", default=None, help="library storage directory")
    _add_provider_flags(ui)
    ui.set_defaults(func=cmd_ui)

    return parser


def _load_config_dir(args: argparse.Namespace) -> None:
    directory = getattr(args, "config_dir", None) or os.environ.get(CONFIG_DIR_ENV)
    if not directory:
        return
    root = Path(directory)
    if not root.is_dir():
        raise ConfigError(f"config directory {directory} does not exist")
    for path in sorted(root.glob("*.json")):
        try:
            load_pipeline_config(path)
        except ConfigError as exc:
            print(f"warning: skipping {path.name}: {exc}", file=sys.stderr)


def _client(args: argparse.Namespace):
    return make_client(
        provider=args.provider, base_url=args.base_url, api_key_env=args.api_key_env
    )


def _resolve_pipeline(args: argparse.Namespace) -> ChecklistPipeline:
    if args.config:
        config = load_pipeline_config(args.config)
        name = config.name
    elif args.generator_prompt:
        prompt_path = Path(args.generator_prompt)
        name = prompt_path.stem
        if name not in registered_pipelines():
            register_custom_pipeline(name, generator_prompt=prompt_path)
    else:
        name = args.pipeline
    return pipeline(
        name,
        client=_client(args),
        model=args.model,
        generator_model=args.generator_model,
        scorer_model=args.scorer_model,
    )


def _print_footer(result) -> None:
    def fmt(value: Optional[float]) -> str:
        return "n/a" if value is None else f"{value:.4f}"

    aggregate = result.aggregate
    print(f"rows: {aggregate.n_targets} done, {result.n_failed} failed")
    print(f"macro pass rate: {fmt(aggregate.macro_pass_rate)}")
    print(f"DRFR: {fmt(aggregate.drfr)}")
    if aggregate.macro_primary is not None and aggregate.macro_primary != aggregate.macro_pass_rate:
        print(f"macro primary: {fmt(aggregate.macro_primary)}")


def cmd_run(args: argparse.Namespace) -> int:
    _load_config_dir(args)
    pipe = _resolve_pipeline(args)
    result = run_batch(
        pipe,
        args.data,
        output=args.output,
        concurrency=args.concurrency,
        show_progress=not args.quiet,
    )
    _print_footer(result)
    return EXIT_ROW_FAILURES if result.n_failed else EXIT_OK


def _read_corpus_file(path: str) -> list[str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    items = [line.strip() for line in lines if line.strip()]
    if not items:
        raise DatasetError(f"corpus file {path} holds no items")
    return items


def cmd_generate(args: argparse.Namespace) -> int:
    _load_config_dir(args)
    pipe = _resolve_pipeline(args)
    params: dict[str, Any] = {}
    if args.dimensions:
        try:
            params["dimensions"] = json.loads(Path(args.dimensions).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"dimensions file {args.dimensions} is not valid JSON: {exc}")
    output = Path(args.output)

    if pipe.level is Level.CORPUS or args.corpus or args.dimensions:
        corpus: tuple[str, ...] = ()
        if args.corpus:
            corpus = tuple(_read_corpus_file(args.corpus))
        elif args.data:
            corpus = tuple(row["target"] for row in load_dataset(args.data))
        if pipe.config.generator.kind in ("inductive", "interactive") and not corpus:
            raise ConfigError(
                "this pipeline generates from a corpus; pass --corpus or --data"
            )
        checklist = pipe.generate(corpus=corpus, params=params or None)
        output.write_text(json.dumps(checklist.to_dict(), indent=2) + "\n", encoding="utf-8")
        print(f"wrote 1 checklist ({len(checklist)} items) to {output}")
        return EXIT_OK

    if not args.data:
        raise ConfigError("instance-level generation needs --data")
    rows = load_dataset(args.data)
    with open(output, "w", encoding="utf-8") as handle:
        for row in rows:
            checklist = pipe.generate(
                input=row["input"], reference=row.get("reference"), params=params or None
            )
            handle.write(
                json.dumps({"id": row["id"], "checklist": checklist.to_dict()}) + "\n"
            )
    print(f"wrote {len(rows)} checklists to {output}")
    return EXIT_OK


class _ScoreOnly:
    """Adapter giving the batch runner a score()-only pipeline."""

    level = Level.INSTANCE

    def __init__(self, scorer: ChecklistScorer):
        self.scorer = scorer

    def score(self, checklist, target, input=None, reference=None):
        return self.scorer.score(checklist, target, input=input, reference=reference)


def cmd_score(args: argparse.Namespace) -> int:
    _load_config_dir(args)
    try:
        doc = json.loads(Path(args.checklist).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"checklist file {args.checklist} is not valid JSON: {exc}")
    try:
        checklist = Checklist.from_dict(doc)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"checklist file {args.checklist}: {exc}")

    metric = Metric(args.primary_metric)
    if metric is Metric.WEIGHTED and not any(w is not None for w in checklist.weights().values()):
        print(
            "warning: checklist has no weights; weighted score falls back to the pass rate",
            file=sys.stderr,
        )
    scorer = ChecklistScorer(
        _client(args),
        ScorerConfig(
            mode=args.mode,
            primary_metric=metric,
            use_logprobs=args.use_logprobs,
            capture_reasoning=args.capture_reasoning,
            model=args.scorer_model or "",
        ),
    )
    result = run_batch(
        _ScoreOnly(scorer),
        args.data,
        output=args.output,
        concurrency=args.concurrency,
        show_progress=not args.quiet,
        checklist=checklist,
    )
    _print_footer(result)
    return EXIT_ROW_FAILURES if result.n_failed else EXIT_OK


def _registry_dump() -> dict[str, Any]:
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
            }
        )
    return {
        "pipelines": pipelines,
        "generators": sorted(GENERATOR_KINDS),
        "refiners": sorted(REFINER_STAGES),
        "metrics": sorted(m.value for m in Metric),
    }


def cmd_list(args: argparse.Namespace) -> int:
    _load_config_dir(args)
    dump = _registry_dump()
    if args.format == "json":
        print(json.dumps(dump, indent=2))
        return EXIT_OK
    rows = [("pipeline", "generator", "metric", "mode", "logprobs", "reference")]
    for entry in dump["pipelines"]:
        rows.append(
            (
                entry["name"],
                entry["generator"],
                entry["metric"],
                entry["mode"],
                "yes" if entry["use_logprobs"] else "no",
                "yes" if entry["uses_reference"] else "no",
            )
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    for row in rows:
        print("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    print()
    print("generators:", ", ".join(dump["generators"]))
    print("refiners:", ", ".join(dump["refiners"]))
    print("scorer metrics:", ", ".join(dump["metrics"]))
    return EXIT_OK


def cmd_ui(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    _load_config_dir(args)
    app = create_app(store_dir=args.store_dir, client=_client(args))
    print(f"serving on http://{args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigError, TemplateError, DatasetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        print("interrupted; committed rows are saved", file=sys.stderr)
        return EXIT_FATAL
    except AutoChecklistError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
