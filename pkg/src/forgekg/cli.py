"""Command-line entry point wiring the pipeline stages together.

Exit codes: 0 success, 1 usage/config error, 2 stage failure,
3 replay miss.
"""

from __future__ import annotations

import json
import os
import shutil
import sys
from pathlib import Path

import click

from . import analyze, evaluate, kg, pipeline
from .corpus import CorpusError, fetch_article, load_corpus
from .extract import ReplayMissError
from .normalize import normalize_extraction
from .reconcile import (AuthorityClient, EntityKind, PendingReview,
                        ReconcileError, Service, load_decisions,
                        review_queue, save_decisions)

EXIT_CONFIG = 1
EXIT_STAGE = 2
EXIT_REPLAY_MISS = 3


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_config(config_path, overrides):
    try:
        data = json.loads(Path(config_path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        _fail(EXIT_CONFIG, f"unreadable config file: {exc}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    if "cache_dir" not in data and os.environ.get("FORGEKG_CACHE_DIR"):
        data["cache_dir"] = os.environ["FORGEKG_CACHE_DIR"]
    provider = data.get("provider", {})
    if provider.get("kind") == "live":
        provider.setdefault("base_url",
                            os.environ.get("FORGEKG_LLM_BASE_URL"))
        provider.setdefault("api_key", os.environ.get("FORGEKG_LLM_API_KEY"))
    try:
        return pipeline.config_from_dict(data)
    except pipeline.ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))


@click.group()
def main():
    """Structured authenticity-assessment knowledge-graph pipeline."""


@main.command()
@click.argument("corpus_path", type=click.Path(exists=True))
def ingest(corpus_path):
    """Validate a corpus file and report its entries."""
    try:
        corpus = load_corpus(corpus_path)
    except CorpusError as exc:
        _fail(EXIT_STAGE, str(exc))
    for entry in corpus:
        click.echo(f"{entry.id}: {len(entry.assessment_sections)} "
                   f"assessment section(s)")
    click.echo(f"{len(corpus)} entries OK")


@main.command("fetch")
@click.argument("url")
def fetch(url):
    """Fetch one wiki article and print its sections as JSON."""
    try:
        title, sections = fetch_article(url)
    except Exception as exc:
        _fail(EXIT_STAGE, str(exc))
    click.echo(json.dumps(
        {"title": title,
         "sections": [{"heading": h, "body": b} for h, b in sections]},
        ensure_ascii=False, indent=2))


@main.command("extract")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def extract_cmd(config_path, out_path):
    """Run the three extraction tasks over the corpus."""
    config = _load_config(config_path, {})
    try:
        corpus = load_corpus(config.corpus_path)
        provider = pipeline.make_provider(config.provider)
        results = pipeline.extract_stage(corpus, provider, config.retries,
                                         config.max_workers)
    except ReplayMissError as exc:
        _fail(EXIT_REPLAY_MISS, str(exc))
    except Exception as exc:
        _fail(EXIT_STAGE, str(exc))
    Path(out_path).write_text(
        json.dumps([pipeline.result_to_dict(r) for r in results],
                   ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    click.echo(f"wrote {out_path}")


@main.command("normalize")
@click.option("--extraction", "extraction_path", required=True,
              type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def normalize_cmd(extraction_path, out_path):
    """Clean and type-validate an extraction artifact."""
    try:
        results = pipeline.load_extraction(extraction_path)
    except Exception as exc:
        _fail(EXIT_STAGE, str(exc))
    records, warnings = [], []
    for result in results:
        metadata, claims, entry_warnings = normalize_extraction(result)
        records.append(pipeline.normalized_to_dict(result.entry_id, metadata,
                                                   claims))
        warnings.extend(entry_warnings)
    Path(out_path).write_text(
        json.dumps(records, ensure_ascii=False, indent=2, sort_keys=True)
        + "\n", encoding="utf-8")
    for warning in warnings:
        click.echo(f"warning [{warning.entry_id}/{warning.stage}] "
                   f"{warning.message}: {warning.raw}", err=True)
    click.echo(f"wrote {out_path} ({len(warnings)} warning(s))")


@main.command("reconcile")
@click.option("--pending", "pending_path", required=True,
              type=click.Path(exists=True),
              help="review-pending.json from a pipeline run")
@click.option("--interactive", is_flag=True,
              help="resolve labels at the terminal")
@click.option("--decisions", "decisions_path", type=click.Path(),
              help="batch decisions file (JSON array)")
@click.option("--out", "out_path", required=True, type=click.Path())
def reconcile_cmd(pending_path, interactive, decisions_path, out_path):
    """Resolve pending reconciliation items into a decisions file."""
    if interactive == bool(decisions_path):
        _fail(EXIT_CONFIG, "choose exactly one of --interactive/--decisions")
    raw = json.loads(Path(pending_path).read_text(encoding="utf-8"))
    from .reconcile import AuthorityCandidate
    pending = [
        PendingReview(
            raw_label=p["raw_label"],
            kind=EntityKind(p["kind"]),
            candidates=[AuthorityCandidate(
                service=Service(c["service"]), external_id=c["external_id"],
                label=c["label"], score=c["score"],
                description=c.get("description")) for c in p["candidates"]],
        ) for p in raw
    ]
    try:
        decisions = load_decisions(decisions_path) if decisions_path else None
        resolved = review_queue(pending, decisions)
    except ReconcileError as exc:
        _fail(EXIT_STAGE, str(exc))
    save_decisions(resolved, out_path)
    click.echo(f"wrote {out_path} ({len(resolved)} decision(s))")


@main.command("build-kg")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True))
def build_kg_cmd(config_path):
    """Alias for `run`: the KG needs every upstream stage."""
    _run(config_path)


@main.command("evaluate")
@click.option("--gold", "gold_path", required=True,
              type=click.Path(exists=True))
@click.option("--run", "run_paths", multiple=True,
              required=True, type=click.Path(exists=True),
              help="extraction.json of a run; repeat for comparison")
@click.option("--json", "as_json", is_flag=True)
def evaluate_cmd(gold_path, run_paths, as_json):
    """Score one or two extraction runs against gold annotations."""
    if len(run_paths) > 2:
        _fail(EXIT_CONFIG, "at most two runs can be compared")
    try:
        gold = evaluate.load_gold(gold_path)
        reports = [
            evaluate.evaluate_run(pipeline.load_extraction(p), gold)
            for p in run_paths
        ]
    except (evaluate.EvalError, Exception) as exc:
        if isinstance(exc, (evaluate.EvalError, ValueError, KeyError)):
            _fail(EXIT_STAGE, str(exc))
        raise
    if as_json:
        click.echo(json.dumps(
            [evaluate.report_to_dict(r) for r in reports],
            ensure_ascii=False, indent=2))
    else:
        click.echo(evaluate.render_report(reports), nl=False)


@main.command("analyze")
@click.option("--kg", "kg_path", required=True, type=click.Path(exists=True))
@click.option("--reconciled", "reconciled_path", required=True,
              type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
def analyze_cmd(kg_path, reconciled_path, out_dir):
    """Summary stats plus timeline CSV/SVG from a serialized KG."""
    try:
        dataset = kg.parse_trig(Path(kg_path).read_text(encoding="utf-8"))
    except kg.KgError as exc:
        _fail(EXIT_STAGE, str(exc))
    life_dates = {}
    for record in json.loads(Path(reconciled_path).read_text(encoding="utf-8")):
        if record.get("life_years") and record.get("wikidata_id"):
            life_dates[kg.WIKIDATA_ENTITY_NS + record["wikidata_id"]] = \
                tuple(record["life_years"])
    stats = analyze.summary_stats(dataset)
    points, skipped = analyze.timeline(dataset, life_dates)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    analyze.emit_scatter(points, out / "timeline.csv", out / "timeline.svg")
    click.echo(f"claims={stats.claim_count} documents={stats.document_count} "
               f"claimants={stats.claimant_count} "
               f"plotted={len(points)} skipped={len(skipped)}")


def _run(config_path, **overrides):
    config = _load_config(config_path, overrides)
    try:
        manifest = pipeline.run_pipeline(config)
    except ReplayMissError as exc:
        _fail(EXIT_REPLAY_MISS, str(exc))
    except pipeline.StageError as exc:
        _fail(EXIT_STAGE, str(exc))
    except pipeline.ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))
    click.echo(json.dumps(manifest, ensure_ascii=False, indent=2,
                          sort_keys=True))


@main.command("run")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True))
@click.option("--run-id", default=None,
              help="override the timestamped run id (for reproducible runs)")
@click.option("--decisions", "decisions_path", default=None,
              type=click.Path(exists=True))
def run_cmd(config_path, run_id, decisions_path):
    """Run the whole pipeline end to end."""
    _run(config_path, run_id=run_id, decisions_path=decisions_path)


@main.group()
def cache():
    """Inspect or clear the authority-service cache."""


@cache.command("inspect")
@click.argument("cache_dir", type=click.Path(exists=True))
def cache_inspect(cache_dir):
    root = Path(cache_dir)
    for service_dir in sorted(root.iterdir()):
        if service_dir.is_dir():
            count = sum(1 for _ in service_dir.glob("*.json"))
            click.echo(f"{service_dir.name}: {count} cached response(s)")


@cache.command("clear")
@click.argument("cache_dir", type=click.Path(exists=True))
@click.option("--service", "service_name", default=None,
              type=click.Choice([s.value for s in Service]))
def cache_clear(cache_dir, service_name):
    root = Path(cache_dir)
    targets = ([root / service_name] if service_name
               else [p for p in root.iterdir() if p.is_dir()])
    for target in targets:
        if target.exists():
            shutil.rmtree(target)
            click.echo(f"cleared {target}")


if __name__ == "__main__":
    main()
