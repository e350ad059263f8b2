"""End-to-end pipeline: extract, normalize, reconcile, build KG, analyze.

Each stage writes its artifact into the run directory; a manifest with
file digests is written last. With the replay provider, warm caches,
and a decisions file, reruns are byte-reproducible.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import analyze, kg
from .corpus import Corpus, load_corpus
from .extract import (ExtractionResult, LiveProvider, ProviderRequest,
                      RawClaim, RawMetadata, ReplayMissError,
                      ReplayProvider, RuleBasedProvider, run_extraction)
from .normalize import (NormalizedClaim, NormalizedMetadata, Warning_,
                        normalize_extraction)
from .reconcile import (AuthorityClient, EntityKind, MatchStatus,
                        PendingReview, ReconciledEntity, ReviewDecision,
                        Service, load_decisions, reconcile_label)

ARTIFACTS = ("extraction.json", "normalized.json", "reconciled.json",
             "review-pending.json", "kg.trig", "timeline.csv",
             "timeline.svg", "warnings.json", "manifest.json")


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str,
                 entry_id: Optional[str] = None):
        where = f"stage {stage!r}"
        if entry_id:
            where += f", entry {entry_id!r}"
        super().__init__(f"{where}: {message}")
        self.stage = stage
        self.entry_id = entry_id


@dataclass
class ProviderConfig:
    kind: str  # live | replay | rule-based
    model_id: str = "rule-based-v1"
    base_url: Optional[str] = None
    fixture_dir: Optional[str] = None
    api_key: Optional[str] = None


@dataclass
class ReconcileConfig:
    threshold: float = 0.95
    margin: float = 0.05
    rate_limits: dict = field(default_factory=dict)
    geonames_user: str = "demo"


@dataclass
class PipelineConfig:
    corpus_path: str
    provider: ProviderConfig
    cache_dir: str
    output_dir: str
    reconcile: ReconcileConfig = field(default_factory=ReconcileConfig)
    decisions_path: Optional[str] = None
    run_id: Optional[str] = None
    max_workers: int = 4
    retries: int = 2

    def validate(self) -> None:
        if self.provider.kind not in ("live", "replay", "rule-based"):
            raise ConfigError(f"unknown provider kind: {self.provider.kind}")
        if self.provider.kind == "live" and not self.provider.base_url:
            raise ConfigError("live provider requires a base_url")
        if self.provider.kind == "replay" and not self.provider.fixture_dir:
            raise ConfigError("replay provider requires a fixture_dir")
        if not 0.0 < self.reconcile.threshold <= 1.0:
            raise ConfigError(
                f"threshold {self.reconcile.threshold} outside (0,1]")


def config_from_dict(data: dict) -> PipelineConfig:
    try:
        provider = ProviderConfig(**data["provider"])
        reconcile_cfg = ReconcileConfig(**data.get("reconcile", {}))
        config = PipelineConfig(
            corpus_path=data["corpus_path"],
            provider=provider,
            cache_dir=data["cache_dir"],
            output_dir=data["output_dir"],
            reconcile=reconcile_cfg,
            decisions_path=data.get("decisions_path"),
            run_id=data.get("run_id"),
            max_workers=data.get("max_workers", 4),
            retries=data.get("retries", 2),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    config.validate()
    return config


def load_config(path: Path | str) -> PipelineConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"unreadable config file: {exc}") from exc
    return config_from_dict(data)


def make_provider(config: ProviderConfig):
    if config.kind == "rule-based":
        return RuleBasedProvider()
    if config.kind == "replay":
        return ReplayProvider(config.fixture_dir, model_id=config.model_id)
    return LiveProvider(config.base_url, config.api_key or "",
                        config.model_id)


# ---------------------------------------------------------------------------
# artifact (de)serialization

def result_to_dict(result: ExtractionResult) -> dict:
    return {
        "entry_id": result.entry_id,
        "model_id": result.model_id,
        "metadata": dataclasses.asdict(result.metadata),
        "claims": [dataclasses.asdict(c) for c in result.claims],
        "errors": result.errors,
        "transcript": [
            {"request": dataclasses.asdict(req), "response": resp}
            for req, resp in result.transcript
        ],
    }


def result_from_dict(data: dict) -> ExtractionResult:
    return ExtractionResult(
        entry_id=data["entry_id"],
        model_id=data["model_id"],
        metadata=RawMetadata(**data["metadata"]),
        claims=[RawClaim(**c) for c in data["claims"]],
        errors=data.get("errors", []),
        transcript=[
            (ProviderRequest(**t["request"]), t["response"])
            for t in data.get("transcript", [])
        ],
    )


def load_extraction(path: Path | str) -> list[ExtractionResult]:
    records = json.loads(Path(path).read_text(encoding="utf-8"))
    return [result_from_dict(r) for r in records]


def _interval_to_list(interval):
    return ([interval.start_year, interval.end_year]
            if interval is not None else None)


def normalized_to_dict(entry_id: str, metadata: NormalizedMetadata,
                       claims: list[NormalizedClaim]) -> dict:
    return {
        "entry_id": entry_id,
        "metadata": {
            "title": metadata.title,
            "doc_type": metadata.doc_type,
            "alleged_date": _interval_to_list(metadata.alleged_date),
            "alleged_date_raw": metadata.alleged_date_raw,
            "alleged_place_raw": metadata.alleged_place_raw,
            "alleged_author_raw": metadata.alleged_author_raw,
        },
        "claims": [
            {"claimant_raw": c.claimant_raw, "category": c.category.value,
             "opinion_text": c.opinion_text, "source_raw": c.source_raw,
             "features_observed": c.features_observed,
             "evidence": c.evidence}
            for c in claims
        ],
    }


def entity_to_dict(entity: ReconciledEntity) -> dict:
    return {
        "raw_label": entity.raw_label,
        "kind": entity.kind.value,
        "canonical_label": entity.canonical_label,
        "status": entity.status.value,
        "wikidata_id": entity.wikidata_id,
        "viaf_id": entity.viaf_id,
        "geonames_id": entity.geonames_id,
        "life_years": list(entity.life_years) if entity.life_years else None,
    }


def _write_json(path: Path, payload) -> None:
    path.write_text(
        json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True)
        + "\n",
        encoding="utf-8")


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# stages

def extract_stage(corpus: Corpus, provider, retries: int,
                  max_workers: int) -> list[ExtractionResult]:
    entries = list(corpus)
    if max_workers <= 1 or len(entries) <= 1:
        return [run_extraction(provider, e, retries) for e in entries]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = [pool.submit(run_extraction, provider, e, retries)
                   for e in entries]
        return [f.result() for f in futures]  # corpus order preserved


def reconcile_stage(
    normalized: list[tuple[str, NormalizedMetadata, list[NormalizedClaim]]],
    client: AuthorityClient,
    threshold: float,
    margin: float,
    decisions: Optional[list[ReviewDecision]] = None,
) -> tuple[dict[tuple[str, EntityKind], ReconciledEntity],
           list[PendingReview]]:
    """Resolve every distinct claimant/author label and alleged place."""
    labels: dict[tuple[str, EntityKind], None] = {}
    for _, metadata, claims in normalized:
        for claim in claims:
            labels.setdefault((claim.claimant_raw, EntityKind.PERSON))
        if metadata.alleged_author_raw is not None:
            labels.setdefault((metadata.alleged_author_raw,
                               EntityKind.PERSON))
        if metadata.alleged_place_raw is not None:
            labels.setdefault((metadata.alleged_place_raw, EntityKind.PLACE))

    decision_map = {}
    for decision in decisions or []:
        decision_map[(decision.raw_label, decision.kind)] = decision

    entities = {}
    pending = []
    for key in labels:
        label, kind = key
        entity, needs_review = reconcile_label(
            client, label, kind, threshold, margin,
            decision=decision_map.get(key))
        entities[key] = entity
        if needs_review is not None:
            pending.append(needs_review)
    return entities, pending


def build_kg_stage(
    normalized: list[tuple[str, NormalizedMetadata, list[NormalizedClaim]]],
    entities: dict[tuple[str, EntityKind], ReconciledEntity],
) -> kg.Dataset:
    dataset = kg.Dataset()
    for entry_id, metadata, claims in normalized:
        author_ref = None
        if metadata.alleged_author_raw is not None:
            author = entities.get((metadata.alleged_author_raw,
                                   EntityKind.PERSON))
            if author is not None and author.wikidata_id:
                author_ref = kg.Iri(kg.WIKIDATA_ENTITY_NS + author.wikidata_id)
        dataset.extend(kg.build_document_graph(entry_id, metadata, author_ref))
        for index, claim in enumerate(claims):
            claimant = entities.get((claim.claimant_raw, EntityKind.PERSON))
            if claimant is None:
                claimant = ReconciledEntity(
                    raw_label=claim.claimant_raw, kind=EntityKind.PERSON,
                    canonical_label=claim.claimant_raw,
                    status=MatchStatus.UNMATCHED)
            dataset.extend(kg.build_assessment_graph(
                entry_id, index, claim, claimant))
    return dataset


def life_dates_by_iri(
    entities: dict[tuple[str, EntityKind], ReconciledEntity],
) -> dict[str, tuple[int, int]]:
    out = {}
    for entity in entities.values():
        if entity.kind is EntityKind.PERSON and entity.life_years:
            out[kg.claimant_iri(entity).value] = entity.life_years
    return out


def run_pipeline(config: PipelineConfig) -> dict:
    """Run every stage end to end; returns the manifest dict."""
    config.validate()
    run_id = config.run_id or time.strftime("%Y%m%dT%H%M%SZ", time.gmtime())
    out_dir = Path(config.output_dir) / run_id
    out_dir.mkdir(parents=True, exist_ok=True)

    # corpus
    try:
        corpus = load_corpus(config.corpus_path)
    except Exception as exc:
        raise StageError("corpus", str(exc)) from exc

    # extract
    provider = make_provider(config.provider)
    try:
        results = extract_stage(corpus, provider, config.retries,
                                config.max_workers)
    except ReplayMissError:
        raise
    except Exception as exc:
        raise StageError("extract", str(exc)) from exc
    _write_json(out_dir / "extraction.json",
                [result_to_dict(r) for r in results])

    # normalize
    warnings: list[Warning_] = []
    normalized = []
    try:
        for result in results:
            metadata, claims, entry_warnings = normalize_extraction(result)
            normalized.append((result.entry_id, metadata, claims))
            warnings.extend(entry_warnings)
    except Exception as exc:
        raise StageError("normalize", str(exc)) from exc
    _write_json(out_dir / "normalized.json",
                [normalized_to_dict(*item) for item in normalized])

    # reconcile
    decisions = None
    if config.decisions_path:
        decisions = load_decisions(config.decisions_path)
    client = AuthorityClient(
        cache_dir=config.cache_dir,
        rate_limits={Service(k): v
                     for k, v in config.reconcile.rate_limits.items()},
        geonames_user=config.reconcile.geonames_user,
    )
    try:
        entities, pending = reconcile_stage(
            normalized, client, config.reconcile.threshold,
            config.reconcile.margin, decisions)
    except Exception as exc:
        raise StageError("reconcile", str(exc)) from exc
    _write_json(out_dir / "reconciled.json",
                [entity_to_dict(e) for e in entities.values()])
    _write_json(out_dir / "review-pending.json", [
        {"raw_label": p.raw_label, "kind": p.kind.value,
         "candidates": [
             {"service": c.service.value, "external_id": c.external_id,
              "label": c.label, "score": c.score,
              "description": c.description}
             for c in p.candidates]}
        for p in pending
    ])

    # build-kg
    try:
        dataset = build_kg_stage(normalized, entities)
    except Exception as exc:
        raise StageError("build-kg", str(exc)) from exc
    (out_dir / "kg.trig").write_text(kg.serialize_trig(dataset),
                                     encoding="utf-8")

    # analyze
    try:
        stats = analyze.summary_stats(dataset)
        points, skipped = analyze.timeline(dataset, life_dates_by_iri(entities))
        analyze.emit_scatter(points, out_dir / "timeline.csv",
                             out_dir / "timeline.svg")
    except Exception as exc:
        raise StageError("analyze", str(exc)) from exc

    _write_json(out_dir / "warnings.json", [
        dataclasses.asdict(w) for w in warnings
    ] + [
        {"entry_id": s.document_id, "stage": "analyze.timeline",
         "message": s.reason, "raw": s.claimant_label}
        for s in skipped
    ])

    manifest = {
        "run_id": run_id,
        "config": {
            "corpus_path": config.corpus_path,
            "provider": dataclasses.asdict(config.provider),
            "cache_dir": config.cache_dir,
            "output_dir": config.output_dir,
            "reconcile": dataclasses.asdict(config.reconcile),
            "decisions_path": config.decisions_path,
        },
        "summary": dataclasses.asdict(stats),
        "warnings_count": len(warnings) + len(skipped),
        "files": {},
    }
    for name in ARTIFACTS:
        if name == "manifest.json":
            continue
        path = out_dir / name
        if path.exists():
            manifest["files"][name] = _sha256_file(path)
    _write_json(out_dir / "manifest.json", manifest)
    return manifest
