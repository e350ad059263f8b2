"""Evaluation of extraction runs against manually compiled gold data.

Three views, matching the shape of the experiment's result tables:
per-field precision/recall/F1 for the five metadata fields, the claim
identification rate (percentage of gold claims a model surfaced), and
per-class metrics over a 3x3 confusion matrix for claim categorisation.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from decimal import ROUND_DOWN, ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Optional

from .extract import METADATA_FIELDS, NOT_MENTIONED, ExtractionResult
from .normalize import AuthenticityCategory
from .reconcile import normalize_label

CATEGORIES = tuple(AuthenticityCategory)


class EvalError(ValueError):
    pass


class FieldOutcome(enum.Enum):
    TRUE_POSITIVE = "TP"
    TRUE_NEGATIVE = "TN"
    FALSE_POSITIVE = "FP"
    FALSE_NEGATIVE = "FN"


@dataclass(frozen=True)
class MetricsTriple:
    precision: float
    recall: float
    f1: float


@dataclass
class GoldEntry:
    entry_id: str
    gold_metadata: dict[str, str]  # field -> value or NOT_MENTIONED
    gold_claims: list[tuple[str, AuthenticityCategory]]
    aliases: dict[str, str] = field(default_factory=dict)


@dataclass
class ConfusionMatrix3:
    """counts[gold category][predicted category]."""

    counts: dict[AuthenticityCategory, dict[AuthenticityCategory, int]]

    @classmethod
    def empty(cls) -> "ConfusionMatrix3":
        return cls({g: {p: 0 for p in CATEGORIES} for g in CATEGORIES})

    def total(self) -> int:
        return sum(sum(row.values()) for row in self.counts.values())


@dataclass
class EvalReport:
    model_id: str
    per_field: dict[str, MetricsTriple]
    claim_correct: int
    claim_faulty: int
    faulty_pct: float
    per_class: dict[AuthenticityCategory, MetricsTriple]


def round_half_up(value: float, places: int) -> float:
    quantum = Decimal(10) ** -places
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def _canonical(value: str, aliases: dict[str, str]) -> str:
    normalized = normalize_label(value)
    folded_aliases = {normalize_label(k): normalize_label(v)
                      for k, v in aliases.items()}
    return folded_aliases.get(normalized, normalized)


def judge_field(gold: str, predicted: str,
                aliases: Optional[dict[str, str]] = None) -> FieldOutcome:
    """Score one metadata field against gold.

    Values compare after casefolding, punctuation stripping, and alias
    mapping. A present-but-wrong extraction counts as a false negative:
    the true value failed to be identified.
    """
    aliases = aliases or {}
    gold_absent = gold == NOT_MENTIONED
    pred_absent = predicted == NOT_MENTIONED
    if gold_absent and pred_absent:
        return FieldOutcome.TRUE_NEGATIVE
    if gold_absent:
        return FieldOutcome.FALSE_POSITIVE
    if pred_absent:
        return FieldOutcome.FALSE_NEGATIVE
    if _canonical(gold, aliases) == _canonical(predicted, aliases):
        return FieldOutcome.TRUE_POSITIVE
    return FieldOutcome.FALSE_NEGATIVE


def metrics_from_outcomes(outcomes: list[FieldOutcome]) -> MetricsTriple:
    """Precision, recall, F1 from outcome counts; 0/0 ratios are 0."""
    tp = outcomes.count(FieldOutcome.TRUE_POSITIVE)
    fp = outcomes.count(FieldOutcome.FALSE_POSITIVE)
    fn = outcomes.count(FieldOutcome.FALSE_NEGATIVE)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return MetricsTriple(precision, recall, f1_score(precision, recall))


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def claim_identification_rate(correct: int, faulty: int) -> float:
    """Percentage of faulty/unidentified claims, truncated to one decimal.

    Truncation (not half-up) reproduces the published reference rates:
    42/296 -> 14.1, 70/296 -> 23.6.
    """
    total = correct + faulty
    if total == 0:
        raise EvalError("no claims to rate")
    pct = Decimal(100 * faulty) / Decimal(total)
    return float(pct.quantize(Decimal("0.1"), rounding=ROUND_DOWN))


def confusion_matrix(
    pairs: list[tuple[AuthenticityCategory, AuthenticityCategory]],
) -> ConfusionMatrix3:
    matrix = ConfusionMatrix3.empty()
    for gold, predicted in pairs:
        matrix.counts[gold][predicted] += 1
    return matrix


def per_class_metrics(
    matrix: ConfusionMatrix3,
) -> dict[AuthenticityCategory, MetricsTriple]:
    """Per-class P/R/F1: precision over the predicted column, recall over
    the gold row; zero denominators yield 0."""
    out = {}
    for cls in CATEGORIES:
        tp = matrix.counts[cls][cls]
        col = sum(matrix.counts[g][cls] for g in CATEGORIES)
        row = sum(matrix.counts[cls].values())
        precision = tp / col if col else 0.0
        recall = tp / row if row else 0.0
        out[cls] = MetricsTriple(precision, recall,
                                 f1_score(precision, recall))
    return out


def _match_claims(
    predicted: list[tuple[str, Optional[AuthenticityCategory]]],
    gold: list[tuple[str, AuthenticityCategory]],
    aliases: dict[str, str],
) -> tuple[int, list[tuple[AuthenticityCategory, AuthenticityCategory]]]:
    """Greedy 1-1 matching of predicted claims to gold claims by claimant.

    Returns the number of gold claims correctly identified and the
    (gold, predicted) category pairs for those that also carried a
    predicted category.
    """
    remaining = [(i, _canonical(name, aliases), cat)
                 for i, (name, cat) in enumerate(gold)]
    matched = 0
    pairs = []
    for name, pred_cat in predicted:
        canon = _canonical(name, aliases)
        for slot, (i, gold_name, gold_cat) in enumerate(remaining):
            if gold_name == canon:
                matched += 1
                if pred_cat is not None:
                    pairs.append((gold_cat, pred_cat))
                del remaining[slot]
                break
    return matched, pairs


def evaluate_run(results: list[ExtractionResult],
                 gold: list[GoldEntry]) -> EvalReport:
    """Score one model's extraction run against the gold annotations.

    A predicted claim is correctly identified iff its claimant matches a
    gold claimant (alias-aware); gold claims nobody surfaced count as
    unidentified. Categorisation metrics cover only correctly
    identified claims.
    """
    gold_by_id = {g.entry_id: g for g in gold}
    outcomes: dict[str, list[FieldOutcome]] = {f: [] for f in METADATA_FIELDS}
    correct = 0
    total_gold = 0
    category_pairs = []
    model_id = results[0].model_id if results else "unknown"

    for result in results:
        entry_gold = gold_by_id.get(result.entry_id)
        if entry_gold is None:
            raise EvalError(f"no gold entry for id {result.entry_id!r}")
        for field_name in METADATA_FIELDS:
            outcomes[field_name].append(judge_field(
                entry_gold.gold_metadata.get(field_name, NOT_MENTIONED),
                getattr(result.metadata, field_name),
                entry_gold.aliases,
            ))
        predicted = []
        for claim in result.claims:
            category = None
            if claim.category_label is not None:
                try:
                    from .normalize import normalize_category
                    category = normalize_category(claim.category_label)
                except ValueError:
                    category = None
            predicted.append((claim.claimant, category))
        matched, pairs = _match_claims(predicted, entry_gold.gold_claims,
                                       entry_gold.aliases)
        correct += matched
        total_gold += len(entry_gold.gold_claims)
        category_pairs.extend(pairs)

    faulty = total_gold - correct
    per_field = {f: metrics_from_outcomes(o) for f, o in outcomes.items()}
    per_class = per_class_metrics(confusion_matrix(category_pairs))
    faulty_pct = (claim_identification_rate(correct, faulty)
                  if total_gold else 0.0)
    return EvalReport(
        model_id=model_id,
        per_field=per_field,
        claim_correct=correct,
        claim_faulty=faulty,
        faulty_pct=faulty_pct,
        per_class=per_class,
    )


def load_gold(path: Path | str) -> list[GoldEntry]:
    records = json.loads(Path(path).read_text(encoding="utf-8"))
    entries = []
    seen = set()
    for record in records:
        entry_id = record["entry_id"]
        if entry_id in seen:
            raise EvalError(f"duplicate gold entry id: {entry_id}")
        seen.add(entry_id)
        entries.append(GoldEntry(
            entry_id=entry_id,
            gold_metadata=record["gold_metadata"],
            gold_claims=[
                (c["claimant"], AuthenticityCategory(c["category"]))
                for c in record["gold_claims"]
            ],
            aliases=record.get("aliases", {}),
        ))
    return entries


_FIELD_TITLES = {
    "title": "Title", "doc_type": "Type", "alleged_date": "Date",
    "alleged_place": "Place", "alleged_author": "Creator",
}


def render_report(reports: list[EvalReport]) -> str:
    """Plain-text rendering of the three tables, side by side per model."""
    def fmt(x: float) -> str:
        return f"{round_half_up(x, 2):.2f}"

    lines = []
    header = "Metadata extraction".ljust(24) + "".join(
        r.model_id[:14].ljust(16) for r in reports)
    lines.append(header)
    for field_name in METADATA_FIELDS:
        for metric in ("precision", "recall", "f1"):
            label = f"{_FIELD_TITLES[field_name]} {metric}"
            row = label.ljust(24) + "".join(
                fmt(getattr(r.per_field[field_name], metric)).ljust(16)
                for r in reports)
            lines.append(row)
    lines.append("")
    lines.append("Claim identification".ljust(24) + "".join(
        r.model_id[:14].ljust(16) for r in reports))
    lines.append("correct".ljust(24) + "".join(
        str(r.claim_correct).ljust(16) for r in reports))
    lines.append("faulty".ljust(24) + "".join(
        f"{r.claim_faulty} ({r.faulty_pct}%)".ljust(16) for r in reports))
    lines.append("")
    lines.append("Claim categorisation".ljust(24) + "".join(
        r.model_id[:14].ljust(16) for r in reports))
    for cls in CATEGORIES:
        for metric in ("precision", "recall", "f1"):
            label = f"{cls.value} {metric}"
            row = label.ljust(24) + "".join(
                fmt(getattr(r.per_class[cls], metric)).ljust(16)
                for r in reports)
            lines.append(row)
    return "\n".join(lines) + "\n"


def report_to_dict(report: EvalReport) -> dict:
    return {
        "model_id": report.model_id,
        "per_field": {
            f: {"precision": m.precision, "recall": m.recall, "f1": m.f1}
            for f, m in report.per_field.items()
        },
        "claim_id": {
            "correct": report.claim_correct,
            "faulty": report.claim_faulty,
            "faulty_pct": report.faulty_pct,
        },
        "per_class": {
            cls.value: {"precision": m.precision, "recall": m.recall,
                        "f1": m.f1}
            for cls, m in report.per_class.items()
        },
    }
