"""Knowledge-graph summaries and the scholarly-debate timeline.

Counts claims/documents/claimants straight off the quad store, places
each claim at its claimant's century of activity (midpoint of the life
span), and renders the timeline as CSV plus a deterministic SVG scatter.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .kg import (CATEGORY_FROM_IRI, Dataset, Iri, Quad, Vocab, match_quads)
from .normalize import AuthenticityCategory, YearInterval, century_of_interval

PALETTE = {
    AuthenticityCategory.AUTHENTIC: "#1b9e77",
    AuthenticityCategory.FORGERY: "#d95f02",
    AuthenticityCategory.SUSPICIOUS: "#7570b3",
}


@dataclass(frozen=True)
class SummaryStats:
    claim_count: int
    document_count: int
    claimant_count: int


@dataclass(frozen=True)
class TimelinePoint:
    document_id: str
    claimant_label: str
    century: int
    category: AuthenticityCategory


@dataclass(frozen=True)
class SkippedClaim:
    document_id: str
    claimant_label: str
    reason: str


def _assessment_graphs(dataset: Dataset) -> list[Quad]:
    """One assertsAuthenticity quad per assessment graph."""
    return match_quads(dataset, predicate=Vocab.ASSERTS_AUTHENTICITY)


def summary_stats(dataset: Dataset) -> SummaryStats:
    claims = _assessment_graphs(dataset)
    documents = {q.object for q in
                 match_quads(dataset, predicate=Vocab.ABOUT_DOCUMENT)}
    claimants = {q.object for q in
                 match_quads(dataset, predicate=Vocab.CLAIMED_BY)}
    return SummaryStats(
        claim_count=len(claims),
        document_count=len(documents),
        claimant_count=len(claimants),
    )


def _graph_value(dataset: Dataset, graph: Iri, predicate: Iri):
    hits = match_quads(dataset, predicate=predicate, graph=graph)
    return hits[0].object if hits else None


def timeline(
    dataset: Dataset,
    life_dates: dict[str, tuple[int, int]],
) -> tuple[list[TimelinePoint], list[SkippedClaim]]:
    """One point per assessment claim whose claimant has known life dates.

    `life_dates` maps claimant IRI strings to (birth, death) years.
    Claims by undated claimants land in the skipped report instead.
    """
    points = []
    skipped = []
    for quad in _assessment_graphs(dataset):
        graph = quad.graph
        category = CATEGORY_FROM_IRI.get(quad.object)
        about = _graph_value(dataset, graph, Vocab.ABOUT_DOCUMENT)
        claimed_by = _graph_value(dataset, graph, Vocab.CLAIMED_BY)
        document_id = about.value if isinstance(about, Iri) else ""
        claimant = claimed_by.value if isinstance(claimed_by, Iri) else ""
        if category is None:
            skipped.append(SkippedClaim(document_id, claimant,
                                        "unrecognized category individual"))
            continue
        years = life_dates.get(claimant)
        if years is None:
            skipped.append(SkippedClaim(document_id, claimant,
                                        "no life dates"))
            continue
        century = century_of_interval(YearInterval(*years))
        points.append(TimelinePoint(document_id, claimant, century, category))
    return points, skipped


def write_timeline_csv(points: list[TimelinePoint], path: Path | str) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["document_id", "claimant", "century", "category"])
        for point in points:
            writer.writerow([point.document_id, point.claimant_label,
                             point.century, point.category.value])


# Fixed canvas geometry keeps the SVG byte-deterministic.
_WIDTH, _HEIGHT = 760, 420
_MARGIN = 60
_RADIUS = 5


def render_scatter_svg(points: list[TimelinePoint]) -> str:
    """Standalone SVG 1.1 scatter: x = century, y = document row index."""
    documents = sorted({p.document_id for p in points})
    doc_row = {doc: i for i, doc in enumerate(documents)}
    centuries = sorted({p.century for p in points})
    lo = min(centuries) - 1 if centuries else 0
    hi = max(centuries) + 1 if centuries else 1

    def x_of(century: int) -> float:
        span = max(hi - lo, 1)
        return _MARGIN + (century - lo) / span * (_WIDTH - 2 * _MARGIN)

    def y_of(row: int) -> float:
        rows = max(len(documents), 1)
        return _MARGIN + (row + 0.5) / rows * (_HEIGHT - 2 * _MARGIN)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<line x1="{_MARGIN}" y1="{_HEIGHT - _MARGIN}" '
        f'x2="{_WIDTH - _MARGIN}" y2="{_HEIGHT - _MARGIN}" stroke="black"/>',
        f'<line x1="{_MARGIN}" y1="{_MARGIN}" '
        f'x2="{_MARGIN}" y2="{_HEIGHT - _MARGIN}" stroke="black"/>',
        f'<text x="{_WIDTH // 2}" y="{_HEIGHT - 18}" text-anchor="middle" '
        f'font-size="12">century of claimant activity</text>',
    ]
    for century in range(lo, hi + 1):
        x = x_of(century)
        parts.append(
            f'<text x="{x:.1f}" y="{_HEIGHT - _MARGIN + 16}" '
            f'text-anchor="middle" font-size="10">{century}</text>')
    for doc, row in doc_row.items():
        label = doc.rsplit("/", 1)[-1]
        parts.append(
            f'<text x="{_MARGIN - 6}" y="{y_of(row):.1f}" '
            f'text-anchor="end" font-size="10">{label}</text>')
    for point in points:
        color = PALETTE[point.category]
        parts.append(
            f'<circle cx="{x_of(point.century):.1f}" '
            f'cy="{y_of(doc_row[point.document_id]):.1f}" '
            f'r="{_RADIUS}" fill="{color}" fill-opacity="0.8">'
            f'<title>{_escape(point.claimant_label)}</title></circle>')
    legend_y = 16
    for category in AuthenticityCategory:
        parts.append(
            f'<circle cx="{_WIDTH - 150}" cy="{legend_y}" r="{_RADIUS}" '
            f'fill="{PALETTE[category]}"/>')
        parts.append(
            f'<text x="{_WIDTH - 140}" y="{legend_y + 4}" '
            f'font-size="11">{category.value}</text>')
        legend_y += 18
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _escape(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;"))


def emit_scatter(points: list[TimelinePoint], csv_path: Path | str,
                 svg_path: Path | str) -> None:
    """Write the timeline CSV and SVG; byte-deterministic for a given order."""
    write_timeline_csv(points, csv_path)
    Path(svg_path).write_text(render_scatter_svg(points), encoding="utf-8")
