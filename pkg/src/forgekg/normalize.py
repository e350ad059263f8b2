"""Cleaning and type-validation of raw extraction output.

Turns free-text historical dates into inclusive signed-year intervals,
normalizes authenticity category labels onto the closed three-way
enumeration, and assembles validated claim records, collecting every
degradation into a warnings channel instead of dropping data silently.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Optional

from .extract import NOT_MENTIONED, ExtractionResult, RawClaim

__all__ = [
    "YearInterval",
    "AuthenticityCategory",
    "NormalizedMetadata",
    "NormalizedClaim",
    "Warning_",
    "DateParseError",
    "CategoryError",
    "parse_historical_date",
    "century_of_interval",
    "normalize_category",
    "normalize_extraction",
]

# Circa dates widen to a symmetric window of this many years on each side.
CIRCA_WINDOW = 10


class DateParseError(ValueError):
    """Raised when a date string matches none of the recognized patterns."""

    def __init__(self, raw: str):
        super().__init__(f"unrecognized date pattern: {raw!r}")
        self.raw = raw


class CategoryError(ValueError):
    """Raised when a category label is outside the enumeration and synonyms."""

    def __init__(self, raw: str):
        super().__init__(f"unrecognized authenticity category: {raw!r}")
        self.raw = raw


@dataclass(frozen=True)
class YearInterval:
    """Inclusive range of signed years; negative years are BCE (no year 0)."""

    start_year: int
    end_year: int

    def __post_init__(self):
        if self.start_year > self.end_year:
            raise ValueError(
                f"interval start {self.start_year} after end {self.end_year}"
            )


class AuthenticityCategory(enum.Enum):
    AUTHENTIC = "Authentic"
    FORGERY = "Forgery"
    SUSPICIOUS = "Suspicious"


@dataclass(frozen=True)
class NormalizedMetadata:
    title: Optional[str] = None
    doc_type: Optional[str] = None
    alleged_date: Optional[YearInterval] = None
    alleged_date_raw: Optional[str] = None
    alleged_place_raw: Optional[str] = None
    alleged_author_raw: Optional[str] = None

    def __post_init__(self):
        if self.alleged_date is not None and self.alleged_date_raw is None:
            raise ValueError("parsed date requires the raw date string")


@dataclass
class NormalizedClaim:
    claimant_raw: str
    category: AuthenticityCategory
    opinion_text: str
    source_raw: Optional[str] = None
    features_observed: list[str] = field(default_factory=list)
    evidence: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.claimant_raw:
            raise ValueError("claimant_raw must be non-empty")


@dataclass(frozen=True)
class Warning_:
    """One degradation event; serializes into the warnings report."""

    entry_id: str
    stage: str
    message: str
    raw: str


_ERA_BCE = r"(?:BC|BCE|B\.C\.(?:E\.)?)"
_ERA_CE = r"(?:AD|CE|A\.D\.|C\.E\.)"

_YEAR_RE = re.compile(
    rf"^(\d{{1,4}})\s*(?:({_ERA_BCE})|{_ERA_CE})?$", re.IGNORECASE
)
_CENTURY_RE = re.compile(
    rf"^(\d{{1,2}})\s*(?:st|nd|rd|th)\s+(?:century|c\.)\s*"
    rf"(?:({_ERA_BCE})|{_ERA_CE})?$",
    re.IGNORECASE,
)
_CIRCA_RE = re.compile(r"^(?:circa|ca\.?|c\.?)\s*(.+)$", re.IGNORECASE)
_RANGE_SPLIT_RE = re.compile(r"\s*[-–—]\s*")


def _parse_year(text: str) -> Optional[int]:
    m = _YEAR_RE.match(text.strip())
    if not m:
        return None
    year = int(m.group(1))
    if year == 0:
        return None
    return -year if m.group(2) else year


def _century_interval(n: int) -> YearInterval:
    """nth century CE covers [(n-1)*100, n*100-1]; BCE mirrors it below zero."""
    if n > 0:
        return YearInterval((n - 1) * 100, n * 100 - 1)
    k = -n
    return YearInterval(-(k * 100), -((k - 1) * 100 + 1))


def parse_historical_date(raw: str) -> YearInterval:
    """Parse a free-text historical date into an inclusive year interval.

    Recognizes plain years ("1196"), BCE/CE suffixes, year ranges with
    hyphen or dash ("950-1050"), ordinal centuries ("4th century",
    "12th c.", "10th century BC"), and circa forms ("c. 1100") which
    widen by +/-CIRCA_WINDOW years.
    """
    if not raw:
        raise DateParseError(raw)
    text = raw.strip()

    m = _CIRCA_RE.match(text)
    if m:
        year = _parse_year(m.group(1))
        if year is not None:
            return YearInterval(year - CIRCA_WINDOW, year + CIRCA_WINDOW)
        raise DateParseError(raw)

    m = _CENTURY_RE.match(text)
    if m:
        n = int(m.group(1))
        if n == 0:
            raise DateParseError(raw)
        return _century_interval(-n if m.group(2) else n)

    year = _parse_year(text)
    if year is not None:
        return YearInterval(year, year)

    parts = _RANGE_SPLIT_RE.split(text)
    if len(parts) == 2:
        lo, hi = _parse_year(parts[0]), _parse_year(parts[1])
        if lo is not None and hi is not None and lo <= hi:
            return YearInterval(lo, hi)
        # "100-44 BC": era marker only on the right side applies to both
        if lo is not None and hi is not None and hi < 0 < lo and -lo <= hi:
            return YearInterval(-lo, hi)

    raise DateParseError(raw)


def century_of_interval(interval: YearInterval) -> int:
    """Century containing the interval midpoint; [300,399] -> 4, BCE mirrored."""
    mid = (interval.start_year + interval.end_year) // 2
    if mid >= 0:
        return mid // 100 + 1
    return -((-mid - 1) // 100 + 1)


_CATEGORY_SYNONYMS = {
    "authentic": AuthenticityCategory.AUTHENTIC,
    "genuine": AuthenticityCategory.AUTHENTIC,
    "real": AuthenticityCategory.AUTHENTIC,
    "forgery": AuthenticityCategory.FORGERY,
    "forged": AuthenticityCategory.FORGERY,
    "fake": AuthenticityCategory.FORGERY,
    "counterfeit": AuthenticityCategory.FORGERY,
    "spurious": AuthenticityCategory.FORGERY,
    "suspicious": AuthenticityCategory.SUSPICIOUS,
    "suspect": AuthenticityCategory.SUSPICIOUS,
    "doubtful": AuthenticityCategory.SUSPICIOUS,
    "dubious": AuthenticityCategory.SUSPICIOUS,
    "disputed": AuthenticityCategory.SUSPICIOUS,
    "uncertain": AuthenticityCategory.SUSPICIOUS,
}


def normalize_category(raw: str) -> AuthenticityCategory:
    """Map a free-text label onto the three-way enumeration.

    Case-insensitive and whitespace-trimmed; a small synonym table covers
    common inflections ("forged", "genuine"). Anything else raises.
    """
    if not raw:
        raise CategoryError(raw)
    key = raw.strip().casefold()
    try:
        return _CATEGORY_SYNONYMS[key]
    except KeyError:
        raise CategoryError(raw) from None


def _opt(value: str) -> Optional[str]:
    return None if value == NOT_MENTIONED else value


def normalize_extraction(
    result: ExtractionResult,
) -> tuple[NormalizedMetadata, list[NormalizedClaim], list[Warning_]]:
    """Clean one entry's extraction output.

    NOT_MENTIONED markers become absent fields; unparseable dates degrade
    to a warning with the raw string kept; claims with an absent or
    unrecognized category are excluded and reported; duplicate claims
    (same casefolded claimant + category) are merged with opinion texts
    concatenated.
    """
    warnings: list[Warning_] = []
    raw_md = result.metadata

    date_raw = _opt(raw_md.alleged_date)
    date_interval = None
    if date_raw is not None:
        try:
            date_interval = parse_historical_date(date_raw)
        except DateParseError:
            warnings.append(
                Warning_(result.entry_id, "normalize.date",
                         "unparseable date kept as raw text", date_raw)
            )

    metadata = NormalizedMetadata(
        title=_opt(raw_md.title),
        doc_type=_opt(raw_md.doc_type),
        alleged_date=date_interval,
        alleged_date_raw=date_raw,
        alleged_place_raw=_opt(raw_md.alleged_place),
        alleged_author_raw=_opt(raw_md.alleged_author),
    )

    merged: dict[tuple[str, AuthenticityCategory], NormalizedClaim] = {}
    for claim in result.claims:
        normalized = _normalize_claim(result.entry_id, claim, warnings)
        if normalized is None:
            continue
        key = (normalized.claimant_raw.casefold(), normalized.category)
        if key in merged:
            existing = merged[key]
            existing.opinion_text += " " + normalized.opinion_text
            if existing.source_raw is None:
                existing.source_raw = normalized.source_raw
        else:
            merged[key] = normalized

    return metadata, list(merged.values()), warnings


def _normalize_claim(
    entry_id: str, claim: RawClaim, warnings: list[Warning_]
) -> Optional[NormalizedClaim]:
    if claim.category_label is None:
        warnings.append(
            Warning_(entry_id, "normalize.claim",
                     "claim excluded: no category assigned", claim.claimant)
        )
        return None
    try:
        category = normalize_category(claim.category_label)
    except CategoryError:
        warnings.append(
            Warning_(entry_id, "normalize.claim",
                     "claim excluded: unrecognized category",
                     claim.category_label)
        )
        return None
    return NormalizedClaim(
        claimant_raw=claim.claimant,
        category=category,
        opinion_text=claim.opinion_text,
        source_raw=claim.source,
    )
