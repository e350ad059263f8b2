"""Corpus loading, validation, and article fetching.

The corpus is line-delimited JSON, one document record per line. Each
record carries the document description and the article sections that
discuss its authenticity; fetch_article can pull those from a wiki-style
endpoint when a corpus is being assembled.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

DEFAULT_SECTION_KEYWORDS = [
    "authenticity", "forgery", "forged", "genuine", "debate",
    "criticism", "dispute", "authorship",
]


class CorpusError(ValueError):
    """Malformed corpus file or record."""


class FetchError(RuntimeError):
    """Article fetch failed (network, status, or payload shape)."""

    def __init__(self, url: str, message: str):
        super().__init__(f"{message}: {url}")
        self.url = url


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    description: str
    source_url: str = ""
    title_hint: Optional[str] = None
    assessment_sections: tuple[tuple[str, str], ...] = ()
    sections_override: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if not self.id:
            raise CorpusError("entry id must be non-empty")
        if not self.description:
            raise CorpusError(f"entry {self.id}: description must be non-empty")
        for heading, body in self.assessment_sections:
            if not body:
                raise CorpusError(
                    f"entry {self.id}: section {heading!r} has empty body")


@dataclass(frozen=True)
class Corpus:
    entries: tuple[CorpusEntry, ...] = ()

    def __post_init__(self):
        seen = set()
        for entry in self.entries:
            if entry.id in seen:
                raise CorpusError(f"duplicate entry id: {entry.id}")
            seen.add(entry.id)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)


def _entry_from_record(record: dict, line_no: int) -> CorpusEntry:
    if not isinstance(record, dict):
        raise CorpusError(f"line {line_no}: record is not a JSON object")
    try:
        sections = tuple(
            (s["heading"], s["body"]) for s in record.get("sections", [])
        )
        override = record.get("sections_override")
        return CorpusEntry(
            id=record["id"],
            description=record["description"],
            source_url=record.get("source_url", ""),
            title_hint=record.get("title_hint"),
            assessment_sections=sections,
            sections_override=tuple(override) if override is not None else None,
        )
    except KeyError as exc:
        raise CorpusError(f"line {line_no}: missing key {exc}") from None
    except CorpusError as exc:
        raise CorpusError(f"line {line_no}: {exc}") from None


def load_corpus(path: Path | str) -> Corpus:
    """Read a line-delimited-JSON corpus file, reporting the failing line."""
    path = Path(path)
    entries = []
    with path.open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {line_no}: invalid JSON: {exc}") from None
            entries.append(_entry_from_record(record, line_no))
    return Corpus(tuple(entries))


def write_corpus(corpus: Corpus, path: Path | str) -> None:
    """Canonical writer; load_corpus(write_corpus(c)) round-trips."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for entry in corpus:
            record = {
                "id": entry.id,
                "source_url": entry.source_url,
                "description": entry.description,
                "sections": [
                    {"heading": h, "body": b}
                    for h, b in entry.assessment_sections
                ],
            }
            if entry.title_hint is not None:
                record["title_hint"] = entry.title_hint
            if entry.sections_override is not None:
                record["sections_override"] = list(entry.sections_override)
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


_TEMPLATE_RE = re.compile(r"\{\{[^{}]*\}\}")
_REF_RE = re.compile(r"<ref[^>]*/>|<ref[^>]*>.*?</ref>", re.DOTALL)
_LINK_RE = re.compile(r"\[\[(?:[^|\]]*\|)?([^\]]*)\]\]")
_TAG_RE = re.compile(r"<[^>]+>")
_QUOTES_RE = re.compile(r"'{2,}")
_FOOTNOTE_RE = re.compile(r"\[\d+\]")


def strip_markup(text: str) -> str:
    """Reduce wiki markup to plain prose, keeping paragraph breaks."""
    out = text
    # nested templates resolve from the inside out
    while _TEMPLATE_RE.search(out):
        out = _TEMPLATE_RE.sub("", out)
    out = _REF_RE.sub("", out)
    out = _LINK_RE.sub(r"\1", out)
    out = _TAG_RE.sub("", out)
    out = _QUOTES_RE.sub("", out)
    out = _FOOTNOTE_RE.sub("", out)
    paragraphs = [
        " ".join(chunk.split())
        for chunk in re.split(r"\n\s*\n", out)
    ]
    return "\n\n".join(p for p in paragraphs if p)


_HEADING_RE = re.compile(r"^(={2,6})\s*(.*?)\s*\1\s*$", re.MULTILINE)


def _split_sections(wikitext: str) -> tuple[str, list[tuple[str, str]]]:
    """Split wikitext into (lead, [(heading, body), ...])."""
    matches = list(_HEADING_RE.finditer(wikitext))
    lead = wikitext[: matches[0].start()] if matches else wikitext
    sections = []
    for i, m in enumerate(matches):
        end = matches[i + 1].start() if i + 1 < len(matches) else len(wikitext)
        body = strip_markup(wikitext[m.end():end])
        if body:
            sections.append((strip_markup(m.group(2)), body))
    return strip_markup(lead), sections


def fetch_article(url: str, session=None,
                  timeout: float = 30.0) -> tuple[str, list[tuple[str, str]]]:
    """Fetch a wiki article as (title, [(heading, plain-text body), ...]).

    `url` addresses an endpoint returning the MediaWiki parse payload
    (`{"parse": {"title": ..., "wikitext": {"*": ...}}}`); markup is
    stripped down to prose.
    """
    if session is None:
        import requests
        session = requests
    try:
        resp = session.get(url, timeout=timeout)
    except Exception as exc:
        raise FetchError(url, f"network failure ({exc})") from exc
    if resp.status_code == 404:
        raise FetchError(url, "article not found (404)")
    if resp.status_code != 200:
        raise FetchError(url, f"unexpected status {resp.status_code}")
    try:
        payload = resp.json()
        title = payload["parse"]["title"]
        wikitext = payload["parse"]["wikitext"]["*"]
    except (ValueError, KeyError, TypeError) as exc:
        raise FetchError(url, f"unparseable payload ({exc})") from exc
    _, sections = _split_sections(wikitext)
    return title, sections


def select_assessment_sections(
    sections: list[tuple[str, str]],
    keywords: list[str] = DEFAULT_SECTION_KEYWORDS,
    override: Optional[list[str]] = None,
) -> list[tuple[str, str]]:
    """Keep sections whose heading contains any keyword, case-insensitively.

    An explicit override list of headings wins over keyword matching.
    """
    if override is not None:
        wanted = {h.casefold() for h in override}
        return [s for s in sections if s[0].casefold() in wanted]
    if not keywords:
        raise ValueError("keywords must be non-empty")
    folded = [k.casefold() for k in keywords]
    return [
        s for s in sections
        if any(k in s[0].casefold() for k in folded)
    ]
