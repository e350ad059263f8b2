"""Entity reconciliation against Wikidata, VIAF, and GeoNames.

Labels coming out of extraction are matched to authority identifiers
with a normalized edit-distance score; confident matches are accepted
automatically, ambiguous ones go to a human review queue. All service
responses are cached on disk so reruns are deterministic and offline.
"""

from __future__ import annotations

import enum
import hashlib
import json
import re
import threading
import time
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

DEFAULT_THRESHOLD = 0.95
RUNNER_UP_MARGIN = 0.05
MAX_CANDIDATES = 10

REJECT_ALL = "REJECT_ALL"

WIKIDATA_API = "https://www.wikidata.org/w/api.php"
WIKIDATA_ENTITY = "https://www.wikidata.org/wiki/Special:EntityData"
VIAF_API = "https://viaf.org/viaf/AutoSuggest"
GEONAMES_API = "http://api.geonames.org/searchJSON"


class Service(enum.Enum):
    WIKIDATA = "wikidata"
    VIAF = "viaf"
    GEONAMES = "geonames"


class EntityKind(enum.Enum):
    PERSON = "Person"
    PLACE = "Place"


class MatchStatus(enum.Enum):
    AUTO_MATCHED = "AutoMatched"
    REVIEWED = "Reviewed"
    UNMATCHED = "Unmatched"


class ReconcileError(ValueError):
    pass


@dataclass(frozen=True)
class AuthorityCandidate:
    service: Service
    external_id: str
    label: str
    score: float
    description: Optional[str] = None

    def __post_init__(self):
        if not self.external_id:
            raise ReconcileError("candidate external_id must be non-empty")
        if not 0.0 <= self.score <= 1.0:
            raise ReconcileError(f"candidate score {self.score} outside [0,1]")


@dataclass
class ReconciledEntity:
    raw_label: str
    kind: EntityKind
    canonical_label: str
    status: MatchStatus
    wikidata_id: Optional[str] = None
    viaf_id: Optional[str] = None
    geonames_id: Optional[str] = None
    life_years: Optional[tuple[int, int]] = None

    def __post_init__(self):
        if self.kind is EntityKind.PLACE:
            if self.viaf_id is not None or self.life_years is not None:
                raise ReconcileError("places carry no VIAF id or life dates")
        if self.status is MatchStatus.UNMATCHED:
            if self.wikidata_id or self.viaf_id or self.geonames_id:
                raise ReconcileError("unmatched entity must carry no ids")
        if self.life_years is not None:
            birth, death = self.life_years
            if birth > death:
                raise ReconcileError("birth year after death year")


@dataclass
class ReviewDecision:
    raw_label: str
    kind: EntityKind
    chosen: str  # candidate external_id or REJECT_ALL
    decided_at: str
    reviewer_note: Optional[str] = None


def _strip_punct(text: str) -> str:
    return "".join(
        ch for ch in text
        if not unicodedata.category(ch).startswith("P")
    )


def normalize_label(label: str) -> str:
    return " ".join(_strip_punct(label.casefold()).split())


def _levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (ca != cb),
            ))
        previous = current
    return previous[-1]


def score_candidate(raw_label: str, candidate_label: str) -> float:
    """Normalized Levenshtein similarity on casefolded, punctuation-free text."""
    if not raw_label or not candidate_label:
        raise ReconcileError("labels must be non-empty")
    a, b = normalize_label(raw_label), normalize_label(candidate_label)
    if not a and not b:
        return 1.0
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - _levenshtein(a, b) / longest


def auto_match(
    candidates: list[AuthorityCandidate],
    threshold: float = DEFAULT_THRESHOLD,
    margin: float = RUNNER_UP_MARGIN,
) -> tuple[Optional[AuthorityCandidate], bool]:
    """Accept the top candidate only when confident and unambiguous.

    Confident: score >= threshold. Unambiguous: beats the runner-up by
    at least `margin`. Anything else is routed to review (needs_review
    True) unless there were no candidates at all.
    """
    if not 0.0 < threshold <= 1.0:
        raise ReconcileError(f"threshold {threshold} outside (0,1]")
    if not candidates:
        return None, False
    ranked = sorted(candidates, key=lambda c: c.score, reverse=True)
    top = ranked[0]
    if top.score >= threshold and (
        len(ranked) == 1 or top.score - ranked[1].score >= margin
    ):
        return top, False
    return None, True


class RateLimiter:
    """Minimum-interval gate; one in-flight request per service."""

    def __init__(self, min_interval: float = 1.0):
        self.min_interval = min_interval
        self._lock = threading.Lock()
        self._last = 0.0

    def wait(self):
        with self._lock:
            gap = self._last + self.min_interval - time.monotonic()
            if gap > 0:
                time.sleep(gap)
            self._last = time.monotonic()


class AuthorityClient:
    """Cached, rate-limited client for the three authority services.

    `http_get(url, params) -> parsed JSON` is injectable so tests can
    count network calls or serve canned payloads. With a warm cache no
    call ever reaches http_get.
    """

    def __init__(
        self,
        cache_dir: Path | str,
        http_get: Optional[Callable[[str, dict], dict]] = None,
        rate_limits: Optional[dict[Service, float]] = None,
        geonames_user: str = "demo",
    ):
        self.cache_dir = Path(cache_dir)
        self._http_get = http_get or _requests_get
        self.geonames_user = geonames_user
        limits = rate_limits or {}
        self._limiters = {
            service: RateLimiter(limits.get(service, 1.0))
            for service in Service
        }
        self._write_lock = threading.Lock()

    def _cache_path(self, service: Service, query: str) -> Path:
        digest = hashlib.sha256(query.encode("utf-8")).hexdigest()
        return self.cache_dir / service.value / f"{digest}.json"

    def _cached_get(self, service: Service, query: str, url: str,
                    params: dict) -> dict:
        path = self._cache_path(service, query)
        if path.exists():
            return json.loads(path.read_text(encoding="utf-8"))
        self._limiters[service].wait()
        payload = self._http_get(url, params)
        with self._write_lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(payload, ensure_ascii=False),
                            encoding="utf-8")
        return payload

    def search(self, service: Service, label: str,
               kind: EntityKind) -> list[AuthorityCandidate]:
        """Query one service for a label, scored against the raw label."""
        if not label:
            raise ReconcileError("label must be non-empty")
        if service is Service.GEONAMES and kind is not EntityKind.PLACE:
            raise ReconcileError("GeoNames resolves places only")
        if service is Service.VIAF and kind is not EntityKind.PERSON:
            raise ReconcileError("VIAF resolves persons only")
        query = f"search:{label.casefold()}:{kind.value}"
        if service is Service.WIKIDATA:
            payload = self._cached_get(
                service, query, WIKIDATA_API,
                {"action": "wbsearchentities", "search": label,
                 "language": "en", "format": "json",
                 "limit": MAX_CANDIDATES})
            raw = [
                (item["id"], item.get("label", ""),
                 item.get("description"))
                for item in payload.get("search", [])
            ]
        elif service is Service.VIAF:
            payload = self._cached_get(
                service, query, VIAF_API, {"query": label})
            raw = [
                (str(item["viafid"]), item.get("term", ""),
                 item.get("nametype"))
                for item in (payload.get("result") or [])
            ]
        else:
            payload = self._cached_get(
                service, query, GEONAMES_API,
                {"q": label, "maxRows": MAX_CANDIDATES,
                 "username": self.geonames_user})
            raw = [
                (str(item["geonameId"]), item.get("name", ""),
                 item.get("countryName"))
                for item in payload.get("geonames", [])
            ]
        candidates = []
        for external_id, cand_label, description in raw[:MAX_CANDIDATES]:
            if not cand_label:
                continue
            candidates.append(AuthorityCandidate(
                service=service,
                external_id=external_id,
                label=cand_label,
                description=description,
                score=score_candidate(label, cand_label),
            ))
        return candidates

    def fetch_life_dates(self, wikidata_id: str) -> Optional[tuple[int, int]]:
        """Birth and death year from a Wikidata entity, or None if incomplete."""
        if not re.fullmatch(r"Q\d+", wikidata_id):
            raise ReconcileError(f"malformed Wikidata id: {wikidata_id}")
        payload = self._cached_get(
            Service.WIKIDATA, f"entity:{wikidata_id}",
            f"{WIKIDATA_ENTITY}/{wikidata_id}.json", {})
        entity = payload.get("entities", {}).get(wikidata_id, {})
        claims = entity.get("claims", {})
        birth = _claim_year(claims, "P569")
        death = _claim_year(claims, "P570")
        if birth is None or death is None:
            return None
        return birth, death

    def viaf_id_from_wikidata(self, wikidata_id: str) -> Optional[str]:
        """VIAF identifier (P214) attached to a Wikidata entity, if any."""
        if not re.fullmatch(r"Q\d+", wikidata_id):
            raise ReconcileError(f"malformed Wikidata id: {wikidata_id}")
        payload = self._cached_get(
            Service.WIKIDATA, f"entity:{wikidata_id}",
            f"{WIKIDATA_ENTITY}/{wikidata_id}.json", {})
        entity = payload.get("entities", {}).get(wikidata_id, {})
        for statement in entity.get("claims", {}).get("P214", []):
            value = statement.get("mainsnak", {}).get("datavalue", {})
            if value.get("type") == "string":
                return value["value"]
        return None


def _claim_year(claims: dict, prop: str) -> Optional[int]:
    for statement in claims.get(prop, []):
        value = statement.get("mainsnak", {}).get("datavalue", {})
        if value.get("type") != "time":
            continue
        # Wikidata time strings look like "+1407-01-01T00:00:00Z"
        m = re.match(r"([+-])(\d+)-", value["value"]["time"])
        if m:
            year = int(m.group(2))
            return -year if m.group(1) == "-" else year
    return None


def _requests_get(url: str, params: dict) -> dict:
    import requests

    resp = requests.get(url, params=params,
                        headers={"User-Agent": "forgekg/0.1"}, timeout=30)
    if resp.status_code == 429:
        retry_after = float(resp.headers.get("Retry-After", "1"))
        time.sleep(retry_after)
        resp = requests.get(url, params=params,
                            headers={"User-Agent": "forgekg/0.1"}, timeout=30)
    resp.raise_for_status()
    return resp.json()


@dataclass
class PendingReview:
    raw_label: str
    kind: EntityKind
    candidates: list[AuthorityCandidate] = field(default_factory=list)


def load_decisions(path: Path | str) -> list[ReviewDecision]:
    try:
        records = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ReconcileError(f"unreadable decisions file: {exc}") from exc
    decisions = []
    for record in records:
        try:
            decisions.append(ReviewDecision(
                raw_label=record["raw_label"],
                kind=EntityKind(record["kind"]),
                chosen=record["chosen"],
                decided_at=record.get("decided_at", ""),
                reviewer_note=record.get("reviewer_note"),
            ))
        except (KeyError, ValueError) as exc:
            raise ReconcileError(f"malformed decision record: {exc}") from exc
    return decisions


def save_decisions(decisions: list[ReviewDecision], path: Path | str) -> None:
    records = [
        {"raw_label": d.raw_label, "kind": d.kind.value, "chosen": d.chosen,
         "decided_at": d.decided_at, "reviewer_note": d.reviewer_note}
        for d in decisions
    ]
    Path(path).write_text(json.dumps(records, ensure_ascii=False, indent=2),
                          encoding="utf-8")


def review_queue(
    pending: list[PendingReview],
    decisions: Optional[list[ReviewDecision]] = None,
    prompt: Callable[[str], str] = input,
    echo: Callable[[str], None] = print,
) -> list[ReviewDecision]:
    """Resolve ambiguous matches, either from a decisions file or a terminal.

    Batch mode (decisions supplied) validates every decision against the
    candidates actually offered; interactive mode walks the pending list
    presenting numbered candidates, accepting an index or 'r' to reject.
    """
    if decisions is not None:
        offered = {
            (p.raw_label, p.kind): {c.external_id for c in p.candidates}
            for p in pending
        }
        for decision in decisions:
            key = (decision.raw_label, decision.kind)
            if decision.chosen == REJECT_ALL:
                continue
            if key in offered and decision.chosen not in offered[key]:
                raise ReconcileError(
                    f"decision for {decision.raw_label!r} chooses "
                    f"{decision.chosen!r}, which was never offered")
        return decisions

    resolved = []
    for item in pending:
        echo(f"\n{item.raw_label} ({item.kind.value}):")
        for i, cand in enumerate(item.candidates, start=1):
            desc = f" - {cand.description}" if cand.description else ""
            echo(f"  {i}. [{cand.service.value}:{cand.external_id}] "
                 f"{cand.label} (score {cand.score:.2f}){desc}")
        while True:
            answer = prompt("choose a number, or 'r' to reject all: ").strip()
            if answer.lower() == "r":
                chosen = REJECT_ALL
                break
            if answer.isdigit() and 1 <= int(answer) <= len(item.candidates):
                chosen = item.candidates[int(answer) - 1].external_id
                break
            echo("invalid choice")
        resolved.append(ReviewDecision(
            raw_label=item.raw_label,
            kind=item.kind,
            chosen=chosen,
            decided_at=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        ))
    return resolved


def reconcile_label(
    client: AuthorityClient,
    label: str,
    kind: EntityKind,
    threshold: float = DEFAULT_THRESHOLD,
    margin: float = RUNNER_UP_MARGIN,
    decision: Optional[ReviewDecision] = None,
) -> tuple[ReconciledEntity, Optional[PendingReview]]:
    """Resolve one label end to end: search, auto-match or apply a decision.

    Persons pivot on Wikidata (VIAF attached via the entity's P214 when
    present); places resolve against GeoNames. Returns the entity plus a
    PendingReview when a human call is still needed.
    """
    service = Service.WIKIDATA if kind is EntityKind.PERSON else Service.GEONAMES
    candidates = client.search(service, label, kind)

    chosen: Optional[AuthorityCandidate] = None
    status = MatchStatus.UNMATCHED
    pending = None

    if decision is not None:
        if decision.chosen != REJECT_ALL:
            by_id = {c.external_id: c for c in candidates}
            if decision.chosen not in by_id:
                raise ReconcileError(
                    f"decision for {label!r} references unoffered candidate "
                    f"{decision.chosen!r}")
            chosen = by_id[decision.chosen]
            status = MatchStatus.REVIEWED
    else:
        match, needs_review = auto_match(candidates, threshold, margin)
        if match is not None:
            chosen = match
            status = MatchStatus.AUTO_MATCHED
        elif needs_review:
            pending = PendingReview(raw_label=label, kind=kind,
                                    candidates=candidates)

    if chosen is None:
        return ReconciledEntity(
            raw_label=label, kind=kind, canonical_label=label,
            status=MatchStatus.UNMATCHED,
        ), pending

    entity = ReconciledEntity(
        raw_label=label, kind=kind, canonical_label=chosen.label,
        status=status,
    )
    if kind is EntityKind.PERSON:
        entity.wikidata_id = chosen.external_id
        entity.viaf_id = client.viaf_id_from_wikidata(chosen.external_id)
        if entity.viaf_id is None:
            # fall back to a direct VIAF search under the same match rule
            viaf_match, _ = auto_match(
                client.search(Service.VIAF, label, kind), threshold, margin)
            if viaf_match is not None:
                entity.viaf_id = viaf_match.external_id
        entity.life_years = client.fetch_life_dates(chosen.external_id)
    else:
        entity.geonames_id = chosen.external_id
    return entity, None
