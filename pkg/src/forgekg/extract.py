"""Prompt construction, completion providers, and output parsing.

Three prompts per corpus entry (metadata, claim identification, claim
classification), executed in order against a pluggable completion
provider: a live HTTP endpoint, a replay store of recorded responses,
or a deterministic rule-based stand-in for offline CI.
"""

from __future__ import annotations

import enum
import hashlib
import json
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol

from .corpus import CorpusEntry

NOT_MENTIONED = "NOT_MENTIONED"

METADATA_FIELDS = ("title", "doc_type", "alleged_date", "alleged_place",
                   "alleged_author")

TEMPLATE_DIR = Path(__file__).parent / "templates"


class Task(enum.Enum):
    METADATA = "metadata"
    CLAIM_IDENTIFICATION = "claims"
    CLAIM_CLASSIFICATION = "classification"


@dataclass(frozen=True)
class PromptSpec:
    task: Task
    system_text: str
    user_text: str
    response_schema: dict


@dataclass(frozen=True)
class ProviderRequest:
    model_id: str
    system_text: str
    user_text: str
    temperature: float = 0.0
    max_output_tokens: int = 2048

    def __post_init__(self):
        if self.temperature != 0.0:
            raise ValueError("temperature is fixed at 0")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class RawMetadata:
    title: str = NOT_MENTIONED
    doc_type: str = NOT_MENTIONED
    alleged_date: str = NOT_MENTIONED
    alleged_place: str = NOT_MENTIONED
    alleged_author: str = NOT_MENTIONED


@dataclass
class RawClaim:
    claimant: str
    opinion_text: str
    category_label: Optional[str] = None
    source: Optional[str] = None

    def __post_init__(self):
        if not self.claimant:
            raise ValueError("claimant must be non-empty")
        if not self.opinion_text:
            raise ValueError("opinion_text must be non-empty")


@dataclass
class ExtractionResult:
    entry_id: str
    model_id: str
    metadata: RawMetadata = field(default_factory=RawMetadata)
    claims: list[RawClaim] = field(default_factory=list)
    transcript: list[tuple[ProviderRequest, str]] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)


class ParseError(ValueError):
    """Provider output could not be turned into the task's record shape."""


class ReplayMissError(KeyError):
    def __init__(self, digest: str):
        super().__init__(f"no recorded response for request hash {digest}")
        self.digest = digest


class ProviderError(RuntimeError):
    """Live-provider transport or authentication failure."""


def _load_template(name: str) -> str:
    return (TEMPLATE_DIR / f"{name}.txt").read_text(encoding="utf-8")


def _fill(template: str, **values: str) -> str:
    # plain token replacement; templates contain literal JSON braces
    out = template
    for key, val in values.items():
        out = out.replace("{" + key + "}", val)
    return out


def build_metadata_prompt(entry: CorpusEntry) -> PromptSpec:
    """Task-1 prompt: the five alleged-metadata fields from the description."""
    if not entry.description:
        raise ValueError("entry description must be non-empty")
    return PromptSpec(
        task=Task.METADATA,
        system_text=_load_template("metadata_system"),
        user_text=_fill(_load_template("metadata_user"),
                        description=entry.description),
        response_schema={
            "type": "object",
            "required": list(METADATA_FIELDS),
        },
    )


def build_claims_prompt(entry: CorpusEntry) -> PromptSpec:
    """Task-2 prompt: claimant/opinion pairs from the assessment sections.

    Entries without assessment sections fall back to the description.
    """
    if entry.assessment_sections:
        text = "\n\n".join(
            f"{heading}\n{body}" for heading, body in entry.assessment_sections
        )
    else:
        text = entry.description
    return PromptSpec(
        task=Task.CLAIM_IDENTIFICATION,
        system_text=_load_template("claims_system"),
        user_text=_fill(_load_template("claims_user"), sections=text),
        response_schema={
            "type": "array",
            "items": {"type": "object",
                      "required": ["claimant", "opinion_text"]},
        },
    )


def build_classification_prompt(
    entry: CorpusEntry, claims: list[RawClaim]
) -> PromptSpec:
    """Task-3 prompt: classify each identified claim into the three classes."""
    if not claims:
        raise ValueError("classification requires at least one claim")
    enumeration = "\n".join(
        f"{i + 1}. claimant: {c.claimant} | opinion: {c.opinion_text}"
        for i, c in enumerate(claims)
    )
    return PromptSpec(
        task=Task.CLAIM_CLASSIFICATION,
        system_text=_load_template("classification_system"),
        user_text=_fill(_load_template("classification_user"),
                        claims_enumeration=enumeration),
        response_schema={
            "type": "array",
            "items": {"type": "object",
                      "required": ["author", "class", "opinion", "source"]},
        },
    )


def request_hash(model_id: str, system_text: str, user_text: str) -> str:
    """Stable digest keying replay fixtures and recordings."""
    payload = json.dumps(
        {"model_id": model_id, "system": system_text, "user": user_text},
        sort_keys=True, ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class Provider(Protocol):
    model_id: str

    def complete(self, request: ProviderRequest) -> str: ...


def complete(provider: Provider, request: ProviderRequest) -> str:
    """Run one completion request against a provider handle."""
    return provider.complete(request)


class ReplayProvider:
    """Returns recorded responses from `<fixture_dir>/<request-hash>.txt`."""

    def __init__(self, fixture_dir: Path | str, model_id: str = "replay"):
        self.fixture_dir = Path(fixture_dir)
        self.model_id = model_id

    def complete(self, request: ProviderRequest) -> str:
        digest = request_hash(request.model_id, request.system_text,
                              request.user_text)
        path = self.fixture_dir / f"{digest}.txt"
        if not path.exists():
            raise ReplayMissError(digest)
        return path.read_text(encoding="utf-8")


class RecordingProvider:
    """Wraps another provider and writes its responses as replay fixtures."""

    def __init__(self, inner: Provider, fixture_dir: Path | str):
        self.inner = inner
        self.fixture_dir = Path(fixture_dir)
        self.model_id = inner.model_id

    def complete(self, request: ProviderRequest) -> str:
        text = self.inner.complete(request)
        digest = request_hash(request.model_id, request.system_text,
                              request.user_text)
        self.fixture_dir.mkdir(parents=True, exist_ok=True)
        (self.fixture_dir / f"{digest}.txt").write_text(text, encoding="utf-8")
        return text


class LiveProvider:
    """Chat-completion HTTP client with client-side rate limiting."""

    def __init__(self, base_url: str, api_key: str, model_id: str,
                 session=None, min_interval: float = 1.0):
        import requests

        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.model_id = model_id
        self.session = session or requests.Session()
        self.min_interval = min_interval
        self._lock = threading.Lock()
        self._last_call = 0.0

    def complete(self, request: ProviderRequest) -> str:
        with self._lock:
            wait = self._last_call + self.min_interval - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            self._last_call = time.monotonic()
        try:
            resp = self.session.post(
                f"{self.base_url}/chat/completions",
                headers={"Authorization": f"Bearer {self.api_key}"},
                json={
                    "model": request.model_id,
                    "messages": [
                        {"role": "system", "content": request.system_text},
                        {"role": "user", "content": request.user_text},
                    ],
                    "temperature": request.temperature,
                    "max_tokens": request.max_output_tokens,
                },
                timeout=120,
            )
        except Exception as exc:
            raise ProviderError(f"completion request failed: {exc}") from exc
        if resp.status_code == 401:
            raise ProviderError("authentication failed")
        if resp.status_code != 200:
            raise ProviderError(f"completion endpoint returned {resp.status_code}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise ProviderError(f"malformed completion payload: {exc}") from exc


_DESCRIPTION_RE = re.compile(
    r"--- DOCUMENT DESCRIPTION ---\n(.*?)\n--- END DESCRIPTION ---", re.DOTALL)
_SECTIONS_RE = re.compile(
    r"--- ASSESSMENT TEXT ---\n(.*?)\n--- END TEXT ---", re.DOTALL)
_ENUM_RE = re.compile(
    r"--- CLAIMS ---\n(.*?)\n--- END CLAIMS ---", re.DOTALL)
_ENUM_LINE_RE = re.compile(r"^\d+\. claimant: (.*?) \| opinion: (.*)$")

_CLAIM_SENTENCE_RE = re.compile(
    r"([A-Z][A-Za-z'. -]+?) (declared|defended|considered|judged|argued|"
    r"deemed|suspected|pronounced|proved|dismissed)\b[^.]*\.")
_SOURCE_RE = re.compile(r"\bin (?:his|her|their) ([A-Z][\w' ]+)")


class RuleBasedProvider:
    """Deterministic keyword/regex stand-in for a language model.

    Intended for the shipped fixture corpus and offline CI; it reads the
    text embedded in the prompt markers and answers with plain JSON.
    """

    model_id = "rule-based-v1"

    def complete(self, request: ProviderRequest) -> str:
        if "Task: metadata extraction." in request.system_text:
            return self._metadata(request.user_text)
        if "Task: claim identification." in request.system_text:
            return self._claims(request.user_text)
        if "Task: claim classification." in request.system_text:
            return self._classify(request.user_text)
        raise ProviderError("rule-based provider: unknown task prompt")

    def _metadata(self, user_text: str) -> str:
        m = _DESCRIPTION_RE.search(user_text)
        text = m.group(1) if m else user_text
        fields = dict.fromkeys(METADATA_FIELDS, NOT_MENTIONED)

        m = re.search(r"^The (.+?) is ", text)
        if m:
            fields["title"] = m.group(1)
        m = re.search(r"presents itself as an? ([a-z]+)", text)
        if m:
            fields["doc_type"] = m.group(1)
        m = re.search(
            r"allegedly [a-z]+(?: by [^,.]+?)?"
            r"(?: in| during)(?: the)? ([^,.]+?)(?:,|\.)", text)
        if m:
            fields["alleged_date"] = m.group(1).strip()
        m = re.search(r"(?:recorded|issued|written|drawn up) (?:in|at) "
                      r"([A-Z][A-Za-z ]*?)(?:,|\.| and)", text)
        if m:
            fields["alleged_place"] = m.group(1).strip()
        m = re.search(r"allegedly [a-z]+ by (?:Emperor |Empress |Duke |Pope "
                      r"|King |Queen |Bishop )?([A-Z][^,.]*?)(?: in| during|,|\.)",
                      text)
        if m:
            fields["alleged_author"] = m.group(1).strip()
        return json.dumps(fields, ensure_ascii=False)

    def _claims(self, user_text: str) -> str:
        m = _SECTIONS_RE.search(user_text)
        text = m.group(1) if m else user_text
        records = []
        for m in _CLAIM_SENTENCE_RE.finditer(text):
            records.append({
                "claimant": m.group(1).strip(),
                "opinion_text": m.group(0).strip(),
            })
        return json.dumps(records, ensure_ascii=False)

    def _classify(self, user_text: str) -> str:
        m = _ENUM_RE.search(user_text)
        block = m.group(1) if m else user_text
        records = []
        for line in block.splitlines():
            lm = _ENUM_LINE_RE.match(line.strip())
            if not lm:
                continue
            claimant, opinion = lm.group(1), lm.group(2)
            records.append({
                "author": claimant,
                "class": self._category(opinion),
                "opinion": opinion,
                "source": self._source(opinion),
            })
        return json.dumps(records, ensure_ascii=False)

    @staticmethod
    def _category(opinion: str) -> str:
        lowered = opinion.casefold()
        if any(k in lowered for k in ("forgery", "forged", "fabricat", "fake")):
            return "Forgery"
        if any(k in lowered for k in ("authentic", "genuine")):
            return "Authentic"
        return "Suspicious"

    @staticmethod
    def _source(opinion: str) -> str:
        m = _SOURCE_RE.search(opinion)
        return m.group(1).strip() if m else NOT_MENTIONED


_FENCE_RE = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL)


def _first_json_value(text: str):
    stripped = text.strip()
    fence = _FENCE_RE.search(stripped)
    if fence:
        stripped = fence.group(1).strip()
    starts = [i for i in (stripped.find("{"), stripped.find("[")) if i >= 0]
    if not starts:
        raise ParseError("no JSON value found in provider output")
    decoder = json.JSONDecoder()
    try:
        value, _ = decoder.raw_decode(stripped[min(starts):])
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON in provider output: {exc}") from exc
    return value


def _require_str(obj: dict, key: str) -> str:
    if key not in obj:
        raise ParseError(f"missing required key: {key}")
    value = obj[key]
    if not isinstance(value, str):
        raise ParseError(f"key {key} is not a string")
    return value


def repair_and_parse(text: str, task: Task):
    """Extract and validate the first JSON value in raw provider text.

    Strips code fences and surrounding prose; ignores unknown keys;
    raises ParseError naming any missing required key.
    """
    value = _first_json_value(text)

    if task is Task.METADATA:
        if not isinstance(value, dict):
            raise ParseError("metadata output must be a JSON object")
        fields = {}
        for key in METADATA_FIELDS:
            fields[key] = _require_str(value, key) or NOT_MENTIONED
        return RawMetadata(**fields)

    if not isinstance(value, list):
        raise ParseError(f"{task.value} output must be a JSON array")

    claims = []
    for item in value:
        if not isinstance(item, dict):
            raise ParseError("array items must be JSON objects")
        if task is Task.CLAIM_IDENTIFICATION:
            claims.append(RawClaim(
                claimant=_require_str(item, "claimant"),
                opinion_text=_require_str(item, "opinion_text"),
            ))
        else:
            source = _require_str(item, "source")
            claims.append(RawClaim(
                claimant=_require_str(item, "author"),
                opinion_text=_require_str(item, "opinion"),
                category_label=_require_str(item, "class"),
                source=None if source == NOT_MENTIONED else source,
            ))
    return claims


def serialize_task_output(value, task: Task) -> str:
    """Inverse of repair_and_parse for well-formed task outputs."""
    if task is Task.METADATA:
        return json.dumps({k: getattr(value, k) for k in METADATA_FIELDS},
                          ensure_ascii=False)
    if task is Task.CLAIM_IDENTIFICATION:
        return json.dumps(
            [{"claimant": c.claimant, "opinion_text": c.opinion_text}
             for c in value], ensure_ascii=False)
    return json.dumps(
        [{"author": c.claimant, "class": c.category_label,
          "opinion": c.opinion_text,
          "source": c.source if c.source is not None else NOT_MENTIONED}
         for c in value], ensure_ascii=False)


def _attempt_task(provider: Provider, prompt: PromptSpec, retries: int,
                  result: ExtractionResult):
    """Run one task with retry-on-parse-error; returns parsed value or None."""
    last_error = None
    for _ in range(retries + 1):
        request = ProviderRequest(
            model_id=provider.model_id,
            system_text=prompt.system_text,
            user_text=prompt.user_text,
        )
        try:
            text = provider.complete(request)
        except ReplayMissError:
            # A missing recording is a fixture problem, not a model
            # failure: retrying cannot help and the run must stop.
            raise
        except ProviderError as exc:
            result.transcript.append((request, f"<error: {exc}>"))
            last_error = exc
            continue
        result.transcript.append((request, text))
        try:
            return repair_and_parse(text, prompt.task)
        except ParseError as exc:
            last_error = exc
    result.errors.append(f"{prompt.task.value}: {last_error}")
    return None


def run_extraction(provider: Provider, entry: CorpusEntry,
                   retries: int = 2) -> ExtractionResult:
    """Execute Tasks 1-3 in order for one entry, recording the transcript.

    Each task is retried up to `retries` times on parse failure.
    Task-2 claims that Task 3 fails to classify keep category_label
    absent rather than being dropped; errors are annotated on the result
    instead of raised so partial data survives.
    """
    result = ExtractionResult(entry_id=entry.id, model_id=provider.model_id)

    metadata = _attempt_task(provider, build_metadata_prompt(entry), retries,
                             result)
    if metadata is not None:
        result.metadata = metadata

    claims = _attempt_task(provider, build_claims_prompt(entry), retries,
                           result)
    if claims:
        classified = _attempt_task(
            provider, build_classification_prompt(entry, claims), retries,
            result)
        if classified:
            by_claimant = {c.claimant: c for c in classified}
            for claim in claims:
                hit = by_claimant.get(claim.claimant)
                if hit is not None:
                    claim.category_label = hit.category_label
                    claim.source = hit.source
        result.claims = claims

    return result
