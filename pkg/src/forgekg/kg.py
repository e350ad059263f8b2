"""RDF named-graph claim store with a deterministic TriG serializer/parser.

Every authenticity claim lives in its own named graph: one document
claim per entry (the alleged metadata) and one assessment graph per
scholar's opinion. No blank nodes are used anywhere so serialization is
byte-deterministic and round-trip equality is plain set equality.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Optional, Union

from .normalize import AuthenticityCategory, NormalizedClaim, NormalizedMetadata
from .reconcile import MatchStatus, ReconciledEntity

VOCAB = "https://w3id.org/forgekg/vocab#"
BASE = "https://w3id.org/forgekg/"
RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
XSD_NS = "http://www.w3.org/2001/XMLSchema#"
WIKIDATA_ENTITY_NS = "http://www.wikidata.org/entity/"
VIAF_NS = "https://viaf.org/viaf/"
GEONAMES_NS = "https://sws.geonames.org/"

_IRI_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.-]*:[^\s<>\"{}|^`\\]*$")
_ENTRY_ID_RE = re.compile(r"^[A-Za-z0-9_-]+$")


class KgError(ValueError):
    pass


class TrigSyntaxError(KgError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} at line {line}, column {col}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Iri:
    value: str

    def __post_init__(self):
        if not _IRI_RE.match(self.value):
            raise KgError(f"not a valid absolute IRI: {self.value!r}")


@dataclass(frozen=True)
class Literal:
    lexical: str
    datatype: Optional[Iri] = None  # None means plain xsd:string
    lang: Optional[str] = None


Term = Union[Iri, Literal]


@dataclass(frozen=True)
class Quad:
    subject: Iri
    predicate: Iri
    object: Term
    graph: Iri


class Dataset:
    """Duplicate-free quad set preserving insertion order."""

    def __init__(self, quads: Optional[list[Quad]] = None):
        self._seen: set[Quad] = set()
        self._order: list[Quad] = []
        for quad in quads or []:
            self.add(quad)

    def add(self, quad: Quad) -> None:
        if quad not in self._seen:
            self._seen.add(quad)
            self._order.append(quad)

    def extend(self, quads) -> None:
        for quad in quads:
            self.add(quad)

    def __contains__(self, quad: Quad) -> bool:
        return quad in self._seen

    def __len__(self) -> int:
        return len(self._order)

    def __iter__(self) -> Iterator[Quad]:
        return iter(self._order)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return self._seen == other._seen

    def graphs(self) -> list[Iri]:
        """Graph IRIs in first-insertion order."""
        out, seen = [], set()
        for quad in self._order:
            if quad.graph not in seen:
                seen.add(quad.graph)
                out.append(quad.graph)
        return out


class Vocab:
    """Minimal vocabulary for authenticity-assessment claims."""

    # classes
    DOCUMENT = Iri(VOCAB + "Document")
    CLAIM = Iri(VOCAB + "Claim")
    DOCUMENT_CLAIM = Iri(VOCAB + "DocumentClaim")
    ASSESSMENT_CLAIM = Iri(VOCAB + "AssessmentClaim")
    PERSON = Iri(VOCAB + "Person")
    PLACE = Iri(VOCAB + "Place")
    # properties
    ASSERTS_AUTHENTICITY = Iri(VOCAB + "assertsAuthenticity")
    ALLEGED_AUTHOR = Iri(VOCAB + "allegedAuthor")
    ALLEGED_DATE_START = Iri(VOCAB + "allegedDate_start")
    ALLEGED_DATE_END = Iri(VOCAB + "allegedDate_end")
    ALLEGED_PLACE = Iri(VOCAB + "allegedPlace")
    DOCUMENT_TYPE = Iri(VOCAB + "documentType")
    TITLE = Iri(VOCAB + "title")
    ABOUT_DOCUMENT = Iri(VOCAB + "aboutDocument")
    CLAIMED_BY = Iri(VOCAB + "claimedBy")
    HAS_SOURCE = Iri(VOCAB + "hasSource")
    OBSERVES_FEATURE = Iri(VOCAB + "observesFeature")
    CITES_EVIDENCE = Iri(VOCAB + "citesEvidence")
    OPINION_TEXT = Iri(VOCAB + "opinionText")
    SAME_AS_WIKIDATA = Iri(VOCAB + "sameAsWikidata")
    SAME_AS_VIAF = Iri(VOCAB + "sameAsVIAF")
    SAME_AS_GEONAMES = Iri(VOCAB + "sameAsGeoNames")


RDF_TYPE = Iri(RDF_NS + "type")
XSD_INTEGER = Iri(XSD_NS + "integer")

CATEGORY_IRIS = {
    AuthenticityCategory.AUTHENTIC: Iri(VOCAB + "authentic"),
    AuthenticityCategory.FORGERY: Iri(VOCAB + "forgery"),
    AuthenticityCategory.SUSPICIOUS: Iri(VOCAB + "suspicious"),
}
CATEGORY_FROM_IRI = {iri: cat for cat, iri in CATEGORY_IRIS.items()}


def slugify(label: str) -> str:
    slug = re.sub(r"[^A-Za-z0-9]+", "-", label).strip("-").lower()
    return slug or "unnamed"


def mint_iris(entry_id: str,
              claim_index: Optional[int] = None) -> tuple[Iri, Iri]:
    """(document IRI, claim-graph IRI) for one entry or one of its claims."""
    if not _ENTRY_ID_RE.match(entry_id):
        raise KgError(f"entry id contains invalid characters: {entry_id!r}")
    if claim_index is not None and claim_index < 0:
        raise KgError("claim index must be non-negative")
    document = Iri(f"{BASE}doc/{entry_id}")
    suffix = "document" if claim_index is None else str(claim_index)
    return document, Iri(f"{BASE}claim/{entry_id}/{suffix}")


def claimant_iri(claimant: ReconciledEntity) -> Iri:
    if claimant.wikidata_id:
        return Iri(WIKIDATA_ENTITY_NS + claimant.wikidata_id)
    return Iri(f"{BASE}person/{slugify(claimant.raw_label)}")


def build_document_graph(
    entry_id: str,
    metadata: NormalizedMetadata,
    author_ref: Optional[Iri] = None,
) -> list[Quad]:
    """Quads of the document claim: the metadata as alleged by the document.

    `author_ref` substitutes a reconciled IRI for the raw author string
    when the alleged author was resolved.
    """
    document, graph = mint_iris(entry_id)
    quads = [Quad(document, RDF_TYPE, Vocab.DOCUMENT, graph)]
    if metadata.title is not None:
        quads.append(Quad(document, Vocab.TITLE, Literal(metadata.title), graph))
    if metadata.doc_type is not None:
        quads.append(Quad(document, Vocab.DOCUMENT_TYPE,
                          Literal(metadata.doc_type), graph))
    if metadata.alleged_date is not None:
        quads.append(Quad(
            document, Vocab.ALLEGED_DATE_START,
            Literal(str(metadata.alleged_date.start_year), XSD_INTEGER),
            graph))
        quads.append(Quad(
            document, Vocab.ALLEGED_DATE_END,
            Literal(str(metadata.alleged_date.end_year), XSD_INTEGER),
            graph))
    if metadata.alleged_place_raw is not None:
        quads.append(Quad(document, Vocab.ALLEGED_PLACE,
                          Literal(metadata.alleged_place_raw), graph))
    if metadata.alleged_author_raw is not None:
        author: Term = author_ref if author_ref is not None \
            else Literal(metadata.alleged_author_raw)
        quads.append(Quad(document, Vocab.ALLEGED_AUTHOR, author, graph))
    return quads


def build_assessment_graph(
    entry_id: str,
    claim_index: int,
    claim: NormalizedClaim,
    claimant: ReconciledEntity,
) -> list[Quad]:
    """Quads of one scholar's assessment claim in its own named graph."""
    document, graph = mint_iris(entry_id, claim_index)
    claim_iri = graph  # the claim node is named after its graph
    who = claimant_iri(claimant)

    quads = [
        Quad(claim_iri, RDF_TYPE, Vocab.ASSESSMENT_CLAIM, graph),
        Quad(claim_iri, Vocab.ABOUT_DOCUMENT, document, graph),
        Quad(claim_iri, Vocab.CLAIMED_BY, who, graph),
        Quad(claim_iri, Vocab.ASSERTS_AUTHENTICITY,
             CATEGORY_IRIS[claim.category], graph),
        Quad(claim_iri, Vocab.OPINION_TEXT, Literal(claim.opinion_text),
             graph),
        Quad(who, RDF_TYPE, Vocab.PERSON, graph),
    ]
    if claim.source_raw is not None:
        quads.append(Quad(claim_iri, Vocab.HAS_SOURCE,
                          Literal(claim.source_raw), graph))
    for feature in claim.features_observed:
        quads.append(Quad(claim_iri, Vocab.OBSERVES_FEATURE,
                          Literal(feature), graph))
    for evidence in claim.evidence:
        quads.append(Quad(claim_iri, Vocab.CITES_EVIDENCE,
                          Literal(evidence), graph))
    if claimant.status is not MatchStatus.UNMATCHED:
        if claimant.wikidata_id:
            quads.append(Quad(who, Vocab.SAME_AS_WIKIDATA,
                              Iri(WIKIDATA_ENTITY_NS + claimant.wikidata_id),
                              graph))
        if claimant.viaf_id:
            quads.append(Quad(who, Vocab.SAME_AS_VIAF,
                              Iri(VIAF_NS + claimant.viaf_id), graph))
        if claimant.geonames_id:
            quads.append(Quad(who, Vocab.SAME_AS_GEONAMES,
                              Iri(GEONAMES_NS + claimant.geonames_id), graph))
    return quads


PREFIXES = {
    "fkg": VOCAB,
    "rdf": RDF_NS,
    "xsd": XSD_NS,
}

_LOCAL_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_-]*$")


def _render_iri(iri: Iri) -> str:
    for prefix, ns in PREFIXES.items():
        if iri.value.startswith(ns):
            local = iri.value[len(ns):]
            if _LOCAL_RE.match(local):
                return f"{prefix}:{local}"
    return f"<{iri.value}>"


_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def _render_literal(lit: Literal) -> str:
    body = "".join(_ESCAPES.get(ch, ch) for ch in lit.lexical)
    rendered = f'"{body}"'
    if lit.lang is not None:
        return f"{rendered}@{lit.lang}"
    if lit.datatype is not None:
        return f"{rendered}^^{_render_iri(lit.datatype)}"
    return rendered


def _render_term(term: Term) -> str:
    if isinstance(term, Iri):
        return _render_iri(term)
    return _render_literal(term)


def serialize_trig(dataset: Dataset) -> str:
    """Deterministic TriG: prefixes, then graphs in first-insertion order."""
    lines = [f"@prefix {p}: <{ns}> ." for p, ns in PREFIXES.items()]
    by_graph: dict[Iri, list[Quad]] = {}
    for quad in dataset:
        by_graph.setdefault(quad.graph, []).append(quad)
    for graph in dataset.graphs():
        lines.append("")
        lines.append(f"{_render_iri(graph)} {{")
        for quad in by_graph[graph]:
            lines.append(f"    {_render_iri(quad.subject)} "
                         f"{_render_iri(quad.predicate)} "
                         f"{_render_term(quad.object)} .")
        lines.append("}")
    return "\n".join(lines) + "\n"


def serialize_nquads(dataset: Dataset) -> str:
    """One quad per line, full IRIs only."""
    lines = []
    for quad in dataset:
        obj = (f"<{quad.object.value}>" if isinstance(quad.object, Iri)
               else _render_literal_nq(quad.object))
        lines.append(f"<{quad.subject.value}> <{quad.predicate.value}> "
                     f"{obj} <{quad.graph.value}> .")
    return "\n".join(lines) + ("\n" if lines else "")


def _render_literal_nq(lit: Literal) -> str:
    body = "".join(_ESCAPES.get(ch, ch) for ch in lit.lexical)
    rendered = f'"{body}"'
    if lit.lang is not None:
        return f"{rendered}@{lit.lang}"
    if lit.datatype is not None:
        return f"{rendered}^^<{lit.datatype.value}>"
    return rendered


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<prefix_kw>@prefix\b)
  | (?P<iriref><[^\s<>"{}|^`\\]*>)
  | (?P<string>"(?:\\.|[^"\\])*")
  | (?P<dtype>\^\^)
  | (?P<langtag>@[A-Za-z][A-Za-z0-9-]*)
  | (?P<pname>[A-Za-z][A-Za-z0-9_-]*?:[A-Za-z_][A-Za-z0-9_-]*|[A-Za-z][A-Za-z0-9_-]*:)
  | (?P<open>\{)
  | (?P<close>\})
  | (?P<dot>\.)
""", re.VERBOSE)

_UNESCAPES = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t"}


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise TrigSyntaxError(f"unexpected character {text[pos]!r}",
                                  line, col)
        kind = m.lastgroup
        value = m.group()
        if kind == "newline":
            line += 1
            col = 1
        else:
            if kind not in ("ws", "comment"):
                tokens.append(_Token(kind, value, line, col))
            col += len(value)
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0
        self.prefixes: dict[str, str] = {}

    def _peek(self) -> Optional[_Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _next(self, expected: Optional[str] = None) -> _Token:
        token = self._peek()
        if token is None:
            last = self.tokens[-1] if self.tokens else _Token("", "", 1, 1)
            raise TrigSyntaxError("unexpected end of input", last.line,
                                  last.col)
        if expected is not None and token.kind != expected:
            raise TrigSyntaxError(
                f"expected {expected}, found {token.text!r}",
                token.line, token.col)
        self.pos += 1
        return token

    def _resolve_pname(self, token: _Token) -> Iri:
        prefix, _, local = token.text.partition(":")
        if prefix not in self.prefixes:
            raise TrigSyntaxError(f"undeclared prefix: {prefix!r}",
                                  token.line, token.col)
        return Iri(self.prefixes[prefix] + local)

    def _parse_iri(self) -> Iri:
        token = self._peek()
        if token is None:
            raise TrigSyntaxError("unexpected end of input", 1, 1)
        if token.kind == "iriref":
            self._next()
            return Iri(token.text[1:-1])
        if token.kind == "pname":
            self._next()
            return self._resolve_pname(token)
        raise TrigSyntaxError(f"expected IRI, found {token.text!r}",
                              token.line, token.col)

    def _parse_term(self) -> Term:
        token = self._peek()
        if token is not None and token.kind == "string":
            self._next()
            lexical = _unescape(token.text[1:-1])
            nxt = self._peek()
            if nxt is not None and nxt.kind == "dtype":
                self._next()
                datatype = self._parse_iri()
                if datatype.value == XSD_NS + "string":
                    datatype = None
                return Literal(lexical, datatype)
            if nxt is not None and nxt.kind == "langtag":
                self._next()
                return Literal(lexical, lang=nxt.text[1:])
            return Literal(lexical)
        return self._parse_iri()

    def parse(self) -> Dataset:
        dataset = Dataset()
        while self._peek() is not None:
            token = self._peek()
            if token.kind == "prefix_kw":
                self._next()
                name = self._next("pname")
                if not name.text.endswith(":") or name.text.count(":") != 1:
                    raise TrigSyntaxError(
                        f"malformed prefix name {name.text!r}",
                        name.line, name.col)
                iri = self._next("iriref")
                self._next("dot")
                self.prefixes[name.text[:-1]] = iri.text[1:-1]
                continue
            graph = self._parse_iri()
            self._next("open")
            while True:
                nxt = self._peek()
                if nxt is None:
                    raise TrigSyntaxError("unclosed graph block",
                                          token.line, token.col)
                if nxt.kind == "close":
                    self._next()
                    break
                subject = self._parse_iri()
                predicate = self._parse_iri()
                obj = self._parse_term()
                self._next("dot")
                dataset.add(Quad(subject, predicate, obj, graph))
        return dataset


def _unescape(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            out.append(_UNESCAPES.get(text[i + 1], text[i + 1]))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def parse_trig(text: str) -> Dataset:
    """Parse the TriG subset this serializer emits.

    Supported: @prefix declarations, named-graph blocks, IRIs and
    prefixed names, plain/typed/language-tagged literals. Anything else
    is a syntax error carrying line and column.
    """
    return _Parser(_tokenize(text)).parse()


def match_quads(
    dataset: Dataset,
    subject: Optional[Iri] = None,
    predicate: Optional[Iri] = None,
    obj: Optional[Term] = None,
    graph: Optional[Iri] = None,
) -> list[Quad]:
    """All quads matching every bound position, in insertion order."""
    return [
        q for q in dataset
        if (subject is None or q.subject == subject)
        and (predicate is None or q.predicate == predicate)
        and (obj is None or q.object == obj)
        and (graph is None or q.graph == graph)
    ]
