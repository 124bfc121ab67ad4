"""Reading raw newswire documents and the two annotation formats.

Everything is normalized to character offsets over ``SourceDocument.text``,
the exact content between the ``<TEXT>`` tags.  Sentence numbers follow the
FactBank convention: a headline, when the source has one, is sentence 0 and
body sentences are numbered after it.
"""

from __future__ import annotations

import dataclasses
import logging
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .errors import (
    MalformedAnnotation,
    OffsetOutOfBounds,
    SentenceSkipDefect,
    TokenResolutionFailure,
    UnknownSentence,
    UnrecoverableStructure,
)
from .vocab import FACT_VALUES

log = logging.getLogger(__name__)

CHALLENGES = {
    1: "Incompatible text offsets",
    2: "Metadata included in sentence number count",
    3: "Insufficient sentence splitting information",
    4: "Missing headline",
    5: "Inconsistent use of text tags",
    6: "Absence of text tags to structure the document",
    7: "Unknown journal / source",
    8: "No attribution relations for the document",
    9: "Incompatible sentence splitting at semicolons",
    10: "Annotations on the headline",
}

AUTO_FIXED = "auto-fixed"
MANUAL = "manual-input-required"
EXCLUDED = "excluded"

# PARC offsets count the opening tag as well
PARC_HEADER = "<TEXT>"

HEADLINE = "headline"
BODY = "text"


@dataclass(frozen=True)
class ChallengeDiagnostic:
    challenge_id: int
    description: str
    resolution: str = AUTO_FIXED

    def __post_init__(self):
        if self.challenge_id not in CHALLENGES:
            raise ValueError(f"unknown challenge id {self.challenge_id}")
        if self.resolution not in (AUTO_FIXED, MANUAL, EXCLUDED):
            raise ValueError(f"unknown resolution {self.resolution}")

    @property
    def title(self) -> str:
        return CHALLENGES[self.challenge_id]


class Sentence(NamedTuple):
    number: int
    begin: int
    end: int


Span = tuple[int, int]


@dataclass
class SourceDocument:
    doc_id: str
    text: str
    title: str | None = None
    dateline: str | None = None
    created: date | None = None
    source_name: str | None = None
    sentences: list[Sentence] = field(default_factory=list)
    headline_span: Span | None = None
    diagnostics: list[ChallengeDiagnostic] = field(default_factory=list)
    dialect: str = "wsj"
    line_split: bool = False

    def diagnose(self, challenge_id: int, description: str, resolution: str = AUTO_FIXED):
        self.diagnostics.append(ChallengeDiagnostic(challenge_id, description, resolution))

    def has_diagnostic(self, challenge_id: int) -> bool:
        return any(d.challenge_id == challenge_id for d in self.diagnostics)

    def channel_text(self, channel: str) -> str:
        if channel == HEADLINE:
            return self.title or ""
        return self.text

    def sentence(self, number: int) -> Sentence | None:
        for s in self.sentences:
            if s.number == number:
                return s
        return None

    def sentence_number_at(self, offset: int, channel: str = BODY) -> int:
        if channel == HEADLINE:
            return 0
        best = None
        for s in self.sentences:
            if s.begin <= offset:
                best = s
            if s.begin <= offset < s.end:
                return s.number
        if best is not None:
            return best.number
        return self.sentences[0].number if self.sentences else 0


@dataclass
class Override:
    """Manual corrections read from a ``<doc-id>.fix`` sidecar."""

    title: str | None = None
    source: str | None = None
    date: str | None = None
    first_sentence: int | None = None
    sentences: list[Span] = field(default_factory=list)


def parse_override(text: str) -> Override:
    ov = Override()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise ValueError(f"line {lineno}: expected 'key: value'")
        key, value = key.strip().lower(), value.strip()
        if key == "title":
            ov.title = value
        elif key == "source":
            ov.source = value
        elif key == "date":
            ov.date = value
        elif key == "first-sentence":
            ov.first_sentence = int(value)
        elif key == "sentence":
            b, e = value.split()
            ov.sentences.append((int(b), int(e)))
        else:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
    return ov


# ---------------------------------------------------------------------------
# raw documents

_META_TAGS = {
    "docno": ("DOCNO", "DOCID"),
    "headline": ("HL", "HEADLINE"),
    "date": ("DATELINE", "DATE_TIME", "DD", "DATE"),
    "source": ("SO", "SOURCE"),
}
_ANY_TAG = re.compile(r"</?[A-Za-z_][A-Za-z0-9_]*(?:\s[^>]*)?>")
_DATE_FORMATS = (
    "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d", "%m/%d/%y", "%m/%d/%Y", "%m/%d/%Y %H:%M:%S",
    "%m/%d/%y %H:%M:%S", "%y%m%d", "%Y%m%d",
)


def decode(raw: bytes) -> str:
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError:
        return raw.decode("latin-1")


def _element(s: str, names: Sequence[str]):
    for name in names:
        m = re.search(rf"<{name}(?:\s[^>]*)?>(.*?)</{name}\s*>", s, re.S | re.I)
        if m:
            return m
    return None


def parse_date(value: str | None) -> date | None:
    if not value:
        return None
    value = " ".join(value.split())
    for fmt in _DATE_FORMATS:
        try:
            return datetime.strptime(value, fmt).date()
        except ValueError:
            continue
    m = re.search(r"\b(\d{1,2}/\d{1,2}/\d{2,4})\b", value)
    if m and m.group(1) != value:
        return parse_date(m.group(1))
    return None


def parse_document(raw: bytes | str, dialect_hint: str | None = None, *, doc_id: str | None = None,
                   override: Override | None = None) -> SourceDocument:
    s = decode(raw) if isinstance(raw, bytes) else raw
    found = {key: _element(s, names) for key, names in _META_TAGS.items()}

    docno = found["docno"].group(1).strip() if found["docno"] else doc_id
    if not docno:
        raise UnrecoverableStructure(doc_id or "?", "no document id")

    if dialect_hint:
        dialect = dialect_hint.lower()
    elif re.search(r"<(HEADLINE|DATE_TIME)\b", s, re.I):
        dialect = "nyt"
    else:
        dialect = "wsj"

    diagnostics: list[ChallengeDiagnostic] = []
    text = _extract_text(s, docno, found, diagnostics)

    headline = None
    if found["headline"]:
        headline = re.sub(r"\s*\n\s*", " ", found["headline"].group(1)).strip() or None
    title = headline
    if headline is None:
        if override and override.title:
            title = override.title
            diagnostics.append(ChallengeDiagnostic(4, "no headline field; title supplied by override", MANUAL))
        else:
            diagnostics.append(ChallengeDiagnostic(4, "no headline field; title left empty"))

    dateline = " ".join(found["date"].group(1).split()) if found["date"] else None
    created = parse_date(override.date if override and override.date else dateline)

    source = " ".join(found["source"].group(1).split()) if found["source"] else None
    if source is None:
        if override and override.source:
            source = override.source
            diagnostics.append(ChallengeDiagnostic(7, "no source field; source supplied by override", MANUAL))
        else:
            diagnostics.append(ChallengeDiagnostic(7, "no source field; source left empty"))

    doc = SourceDocument(
        doc_id=docno,
        text=text,
        title=title,
        dateline=dateline,
        created=created,
        source_name=source,
        headline_span=(0, len(headline)) if headline else None,
        diagnostics=diagnostics,
        dialect=dialect,
    )
    doc.line_split = dialect == "wsj" or looks_line_split(text)
    return doc


def _extract_text(s: str, doc_id: str, found, diagnostics: list[ChallengeDiagnostic]) -> str:
    opens = list(re.finditer(r"<TEXT(?:\s[^>]*)?>", s, re.I))
    closes = list(re.finditer(r"</TEXT\s*>", s, re.I))
    doc_end = re.search(r"</DOC\s*>", s, re.I)
    end_limit = doc_end.start() if doc_end else len(s)

    if len(opens) == 1 and len(closes) == 1 and closes[0].start() >= opens[0].end():
        return s[opens[0].end() : closes[0].start()]

    if opens or closes:
        if opens and closes and closes[-1].start() >= opens[0].end():
            inner = s[opens[0].end() : closes[-1].start()]
            text = re.sub(r"</?TEXT(?:\s[^>]*)?>", "", inner, flags=re.I)
        elif opens:
            text = s[opens[0].end() : end_limit]
            text = text[: _first_tag(text)]
        else:
            start = _metadata_end(s, found)
            text = _strip_leading(s[start : closes[0].start()])
        diagnostics.append(ChallengeDiagnostic(5, "unbalanced or repeated <TEXT> tags"))
        if not text.strip():
            raise UnrecoverableStructure(doc_id, "text tags enclose no content")
        return text

    start = _metadata_end(s, found)
    rest = _strip_leading(s[start:end_limit])
    rest = rest[: _first_tag(rest)].rstrip()
    if not rest.strip():
        raise UnrecoverableStructure(doc_id, "no <TEXT> tags and no body after the metadata")
    diagnostics.append(ChallengeDiagnostic(6, "no <TEXT> tags; body taken after the metadata fields"))
    return rest


def _metadata_end(s: str, found) -> int:
    ends = [m.end() for m in found.values() if m]
    if not ends:
        m = re.search(r"<DOC(?:\s[^>]*)?>", s, re.I)
        return m.end() if m else 0
    return max(ends)


def _strip_leading(chunk: str) -> str:
    # drop standalone container tags (<BODY> etc.) and blank lines before the body
    while True:
        stripped = chunk.lstrip("\r\n")
        m = re.match(r"[ \t]*<[A-Za-z_][^>]*>[ \t]*(\r?\n|$)", stripped)
        if not m:
            return stripped
        chunk = stripped[m.end() :]


def _first_tag(chunk: str) -> int:
    m = _ANY_TAG.search(chunk)
    return m.start() if m else len(chunk)


# ---------------------------------------------------------------------------
# sentences

ABBREVIATIONS = frozenset({"Mr.", "Mrs.", "Dr.", "Inc.", "Corp.", "Co.", "U.S.", "vs."})
_BOUNDARY = re.compile(r"[.!?][\"')\]]*(?=\s+[A-Z0-9\"'(])")


def split_sentences(text: str, begin: int = 0, end: int | None = None) -> list[Span]:
    """Heuristic splitter: ``.``/``!``/``?`` + optional closers, whitespace, capital or digit."""
    end = len(text) if end is None else end
    spans = []
    start = begin
    for m in _BOUNDARY.finditer(text, begin, end):
        word_start = max(text.rfind(" ", start, m.start()), text.rfind("\n", start, m.start())) + 1
        word = text[word_start : m.start() + 1]
        if word in ABBREVIATIONS:
            continue
        spans.append((start, m.end()))
        start = m.end()
    spans.append((start, end))
    return [sp for sp in (_trim(text, b, e) for b, e in spans) if sp]


def _trim(text: str, b: int, e: int) -> Span | None:
    while b < e and text[b].isspace():
        b += 1
    while e > b and text[e - 1].isspace():
        e -= 1
    return (b, e) if b < e else None


def looks_line_split(text: str) -> bool:
    """True when every non-empty line is exactly one sentence."""
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        return False
    for ln in lines:
        if not re.search(r"[.!?][\"')\]]*\s*$", ln):
            return False
        if len(split_sentences(ln)) != 1:
            return False
    return True


def _line_spans(text: str) -> list[Span]:
    spans = []
    pos = 0
    for line in text.split("\n"):
        sp = _trim(text, pos, pos + len(line))
        if sp:
            spans.append(sp)
        pos += len(line) + 1
    return spans


def _split_semicolons(text: str, spans: list[Span]) -> tuple[list[Span], int]:
    out = []
    splits = 0
    for b, e in spans:
        start = b
        for m in re.finditer(r";(?=\s)", text[b:e]):
            piece = _trim(text, start, b + m.end())
            rest = _trim(text, b + m.end(), e)
            if piece and rest:
                out.append(piece)
                start = rest[0]
                splits += 1
        piece = _trim(text, start, e)
        if piece:
            out.append(piece)
    return out, splits


def build_sentence_index(doc: SourceDocument, line_split_available: bool | None = None, *,
                         split_on_semicolon: bool = True, override: Override | None = None) -> SourceDocument:
    """Return a copy of ``doc`` with ``sentences`` populated.

    ``split_on_semicolon`` selects FactBank numbering (True) or PARC
    numbering (False).
    """
    text = doc.text
    diagnostics = list(doc.diagnostics)
    available = doc.line_split if line_split_available is None else line_split_available

    if override and override.sentences:
        spans = sorted(override.sentences)
        for b, e in spans:
            if not 0 <= b < e <= len(text):
                raise ValueError(f"{doc.doc_id}: override sentence ({b}, {e}) outside the text")
        if not available:
            diagnostics.append(ChallengeDiagnostic(3, "sentence boundaries taken from override", MANUAL))
    elif available:
        spans = _line_spans(text)
    else:
        spans = split_sentences(text)
        if spans:
            diagnostics.append(ChallengeDiagnostic(3, "no line-level sentence splits; heuristic splitter used"))

    if split_on_semicolon:
        spans, n = _split_semicolons(text, spans)
        if n:
            diagnostics.append(ChallengeDiagnostic(9, f"{n} sentence(s) split at semicolons"))

    if override and override.first_sentence is not None:
        first = override.first_sentence
    else:
        first = 1 if doc.headline_span else 0
    sentences = [Sentence(first + i, b, e) for i, (b, e) in enumerate(spans)]
    return dataclasses.replace(doc, sentences=sentences, diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# PARC attribution XML

@dataclass
class AttributionRelation:
    relation_id: str
    source: list[Span] = field(default_factory=list)
    cue: list[Span] = field(default_factory=list)
    content: list[Span] = field(default_factory=list)

    def spans(self, role: str) -> list[Span]:
        return getattr(self, role)

    def all_spans(self) -> list[Span]:
        return self.source + self.cue + self.content


@dataclass(frozen=True)
class ParcToken:
    begin: int
    end: int
    text: str
    lemma: str | None = None
    pos: str | None = None


class _Rebaser:
    def __init__(self, text: str, header: str = PARC_HEADER):
        self.text = text
        self.header_len = len(header.encode("latin-1"))
        try:
            text.encode("latin-1")
            self._map = None
        except UnicodeEncodeError:
            log.warning("text contains characters outside Latin-1; PARC byte offsets read as UTF-8")
            self._map = {}
            pos = 0
            for i, ch in enumerate(text):
                self._map[pos] = i
                pos += len(ch.encode("utf-8"))
            self._map[pos] = len(text)

    def char(self, byte_offset: int) -> int | None:
        rel = byte_offset - self.header_len
        if self._map is None:
            return rel if 0 <= rel <= len(self.text) else None
        return self._map.get(rel)


def parse_parc(xml_bytes: bytes | str, doc: SourceDocument) -> tuple[list[AttributionRelation], list[ParcToken]]:
    try:
        root = ET.fromstring(xml_bytes)
    except ET.ParseError as exc:
        raise MalformedAnnotation(f"{doc.doc_id}: {exc}") from None
    rebase = _Rebaser(doc.text)
    relations: dict[str, AttributionRelation] = {}
    tokens = []
    for word in root.iter("WORD"):
        count = word.get("ByteCount")
        if not count:
            raise MalformedAnnotation(f"{doc.doc_id}: WORD without ByteCount")
        try:
            b_byte, e_byte = (int(x) for x in count.split(","))
        except ValueError:
            raise MalformedAnnotation(f"{doc.doc_id}: bad ByteCount {count!r}") from None
        rel_ids = [a.get("id") for a in word.iter("attribution")]
        b, e = rebase.char(b_byte), rebase.char(e_byte)
        if b is None or e is None or b >= e:
            raise OffsetOutOfBounds(rel_ids[0] if rel_ids else f"{doc.doc_id}:token@{count}")
        tokens.append(ParcToken(b, e, word.get("text", doc.text[b:e]), word.get("lemma"), word.get("pos")))
        for attr in word.iter("attribution"):
            rid = attr.get("id")
            if not rid:
                raise MalformedAnnotation(f"{doc.doc_id}: attribution without id")
            rel = relations.setdefault(rid, AttributionRelation(rid))
            for role_el in attr.iter("attributionRole"):
                role = (role_el.get("roleValue") or "").lower()
                if role not in ("source", "cue", "content"):
                    raise MalformedAnnotation(f"{doc.doc_id}: unknown attribution role {role!r} in {rid}")
                spans = rel.spans(role)
                if (b, e) not in spans:
                    spans.append((b, e))
    for rel in relations.values():
        if not rel.all_spans():
            raise MalformedAnnotation(f"{doc.doc_id}: relation {rel.relation_id} has no spans")
        for sp in (rel.source, rel.cue, rel.content):
            sp.sort()
    if not relations:
        doc.diagnose(8, "PARC file contains no attribution relations")
    return list(relations.values()), tokens


def parse_parc_annotations(xml_bytes: bytes | str, doc: SourceDocument) -> list[AttributionRelation]:
    return parse_parc(xml_bytes, doc)[0]


# ---------------------------------------------------------------------------
# FactBank tables

@dataclass(frozen=True)
class EventRecord:
    event_id: str
    sentence_number: int
    token_index: int
    token_string: str
    span: Span
    channel: str = BODY


@dataclass(frozen=True)
class FactualityRecord:
    event_id: str
    relative_source: str
    value: str


_TOKEN_RE = re.compile(
    r"(?:[A-Za-z]\.){2,}"          # U.S.
    r"|\d+(?:[.,:]\d+)*"
    r"|[A-Za-z]+(?=n't\b)|n't"
    r"|'\w+"
    r"|\w+(?:-\w+)*"
    r"|[^\w\s]"
)


def tokenize(text: str, begin: int = 0, end: int | None = None) -> list[Span]:
    end = len(text) if end is None else end
    return [m.span() for m in _TOKEN_RE.finditer(text, begin, end)]


def _field(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value[0] == value[-1] == "'":
        value = value[1:-1]
    return value


def split_row(line: str) -> list[str]:
    sep = "|||" if "|||" in line else "\t"
    return [_field(x) for x in line.rstrip("\r\n").split(sep)]


def read_table(source: str | Path | Iterable[str]) -> list[list[str]]:
    if isinstance(source, (str, Path)):
        lines = Path(source).read_text(encoding="utf-8").splitlines()
    else:
        lines = list(source)
    rows = []
    for line in lines:
        if isinstance(line, (list, tuple)):
            rows.append([_field(x) for x in line])
        elif line.strip() and not line.lstrip().startswith("#"):
            rows.append(split_row(line))
    return rows


def table_doc_id(name: str) -> str:
    return re.sub(r"\.(tml|xml|txt|sgm)$", "", name.strip())


def _norm_ws(s: str) -> str:
    return " ".join(s.split())


def _ends_with_quote(doc: SourceDocument, s: Sentence) -> bool:
    tail = doc.text[s.begin : s.end].rstrip()
    return tail.endswith('"') or tail.endswith("''")


def parse_factbank_tables(event_rows, factuality_rows, doc: SourceDocument
                          ) -> tuple[list[EventRecord], list[FactualityRecord]]:
    events: list[EventRecord] = []
    claimed: set[tuple[str, Span]] = set()
    numbers = [s.number for s in doc.sentences]
    last = max(numbers) if numbers else -1
    headline_used = False

    for row in read_table(event_rows):
        if table_doc_id(row[0]) != doc.doc_id:
            continue
        if len(row) < 5:
            raise MalformedAnnotation(f"{doc.doc_id}: event row needs 5 fields, got {row}")
        _, sent_s, tok_s, eid, token = row[:5]
        try:
            sent, tok = int(sent_s), int(tok_s)
        except ValueError:
            raise MalformedAnnotation(f"{doc.doc_id}: non-numeric coordinates in {row}") from None

        if doc.headline_span and sent == 0:
            channel, region = HEADLINE, (0, len(doc.title or ""))
            headline_used = True
        else:
            channel = BODY
            s = doc.sentence(sent)
            if s is None:
                quoted = [x.number for x in doc.sentences if x.number < sent and _ends_with_quote(doc, x)]
                if sent > last and quoted:
                    raise SentenceSkipDefect(eid, f"sentence {sent} past the last sentence {last}; "
                                                  f"sentence {quoted[0]} ends with a double quote")
                raise UnknownSentence(eid, f"sentence {sent} not in index")
            region = (s.begin, s.end)

        span = _resolve_token(doc, channel, region, tok, token, eid, claimed, sent)
        claimed.add((channel, span))
        events.append(EventRecord(eid, sent, tok, token, span, channel))

    if headline_used:
        doc.diagnose(10, "event annotations on the headline")

    known = {e.event_id for e in events}
    facts = []
    for row in read_table(factuality_rows):
        if table_doc_id(row[0]) != doc.doc_id:
            continue
        if len(row) < 5:
            raise MalformedAnnotation(f"{doc.doc_id}: factuality row needs 5 fields, got {row}")
        _, _, eid, rel_source, value = row[:5]
        if value not in FACT_VALUES:
            raise MalformedAnnotation(f"{doc.doc_id}: unknown factuality value {value!r} for {eid}")
        if eid not in known:
            raise MalformedAnnotation(f"{doc.doc_id}: factuality row for unknown event {eid}")
        facts.append(FactualityRecord(eid, rel_source, value))
    return events, facts


def _resolve_token(doc, channel, region, tok, token, eid, claimed, sent) -> Span:
    text = doc.channel_text(channel)
    want = _norm_ws(token)
    toks = tokenize(text, *region)
    if 0 <= tok < len(toks):
        b, e = toks[tok]
        if _norm_ws(text[b:e]) == want:
            return (b, e)

    if channel == BODY:
        prev = doc.sentence(sent - 1)
        earlier_quote = any(_ends_with_quote(doc, x) for x in doc.sentences if x.number < sent)
        if prev is not None and earlier_quote:
            ptoks = tokenize(text, prev.begin, prev.end)
            if 0 <= tok < len(ptoks) and _norm_ws(text[slice(*ptoks[tok])]) == want:
                raise SentenceSkipDefect(eid, f"token {token!r} found in sentence {sent - 1}, not {sent}")

    b, e = region
    pos = text.find(token, b, e)
    while pos != -1:
        span = (pos, pos + len(token))
        if (channel, span) not in claimed:
            return span
        pos = text.find(token, pos + 1, e)
    raise TokenResolutionFailure(eid, f"{token!r} not in sentence {sent}")
