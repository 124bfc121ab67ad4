"""Building the nanopublication network from parsed documents and annotations.

Word IRIs are ``<text-nanopub-uri>#offset_<begin>-<end>`` (``#hl-offset_``
for headline words), so two annotation corpora that mark the same span of the
same text end up pointing at the same word.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DanglingWordReference, ManifestError, SpanOutOfBounds
from .ingest import BODY, HEADLINE, AttributionRelation, EventRecord, FactualityRecord, SourceDocument
from .nanopub import IndexNanopub, Nanopub, NanopubBuilder, PubInfo, build_index, is_index
from .rdf import IRI, Literal, quad_key
from .vocab import (ATTRIBUTION_ROLES, DCAT, DCT, FOAF, NIF, OA, OLIA, PROV, PVCP, PVCPF, PVCPP, RDF, RDFS,
                    SOURCE_CREATORS)

log = logging.getLogger(__name__)

TEXT_CORPUS = "text-corpus"
ANNOTATION_CORPUS = "annotation-corpus"


@dataclass(frozen=True)
class CorpusManifest:
    kind: str
    name: str
    title: str
    license: str
    base_namespace: str
    created: str
    see_also: str | None = None
    creator: str | None = None
    attributed_to: str | None = None
    layer: str | None = None
    protected_default: bool = False

    def __post_init__(self):
        if self.kind not in (TEXT_CORPUS, ANNOTATION_CORPUS):
            raise ManifestError(f"unknown corpus kind {self.kind!r}")
        if not self.base_namespace.endswith("/"):
            raise ManifestError("base-namespace must end with '/'")
        if self.kind == ANNOTATION_CORPUS and self.layer not in ("parc", "factbank"):
            raise ManifestError(f"annotation corpus {self.name} needs layer: parc or factbank")

    @property
    def corpus_iri(self) -> IRI:
        return IRI(f"{self.base_namespace}corpus/{self.name}")

    @property
    def pubinfo(self) -> PubInfo:
        return PubInfo(self.created, self.creator, self.license)


_MANIFEST_KEYS = {
    "kind": "kind", "name": "name", "title": "title", "license": "license",
    "base-namespace": "base_namespace", "created": "created", "see-also": "see_also",
    "creator": "creator", "attributed-to": "attributed_to", "layer": "layer",
    "protected": "protected_default",
}


def parse_manifest(text: str) -> CorpusManifest:
    """Parse the ``key: value`` manifest format (``#`` starts a comment)."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition(":")
        key = key.strip().lower()
        if not sep or key not in _MANIFEST_KEYS:
            raise ManifestError(f"line {lineno}: unrecognized manifest entry {line!r}")
        values[_MANIFEST_KEYS[key]] = value.strip()
    if "protected_default" in values:
        flag = values["protected_default"].lower()
        if flag not in ("true", "false", "yes", "no"):
            raise ManifestError(f"protected must be true or false, got {flag!r}")
        values["protected_default"] = flag in ("true", "yes")
    missing = [k for k in ("kind", "name", "title", "license", "base_namespace", "created") if not values.get(k)]
    if missing:
        raise ManifestError("manifest lacks " + ", ".join(missing))
    try:
        return CorpusManifest(**values)
    except ValueError as exc:
        raise ManifestError(str(exc)) from None


def load_manifest(path: str | Path) -> CorpusManifest:
    return parse_manifest(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# text layer

def source_creator(source_name: str | None) -> str | None:
    if not source_name:
        return None
    upper = source_name.upper()
    for key in sorted(SOURCE_CREATORS, key=len, reverse=True):
        if key in upper:
            return SOURCE_CREATORS[key]
    return None


def _finish(b: NanopubBuilder, manifest: CorpusManifest, protected: bool) -> Nanopub:
    b.add_pubinfo(manifest.pubinfo)
    b.protect(protected)
    return b.finalize()


def text_iri(text_np_uri: str, channel: str = BODY) -> IRI:
    return IRI(f"{text_np_uri}#{'headline' if channel == HEADLINE else 'text'}")


def generate_text_layer(doc: SourceDocument, manifest: CorpusManifest) -> tuple[Nanopub, Nanopub]:
    """Document nanopub and text nanopub for one source document."""
    creator = source_creator(doc.source_name)

    tb = NanopubBuilder(manifest.base_namespace)
    text = tb.local("text")
    tb.assertion(text, RDF.type, NIF.OffsetBasedString)
    tb.assertion(text, RDF.type, DCT.Text)
    tb.assertion(text, RDF.value, Literal(doc.text))
    tb.assertion(text, DCT.isPartOf, manifest.corpus_iri)
    if doc.headline_span and doc.title:
        hl = tb.local("headline")
        tb.assertion(hl, RDF.type, NIF.OffsetBasedString)
        tb.assertion(hl, RDF.value, Literal(doc.title))
        tb.assertion(text, PVCP.hasHeadline, hl)
    _source_provenance(tb, manifest, creator)
    text_np = _finish(tb, manifest, manifest.protected_default)

    db = NanopubBuilder(manifest.base_namespace)
    d = db.local("document")
    db.assertion(d, RDF.type, FOAF.Document)
    db.assertion(d, DCT.identifier, Literal(doc.doc_id))
    if doc.title is not None:
        db.assertion(d, DCT.title, Literal(doc.title))
    if doc.created is not None:
        db.assertion(d, DCT.created, Literal.datetime(f"{doc.created.isoformat()}T00:00:00"))
    if creator:
        db.assertion(d, DCT.creator, IRI(creator))
    elif doc.source_name:
        db.assertion(d, DCT.source, Literal(doc.source_name))
    db.assertion(d, PVCP.hasText, text_iri(text_np.uri))
    db.assertion(d, DCT.isPartOf, manifest.corpus_iri)
    _source_provenance(db, manifest, creator)
    doc_np = _finish(db, manifest, manifest.protected_default)
    return doc_np, text_np


def _source_provenance(b: NanopubBuilder, manifest: CorpusManifest, creator: str | None):
    b.provenance(b.assertion_graph, PROV.hadPrimarySource, manifest.corpus_iri)
    if creator:
        b.provenance(b.assertion_graph, PROV.wasAttributedTo, IRI(creator))


# ---------------------------------------------------------------------------
# words

@dataclass(frozen=True)
class WordNode:
    word_iri: str
    begin: int
    end: int
    anchor: str
    sentence_number: int
    text_np_uri: str
    lemma: str | None = None
    pos: str | None = None
    channel: str = BODY


def word_iri(text_np_uri: str, begin: int, end: int, channel: str = BODY) -> str:
    frag = "hl-offset" if channel == HEADLINE else "offset"
    return f"{text_np_uri}#{frag}_{begin}-{end}"


def word_nanopub(node: WordNode, manifest: CorpusManifest, influenced_by: IRI | None = None) -> Nanopub:
    """Draft (unfinalized) word nanopub for ``node``."""
    b = NanopubBuilder(manifest.base_namespace)
    w = IRI(node.word_iri)
    b.assertion(w, RDF.type, NIF.OffsetBasedString)
    b.assertion(w, RDF.type, NIF.Word)
    b.assertion(w, NIF.beginIndex, Literal.integer(node.begin))
    b.assertion(w, NIF.endIndex, Literal.integer(node.end))
    b.assertion(w, NIF.anchorOf, Literal(node.anchor))
    if node.lemma is not None:
        b.assertion(w, NIF.lemma, Literal(node.lemma))
    if node.pos is not None:
        b.assertion(w, OLIA.POS, Literal(node.pos))
    b.assertion(w, PVCP.hasSentenceNumber, Literal.integer(node.sentence_number))
    b.assertion(w, PVCP.isPartOfText, text_iri(node.text_np_uri, node.channel))
    b.provenance(b.assertion_graph, PROV.wasDerivedFrom, text_iri(node.text_np_uri, node.channel))
    if influenced_by is not None:
        b.provenance(b.assertion_graph, PROV.wasInfluencedBy, influenced_by)
    b.add_pubinfo(manifest.pubinfo)
    b.protect(manifest.protected_default)
    return b.build()


def mint_word(text_np_uri: str, begin: int, end: int, text: str, *, sentence_number: int,
              manifest: CorpusManifest, lemma: str | None = None, pos: str | None = None,
              channel: str = BODY, influenced_by: IRI | None = None) -> tuple[WordNode, Nanopub]:
    if not (0 <= begin < end <= len(text)):
        raise SpanOutOfBounds(f"span ({begin}, {end}) outside text of length {len(text)}")
    node = WordNode(word_iri(text_np_uri, begin, end, channel), begin, end, text[begin:end],
                    sentence_number, text_np_uri, lemma, pos, channel)
    return node, word_nanopub(node, manifest, influenced_by)


@dataclass
class MergeReport:
    collapsed: int = 0
    merged: int = 0
    conflicts: list[dict] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"collapsed": self.collapsed, "merged": self.merged, "conflicts": self.conflicts}


_WORD_FIELDS = ("anchor", "lemma", "pos", "sentence_number")


def dedup_words(drafts: Sequence[tuple[WordNode, Nanopub]]) -> tuple[list[tuple[WordNode, Nanopub]], MergeReport]:
    """Collapse word drafts that share a word IRI.

    Identical drafts collapse to one; drafts that differ only by fields one of
    them leaves empty are merged by union; real conflicts keep every variant.
    """
    report = MergeReport()
    groups: dict[str, list[tuple[WordNode, Nanopub]]] = {}
    for node, np in drafts:
        groups.setdefault(node.word_iri, []).append((node, np))

    out = []
    for iri, group in groups.items():
        unique: dict[tuple, tuple[WordNode, Nanopub]] = {}
        for node, np in group:
            key = (tuple(np.assertion), tuple(np.provenance), tuple(np.pubinfo))
            unique.setdefault(key, (node, np))
        report.collapsed += len(group) - len(unique)
        variants = list(unique.values())
        if len(variants) == 1:
            out.append(variants[0])
            continue

        conflicting = {}
        for name in _WORD_FIELDS:
            values = {getattr(n, name) for n, _ in variants} - {None}
            if len(values) > 1:
                conflicting[name] = sorted(map(str, values))
        rest = {(tuple(np.provenance), tuple(np.pubinfo)) for _, np in variants}
        if conflicting or len(rest) > 1:
            if conflicting:
                report.conflicts.append({"word": iri, "fields": conflicting})
                log.warning("conflicting word drafts for %s: %s", iri, conflicting)
            out.extend(variants)
            continue

        base_node, base_np = variants[0]
        merged_node = dataclasses.replace(
            base_node, **{name: next((getattr(n, name) for n, _ in variants if getattr(n, name) is not None), None)
                          for name in ("lemma", "pos")})
        g = base_np.assertion_graph
        assertion = {q.in_graph(g) for _, np in variants for q in np.assertion}
        merged_np = Nanopub(base_np.uri, base_np.head, assertion, base_np.provenance, base_np.pubinfo)
        report.merged += 1
        report.collapsed += len(variants) - 1
        out.append((merged_node, merged_np))

    out.sort(key=lambda pair: (pair[0].channel, pair[0].begin, pair[0].end,
                               [quad_key(q) for q in pair[1].assertion]))
    return out, report


# ---------------------------------------------------------------------------
# annotations

def _annotation_builder(manifest: CorpusManifest) -> tuple[NanopubBuilder, IRI]:
    b = NanopubBuilder(manifest.base_namespace)
    ann = b.local("annotation")
    b.assertion(ann, RDF.type, OA.Annotation)
    b.assertion(ann, DCT.isPartOf, manifest.corpus_iri)
    # the original annotation project, not the nanopub creator
    b.provenance(b.assertion_graph, PROV.wasDerivedFrom,
                 IRI(manifest.see_also) if manifest.see_also else manifest.corpus_iri)
    if manifest.attributed_to:
        b.provenance(b.assertion_graph, PROV.wasAttributedTo, IRI(manifest.attributed_to))
    return b, ann


def _word_ref(known: Mapping[tuple, str] | set, text_np_uri: str, span, channel=BODY) -> IRI:
    iri = word_iri(text_np_uri, span[0], span[1], channel)
    if iri not in known:
        raise DanglingWordReference(iri)
    return IRI(iri)


def generate_attributions(relations: Iterable[AttributionRelation], doc: SourceDocument, text_np_uri: str,
                          known_words: set[str], manifest: CorpusManifest) -> list[Nanopub]:
    out = []
    for rel in relations:
        b, ann = _annotation_builder(manifest)
        b.assertion(ann, DCT.identifier, Literal(rel.relation_id))
        for role, pred in ATTRIBUTION_ROLES.items():
            for span in rel.spans(role):
                b.assertion(ann, pred, _word_ref(known_words, text_np_uri, span))
        if rel.source:
            begin = min(b_ for b_, _ in rel.source)
            end = max(e for _, e in rel.source)
            b.assertion(ann, PVCPP.hasSourceText, Literal(doc.text[begin:end]))
        out.append(_finish(b, manifest, manifest.protected_default))
    return out


def generate_events(events: Iterable[EventRecord], facts: Iterable[FactualityRecord], text_np_uri: str,
                    known_words: set[str], manifest: CorpusManifest) -> tuple[list[Nanopub], list[Nanopub]]:
    event_nps: dict[str, Nanopub] = {}
    for ev in events:
        b, ann = _annotation_builder(manifest)
        b.assertion(ann, PVCPF.hasEID, Literal(ev.event_id))
        b.assertion(ann, OA.hasTarget, _word_ref(known_words, text_np_uri, ev.span, ev.channel))
        event_nps[ev.event_id] = _finish(b, manifest, manifest.protected_default)

    fact_nps = []
    for fact in facts:
        if fact.event_id not in event_nps:
            raise DanglingWordReference(f"event {fact.event_id}")
        b, ann = _annotation_builder(manifest)
        b.assertion(ann, PVCPF.refersToEvent, event_nps[fact.event_id].local("annotation"))
        b.assertion(ann, PVCPF.hasRelativeSource, Literal(fact.relative_source))
        b.assertion(ann, PVCPF.hasFactValue, Literal(fact.value))
        fact_nps.append(_finish(b, manifest, manifest.protected_default))
    return list(event_nps.values()), fact_nps


def generate_annotations(manifest: CorpusManifest, doc: SourceDocument, text_np_uri: str, known_words: set[str], *,
                         relations: Iterable[AttributionRelation] = (), events: Iterable[EventRecord] = (),
                         facts: Iterable[FactualityRecord] = ()) -> list[Nanopub]:
    """All annotation nanopubs of one corpus layer for one document."""
    if manifest.layer == "parc":
        return generate_attributions(relations, doc, text_np_uri, known_words, manifest)
    ev, fv = generate_events(events, facts, text_np_uri, known_words, manifest)
    return ev + fv


# ---------------------------------------------------------------------------
# corpora

def generate_corpus(manifest: CorpusManifest, member_uris: Sequence[str],
                    previous: str | None = None) -> tuple[Nanopub, IndexNanopub]:
    index = build_index(sorted(set(member_uris)), manifest.pubinfo, previous,
                        base=manifest.base_namespace, title=f"Index of {manifest.title}")
    b = NanopubBuilder(manifest.base_namespace)
    c = manifest.corpus_iri
    kind = PVCP.TextCorpus if manifest.kind == TEXT_CORPUS else PVCP.AnnotationCorpus
    b.assertion(c, RDF.type, kind)
    b.assertion(c, DCT.title, Literal(manifest.title))
    if manifest.see_also:
        b.assertion(c, RDFS.seeAlso, IRI(manifest.see_also))
    b.assertion(c, DCAT.distribution, IRI(index.uri))
    if manifest.creator:
        b.provenance(b.assertion_graph, PROV.wasAttributedTo, IRI(manifest.creator))
    else:
        b.provenance(b.assertion_graph, PROV.generatedAtTime, Literal.datetime(manifest.created))
    b.add_pubinfo(manifest.pubinfo)
    return b.finalize(), index


# ---------------------------------------------------------------------------

KINDS = ("corpus", "index", "document", "text", "word", "attribution", "event", "factuality")


def classify(np: Nanopub) -> str:
    """Which part of the network a nanopub belongs to."""
    if is_index(np):
        return "index"
    preds = {q.predicate for q in np.assertion}
    types = {q.object for q in np.assertion if q.predicate == RDF.type}
    if PVCP.TextCorpus in types or PVCP.AnnotationCorpus in types:
        return "corpus"
    if FOAF.Document in types:
        return "document"
    if NIF.Word in types:
        return "word"
    if DCT.Text in types:
        return "text"
    if PVCPF.hasFactValue in preds:
        return "factuality"
    if PVCPF.hasEID in preds:
        return "event"
    if preds & set(ATTRIBUTION_ROLES.values()) or (OA.Annotation in types):
        return "attribution"
    return "other"
