"""End-to-end conversion: raw documents + annotation layers -> nanopub files."""

from __future__ import annotations

import json
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (ConfigError, DanglingWordReference, EmptyIndex, MalformedAnnotation, ManifestError,
                     NanocorpusError, OffsetOutOfBounds, SentenceSkipDefect, TokenResolutionFailure,
                     UnknownSentence, UnrecoverableStructure)
from .generate import (ANNOTATION_CORPUS, KINDS, TEXT_CORPUS, CorpusManifest, MergeReport, classify, dedup_words,
                       generate_attributions, generate_corpus, generate_events, generate_text_layer, load_manifest,
                       mint_word)
from .ingest import (CHALLENGES, EXCLUDED, HEADLINE, ChallengeDiagnostic, Override, build_sentence_index,
                     parse_document, parse_factbank_tables, parse_override, parse_parc, read_table, table_doc_id)
from .nanopub import Nanopub, base_of, finalize, read_nanopubs, verify
from .rdf import IRI

log = logging.getLogger(__name__)

FB_EVENTS = "fb_event.txt"
FB_FACTS = "fb_factValue.txt"

# which challenge an exclusion traces back to
_EXCLUSION_CHALLENGE = {
    SentenceSkipDefect: 3,
    UnknownSentence: 3,
    TokenResolutionFailure: 3,
    OffsetOutOfBounds: 1,
    UnrecoverableStructure: 6,
}


@dataclass
class ConvertConfig:
    manifests: list[Path]
    raw_dir: Path
    output_dir: Path
    parc_dir: Path | None = None
    factbank_dir: Path | None = None
    overrides_dir: Path | None = None
    dedup_words: bool = True
    workers: int = 4

    def __post_init__(self):
        self.manifests = [Path(p) for p in self.manifests]
        for name in ("raw_dir", "output_dir", "parc_dir", "factbank_dir", "overrides_dir"):
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, Path(value))

    def check(self):
        if not self.manifests:
            raise ConfigError("at least one corpus manifest is required")
        for p in self.manifests:
            if not p.is_file():
                raise ConfigError(f"manifest not found: {p}")
        for name in ("raw_dir", "parc_dir", "factbank_dir", "overrides_dir"):
            d = getattr(self, name)
            if d is not None and not d.is_dir():
                raise ConfigError(f"{name.replace('_', '-')} is not a directory: {d}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")


@dataclass
class Corpora:
    text: CorpusManifest
    parc: CorpusManifest | None = None
    factbank: CorpusManifest | None = None

    @classmethod
    def from_manifests(cls, manifests: Sequence[CorpusManifest]) -> "Corpora":
        texts = [m for m in manifests if m.kind == TEXT_CORPUS]
        if len(texts) != 1:
            raise ConfigError(f"exactly one text-corpus manifest is required, got {len(texts)}")
        layers: dict[str, CorpusManifest] = {}
        for m in manifests:
            if m.kind == ANNOTATION_CORPUS:
                if m.layer in layers:
                    raise ConfigError(f"two manifests for the {m.layer} layer")
                layers[m.layer] = m
        return cls(texts[0], layers.get("parc"), layers.get("factbank"))

    def all(self) -> list[CorpusManifest]:
        return [m for m in (self.text, self.parc, self.factbank) if m is not None]


@dataclass
class DocumentResult:
    doc_id: str
    source: str
    nanopubs: dict[str, list[Nanopub]] = field(default_factory=dict)  # corpus name -> nanopubs
    diagnostics: list = field(default_factory=list)
    excluded: str | None = None
    challenge: int | None = None
    merge: MergeReport | None = None

    def counts(self) -> Counter:
        return Counter(classify(np) for nps in self.nanopubs.values() for np in nps)

    def as_record(self) -> dict:
        rec = {
            "doc": self.doc_id,
            "file": self.source,
            "status": "excluded" if self.excluded else "converted",
            "diagnostics": [
                {"id": d.challenge_id, "title": CHALLENGES[d.challenge_id], "resolution": d.resolution,
                 "detail": d.description}
                for d in self.diagnostics
            ],
        }
        if self.excluded:
            rec["reason"] = self.excluded
            rec["challenge"] = self.challenge
        else:
            rec["counts"] = dict(sorted(self.counts().items()))
            if self.merge is not None:
                rec["merge"] = self.merge.as_dict()
        return rec


@dataclass
class ConversionReport:
    documents: list[DocumentResult]
    counts: dict[str, int]
    written: list[Path]

    @property
    def excluded(self) -> list[DocumentResult]:
        return [d for d in self.documents if d.excluded]

    @property
    def converted(self) -> list[DocumentResult]:
        return [d for d in self.documents if not d.excluded]

    @property
    def exit_status(self) -> int:
        if not self.excluded:
            return 0
        return 2 if self.converted else 1

    def diagnostic_ids(self) -> set[int]:
        return {d.challenge_id for r in self.documents for d in r.diagnostics}

    def summary(self) -> dict:
        return {
            "summary": {
                "counts": self.counts,
                "converted": len(self.converted),
                "excluded": [{"doc": d.doc_id, "challenge": d.challenge, "reason": d.excluded}
                             for d in self.excluded],
                "diagnostics": sorted(self.diagnostic_ids()),
            }
        }

    def jsonl(self) -> str:
        lines = [json.dumps(d.as_record(), sort_keys=True) for d in self.documents]
        lines.append(json.dumps(self.summary(), sort_keys=True))
        return "\n".join(lines) + "\n"


class _Inputs:
    """Annotation sources shared by every document of one run (read-only)."""

    def __init__(self, config: ConvertConfig):
        self.config = config
        self.fb_events: list[list[str]] = []
        self.fb_facts: list[list[str]] = []
        if config.factbank_dir is not None:
            ev, fv = config.factbank_dir / FB_EVENTS, config.factbank_dir / FB_FACTS
            if not ev.is_file() or not fv.is_file():
                raise ConfigError(f"factbank-dir must contain {FB_EVENTS} and {FB_FACTS}")
            self.fb_events, self.fb_facts = read_table(ev), read_table(fv)
        self.fb_docs = {table_doc_id(r[0]) for r in self.fb_events}

    def override(self, doc_id: str) -> Override | None:
        d = self.config.overrides_dir
        if d is None or not (d / f"{doc_id}.fix").is_file():
            return None
        return parse_override((d / f"{doc_id}.fix").read_text(encoding="utf-8"))

    def parc_xml(self, doc_id: str) -> bytes | None:
        d = self.config.parc_dir
        if d is None or not (d / f"{doc_id}.xml").is_file():
            return None
        return (d / f"{doc_id}.xml").read_bytes()


def convert_document(path: Path, corpora: Corpora, inputs: _Inputs, dedup: bool = True) -> DocumentResult:
    result = DocumentResult(table_doc_id(path.name), path.name)
    try:
        _convert(path, corpora, inputs, dedup, result)
    except (UnrecoverableStructure, UnknownSentence, TokenResolutionFailure, OffsetOutOfBounds,
            MalformedAnnotation, DanglingWordReference) as exc:
        result.nanopubs = {}
        result.excluded = f"{type(exc).__name__}: {exc}"
        result.challenge = next((c for t, c in _EXCLUSION_CHALLENGE.items() if isinstance(exc, t)), None)
        if result.challenge is not None:
            result.diagnostics = list(result.diagnostics) + [
                ChallengeDiagnostic(result.challenge, result.excluded, EXCLUDED)]
        log.warning("excluding %s: %s", result.doc_id, result.excluded)
    return result


def _convert(path: Path, corpora: Corpora, inputs: _Inputs, dedup: bool, result: DocumentResult):
    override = inputs.override(result.doc_id)
    doc = parse_document(path.read_bytes(), doc_id=result.doc_id, override=override)
    if override is None and doc.doc_id != result.doc_id:
        override = inputs.override(doc.doc_id)
        if override is not None:
            doc = parse_document(path.read_bytes(), doc_id=doc.doc_id, override=override)
    result.doc_id = doc.doc_id
    # one numbering (semicolon-split, FactBank style) for every word, so that
    # the same word coming from either layer carries the same sentence number
    doc = build_sentence_index(doc, override=override)
    result.diagnostics = doc.diagnostics

    text_m = corpora.text
    doc_np, text_np = generate_text_layer(doc, text_m)
    tid = text_np.uri
    drafts = []

    relations = []
    if corpora.parc is not None:
        xml = inputs.parc_xml(doc.doc_id)
        if xml is not None:
            relations, tokens = parse_parc(xml, doc)
            by_span = {(t.begin, t.end): t for t in tokens}
            for tok in tokens:
                if " ".join(tok.text.split()) != " ".join(doc.text[tok.begin:tok.end].split()):
                    raise OffsetOutOfBounds(f"{doc.doc_id}:{tok.begin}-{tok.end} ({tok.text!r})")
            influence = None if dedup else corpora.parc.corpus_iri
            for b, e in sorted({sp for rel in relations for sp in rel.all_spans()}):
                tok = by_span.get((b, e))
                drafts.append(mint_word(tid, b, e, doc.text, sentence_number=doc.sentence_number_at(b),
                                        manifest=text_m, lemma=tok.lemma if tok else None,
                                        pos=tok.pos if tok else None, influenced_by=influence))

    events, facts = [], []
    if corpora.factbank is not None and doc.doc_id in inputs.fb_docs:
        events, facts = parse_factbank_tables(inputs.fb_events, inputs.fb_facts, doc)
        influence = None if dedup else corpora.factbank.corpus_iri
        for ev in events:
            b, e = ev.span
            drafts.append(mint_word(tid, b, e, doc.channel_text(ev.channel),
                                    sentence_number=0 if ev.channel == HEADLINE else ev.sentence_number,
                                    manifest=text_m, channel=ev.channel, influenced_by=influence))

    words, result.merge = dedup_words(drafts)
    word_nps = [finalize(np) for _, np in words]
    known = {node.word_iri for node, _ in words}
    result.nanopubs[text_m.name] = [doc_np, text_np] + word_nps
    if corpora.parc is not None and relations:
        result.nanopubs[corpora.parc.name] = generate_attributions(relations, doc, tid, known, corpora.parc)
    if corpora.factbank is not None and events:
        ev_nps, fv_nps = generate_events(events, facts, tid, known, corpora.factbank)
        result.nanopubs[corpora.factbank.name] = ev_nps + fv_nps


def raw_files(raw_dir: Path) -> list[Path]:
    return sorted(p for p in raw_dir.iterdir()
                  if p.is_file() and not p.name.startswith(".") and p.suffix != ".fix")


def convert(config: ConvertConfig) -> ConversionReport:
    """Run the conversion and write ``<out>/<corpus>/<kind>/<code>.trig`` plus ``report.jsonl``."""
    config.check()
    try:
        corpora = Corpora.from_manifests([load_manifest(p) for p in config.manifests])
    except ManifestError as exc:
        raise ConfigError(str(exc)) from None
    files = raw_files(config.raw_dir)
    if not files:
        raise ConfigError(f"no raw documents in {config.raw_dir}")
    inputs = _Inputs(config)

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        results = list(pool.map(lambda p: convert_document(p, corpora, inputs, config.dedup_words), files))
    results.sort(key=lambda r: r.doc_id)

    per_corpus: dict[str, list[Nanopub]] = {m.name: [] for m in corpora.all()}
    for r in results:
        for name, nps in r.nanopubs.items():
            per_corpus[name].extend(nps)

    everything: list[tuple[str, Nanopub]] = []
    for m in corpora.all():
        members = per_corpus[m.name]
        for np in members:
            everything.append((m.name, np))
        if not members:
            log.warning("corpus %s has no members; no corpus or index nanopub written", m.name)
            continue
        try:
            corpus_np, index = generate_corpus(m, [np.uri for np in members])
        except EmptyIndex:
            continue
        everything += [(m.name, corpus_np), (m.name, index.nanopub)]

    written = write_tree(config.output_dir, everything)
    counts = Counter(classify(np) for _, np in everything)
    report = ConversionReport(results, {k: counts.get(k, 0) for k in KINDS}, written)
    (config.output_dir / "report.jsonl").write_text(report.jsonl(), encoding="utf-8")
    return report


def write_tree(out: Path, nanopubs: Iterable[tuple[str, Nanopub]]) -> list[Path]:
    written = []
    out.mkdir(parents=True, exist_ok=True)
    for corpus, np in nanopubs:
        path = out / corpus / classify(np) / f"{np.artifact_code}.trig"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(np.to_trig(), encoding="utf-8")
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# loading and checking output trees

def trig_files(paths: Iterable[str | Path]) -> list[Path]:
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            out.extend(sorted(p.rglob("*.trig")))
        elif p.is_file():
            out.append(p)
        else:
            raise FileNotFoundError(p)
    return out


def load_nanopubs(paths: Iterable[str | Path]) -> list[Nanopub]:
    nps = []
    for f in trig_files(paths):
        nps.extend(read_nanopubs(f.read_text(encoding="utf-8")))
    return nps


def dangling_references(nanopubs: Sequence[Nanopub]) -> list[str]:
    """IRIs in our own namespaces that no loaded nanopub defines.

    An IRI counts as defined when it is a loaded nanopub URI, the subject of
    some loaded assertion, or a local name of the nanopub that mentions it.
    """
    bases = {base_of(np.uri) for np in nanopubs}
    uris = {np.uri for np in nanopubs}
    defined = set(uris)
    for np in nanopubs:
        defined.update(q.subject.value for q in np.assertion if isinstance(q.subject, IRI))
    missing = set()
    for np in nanopubs:
        for q in np.assertion + np.provenance:
            o = q.object
            if not isinstance(o, IRI) or o.value in defined:
                continue
            if not any(o.value.startswith(b) for b in bases):
                continue
            if o.value.startswith(np.uri + "#"):
                continue
            missing.add(o.value)
    return sorted(missing)


def validate_paths(paths: Iterable[str | Path]) -> list[str]:
    """Problems found, one human-readable line each (empty when valid)."""
    problems = []
    loaded = []
    for f in trig_files(paths):
        try:
            nps = read_nanopubs(f.read_text(encoding="utf-8"))
        except (NanocorpusError, UnicodeDecodeError, ValueError) as exc:
            problems.append(f"{f}: unreadable: {exc}")
            continue
        for np in nps:
            report = verify(np)
            if not report.valid:
                problems.append(f"{f}: {np.uri}: {report.reason}")
            elif f.suffix == ".trig" and f.stem != np.artifact_code and len(nps) == 1 and _named_by_code(f):
                problems.append(f"{f}: file name does not match artifact code {np.artifact_code}")
            else:
                loaded.append(np)
    problems.extend(f"dangling: {iri}" for iri in dangling_references(loaded))
    return problems


def _named_by_code(f: Path) -> bool:
    return len(f.stem) == 43
