import dataclasses
from datetime import date

import pytest

from nanocorpus.errors import DanglingWordReference, EmptyIndex, ManifestError, SpanOutOfBounds
from nanocorpus.generate import (classify, dedup_words, generate_annotations, generate_corpus,
                                 generate_events, generate_text_layer, load_manifest, mint_word, parse_manifest,
                                 word_iri)
from nanocorpus.ingest import AttributionRelation, EventRecord, FactualityRecord, SourceDocument
from nanocorpus.nanopub import finalize, verify
from nanocorpus.pipeline import dangling_references, load_nanopubs, trig_files
from nanocorpus.rdf import IRI, Literal
from nanocorpus.vocab import DCAT, DCT, NIF, OA, OLIA, PROV, PVCP, PVCPF, PVCPP, RDF

from conftest import MANIFESTS

TEXT_M = load_manifest(MANIFESTS / "text.manifest")
PARC_M = load_manifest(MANIFESTS / "parc.manifest")
FB_M = load_manifest(MANIFESTS / "factbank.manifest")
ROGERS = "   ROGERS COMMUNICATIONS Inc. said it plans to raise 175 million Canadian dollars."
TEXT_NP = "https://w3id.org/provcorp/np/RA0000000000000000000000000000000000000000"


def assertion_values(np, pred):
    return [q.object for q in np.assertion if q.predicate == pred]


# ---------------------------------------------------------------------------
# manifests

def test_manifest_parsing():
    assert PARC_M.title == "PARC Annotation corpus" and PARC_M.layer == "parc"
    assert TEXT_M.protected_default and not PARC_M.protected_default
    assert PARC_M.corpus_iri.value == "https://w3id.org/provcorp/np/corpus/parc-annotations"


@pytest.mark.parametrize("text", [
    "kind: text-corpus\nname: x\ntitle: t\nlicense: http://l\nbase-namespace: http://b/\n",  # no created
    "kind: text-corpus\nname: x\ntitle: t\nlicense: http://l\nbase-namespace: http://b\ncreated: 2020-01-01T00:00:00",
    "kind: other\nname: x\ntitle: t\nlicense: http://l\nbase-namespace: http://b/\ncreated: 2020-01-01T00:00:00",
    "kind: annotation-corpus\nname: x\ntitle: t\nlicense: http://l\nbase-namespace: http://b/\n"
    "created: 2020-01-01T00:00:00",
    "kind: text-corpus\nfoo: bar",
    "kind: text-corpus\nname: x\ntitle: t\nlicense: http://l\nbase-namespace: http://b/\n"
    "created: 2020-01-01T00:00:00\nprotected: maybe",
])
def test_bad_manifests(text):
    with pytest.raises(ManifestError):
        parse_manifest(text)


# ---------------------------------------------------------------------------
# text layer

def _financing_doc(title="Financing Business: Cash Flow Worries"):
    return SourceDocument("wsj_0999", "\nSome body text.\n", title=title, created=date(1989, 11, 2),
                          source_name="WALL STREET JOURNAL (J)", headline_span=(0, len(title)) if title else None)


def test_document_and_text_nanopubs():
    doc_np, text_np = generate_text_layer(_financing_doc(), TEXT_M)
    assert verify(doc_np) and verify(text_np)
    assert assertion_values(doc_np, DCT.title) == [Literal("Financing Business: Cash Flow Worries")]
    assert assertion_values(doc_np, DCT.created) == [Literal.datetime("1989-11-02T00:00:00")]
    assert assertion_values(doc_np, PVCP.hasText) == [IRI(text_np.uri + "#text")]
    assert IRI(text_np.uri + "#text") in {q.subject for q in text_np.assertion}
    assert Literal("\nSome body text.\n") in assertion_values(text_np, RDF.value)
    assert doc_np.protected and text_np.protected
    for np in (doc_np, text_np):
        assert TEXT_M.corpus_iri in assertion_values(np, DCT.isPartOf)
    assert classify(doc_np) == "document" and classify(text_np) == "text"


def test_untitled_document_and_public_manifest():
    public = dataclasses.replace(TEXT_M, protected_default=False)
    doc_np, text_np = generate_text_layer(_financing_doc(title=None), public)
    assert verify(doc_np) and not assertion_values(doc_np, DCT.title)
    assert not doc_np.protected and not text_np.protected


# ---------------------------------------------------------------------------
# words

def test_mint_rogers_word():
    node, draft = mint_word(TEXT_NP, 3, 9, ROGERS, sentence_number=0, manifest=TEXT_M, lemma="rogers", pos="NNP")
    assert node.word_iri == TEXT_NP + "#offset_3-9"
    assert node.anchor == "ROGERS"
    np = finalize(draft)
    w = IRI(node.word_iri)
    got = {(q.predicate, q.object) for q in np.assertion if q.subject == w}
    assert {(NIF.anchorOf, Literal("ROGERS")), (NIF.beginIndex, Literal.integer(3)),
            (NIF.endIndex, Literal.integer(9)), (NIF.lemma, Literal("rogers")), (OLIA.POS, Literal("NNP")),
            (PVCP.hasSentenceNumber, Literal.integer(0)), (RDF.type, NIF.Word)} <= got
    assert np.protected and classify(np) == "word"


def test_identifier_convergence_and_bounds():
    a, _ = mint_word(TEXT_NP, 30, 34, ROGERS, sentence_number=1, manifest=PARC_M)
    b, _ = mint_word(TEXT_NP, 30, 34, ROGERS, sentence_number=1, manifest=FB_M)
    assert a.word_iri == b.word_iri == word_iri(TEXT_NP, 30, 34)
    for span in [(0, 0), (5, 3), (-1, 2), (0, len(ROGERS) + 1)]:
        with pytest.raises(SpanOutOfBounds):
            mint_word(TEXT_NP, *span, ROGERS, sentence_number=0, manifest=TEXT_M)


def _mint(**kw):
    return mint_word(TEXT_NP, 30, 34, ROGERS, sentence_number=1, manifest=TEXT_M, **kw)


def test_dedup_identical():
    out, report = dedup_words([_mint(lemma="say"), _mint(lemma="say")])
    assert len(out) == 1 and report.collapsed == 1 and report.merged == 0


def test_dedup_union_merge():
    out, report = dedup_words([_mint(lemma="say", pos="VBD"), _mint(lemma="say")])
    assert len(out) == 1 and report.merged == 1
    node, np = out[0]
    assert node.pos == "VBD" and Literal("VBD") in assertion_values(np, OLIA.POS)
    assert verify(finalize(np))


def test_dedup_conflict_keeps_both():
    out, report = dedup_words([_mint(pos="VBD"), _mint(pos="VBZ")])
    assert len(out) == 2 and len(report.conflicts) == 1
    assert report.conflicts[0]["fields"] == {"pos": ["VBD", "VBZ"]}
    uris = {finalize(np).uri for _, np in out}
    subjects = {IRI(n.word_iri) for n, _ in out}
    assert len(uris) == 2 and len(subjects) == 1


# ---------------------------------------------------------------------------
# annotations

def _rogers_doc():
    return SourceDocument("wsj_0998", ROGERS)


def test_attribution_nanopub():
    known = {word_iri(TEXT_NP, b, e) for b, e in [(3, 9), (10, 24), (25, 29), (30, 34), (35, 37)]}
    rel = AttributionRelation("r1", source=[(3, 9), (10, 24), (25, 29)], cue=[(30, 34)], content=[(35, 37)])
    (np,) = generate_annotations(PARC_M, _rogers_doc(), TEXT_NP, known, relations=[rel])
    assert len(assertion_values(np, PVCPP.hasCueAnnotatedWord)) == 1
    assert set(assertion_values(np, PVCPP.hasSourceAnnotatedWord)) == {
        IRI(word_iri(TEXT_NP, 3, 9)), IRI(word_iri(TEXT_NP, 10, 24)), IRI(word_iri(TEXT_NP, 25, 29))}
    assert assertion_values(np, PVCPP.hasSourceText) == [Literal("ROGERS COMMUNICATIONS Inc.")]
    assert OA.Annotation in assertion_values(np, RDF.type)
    assert PARC_M.corpus_iri in assertion_values(np, DCT.isPartOf)
    # provenance points at the annotation project, not at the nanopub creator
    prov = {(q.predicate, q.object) for q in np.provenance}
    assert (PROV.wasAttributedTo, IRI(PARC_M.attributed_to)) in prov
    assert all(o != IRI(PARC_M.creator) for _, o in prov)
    assert classify(np) == "attribution" and not np.protected

    with pytest.raises(DanglingWordReference):
        generate_annotations(PARC_M, _rogers_doc(), TEXT_NP, set(), relations=[rel])


def test_event_and_factuality_nanopubs():
    said = word_iri(TEXT_NP, 30, 34)
    events = [EventRecord("e1", 1, 3, "said", (30, 34))]
    facts = [FactualityRecord("e1", "AUTHOR", "Uu"), FactualityRecord("e1", "officials_AUTHOR", "CT+")]
    ev_nps, fact_nps = generate_events(events, facts, TEXT_NP, {said}, FB_M)
    (ev,) = ev_nps
    assert assertion_values(ev, PVCPF.hasEID) == [Literal("e1")]
    assert assertion_values(ev, OA.hasTarget) == [IRI(said)]
    assert len(fact_nps) == 2
    for f in fact_nps:
        assert assertion_values(f, PVCPF.refersToEvent) == [ev.local("annotation")]
        assert classify(f) == "factuality"
    assert {assertion_values(f, PVCPF.hasFactValue)[0].lexical for f in fact_nps} == {"Uu", "CT+"}
    assert classify(ev) == "event"
    with pytest.raises(DanglingWordReference):
        generate_events([], facts, TEXT_NP, {said}, FB_M)


# ---------------------------------------------------------------------------
# corpora

def _fake_members(n):
    from randomized import random_draft
    import random
    rng = random.Random(n)
    return [finalize(random_draft(rng)).uri for _ in range(n)]


def test_corpus_with_136_members():
    corpus, index = generate_corpus(PARC_M, _fake_members(136))
    assert len(index.elements) == 136
    assert assertion_values(corpus, DCT.title) == [Literal("PARC Annotation corpus")]
    assert assertion_values(corpus, DCAT.distribution) == [IRI(index.uri)]
    assert PVCP.AnnotationCorpus in assertion_values(corpus, RDF.type)
    assert classify(corpus) == "corpus" and classify(index.nanopub) == "index"


def test_single_and_empty_corpus():
    _, index = generate_corpus(TEXT_M, _fake_members(1))
    assert len(index.elements) == 1 and verify(index.nanopub)
    with pytest.raises(EmptyIndex):
        generate_corpus(TEXT_M, [])


# ---------------------------------------------------------------------------
# network properties on the converted fixture corpus

def test_network_closure_and_protection(converted):
    report, out = converted
    nps = load_nanopubs(trig_files([out]))
    assert dangling_references(nps) == []
    for np in nps:
        kind = classify(np)
        if kind in ("document", "text", "word"):
            assert np.protected, np.uri
        elif kind in ("attribution", "event", "factuality"):
            assert not np.protected, np.uri


def test_count_conservation(converted):
    report, _ = converted
    relations = sum(d.counts().get("attribution", 0) for d in report.documents)
    assert relations == report.counts["attribution"] == 3
    assert report.counts["event"] == 7 and report.counts["factuality"] == 9


def test_text_index_covers_text_layer(converted):
    _, out = converted
    nps = {np.uri: np for np in load_nanopubs(trig_files([out]))}
    from nanocorpus.nanopub import IndexNanopub, is_index
    text_index = next(IndexNanopub.of(np) for np in nps.values()
                      if is_index(np) and any(classify(nps[e]) == "document" for e in IndexNanopub.of(np).elements))
    kinds = {classify(nps[e]) for e in text_index.elements}
    assert kinds == {"document", "text", "word"}
    expected = {u for u, np in nps.items() if classify(np) in ("document", "text", "word")}
    assert set(text_index.elements) == expected
