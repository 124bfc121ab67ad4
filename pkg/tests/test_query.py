import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nanocorpus.errors import MissingLayer, QuerySyntaxError, UnboundProjection, UnknownQuestion, VerificationFailure
from nanocorpus.generate import classify
from nanocorpus.nanopub import Nanopub
from nanocorpus.pipeline import load_nanopubs, trig_files
from nanocorpus.query import (ALL_GRAPHS, BindingTable, Count, Filter, Query, QuadStore, Var, builtin_query,
                              evaluate, export, format_table, parse_query, run_builtin)
from nanocorpus.rdf import IRI, Literal, Quad
from nanocorpus.vocab import NIF, OA, PVCP, PVCPF, PVCPP, RDF

from oracle import as_comparable, brute_force
from randomized import random_store_quads

EX = "http://example.org/"
G = IRI(EX + "np/G#assertion")


@pytest.fixture(scope="module")
def fixture_nps(converted):
    _, out = converted
    return load_nanopubs(trig_files([out]))


@pytest.fixture(scope="module")
def store(fixture_nps):
    return QuadStore().load(fixture_nps)


def store_of(triples):
    return QuadStore().add_quads(Quad(s, p, o, G) for s, p, o in triples)


# ---------------------------------------------------------------------------
# loading

def test_load_counts(fixture_nps):
    three = fixture_nps[:3]
    s = QuadStore().load(three)
    assert s.size == sum(len(np.assertion) for np in three)
    one = fixture_nps[0]
    full = QuadStore().load([one], ALL_GRAPHS)
    assert full.size == len(one.quads()) >= len(one.assertion) + 4


def test_load_refuses_tampered(fixture_nps):
    np = fixture_nps[0]
    q = np.assertion[0]
    edited = [Quad(q.subject, q.predicate, Literal("tampered"), q.graph)] + list(np.assertion[1:])
    bad = Nanopub(np.uri, np.head, edited, np.provenance, np.pubinfo)
    with pytest.raises(VerificationFailure):
        QuadStore().load([bad])
    with pytest.raises(ValueError):
        QuadStore().load([], "everything")


# ---------------------------------------------------------------------------
# evaluation

def test_single_pattern_lists_words(store, fixture_nps):
    t = evaluate(store, Query([(Var("s"), RDF.type, NIF.Word)], ["s"]))
    words = {q.subject for np in fixture_nps if classify(np) == "word" for q in np.assertion
             if q.predicate == RDF.type and q.object == NIF.Word}
    assert {r[0] for r in t.rows} == words and len(t) == 39


def test_group_by_over_nothing():
    s = store_of([(IRI(EX + "a"), RDF.type, IRI(EX + "T"))])
    q = Query([(Var("x"), RDF.type, NIF.Word)], ["x", "Count"], group_by=["x"], count=Count(("x",)))
    assert evaluate(s, q).rows == []
    total = Query([(Var("x"), RDF.type, NIF.Word)], ["Count"], group_by=[], count=Count(("x",)))
    assert evaluate(s, total).as_strings() == [("0",)]


def test_unbound_projection():
    with pytest.raises(UnboundProjection):
        evaluate(QuadStore(), Query([(Var("x"), RDF.type, NIF.Word)], ["y"]))


def test_rows_sorted_and_distinct():
    a, b = IRI(EX + "a"), IRI(EX + "b")
    s = store_of([(b, RDF.type, NIF.Word), (a, RDF.type, NIF.Word), (a, RDF.type, IRI(EX + "T"))])
    t = evaluate(s, Query([(Var("x"), RDF.type, Var("t"))], ["x"], distinct=True))
    assert t.rows == [(a,), (b,)]
    t = evaluate(s, Query([(Var("x"), RDF.type, Var("t"))], ["x"]))
    assert t.rows == [(a,), (a,), (b,)]


def _q4_fixture():
    """Six event words: 2 cue-, 3 content- and 1 source-annotated, plus noise."""
    triples = []
    words = [IRI(f"{EX}np/T#offset_{i}-{i + 3}") for i in range(8)]
    for i, w in enumerate(words[:6]):
        ev = IRI(f"{EX}np/E{i}#annotation")
        triples += [(ev, PVCPF.hasEID, Literal(f"e{i}")), (ev, OA.hasTarget, w)]
    a1, a2 = IRI(EX + "np/A1#annotation"), IRI(EX + "np/A2#annotation")
    triples += [(a1, PVCPP.hasCueAnnotatedWord, words[0]), (a2, PVCPP.hasCueAnnotatedWord, words[1]),
                (a1, PVCPP.hasContentAnnotatedWord, words[2]), (a1, PVCPP.hasContentAnnotatedWord, words[3]),
                (a2, PVCPP.hasContentAnnotatedWord, words[4]), (a2, PVCPP.hasSourceAnnotatedWord, words[5])]
    # annotated words that are not event targets do not count
    triples += [(a1, PVCPP.hasSourceAnnotatedWord, words[6]), (a2, PVCPP.hasCueAnnotatedWord, words[7])]
    return triples


def test_q4_attribution_counts():
    triples = _q4_fixture()
    t = run_builtin(store_of(triples), "q4")
    got = {r[0].value.rsplit("/", 1)[1]: int(r[1].lexical) for r in t.rows}
    assert got == {"hasCueAnnotatedWord": 2, "hasContentAnnotatedWord": 3, "hasSourceAnnotatedWord": 1}
    query, _ = builtin_query("q4")
    assert as_comparable(t, "Count") == brute_force(triples, query)


def test_q6_and_missing_layers(store):
    assert run_builtin(store, "q6", {"lemma": "surprise", "label": "cue"}).rows == []
    rows = run_builtin(store, "q6", {"lemma": "SAY"}).as_strings()
    assert rows and all(r[2] == "said" for r in rows)
    parc_only = store_of([(IRI(EX + "a"), PVCPP.hasCueAnnotatedWord, IRI(EX + "w"))])
    with pytest.raises(MissingLayer):
        run_builtin(parc_only, "q5")
    with pytest.raises(MissingLayer):
        run_builtin(store_of([(IRI(EX + "e"), PVCPF.hasEID, Literal("e1"))]), "q1")
    with pytest.raises(UnknownQuestion):
        run_builtin(store, "q7")
    with pytest.raises(ValueError):
        builtin_query("q4", {"of": "colour"})


def test_q6_falls_back_to_anchor():
    w1, w2 = IRI(EX + "np/T#offset_0-8"), IRI(EX + "np/T#offset_9-17")
    text = IRI(EX + "np/T#text")
    a = IRI(EX + "np/A#annotation")
    triples = [(a, PVCPP.hasCueAnnotatedWord, w1), (a, PVCPP.hasCueAnnotatedWord, w2),
               (w1, NIF.anchorOf, Literal("Surprise")), (w1, PVCP.isPartOfText, text),
               (w2, NIF.anchorOf, Literal("surprised")), (w2, NIF.lemma, Literal("surprise")),
               (w2, PVCP.isPartOfText, text)]
    t = run_builtin(store_of(triples), "q6")
    assert [r[2] for r in t.as_strings()] == ["Surprise", "surprised"]


def test_q2_counts_distinct_pairs():
    w, text = IRI(EX + "np/T#offset_0-4"), IRI(EX + "np/T#text")
    ev = IRI(EX + "np/E#annotation")
    triples = [(ev, PVCPF.hasEID, Literal("e123")), (ev, OA.hasTarget, w), (w, PVCP.isPartOfText, text)]
    for i, (src, val) in enumerate([("officials_AUTHOR", "CT+"), ("AUTHOR", "Uu"), ("AUTHOR", "Uu")]):
        f = IRI(f"{EX}np/F{i}#annotation")
        triples += [(f, PVCPF.refersToEvent, ev), (f, PVCPF.hasRelativeSource, Literal(src)),
                    (f, PVCPF.hasFactValue, Literal(val))]
    assert run_builtin(store_of(triples), "q2").as_strings() == [(text.value, "e123", "2")]


# ---------------------------------------------------------------------------
# export

def test_export_shapes(store):
    one = BindingTable(["x"], [(Literal("a,b"),)])
    assert export(one, "csv") == b'x\r\n"a,b"\r\n'
    empty = BindingTable(["x", "y"], [])
    assert export(empty, "csv") == b"x,y\r\n"
    assert export(empty, "json") == b"[]"
    q1 = json.loads(export(run_builtin(store, "q1"), "json"))
    assert q1[0]["factValue"] == "CT+" and q1[0]["eventWord"] == "said"
    assert q1[0]["textID"].endswith("#text")
    with pytest.raises(ValueError):
        export(one, "xml")
    with pytest.raises(ValueError):
        BindingTable(["x"], [(1, 2)])


def test_format_table():
    t = BindingTable(["name", "n"], [(IRI(EX + "a"), Literal("1"))])
    assert format_table(t).splitlines() == [f"{'name':<20}  n", "http://example.org/a  1"]


# ---------------------------------------------------------------------------
# query text

Q4_TEXT = """
PREFIX pvcpp: <https://w3id.org/provcorp/vocab/parc/>
PREFIX pvcpf: <https://w3id.org/provcorp/vocab/FactBank/>
PREFIX oa: <http://www.w3.org/ns/oa#>
select ?Attribution (count(distinct ?word) as ?Count) where {
  ?event pvcpf:hasEID ?eventid .
  ?event oa:hasTarget ?word .
  ?annotation ?Attribution ?word .
  values ?Attribution { pvcpp:hasContentAnnotatedWord pvcpp:hasCueAnnotatedWord pvcpp:hasSourceAnnotatedWord }
} group by ?Attribution
"""


def test_parse_q4_listing_matches_builtin():
    parsed = parse_query(Q4_TEXT)
    builtin, _ = builtin_query("q4")
    s = store_of(_q4_fixture())
    assert evaluate(s, parsed).rows == evaluate(s, builtin).rows


def test_parse_filters_and_optional():
    q = parse_query('SELECT DISTINCT ?w WHERE { ?w a nif:Word . OPTIONAL { ?w nif:lemma ?l } '
                    'FILTER (lcase(?a) != "said") FILTER (contains(?a, "ai")) ?w nif:anchorOf ?a }')
    assert q.distinct and q.optional == [(Var("w"), NIF.lemma, Var("l"))]
    assert [f.op for f in q.filters] == ["ine", "contains"]
    w1, w2 = IRI(EX + "w1"), IRI(EX + "w2")
    s = store_of([(w1, RDF.type, NIF.Word), (w1, NIF.anchorOf, Literal("SAID")),
                  (w2, RDF.type, NIF.Word), (w2, NIF.anchorOf, Literal("bait"))])
    assert evaluate(s, q).rows == [(w2,)]


@pytest.mark.parametrize("bad", [
    "SELECT ?x WHERE { ?x a }",
    "SELECT ?x WHERE { ?x a nif:Word",
    "SELECT ?x WHERE { ?x undeclared:p ?y }",
    "SELECT (sum(?x) as ?s) WHERE { ?x a nif:Word }",
    "ASK { ?x a nif:Word }",
    "SELECT ?x WHERE { ?x a nif:Word } LIMIT 5",
    "SELECT ?x WHERE { FILTER (?x > 3) }",
])
def test_parse_errors(bad):
    with pytest.raises(QuerySyntaxError):
        parse_query(bad)


def test_filter_semantics():
    b = {"a": Literal("Said")}
    assert Filter(("a",), "ieq", "said").test(b)
    assert not Filter(("a",), "ine", "SAID").test(b)
    assert Filter(("a",), "icontains", "AI").test(b)
    assert Filter(("missing", "a"), "eq", Literal("Said")).test(b)
    assert not Filter(("missing",), "ne", "x").test(b)


# ---------------------------------------------------------------------------
# properties

LAYER_PREDICATES = {PVCPF.hasEID, OA.hasTarget, PVCPF.refersToEvent, PVCPF.hasFactValue, PVCPF.hasRelativeSource}


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(["q1", "q2", "q3", "q4", "q5", "q6"]))
def test_split_loading_equals_bundle(seed, question):
    quads = random_store_quads(random.Random(seed), 300)
    factbank = [q for q in quads if q.predicate in LAYER_PREDICATES]
    rest = [q for q in quads if q.predicate not in LAYER_PREDICATES]
    query, _ = builtin_query(question)
    bundle = evaluate(QuadStore().add_quads(quads), query)
    split = evaluate(QuadStore().add_quads(rest).add_quads(factbank), query)
    assert bundle.rows == split.rows


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32))
def test_monotonicity(seed):
    rng = random.Random(seed)
    quads = random_store_quads(rng, 400)
    cut = rng.randrange(len(quads) + 1)
    query, _ = builtin_query("q1")
    plain = Query(query.patterns, query.projection, values=query.values)
    small = set(evaluate(QuadStore().add_quads(quads[:cut]), plain).rows)
    big = set(evaluate(QuadStore().add_quads(quads), plain).rows)
    assert small <= big


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32))
def test_parsed_query_matches_oracle(seed):
    quads = random_store_quads(random.Random(seed), 300)
    triples = {(q.subject, q.predicate, q.object) for q in quads}
    q = parse_query(Q4_TEXT)
    assert as_comparable(evaluate(QuadStore().add_quads(quads), q), "Count") == brute_force(triples, q)
