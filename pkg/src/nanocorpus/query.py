"""In-memory quad store and a small basic-graph-pattern evaluator.

Patterns are matched against the union of the loaded graphs.  The evaluator
orders patterns by how many quads their constants match, then runs an
index nested-loop join.  Results are always sorted, so the plan never shows
in the output.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

from .errors import MissingLayer, QuerySyntaxError, UnboundProjection, UnknownQuestion, VerificationFailure
from .nanopub import Nanopub, verify
from .rdf import IRI, XSD_INTEGER, BlankNode, Literal, Quad, Term, term_key
from .vocab import ATTRIBUTION_ROLES, NIF, OA, PREFIXES, PVCP, PVCPF, PVCPP, RDF

ASSERTIONS_ONLY = "assertions-only"
ALL_GRAPHS = "all-graphs"


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return "?" + self.name


PatternTerm = Union[IRI, Literal, BlankNode, Var]
Pattern = tuple[PatternTerm, PatternTerm, PatternTerm]
Triple = tuple[Term, IRI, Term]


class QuadStore:
    def __init__(self):
        self.quads: list[Quad] = []
        self.nanopubs: dict[str, Nanopub] = {}
        self._seen: set[Quad] = set()
        self._triples: set[Triple] = set()
        self._by_graph: dict[IRI, list[Quad]] = {}
        self._sp: dict[tuple, set] = {}
        self._po: dict[tuple, set] = {}
        self._s: dict[Term, set] = {}
        self._p: dict[IRI, set] = {}
        self._o: dict[Term, set] = {}

    @property
    def size(self) -> int:
        return len(self.quads)

    def __len__(self):
        return len(self.quads)

    def add(self, quad: Quad):
        if quad in self._seen:
            return
        self._seen.add(quad)
        self.quads.append(quad)
        self._by_graph.setdefault(quad.graph, []).append(quad)
        t = (quad.subject, quad.predicate, quad.object)
        if t in self._triples:
            return
        self._triples.add(t)
        s, p, o = t
        self._sp.setdefault((s, p), set()).add(t)
        self._po.setdefault((p, o), set()).add(t)
        self._s.setdefault(s, set()).add(t)
        self._p.setdefault(p, set()).add(t)
        self._o.setdefault(o, set()).add(t)

    def add_quads(self, quads: Iterable[Quad]) -> "QuadStore":
        for q in quads:
            self.add(q)
        return self

    def load(self, nanopubs: Iterable[Nanopub], scope: str = ASSERTIONS_ONLY) -> "QuadStore":
        if scope not in (ASSERTIONS_ONLY, ALL_GRAPHS):
            raise ValueError(f"unknown load scope {scope!r}")
        for np in nanopubs:
            report = verify(np)
            if not report.valid:
                raise VerificationFailure(np.uri, report.reason)
            self.nanopubs[np.uri] = np
            self.add_quads(np.assertion if scope == ASSERTIONS_ONLY else np.quads())
        return self

    def graph(self, g: IRI) -> list[Quad]:
        return list(self._by_graph.get(g, ()))

    def triples(self) -> set[Triple]:
        return self._triples

    def has_predicate(self, p: IRI) -> bool:
        return bool(self._p.get(p))

    def match(self, s=None, p=None, o=None) -> Iterable[Triple]:
        if s is not None and p is not None:
            hits = self._sp.get((s, p), ())
            return [t for t in hits if o is None or t[2] == o]
        if p is not None and o is not None:
            return self._po.get((p, o), ())
        if s is not None:
            hits = self._s.get(s, ())
            return [t for t in hits if o is None or t[2] == o]
        if p is not None:
            return self._p.get(p, ())
        if o is not None:
            return self._o.get(o, ())
        return self._triples


@dataclass(frozen=True)
class Filter:
    """Compare the first bound variable of ``vars`` against ``value``.

    ops: eq, ne, ieq, ine (case-insensitive), contains, icontains.
    """

    vars: tuple[str, ...]
    op: str
    value: object

    def test(self, binding: Mapping[str, Term]) -> bool:
        term = next((binding[v] for v in self.vars if binding.get(v) is not None), None)
        if term is None:
            return False
        if isinstance(self.value, (IRI, Literal, BlankNode)):
            if self.op == "eq":
                return term == self.value
            if self.op == "ne":
                return term != self.value
        have, want = str(term), str(self.value)
        if self.op in ("ieq", "ine", "icontains"):
            have, want = have.lower(), want.lower()
        if self.op in ("eq", "ieq"):
            return have == want
        if self.op in ("ne", "ine"):
            return have != want
        if self.op in ("contains", "icontains"):
            return want in have
        raise ValueError(f"unknown filter op {self.op!r}")


@dataclass(frozen=True)
class Count:
    target: tuple[str, ...]
    alias: str = "Count"
    distinct: bool = True


@dataclass
class Query:
    patterns: list[Pattern]
    projection: list[str]
    values: dict[str, list[Term]] = field(default_factory=dict)
    filters: list[Filter] = field(default_factory=list)
    optional: list[Pattern] = field(default_factory=list)
    distinct: bool = False
    group_by: list[str] | None = None
    count: Count | None = None
    having_min: int | None = None

    def pattern_vars(self) -> set[str]:
        out = set(self.values)
        for pat in list(self.patterns) + list(self.optional):
            out.update(t.name for t in pat if isinstance(t, Var))
        return out


@dataclass
class BindingTable:
    columns: list[str]
    rows: list[tuple]

    def __post_init__(self):
        for r in self.rows:
            if len(r) != len(self.columns):
                raise ValueError("row arity does not match the column count")

    def __len__(self):
        return len(self.rows)

    def as_strings(self) -> list[tuple[str, ...]]:
        return [tuple(render(t) for t in row) for row in self.rows]

    def records(self) -> list[dict[str, str]]:
        return [dict(zip(self.columns, row)) for row in self.as_strings()]


def render(term) -> str:
    if term is None:
        return ""
    if isinstance(term, IRI):
        return term.value
    if isinstance(term, Literal):
        return term.lexical
    return str(term)


# ---------------------------------------------------------------------------
# evaluation

def _bind(pattern: Pattern, binding: Mapping[str, Term]):
    return tuple(binding.get(t.name) if isinstance(t, Var) else t for t in pattern)


def _extend(pattern: Pattern, triple: Triple, binding: dict, values: Mapping[str, set]) -> dict | None:
    out = None
    for pt, val in zip(pattern, triple):
        if not isinstance(pt, Var):
            continue
        current = (out or binding).get(pt.name)
        if current is not None:
            if current != val:
                return None
            continue
        allowed = values.get(pt.name)
        if allowed is not None and val not in allowed:
            return None
        if out is None:
            out = dict(binding)
        out[pt.name] = val
    return out if out is not None else dict(binding)


def _estimate(store: QuadStore, pattern: Pattern) -> int:
    s, p, o = (None if isinstance(t, Var) else t for t in pattern)
    return len(store.match(s, p, o))


def plan(store: QuadStore, patterns: Sequence[Pattern]) -> list[Pattern]:
    """Greedy order: cheapest first, then cheapest pattern sharing a bound variable."""
    remaining = list(patterns)
    cost = {id(p): _estimate(store, p) for p in remaining}
    bound: set[str] = set()
    ordered = []
    while remaining:
        connected = [p for p in remaining if any(isinstance(t, Var) and t.name in bound for t in p)]
        pool = connected or remaining
        best = min(pool, key=lambda p: cost[id(p)])
        remaining.remove(best)
        ordered.append(best)
        bound.update(t.name for t in best if isinstance(t, Var))
    return ordered


def match_bgp(store: QuadStore, patterns: Sequence[Pattern], values: Mapping[str, Iterable[Term]] | None = None
              ) -> list[dict[str, Term]]:
    allowed = {k: set(v) for k, v in (values or {}).items()}
    solutions: list[dict[str, Term]] = [{}]
    for pattern in plan(store, patterns):
        nxt = []
        for sol in solutions:
            s, p, o = _bind(pattern, sol)
            for triple in store.match(s, p, o):
                ext = _extend(pattern, triple, sol, allowed)
                if ext is not None:
                    nxt.append(ext)
        solutions = nxt
        if not solutions:
            break
    # values on variables that no pattern mentions act as an extra join
    for name, terms in allowed.items():
        if not any(isinstance(t, Var) and t.name == name for pat in patterns for t in pat):
            solutions = [dict(sol, **{name: t}) for sol in solutions for t in sorted(terms, key=term_key)]
    return solutions


def _left_join(store: QuadStore, solutions: list[dict], pattern: Pattern) -> list[dict]:
    out = []
    for sol in solutions:
        s, p, o = _bind(pattern, sol)
        ext = [e for t in store.match(s, p, o) if (e := _extend(pattern, t, sol, {})) is not None]
        out.extend(ext or [sol])
    return out


def _row_key(row) -> tuple:
    return tuple("" if t is None else term_key(t) for t in row)


def check_query(query: Query):
    known = query.pattern_vars()
    if query.count is not None:
        known.add(query.count.alias)
    for v in list(query.projection) + list(query.group_by or []):
        if v not in known:
            raise UnboundProjection(v)


def finish(solutions: list[dict], query: Query) -> BindingTable:
    """Filters, grouping/counting, projection and sorting over raw solutions."""
    solutions = [s for s in solutions if all(f.test(s) for f in query.filters)]

    if query.count is not None:
        keys = list(query.group_by or [])
        groups: dict[tuple, list] = {}
        if not keys:
            groups[()] = []
        for sol in solutions:
            groups.setdefault(tuple(sol.get(k) for k in keys), []).append(sol)
        rows = []
        target = query.count.target
        for gk, members in groups.items():
            items = [tuple(m.get(v) for v in target) for m in members]
            items = [it for it in items if all(x is not None for x in it)]
            n = len(set(items)) if query.count.distinct else len(items)
            if query.having_min is not None and n < query.having_min:
                continue
            full = dict(zip(keys, gk))
            full[query.count.alias] = Literal(str(n), XSD_INTEGER)
            rows.append(tuple(full.get(c) for c in query.projection))
    else:
        rows = [tuple(sol.get(v) for v in query.projection) for sol in solutions]

    if query.distinct or query.count is not None:
        rows = list(dict.fromkeys(rows))
    rows.sort(key=_row_key)
    return BindingTable(list(query.projection), rows)


def evaluate(store: QuadStore, query: Query) -> BindingTable:
    check_query(query)
    solutions = match_bgp(store, query.patterns, query.values)
    for pat in query.optional:
        solutions = _left_join(store, solutions, pat)
    return finish(solutions, query)


# ---------------------------------------------------------------------------
# the case-study questions

def _v(*names: str) -> list[Var]:
    return [Var(n) for n in names]


ROLE_PREDICATES = ATTRIBUTION_ROLES


def _need(store: QuadStore, *layers: str):
    for layer in layers:
        if layer == "factbank" and not store.has_predicate(PVCPF.hasEID):
            raise MissingLayer("factbank")
        if layer == "parc" and not any(store.has_predicate(p) for p in ROLE_PREDICATES.values()):
            raise MissingLayer("parc")


def _role(name: str) -> IRI:
    try:
        return ROLE_PREDICATES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown attribution component {name!r} (source, cue or content)") from None


def builtin_query(question: str, params: Mapping | None = None) -> tuple[Query, tuple[str, ...]]:
    """Compile one of q1..q6 into a Query; also return the layers it needs."""
    params = dict(params or {})
    q = question.lower()
    event, eid, word, text, fact, value, source, attr = _v(
        "event", "eID", "word", "textID", "fact", "factValue", "relativeSource", "attribution")
    event_word = [
        (event, PVCPF.hasEID, eid),
        (event, OA.hasTarget, word),
        (word, PVCP.isPartOfText, text),
    ]
    facts = [
        (fact, PVCPF.refersToEvent, event),
        (fact, PVCPF.hasFactValue, value),
        (fact, PVCPF.hasRelativeSource, source),
    ]

    if q == "q1":
        roles = params.get("roles") or ("cue", "content")
        pats = event_word + [(word, NIF.anchorOf, Var("eventWord"))] + facts + [
            (attr, Var("role"), word),
            (attr, PVCPP.hasSourceText, Var("sourcePhrase")),
        ]
        return Query(pats, ["textID", "eID", "eventWord", "factValue", "relativeSource", "sourcePhrase"],
                     values={"role": [_role(r) for r in roles]}, distinct=True), ("parc", "factbank")

    if q == "q2":
        return Query(event_word + facts, ["textID", "eID", "Count"], group_by=["textID", "eID"],
                     count=Count(("relativeSource", "factValue")), having_min=2), ("factbank",)

    if q == "q3":
        return Query(event_word + facts, ["textID", "factValue", "Count"], group_by=["textID", "factValue"],
                     count=Count(("fact",))), ("factbank",)

    if q == "q4":
        of = params.get("of") or "attribution"
        if of == "attribution":
            pats = [
                (event, PVCPF.hasEID, Var("eventid")),
                (event, OA.hasTarget, word),
                (Var("annotation"), Var("Attribution"), word),
            ]
            return Query(pats, ["Attribution", "Count"], values={"Attribution": list(ROLE_PREDICATES.values())},
                         group_by=["Attribution"], count=Count(("word",))), ("parc", "factbank")
        column = {"source": "relativeSource", "factvalue": "factValue"}.get(of)
        if column is None:
            raise ValueError(f"q4 counts attribution, source or factvalue, not {of!r}")
        return Query(facts[1:], [column, "Count"], group_by=[column], count=Count(("fact",))), ("factbank",)

    if q == "q5":
        component = params.get("component") or "source"
        pats = [(event, PVCPF.hasEID, eid), (event, OA.hasTarget, word), (attr, _role(component), word)]
        return Query(pats, ["Count"], group_by=[], count=Count(("event",))), ("parc", "factbank")

    if q == "q6":
        lemma = params.get("lemma") or "surprise"
        label = params.get("label") or "cue"
        pats = [
            (attr, _role(label), word),
            (word, NIF.anchorOf, Var("anchor")),
            (word, PVCP.isPartOfText, text),
        ]
        return Query(pats, ["textID", "word", "anchor"], optional=[(word, NIF.lemma, Var("lemma"))],
                     filters=[Filter(("lemma", "anchor"), "ieq", lemma)], distinct=True), ("parc",)

    raise UnknownQuestion(f"unknown question {question!r} (expected q1..q6)")


BUILTINS = ("q1", "q2", "q3", "q4", "q5", "q6")


def run_builtin(store: QuadStore, question: str, params: Mapping | None = None) -> BindingTable:
    query, layers = builtin_query(question, params)
    _need(store, *layers)
    return evaluate(store, query)


# ---------------------------------------------------------------------------
# output

def export(table: BindingTable, fmt: str) -> bytes:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(table.columns)
        writer.writerows(table.as_strings())
        return buf.getvalue().encode("utf-8")
    if fmt == "json":
        return json.dumps(table.records(), ensure_ascii=False, indent=2).encode("utf-8")
    raise ValueError(f"unknown export format {fmt!r}")


def format_table(table: BindingTable) -> str:
    rows = [tuple(table.columns)] + table.as_strings()
    widths = [max(len(r[i]) for r in rows) for i in range(len(table.columns))]
    return "".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n" for r in rows)


# ---------------------------------------------------------------------------
# a SPARQL-shaped text form for file-defined queries

_SPARQL_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<var>[?$][A-Za-z_][\w]*)
  | (?P<iri><[^<>"\s]*>)
  | (?P<str>"(?:[^"\\]|\\.)*")
  | (?P<langtag>@[A-Za-z]+(?:-[A-Za-z0-9]+)*)
  | (?P<dt>\^\^)
  | (?P<num>\d+)
  | (?P<pname>[A-Za-z][\w\-]*:[\w\-]*|:[\w\-]+)
  | (?P<word>[A-Za-z_]+)
  | (?P<op>!=|=|>=|>)
  | (?P<punct>[{}().,;*])
    """,
    re.VERBOSE,
)


class _QueryParser:
    def __init__(self, text: str):
        self.toks = []
        pos = 0
        while pos < len(text):
            m = _SPARQL_TOKEN.match(text, pos)
            if not m:
                raise QuerySyntaxError(f"unexpected character {text[pos]!r} at offset {pos}")
            if m.lastgroup != "ws":
                self.toks.append((m.lastgroup, m.group()))
            pos = m.end()
        self.toks.append(("eof", ""))
        self.i = 0
        self.prefixes = dict(PREFIXES)

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def word(self, *words) -> bool:
        kind, text = self.peek()
        if kind == "word" and text.lower() in words:
            self.i += 1
            return True
        return False

    def expect(self, text):
        kind, got = self.next()
        if got.lower() != text:
            raise QuerySyntaxError(f"expected {text!r}, found {got!r}")

    def term(self, allow_var=True):
        kind, text = self.next()
        if kind == "var" and allow_var:
            return Var(text[1:])
        if kind == "iri":
            return IRI(text[1:-1])
        if kind == "pname":
            prefix, _, local = text.partition(":")
            if prefix not in self.prefixes:
                raise QuerySyntaxError(f"undeclared prefix {prefix!r}")
            return IRI(self.prefixes[prefix] + local)
        if kind == "word" and text == "a":
            return RDF.type
        if kind == "num":
            return Literal(text, XSD_INTEGER)
        if kind == "str":
            body = json.loads(text)
            nk, nt = self.peek()
            if nk == "langtag":
                self.next()
                return Literal(body, lang=nt[1:])
            if nk == "dt":
                self.next()
                return Literal(body, self.term(allow_var=False).value)
            return Literal(body)
        raise QuerySyntaxError(f"expected a term, found {text!r}")

    def parse(self) -> Query:
        while self.word("prefix"):
            kind, name = self.next()
            iri_kind, iri = self.next()
            if kind != "pname" or not name.endswith(":") or iri_kind != "iri":
                raise QuerySyntaxError("malformed PREFIX declaration")
            self.prefixes[name[:-1]] = iri[1:-1]
        if not self.word("select"):
            raise QuerySyntaxError("expected SELECT")
        distinct = self.word("distinct")
        projection, count = [], None
        while True:
            kind, text = self.peek()
            if kind == "var":
                self.next()
                projection.append(text[1:])
            elif text == "(":
                self.next()
                if not self.word("count"):
                    raise QuerySyntaxError("only count(...) aggregates are supported")
                self.expect("(")
                cdistinct = self.word("distinct")
                targets = []
                while self.peek()[0] == "var":
                    targets.append(self.next()[1][1:])
                self.expect(")")
                if not self.word("as"):
                    raise QuerySyntaxError("expected AS after count(...)")
                alias = self.next()[1][1:]
                self.expect(")")
                count = Count(tuple(targets), alias, cdistinct)
                projection.append(alias)
            else:
                break
        self.word("where")
        query = Query([], projection, distinct=distinct, count=count)
        self.group(query)
        if self.word("group"):
            if not self.word("by"):
                raise QuerySyntaxError("expected BY after GROUP")
            query.group_by = []
            while self.peek()[0] == "var":
                query.group_by.append(self.next()[1][1:])
        elif count is not None:
            query.group_by = []
        if self.peek()[0] != "eof":
            raise QuerySyntaxError(f"unexpected {self.peek()[1]!r} after query")
        return query

    def group(self, query: Query):
        self.expect("{")
        while True:
            kind, text = self.peek()
            if text == "}":
                self.next()
                return
            if kind == "eof":
                raise QuerySyntaxError("unclosed '{'")
            if text == ".":
                self.next()
            elif self.word("values"):
                var = self.term()
                self.expect("{")
                terms = []
                while self.peek()[1] != "}":
                    terms.append(self.term(allow_var=False))
                self.next()
                query.values[var.name] = terms
            elif self.word("filter"):
                query.filters.append(self.filter())
            elif self.word("optional"):
                self.expect("{")
                query.optional.append((self.term(), self.term(), self.term()))
                if self.peek()[1] == ".":
                    self.next()
                self.expect("}")
            else:
                query.patterns.append((self.term(), self.term(), self.term()))

    def filter(self) -> Filter:
        self.expect("(")
        if self.word("contains"):
            self.expect("(")
            var = self.term()
            self.expect(",")
            value = self.term(allow_var=False)
            self.expect(")")
            self.expect(")")
            return Filter((var.name,), "contains", str(value))
        lower = self.word("lcase")
        if lower:
            self.expect("(")
        var = self.term()
        if lower:
            self.expect(")")
        kind, op = self.next()
        if op not in ("=", "!="):
            raise QuerySyntaxError(f"unsupported filter operator {op!r}")
        value = self.term(allow_var=False)
        self.expect(")")
        if lower:
            return Filter((var.name,), "ieq" if op == "=" else "ine", str(value))
        return Filter((var.name,), "eq" if op == "=" else "ne", value)


def parse_query(text: str) -> Query:
    """Parse the SELECT / WHERE / VALUES / FILTER / OPTIONAL / GROUP BY subset."""
    return _QueryParser(text).parse()
