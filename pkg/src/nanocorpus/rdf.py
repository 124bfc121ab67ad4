"""Minimal RDF model with deterministic TriG / N-Quads output.

Only the subset of TriG that :func:`serialize_trig` emits is read back by
:func:`parse_trig` (plus long strings and plain integers, which show up in
hand-written files).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Union

from .errors import BlankNodePresent, TrigSyntaxError

RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
XSD_NS = "http://www.w3.org/2001/XMLSchema#"
RDF_TYPE = RDF_NS + "type"
RDF_LANGSTRING = RDF_NS + "langString"
XSD_STRING = XSD_NS + "string"
XSD_INT = XSD_NS + "int"
XSD_INTEGER = XSD_NS + "integer"
XSD_DATETIME = XSD_NS + "dateTime"

# token that stands in for a nanopub's own URI while hashing
PLACEHOLDER_TOKEN = "_:np"

_SCHEME = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")
_IRI_FORBIDDEN = re.compile(r'[\s<>"{}|^`\\]')
_BNODE_LABEL = re.compile(r"^[A-Za-z0-9]+$")
_LANG = re.compile(r"^[A-Za-z]+(-[A-Za-z0-9]+)*$")
_SAFE_LOCAL = re.compile(r"^(?:[A-Za-z0-9_][A-Za-z0-9_\-]*)?$")


@dataclass(frozen=True, slots=True)
class IRI:
    value: str

    def __post_init__(self):
        if not isinstance(self.value, str) or not _SCHEME.match(self.value):
            raise ValueError(f"not an absolute IRI: {self.value!r}")
        if _IRI_FORBIDDEN.search(self.value):
            raise ValueError(f"illegal character in IRI: {self.value!r}")

    def __str__(self):
        return self.value


@dataclass(frozen=True, slots=True)
class Literal:
    lexical: str
    datatype: str = XSD_STRING
    lang: str | None = None

    def __post_init__(self):
        if not isinstance(self.lexical, str):
            raise TypeError("literal lexical form must be a string")
        if self.lang is not None:
            if not _LANG.match(self.lang):
                raise ValueError(f"bad language tag: {self.lang!r}")
            object.__setattr__(self, "lang", self.lang.lower())
            object.__setattr__(self, "datatype", RDF_LANGSTRING)
        elif self.datatype == RDF_LANGSTRING:
            raise ValueError("language-string literal without a language tag")
        if not _SCHEME.match(self.datatype):
            raise ValueError(f"datatype must be an absolute IRI: {self.datatype!r}")

    @classmethod
    def integer(cls, value: int) -> "Literal":
        return cls(str(int(value)), XSD_INT)

    @classmethod
    def datetime(cls, value) -> "Literal":
        text = value if isinstance(value, str) else value.isoformat()
        return cls(text, XSD_DATETIME)

    def __str__(self):
        return self.lexical


@dataclass(frozen=True, slots=True)
class BlankNode:
    label: str

    def __post_init__(self):
        if not _BNODE_LABEL.match(self.label):
            raise ValueError(f"bad blank node label: {self.label!r}")

    def __str__(self):
        return "_:" + self.label


Term = Union[IRI, Literal, BlankNode]


@dataclass(frozen=True, slots=True)
class Quad:
    subject: Term
    predicate: IRI
    object: Term
    graph: IRI

    def __post_init__(self):
        if not isinstance(self.subject, (IRI, BlankNode)):
            raise TypeError(f"subject must be an IRI or blank node, got {self.subject!r}")
        if not isinstance(self.predicate, IRI):
            raise TypeError(f"predicate must be an IRI, got {self.predicate!r}")
        if not isinstance(self.object, (IRI, BlankNode, Literal)):
            raise TypeError(f"bad object {self.object!r}")
        if not isinstance(self.graph, IRI):
            raise TypeError(f"graph must be an IRI, got {self.graph!r}")

    def in_graph(self, graph: IRI) -> "Quad":
        return Quad(self.subject, self.predicate, self.object, graph)


class Dataset:
    """Ordered multiset of quads with a prefix map."""

    __slots__ = ("_quads", "_prefixes")

    def __init__(self, quads: Iterable[Quad] = (), prefixes: Mapping[str, str] | None = None):
        self._quads = tuple(quads)
        self._prefixes = MappingProxyType(dict(prefixes or {}))

    @property
    def quads(self) -> tuple[Quad, ...]:
        return self._quads

    @property
    def prefixes(self) -> Mapping[str, str]:
        return self._prefixes

    def __iter__(self) -> Iterator[Quad]:
        return iter(self._quads)

    def __len__(self):
        return len(self._quads)

    def quad_set(self) -> frozenset[Quad]:
        return frozenset(self._quads)

    def graphs(self) -> list[IRI]:
        seen = {}
        for q in self._quads:
            seen.setdefault(q.graph, None)
        return list(seen)

    def graph(self, name: IRI) -> list[Quad]:
        return [q for q in self._quads if q.graph == name]

    def with_prefixes(self, prefixes: Mapping[str, str]) -> "Dataset":
        return Dataset(self._quads, prefixes)

    def __repr__(self):
        return f"Dataset({len(self._quads)} quads)"


# ---------------------------------------------------------------------------
# N-Quads

def escape_string(s: str) -> str:
    return (
        s.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\r", "\\r")
        .replace("\t", "\\t")
    )


def nquads_term(term: Term) -> str:
    if isinstance(term, IRI):
        return f"<{term.value}>"
    if isinstance(term, BlankNode):
        return f"_:{term.label}"
    body = f'"{escape_string(term.lexical)}"'
    if term.lang:
        return f"{body}@{term.lang}"
    if term.datatype == XSD_STRING:
        return body
    return f"{body}^^<{term.datatype}>"


def term_key(term: Term) -> str:
    """Total order over terms used for all deterministic sorting."""
    return nquads_term(term)


def quad_key(q: Quad) -> tuple[str, str, str, str]:
    return (term_key(q.graph), term_key(q.subject), term_key(q.predicate), term_key(q.object))


def _canonical_iri(value: str, placeholder: str) -> str:
    if value.startswith(placeholder):
        return PLACEHOLDER_TOKEN + value[len(placeholder):]
    return f"<{value}>"


def canonical_nquads(dataset: Iterable[Quad], placeholder: str) -> str:
    """Sorted, deduplicated N-Quads with the placeholder IRI masked.

    Any IRI equal to ``placeholder`` or starting with it is written as
    ``_:np`` followed by the remaining suffix.
    """
    lines = set()
    for q in dataset:
        parts = []
        for t in (q.subject, q.predicate, q.object, q.graph):
            if isinstance(t, BlankNode):
                raise BlankNodePresent(f"blank node {t} in quad {q}")
            if isinstance(t, IRI):
                parts.append(_canonical_iri(t.value, placeholder))
            else:
                parts.append(nquads_term(t))
        lines.add(" ".join(parts) + " .\n")
    return "".join(sorted(lines))


def serialize_nquads(dataset: Iterable[Quad]) -> str:
    return "".join(
        f"{nquads_term(q.subject)} {nquads_term(q.predicate)} {nquads_term(q.object)} {nquads_term(q.graph)} .\n"
        for q in sorted(set(dataset), key=quad_key)
    )


# ---------------------------------------------------------------------------
# TriG output

class _Shortener:
    def __init__(self, prefixes: Mapping[str, str]):
        # longest namespace wins
        self._ns = sorted(prefixes.items(), key=lambda kv: (-len(kv[1]), kv[0]))

    def iri(self, value: str) -> str:
        for prefix, ns in self._ns:
            if value.startswith(ns):
                local = value[len(ns):]
                if _SAFE_LOCAL.match(local):
                    return f"{prefix}:{local}"
        return f"<{value}>"

    def term(self, t: Term) -> str:
        if isinstance(t, IRI):
            return self.iri(t.value)
        if isinstance(t, BlankNode):
            return f"_:{t.label}"
        body = f'"{escape_string(t.lexical)}"'
        if t.lang:
            return f"{body}@{t.lang}"
        if t.datatype == XSD_STRING:
            return body
        return f"{body}^^{self.iri(t.datatype)}"


def serialize_trig(dataset: Dataset) -> str:
    short = _Shortener(dataset.prefixes)
    out = [f"@prefix {p}: <{ns}> .\n" for p, ns in sorted(dataset.prefixes.items())]

    by_graph: dict[IRI, dict[Term, dict[IRI, list[Term]]]] = {}
    for q in sorted(set(dataset), key=quad_key):
        by_graph.setdefault(q.graph, {}).setdefault(q.subject, {}).setdefault(q.predicate, []).append(q.object)

    for graph, subjects in by_graph.items():
        out.append(f"\n{short.term(graph)} {{\n")
        for subject, preds in subjects.items():
            chunks = []
            for pred, objs in preds.items():
                p = "a" if pred.value == RDF_TYPE else short.term(pred)
                chunks.append(f"{p} " + ", ".join(short.term(o) for o in objs))
            out.append(f"  {short.term(subject)} " + " ;\n    ".join(chunks) + " .\n")
        out.append("}\n")
    return "".join(out)


# ---------------------------------------------------------------------------
# TriG input

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<iriref><[^<>"{}|^`\\\s]*>)
  | (?P<longstr>\"\"\"(?:[^"\\]|\\.|"(?!""))*\"\"\"|'''(?:[^'\\]|\\.|'(?!''))*''')
  | (?P<str>"(?:[^"\\\n\r]|\\.)*"|'(?:[^'\\\n\r]|\\.)*')
  | (?P<langtag>@[A-Za-z]+(?:-[A-Za-z0-9]+)*)
  | (?P<dtmark>\^\^)
  | (?P<bnode>_:[A-Za-z0-9]+)
  | (?P<number>[+-]?\d+(?![\w:]))
  | (?P<pname>(?:[A-Za-z][\w\-]*)?:(?:[\w\-%]|\.(?=[\w\-%]))*)
  | (?P<keyword>[A-Za-z]+)
  | (?P<punct>[{}.;,\[\]()])
    """,
    re.VERBOSE | re.DOTALL,
)

_ESCAPES = {"t": "\t", "n": "\n", "r": "\r", "b": "\b", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


def _unescape(body: str, line: int, col: int) -> str:
    out = []
    i = 0
    while i < len(body):
        c = body[i]
        if c != "\\":
            out.append(c)
            i += 1
            continue
        nxt = body[i + 1 : i + 2]
        if nxt in _ESCAPES:
            out.append(_ESCAPES[nxt])
            i += 2
        elif nxt in ("u", "U"):
            width = 4 if nxt == "u" else 8
            hexdigits = body[i + 2 : i + 2 + width]
            try:
                out.append(chr(int(hexdigits, 16)))
            except ValueError:
                raise TrigSyntaxError(line, col, "bad unicode escape") from None
            i += 2 + width
        else:
            raise TrigSyntaxError(line, col, f"bad escape \\{nxt}")
    return "".join(out)


class _Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind, self.text, self.line, self.col = kind, text, line, col

    def __repr__(self):
        return f"{self.kind}:{self.text!r}@{self.line}:{self.col}"


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise TrigSyntaxError(line, pos - line_start + 1, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            tokens.append(_Token(kind, chunk, line, pos - line_start + 1))
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


class _TrigParser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0
        self.prefixes: dict[str, str] = {}
        self.quads: list[Quad] = []

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def error(self, message, tok=None):
        tok = tok or self.tok
        return TrigSyntaxError(tok.line, tok.col, message)

    def advance(self) -> _Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect_punct(self, ch):
        t = self.tok
        if t.kind != "punct" or t.text != ch:
            raise self.error(f"expected {ch!r}, found {t.text or 'end of input'!r}")
        self.i += 1

    def parse(self) -> Dataset:
        while self.tok.kind != "eof":
            t = self.tok
            if t.kind == "langtag" and t.text == "@prefix":
                self.advance()
                self.prefix_decl(dot=True)
            elif t.kind == "keyword" and t.text.upper() == "PREFIX":
                self.advance()
                self.prefix_decl(dot=False)
            elif t.kind == "keyword" and t.text.upper() == "GRAPH":
                self.advance()
                self.graph_block()
            elif t.kind in ("iriref", "pname"):
                self.graph_block()
            else:
                raise self.error(f"expected a prefix declaration or graph block, found {t.text!r}")
        return Dataset(self.quads, self.prefixes)

    def prefix_decl(self, dot: bool):
        t = self.advance()
        if t.kind != "pname" or not t.text.endswith(":"):
            raise self.error("expected prefix name", t)
        ns = self.advance()
        if ns.kind != "iriref":
            raise self.error("expected namespace IRI", ns)
        self.prefixes[t.text[:-1]] = ns.text[1:-1]
        if dot:
            self.expect_punct(".")

    def iri(self, t: _Token) -> IRI:
        try:
            if t.kind == "iriref":
                return IRI(_unescape(t.text[1:-1], t.line, t.col))
            if t.kind == "pname":
                prefix, _, local = t.text.partition(":")
                if prefix not in self.prefixes:
                    raise self.error(f"undeclared prefix {prefix!r}", t)
                return IRI(self.prefixes[prefix] + local)
        except ValueError as exc:
            raise self.error(str(exc), t) from None
        raise self.error(f"expected IRI, found {t.text!r}", t)

    def graph_block(self):
        graph = self.iri(self.advance())
        self.expect_punct("{")
        while not (self.tok.kind == "punct" and self.tok.text == "}"):
            if self.tok.kind == "eof":
                raise self.error("unclosed graph block")
            self.triples(graph)
        self.advance()

    def triples(self, graph: IRI):
        t = self.advance()
        if t.kind == "bnode":
            subject: Term = BlankNode(t.text[2:])
        else:
            subject = self.iri(t)
        while True:
            pt = self.advance()
            if pt.kind == "keyword" and pt.text == "a":
                pred = IRI(RDF_TYPE)
            else:
                pred = self.iri(pt)
            while True:
                self.quads.append(Quad(subject, pred, self.object(), graph))
                if self.tok.kind == "punct" and self.tok.text == ",":
                    self.advance()
                    continue
                break
            if self.tok.kind == "punct" and self.tok.text == ";":
                while self.tok.kind == "punct" and self.tok.text == ";":
                    self.advance()
                if self.tok.kind == "punct" and self.tok.text in ".}":
                    break
                continue
            break
        if self.tok.kind == "punct" and self.tok.text == ".":
            self.advance()
        elif not (self.tok.kind == "punct" and self.tok.text == "}"):
            raise self.error(f"expected '.' or '}}', found {self.tok.text or 'end of input'!r}")

    def object(self) -> Term:
        t = self.advance()
        if t.kind in ("iriref", "pname"):
            return self.iri(t)
        if t.kind == "bnode":
            return BlankNode(t.text[2:])
        if t.kind == "number":
            return Literal(str(int(t.text)), XSD_INTEGER)
        if t.kind in ("str", "longstr"):
            body = t.text[3:-3] if t.kind == "longstr" else t.text[1:-1]
            lexical = _unescape(body, t.line, t.col)
            if self.tok.kind == "langtag":
                return Literal(lexical, lang=self.advance().text[1:])
            if self.tok.kind == "dtmark":
                self.advance()
                return Literal(lexical, self.iri(self.advance()).value)
            return Literal(lexical)
        if t.kind == "keyword" and t.text in ("true", "false"):
            return Literal(t.text, XSD_NS + "boolean")
        raise self.error(f"expected object, found {t.text or 'end of input'!r}", t)


def parse_trig(text: str) -> Dataset:
    return _TrigParser(text).parse()
