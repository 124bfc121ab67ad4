"""Nanopublications: four named graphs under a content-hash URI.

A draft nanopub carries a placeholder URI (``<base>DRAFT``).  ``finalize``
hashes the canonical N-Quads of all four graphs with that URI masked, then
rewrites every IRI derived from the placeholder to ``<base><artifact-code>``.
Because the mask is applied to whatever URI the nanopub currently has,
verification is the same computation run on the finalized nanopub.
"""

from __future__ import annotations

import base64
import hashlib
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .errors import BlankNodePresent, CycleDetected, EmptyIndex, InvalidStructure, NotFound
from .rdf import IRI, Dataset, Literal, Quad, Term, canonical_nquads, parse_trig, quad_key, serialize_trig
from .vocab import DCT, NP, NPX, PREFIXES, PROV, RDF

PLACEHOLDER_SEGMENT = "DRAFT"
CODE_LENGTH = 43
_CODE_RE = re.compile(r"^[A-Za-z0-9_\-]{%d}$" % CODE_LENGTH)

HEAD, ASSERTION, PROVENANCE, PUBINFO = "Head", "assertion", "provenance", "pubinfo"


def artifact_code(canonical: str) -> str:
    digest = hashlib.sha256(canonical.encode("utf-8")).digest()
    return base64.urlsafe_b64encode(digest).decode("ascii").rstrip("=")


def base_of(uri: str) -> str:
    return uri[: uri.rfind("/") + 1]


def code_of(uri: str) -> str:
    return uri[uri.rfind("/") + 1 :]


def is_trusty_uri(uri: str) -> bool:
    return bool(_CODE_RE.match(code_of(uri))) and "#" not in uri


def draft_uri(base: str) -> str:
    if not base.endswith("/"):
        base += "/"
    return base + PLACEHOLDER_SEGMENT


@dataclass(frozen=True)
class TrustyRef:
    artifact_code: str
    full_uri: str

    @classmethod
    def parse(cls, uri: str) -> "TrustyRef":
        if not is_trusty_uri(uri):
            raise ValueError(f"not a trusty URI: {uri}")
        return cls(code_of(uri), uri)


def _norm(quads: Iterable[Quad]) -> tuple[Quad, ...]:
    return tuple(sorted(set(quads), key=quad_key))


@dataclass(frozen=True)
class Nanopub:
    """One nanopublication.  Graph contents are kept as sorted quad sets."""

    uri: str
    head: tuple[Quad, ...]
    assertion: tuple[Quad, ...]
    provenance: tuple[Quad, ...]
    pubinfo: tuple[Quad, ...]

    def __post_init__(self):
        for name in ("head", "assertion", "provenance", "pubinfo"):
            object.__setattr__(self, name, _norm(getattr(self, name)))

    def local(self, name: str) -> IRI:
        return IRI(f"{self.uri}#{name}")

    @property
    def this(self) -> IRI:
        return IRI(self.uri)

    @property
    def head_graph(self) -> IRI:
        return self.local(HEAD)

    @property
    def assertion_graph(self) -> IRI:
        return self.local(ASSERTION)

    @property
    def provenance_graph(self) -> IRI:
        return self.local(PROVENANCE)

    @property
    def pubinfo_graph(self) -> IRI:
        return self.local(PUBINFO)

    @property
    def artifact_code(self) -> str:
        return code_of(self.uri)

    @property
    def protected(self) -> bool:
        return Quad(self.this, RDF.type, NPX.ProtectedNanopub, self.pubinfo_graph) in self.pubinfo

    def quads(self) -> tuple[Quad, ...]:
        return self.head + self.assertion + self.provenance + self.pubinfo

    def to_dataset(self, prefixes: Mapping[str, str] | None = None) -> Dataset:
        pm = dict(PREFIXES if prefixes is None else prefixes)
        pm["this"] = self.uri
        pm["sub"] = self.uri + "#"
        return Dataset(self.quads(), pm)

    def to_trig(self) -> str:
        return serialize_trig(self.to_dataset())


def head_quads(uri: str) -> list[Quad]:
    this = IRI(uri)
    g = IRI(f"{uri}#{HEAD}")
    return [
        Quad(this, RDF.type, NP.Nanopublication, g),
        Quad(this, NP.hasAssertion, IRI(f"{uri}#{ASSERTION}"), g),
        Quad(this, NP.hasProvenance, IRI(f"{uri}#{PROVENANCE}"), g),
        Quad(this, NP.hasPublicationInfo, IRI(f"{uri}#{PUBINFO}"), g),
    ]


@dataclass(frozen=True)
class PubInfo:
    """Publication metadata shared by most generated nanopubs."""

    created: str
    creator: str | None = None
    license: str | None = None

    def triples(self, this: IRI) -> list[tuple[Term, IRI, Term]]:
        out = [(this, DCT.created, Literal.datetime(self.created))]
        if self.creator:
            out.append((this, DCT.creator, IRI(self.creator)))
        if self.license:
            out.append((this, DCT.license, IRI(self.license)))
        return out


class NanopubBuilder:
    """Collects triples for a draft nanopub under a placeholder URI.

    >>> b = NanopubBuilder("http://example.org/np/")
    >>> b.assertion(b.local("x"), RDF.type, b.local("Thing"))
    """

    def __init__(self, base: str):
        self.uri = draft_uri(base)
        self._graphs: dict[str, list[tuple]] = {ASSERTION: [], PROVENANCE: [], PUBINFO: []}
        self._protected = False

    @property
    def this(self) -> IRI:
        return IRI(self.uri)

    def local(self, name: str) -> IRI:
        return IRI(f"{self.uri}#{name}")

    @property
    def assertion_graph(self) -> IRI:
        return self.local(ASSERTION)

    def assertion(self, s, p, o):
        self._graphs[ASSERTION].append((s, p, o))

    def provenance(self, s, p, o):
        self._graphs[PROVENANCE].append((s, p, o))

    def pubinfo(self, s, p, o):
        self._graphs[PUBINFO].append((s, p, o))

    def add_pubinfo(self, info: PubInfo):
        for t in info.triples(self.this):
            self.pubinfo(*t)

    def protect(self, flag: bool = True):
        self._protected = flag

    def build(self) -> Nanopub:
        graphs = {}
        for name, triples in self._graphs.items():
            g = self.local(name)
            graphs[name] = [Quad(s, p, o, g) for s, p, o in triples]
        if self._protected:
            graphs[PUBINFO].append(Quad(self.this, RDF.type, NPX.ProtectedNanopub, self.local(PUBINFO)))
        return Nanopub(self.uri, head_quads(self.uri), graphs[ASSERTION], graphs[PROVENANCE], graphs[PUBINFO])

    def finalize(self) -> Nanopub:
        return finalize(self.build())


def structure_problem(np: Nanopub) -> str | None:
    """Return a description of the first structural defect, or None."""
    if set(np.head) != set(head_quads(np.uri)):
        return "head graph does not match the nanopub URI"
    for name in (ASSERTION, PROVENANCE, PUBINFO):
        quads = getattr(np, name)
        if not quads:
            return f"empty {name} graph"
        g = np.local(name)
        if any(q.graph != g for q in quads):
            return f"quad outside the {name} graph"
    if not any(q.subject == np.assertion_graph for q in np.provenance):
        return "provenance says nothing about the assertion graph"
    if not any(q.subject == np.this for q in np.pubinfo):
        return "pubinfo says nothing about the nanopub"
    return None


def _rewrite(term, old: str, new: str):
    if isinstance(term, IRI) and term.value.startswith(old):
        return IRI(new + term.value[len(old):])
    return term


def finalize(draft: Nanopub) -> Nanopub:
    problem = structure_problem(draft)
    if problem:
        raise InvalidStructure(problem)
    canonical = canonical_nquads(draft.quads(), draft.uri)
    final = base_of(draft.uri) + artifact_code(canonical)

    def move(quads):
        return [Quad(*(_rewrite(t, draft.uri, final) for t in (q.subject, q.predicate, q.object, q.graph)))
                for q in quads]

    return Nanopub(final, move(draft.head), move(draft.assertion), move(draft.provenance), move(draft.pubinfo))


@dataclass(frozen=True)
class VerificationReport:
    valid: bool
    reason: str = ""

    def __bool__(self):
        return self.valid


def verify(np: Nanopub) -> VerificationReport:
    problem = structure_problem(np)
    if problem:
        return VerificationReport(False, f"structure: {problem}")
    if not is_trusty_uri(np.uri):
        return VerificationReport(False, "structure: URI carries no artifact code")
    try:
        canonical = canonical_nquads(np.quads(), np.uri)
    except BlankNodePresent:
        return VerificationReport(False, "structure: blank node present")
    if artifact_code(canonical) != np.artifact_code:
        return VerificationReport(False, "hash mismatch")
    return VerificationReport(True)


# ---------------------------------------------------------------------------
# reading nanopubs back from datasets

def nanopubs_from_dataset(ds: Dataset | Iterable[Quad]) -> list[Nanopub]:
    quads = list(ds)
    uris = sorted({q.subject.value for q in quads
                   if q.predicate == RDF.type and q.object == NP.Nanopublication and isinstance(q.subject, IRI)})
    if not uris:
        raise InvalidStructure("no nanopublication head found")
    by_graph: dict[str, list[Quad]] = {}
    for q in quads:
        by_graph.setdefault(q.graph.value, []).append(q)
    out = []
    claimed = set()
    for uri in uris:
        parts = {}
        for name in (HEAD, ASSERTION, PROVENANCE, PUBINFO):
            g = f"{uri}#{name}"
            parts[name] = by_graph.get(g, [])
            claimed.add(g)
        out.append(Nanopub(uri, parts[HEAD], parts[ASSERTION], parts[PROVENANCE], parts[PUBINFO]))
    stray = sorted(set(by_graph) - claimed)
    if stray:
        raise InvalidStructure(f"quads in graph(s) not belonging to any nanopublication: {', '.join(stray)}")
    return out


def read_nanopubs(text: str) -> list[Nanopub]:
    return nanopubs_from_dataset(parse_trig(text))


def read_nanopub(text: str) -> Nanopub:
    nps = read_nanopubs(text)
    if len(nps) != 1:
        raise InvalidStructure(f"expected one nanopublication, found {len(nps)}")
    return nps[0]


# ---------------------------------------------------------------------------
# index nanopubs

@dataclass(frozen=True)
class IndexNanopub:
    nanopub: Nanopub
    elements: tuple[str, ...]
    appends: str | None = None

    @property
    def uri(self) -> str:
        return self.nanopub.uri

    @classmethod
    def of(cls, np: Nanopub) -> "IndexNanopub":
        if not is_index(np):
            raise InvalidStructure(f"{np.uri} is not an index nanopublication")
        elements = tuple(q.object.value for q in np.assertion
                         if q.subject == np.this and q.predicate == NPX.includesElement)
        appends = [q.object.value for q in np.pubinfo if q.subject == np.this and q.predicate == NPX.appendsIndex]
        return cls(np, elements, appends[0] if appends else None)


def is_index(np: Nanopub) -> bool:
    return Quad(np.this, RDF.type, NPX.NanopubIndex, np.pubinfo_graph) in np.pubinfo


def build_index(
    members: Sequence[str],
    metadata: PubInfo,
    previous: str | None = None,
    *,
    base: str,
    title: str | None = None,
) -> IndexNanopub:
    if not members:
        raise EmptyIndex("an index needs at least one member")
    for m in members:
        if not is_trusty_uri(m):
            raise InvalidStructure(f"index member is not a trusty URI: {m}")
    b = NanopubBuilder(base)
    for m in members:
        b.assertion(b.this, NPX.includesElement, IRI(m))
    if metadata.creator:
        b.provenance(b.assertion_graph, PROV.wasAttributedTo, IRI(metadata.creator))
    else:
        b.provenance(b.assertion_graph, PROV.generatedAtTime, Literal.datetime(metadata.created))
    b.pubinfo(b.this, RDF.type, NPX.NanopubIndex)
    if previous:
        b.pubinfo(b.this, NPX.appendsIndex, IRI(previous))
    if title:
        b.pubinfo(b.this, DCT.title, Literal(title))
    b.add_pubinfo(metadata)
    return IndexNanopub.of(b.finalize())


def _lookup(source) -> Callable[[str], Nanopub]:
    if hasattr(source, "fetch"):
        return source.fetch
    return source.__getitem__


def resolve_index(index_uri: str, source) -> list[str]:
    """Member URIs of an index and every index it (transitively) appends to.

    ``source`` is a registry (anything with ``fetch``) or a mapping from
    URI to nanopub.  Oldest index in the chain comes first.
    """
    fetch = _lookup(source)
    chain = []
    seen = set()
    current = index_uri
    while current:
        if current in seen:
            raise CycleDetected(f"append links loop back to {current}")
        seen.add(current)
        try:
            np = fetch(current)
        except NotFound:
            raise
        except KeyError:
            raise NotFound(current) from None
        idx = IndexNanopub.of(np)
        chain.append(idx)
        current = idx.appends
    out: dict[str, None] = {}
    for idx in reversed(chain):
        for el in idx.elements:
            out.setdefault(el, None)
    return list(out)
