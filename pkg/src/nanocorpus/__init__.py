"""Corpus-to-nanopublication conversion, verification, querying and local publishing."""

from .nanopub import Nanopub, NanopubBuilder, finalize, read_nanopub, verify
from .query import QuadStore, evaluate, run_builtin
from .rdf import IRI, Literal, Quad, parse_trig, serialize_trig

__all__ = [
    "IRI", "Literal", "Quad", "parse_trig", "serialize_trig",
    "Nanopub", "NanopubBuilder", "finalize", "verify", "read_nanopub",
    "QuadStore", "evaluate", "run_builtin",
]
