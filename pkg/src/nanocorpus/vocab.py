"""Namespaces and vocabulary terms used in generated nanopublications."""

from .rdf import IRI


class Namespace:
    def __init__(self, base: str):
        self.base = base

    def __getattr__(self, name: str) -> IRI:
        if name.startswith("__"):
            raise AttributeError(name)
        return IRI(self.base + name)

    def __getitem__(self, name: str) -> IRI:
        return IRI(self.base + name)

    def __str__(self):
        return self.base


RDF = Namespace("http://www.w3.org/1999/02/22-rdf-syntax-ns#")
RDFS = Namespace("http://www.w3.org/2000/01/rdf-schema#")
XSD = Namespace("http://www.w3.org/2001/XMLSchema#")
NP = Namespace("http://www.nanopub.org/nschema#")
NPX = Namespace("http://purl.org/nanopub/x/")
PROV = Namespace("http://www.w3.org/ns/prov#")
DCT = Namespace("http://purl.org/dc/terms/")
DCAT = Namespace("http://www.w3.org/ns/dcat#")
FOAF = Namespace("http://xmlns.com/foaf/0.1/")
NIF = Namespace("http://persistence.uni-leipzig.org/nlp2rdf/ontologies/nif-core#")
OLIA = Namespace("http://purl.org/olia/olia.owl#")
OA = Namespace("http://www.w3.org/ns/oa#")
PVCP = Namespace("https://w3id.org/provcorp/vocab/")
PVCPP = Namespace("https://w3id.org/provcorp/vocab/parc/")
PVCPF = Namespace("https://w3id.org/provcorp/vocab/FactBank/")

PREFIXES = {
    "rdf": RDF.base,
    "rdfs": RDFS.base,
    "xsd": XSD.base,
    "np": NP.base,
    "npx": NPX.base,
    "prov": PROV.base,
    "dct": DCT.base,
    "dcat": DCAT.base,
    "foaf": FOAF.base,
    "nif": NIF.base,
    "olia": OLIA.base,
    "oa": OA.base,
    "pvcp": PVCP.base,
    "pvcpp": PVCPP.base,
    "pvcpf": PVCPF.base,
}

ATTRIBUTION_ROLES = {
    "source": PVCPP.hasSourceAnnotatedWord,
    "cue": PVCPP.hasCueAnnotatedWord,
    "content": PVCPP.hasContentAnnotatedWord,
}

FACT_VALUES = frozenset({"CT+", "CT-", "CTu", "PR+", "PR-", "PS+", "PS-", "Uu", "other"})

# well-known publication sources -> creator IRIs for document nanopubs
SOURCE_CREATORS = {
    "WALL STREET JOURNAL": "http://dbpedia.org/resource/The_Wall_Street_Journal",
    "WSJ": "http://dbpedia.org/resource/The_Wall_Street_Journal",
    "NEW YORK TIMES": "http://dbpedia.org/resource/The_New_York_Times",
    "NYT": "http://dbpedia.org/resource/The_New_York_Times",
    "ASSOCIATED PRESS": "http://dbpedia.org/resource/Associated_Press",
    "APW": "http://dbpedia.org/resource/Associated_Press",
}
