"""Exception types shared across the toolkit."""


class NanocorpusError(Exception):
    pass


class TrigSyntaxError(NanocorpusError, SyntaxError):
    def __init__(self, line, column, message):
        self.line = line
        self.column = column
        self.message = message
        super().__init__(f"{message} (line {line}, column {column})")
        self.lineno = line
        self.offset = column


class BlankNodePresent(NanocorpusError):
    pass


class InvalidStructure(NanocorpusError):
    def __init__(self, reason):
        self.reason = reason
        super().__init__(reason)


class EmptyIndex(NanocorpusError):
    pass


class NotFound(NanocorpusError, LookupError):
    def __init__(self, uri):
        self.uri = uri
        super().__init__(f"not found: {uri}")


class CycleDetected(NanocorpusError):
    pass


# ingestion

class UnrecoverableStructure(NanocorpusError):
    def __init__(self, doc_id, reason):
        self.doc_id = doc_id
        self.reason = reason
        super().__init__(f"{doc_id}: {reason}")


class OffsetOutOfBounds(NanocorpusError):
    def __init__(self, relation_id):
        self.relation_id = relation_id
        super().__init__(f"span of {relation_id} falls outside the text")


class MalformedAnnotation(NanocorpusError):
    pass


class TokenResolutionFailure(NanocorpusError):
    def __init__(self, event_id, detail=""):
        self.event_id = event_id
        super().__init__(f"cannot resolve token of {event_id}" + (f": {detail}" if detail else ""))


class UnknownSentence(NanocorpusError):
    def __init__(self, event_id, detail=""):
        self.event_id = event_id
        super().__init__(f"unknown sentence for {event_id}" + (f": {detail}" if detail else ""))


class SentenceSkipDefect(UnknownSentence):
    """Sentence numbering skips after a sentence ending in a double quote."""


# generation

class SpanOutOfBounds(NanocorpusError):
    pass


class DanglingWordReference(NanocorpusError):
    def __init__(self, iri):
        self.iri = iri
        super().__init__(f"dangling: {iri}")


class ManifestError(NanocorpusError):
    pass


class ConfigError(NanocorpusError):
    pass


# query

class UnboundProjection(NanocorpusError):
    def __init__(self, variable):
        self.variable = variable
        super().__init__(f"projected variable ?{variable} is not bound by the query")


class UnknownQuestion(NanocorpusError):
    pass


class MissingLayer(NanocorpusError):
    def __init__(self, corpus):
        self.corpus = corpus
        super().__init__(f"missing annotation layer: {corpus}")


class QuerySyntaxError(NanocorpusError):
    pass


# registry / verification

class VerificationFailure(NanocorpusError):
    def __init__(self, uri, reason=""):
        self.uri = uri
        self.reason = reason
        super().__init__(f"verification failed for {uri}" + (f": {reason}" if reason else ""))


class ProtectedPublicationRefused(NanocorpusError):
    def __init__(self, uri):
        self.uri = uri
        super().__init__(f"refusing to publish protected nanopublication {uri}")


class ConflictingContent(NanocorpusError):
    def __init__(self, uri):
        self.uri = uri
        super().__init__(f"different content already stored under {uri}")


class IncompleteDataset(NanocorpusError):
    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__(f"{len(self.missing)} member(s) missing: " + ", ".join(self.missing))
