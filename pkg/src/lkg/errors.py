"""Exception hierarchy shared across the package."""

from __future__ import annotations


class LkgError(Exception):
    """Base class for all package errors."""


# -- corpus ------------------------------------------------------------------


class EmptyDocument(LkgError):
    """Document contains no extractable text."""


class MalformedMarkup(LkgError):
    """Document structure cannot be parsed after recovery rules."""


class InvalidParams(LkgError):
    """Synthetic-corpus parameters out of range."""


# -- providers / extraction --------------------------------------------------


class ProviderUnavailable(LkgError):
    """Transport-level failure talking to a remote provider."""


class MalformedOutput(LkgError):
    """Provider reply was not valid structured data after all retries."""


class OracleMissing(LkgError):
    """Oracle mode requested on a document without gold annotations."""


# -- graph -------------------------------------------------------------------


class LabelMismatch(LkgError):
    """Edge endpoints are incompatible with the edge kind's signature."""


class UnknownEndpoint(LkgError):
    """Edge references a node id that is not in the graph."""


class CrossDocumentEdge(LkgError):
    """Edge endpoints belong to different documents."""


class FrozenGraph(LkgError):
    """Mutation attempted after the graph was frozen."""


class SchemaViolation(LkgError):
    """JSON-LD import hit an unknown class/property or a dangling reference."""


class UnknownNode(LkgError):
    """Node id not present in the graph."""


class WrongLabel(LkgError):
    """Node exists but does not carry the label the operation requires."""


# -- index / search ----------------------------------------------------------


class EmptyText(LkgError):
    """Cannot embed empty or whitespace-only text."""


class DimensionMismatch(LkgError):
    """Vector dimension differs from the index dimension."""


class StaleIndex(LkgError):
    """Persisted index was built with a different embedder configuration."""


class EmptyIndex(LkgError):
    """Query issued against an index with no entries."""


# -- evaluation --------------------------------------------------------------


class UnknownQuery(LkgError):
    """Prediction references a query that is not in the gold set."""


class DocumentMismatch(LkgError):
    """Annotation comparison sides reference different documents."""


class ResourceMissing(LkgError):
    """A predictor was run without the resources it needs."""
