"""Closed vocabulary of the graph: node labels, edge kinds, signatures.

Serialized enum values are load-bearing: corpus files, snapshots, prompts,
and the JSON-LD interchange all use them verbatim.
"""

from __future__ import annotations

from enum import Enum


class NodeLabel(str, Enum):
    FACT = "Fact"
    PROVISION = "Provision"
    LEGAL_NORM = "LegalNorm"
    LEGAL_APPLICATION = "LegalApplication"

    def __str__(self) -> str:
        return self.value


class EdgeType(str, Enum):
    """Canonical edge kinds, stored in source -> target direction."""

    DERIVES_NORM = "DerivesNorm"  # Provision -> LegalNorm
    APPLIES_NORM = "AppliesNorm"  # LegalNorm -> LegalApplication
    TO_FACT = "ToFact"            # Fact -> LegalApplication

    def __str__(self) -> str:
        return self.value


class ExtendedEdgeType(str, Enum):
    """Same-category kinds. Representable behind a feature flag; the default
    pipeline never emits them."""

    REFINES_FACT = "RefinesFact"  # Fact -> Fact
    REFINES_NORM = "RefinesNorm"  # LegalNorm -> LegalNorm

    def __str__(self) -> str:
        return self.value


EDGE_SIGNATURES: dict[EdgeType, tuple[NodeLabel, NodeLabel]] = {
    EdgeType.DERIVES_NORM: (NodeLabel.PROVISION, NodeLabel.LEGAL_NORM),
    EdgeType.APPLIES_NORM: (NodeLabel.LEGAL_NORM, NodeLabel.LEGAL_APPLICATION),
    EdgeType.TO_FACT: (NodeLabel.FACT, NodeLabel.LEGAL_APPLICATION),
}

EXTENDED_SIGNATURES: dict[ExtendedEdgeType, tuple[NodeLabel, NodeLabel]] = {
    ExtendedEdgeType.REFINES_FACT: (NodeLabel.FACT, NodeLabel.FACT),
    ExtendedEdgeType.REFINES_NORM: (NodeLabel.LEGAL_NORM, NodeLabel.LEGAL_NORM),
}

NODE_LABEL_VALUES = frozenset(label.value for label in NodeLabel)
EDGE_TYPE_VALUES = frozenset(kind.value for kind in EdgeType)


def coerce_label(value: "NodeLabel | str") -> NodeLabel:
    if isinstance(value, NodeLabel):
        return value
    return NodeLabel(value)


def coerce_edge_type(value: "EdgeType | ExtendedEdgeType | str") -> "EdgeType | ExtendedEdgeType":
    if isinstance(value, (EdgeType, ExtendedEdgeType)):
        return value
    try:
        return EdgeType(value)
    except ValueError:
        return ExtendedEdgeType(value)


def signature_of(kind: "EdgeType | ExtendedEdgeType") -> tuple[NodeLabel, NodeLabel]:
    if isinstance(kind, EdgeType):
        return EDGE_SIGNATURES[kind]
    return EXTENDED_SIGNATURES[kind]
