"""Fact-masked provision retrieval.

Embeds the query fact, retrieves the top-k most similar facts, walks each
neighbor's complete reasoning paths to provisions, and returns provisions
deduplicated with path evidence. In the fact-masked setting (the default) an
in-graph query fact is excluded from neighbor retrieval and its own outgoing
edges contribute no paths, so its linked provisions cannot be recovered
trivially; they can still surface through other facts that share them.

Scoring is for presentation only: a provision's score is the best supporting
neighbor similarity, with ties broken by distinct supporting-fact count and
then by canonical string. Neighbors with non-positive similarity contribute
no evidence.
"""

from __future__ import annotations

from dataclasses import dataclass

from lkg.errors import EmptyIndex, WrongLabel
from lkg.graph import LegalKnowledgeGraph, ReasoningPath
from lkg.index import EmbedderConfig, VectorIndex, embed
from lkg.normalize import ProvisionId
from lkg.ontology import NodeLabel


@dataclass(frozen=True)
class SearchQuery:
    text: str | None = None
    node_id: str | None = None
    k: int = 3
    mask: bool = True

    def __post_init__(self) -> None:
        if (self.text is None) == (self.node_id is None):
            raise ValueError("exactly one of text/node_id must be set")
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class SupportingPath:
    neighbor_fact: str
    similarity: float
    path: ReasoningPath


@dataclass(frozen=True)
class ProvisionHit:
    provision: ProvisionId
    score: float
    supporting_paths: tuple[SupportingPath, ...]


def retrieve_provisions(
    query: SearchQuery,
    graph: LegalKnowledgeGraph,
    index: VectorIndex,
    embedder: EmbedderConfig,
) -> list[ProvisionHit]:
    """Ranked provisions for a query fact, with supporting reasoning paths."""
    if len(index) == 0:
        raise EmptyIndex("no facts indexed")
    if query.node_id is not None:
        node = graph.node(query.node_id)  # raises UnknownNode
        if node.label is not NodeLabel.FACT:
            raise WrongLabel(f"{query.node_id} is {node.label.value}, expected Fact")
        vector = embed(node.text, embedder)
        exclude = frozenset({query.node_id}) if query.mask else frozenset()
    else:
        vector = embed(query.text, embedder)
        exclude = frozenset()

    neighbors = index.query(vector, query.k, exclude=exclude)

    by_provision: dict[str, dict] = {}
    for neighbor_id, similarity in neighbors:
        if similarity <= 0.0:
            continue
        if neighbor_id not in graph.nodes:
            continue
        for path in graph.reasoning_paths(neighbor_id):
            provision_node = graph.node(path.provision)
            canonical = provision_node.provision.canonical()
            slot = by_provision.setdefault(
                canonical,
                {
                    "provision": provision_node.provision,
                    "score": similarity,
                    "facts": set(),
                    "paths": [],
                },
            )
            slot["score"] = max(slot["score"], similarity)
            slot["facts"].add(neighbor_id)
            slot["paths"].append(
                SupportingPath(neighbor_fact=neighbor_id, similarity=similarity, path=path)
            )

    ranked = sorted(
        by_provision.items(),
        key=lambda item: (-item[1]["score"], -len(item[1]["facts"]), item[0]),
    )
    return [
        ProvisionHit(
            provision=slot["provision"],
            score=slot["score"],
            supporting_paths=tuple(slot["paths"]),
        )
        for _, slot in ranked
    ]


def explain(hit: ProvisionHit, graph: LegalKnowledgeGraph) -> str:
    """Human-readable trace: every supporting chain rendered layer by layer."""
    lines = [f"Provision {hit.provision.canonical()} (score {hit.score:.3f})"]
    for support in hit.supporting_paths:
        path = support.path
        fact = graph.node(path.fact)
        application = graph.node(path.application)
        norm = graph.node(path.norm)
        lines.append(
            f"  - Fact: {fact.text}\n"
            f"    Application: {application.text}\n"
            f"    Norm: {norm.text}\n"
            f"    Provision: {hit.provision.canonical()}"
            f" (neighbor similarity {support.similarity:.3f})"
        )
    return "\n".join(lines)
