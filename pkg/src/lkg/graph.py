"""The legal knowledge graph: a typed directed multigraph over text segments.

Nodes carry one of four labels; the three canonical edge kinds connect them
in fixed source/target signatures (Provision->LegalNorm, LegalNorm->
LegalApplication, Fact->LegalApplication), enforced at insertion together
with intra-document scoping. Construction is single-writer; ``freeze()``
turns the graph into an immutable snapshot safe for concurrent readers.

Conventions, stated because degree bookkeeping admits several readings:
parallel edges each count toward degrees; a "segment self-loop" is an edge
whose endpoints share a segment_id and it increments the self-loop count of
both endpoint labels; multiplicity is edge count over distinct (src, dst)
pairs of the kind; density is E / (N * (N - 1)); standard deviations are
population standard deviations.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter, deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from lkg.errors import (
    CrossDocumentEdge,
    FrozenGraph,
    LabelMismatch,
    LkgError,
    SchemaViolation,
    UnknownEndpoint,
    UnknownNode,
    WrongLabel,
)
from lkg.normalize import ProvisionId
from lkg.ontology import (
    EdgeType,
    ExtendedEdgeType,
    NodeLabel,
    coerce_edge_type,
    coerce_label,
    signature_of,
)

SNAPSHOT_FORMAT = "lkg-graph/1"

JSONLD_CONTEXT: dict[str, str] = {
    "LKG": "https://lkg.dev/schema#",
    "rdfs": "http://www.w3.org/2000/01/rdf-schema#",
    "owl": "http://www.w3.org/2002/07/owl#",
    "schema": "https://schema.org/",
    # derivesNorm is a project extension: the base vocabulary defines
    # appliesNorm and toFact but no property for the citation-to-norm link.
    "x-extension-note": "LKG:derivesNorm is an extension property for the Provision-to-LegalNorm relation",
}

_JSONLD_CLASSES = {
    "LKG:Fact": NodeLabel.FACT,
    "LKG:Provision": NodeLabel.PROVISION,
    "LKG:LegalNorm": NodeLabel.LEGAL_NORM,
    "LKG:LegalApplication": NodeLabel.LEGAL_APPLICATION,
}

_JSONLD_PROPERTIES = {
    "@id",
    "@type",
    "LKG:text",
    "LKG:docId",
    "LKG:segmentId",
    "LKG:provisionId",
    "LKG:appliesNorm",
    "LKG:toFact",
    "LKG:derivesNorm",
}


@dataclass(frozen=True)
class LkgNode:
    node_id: str
    label: NodeLabel
    text: str
    doc_id: str
    segment_id: str
    provision: ProvisionId | None = None


@dataclass(frozen=True)
class LkgEdge:
    edge_id: str
    kind: EdgeType | ExtendedEdgeType
    src: str
    dst: str
    doc_id: str
    provenance: str = "oracle"


@dataclass(frozen=True)
class ReasoningPath:
    """One Fact -> Application <- Norm <- Provision chain (node ids)."""

    fact: str
    application: str
    norm: str | None = None
    provision: str | None = None

    @property
    def complete(self) -> bool:
        return self.norm is not None and self.provision is not None


@dataclass(frozen=True)
class NodeClassStats:
    count: int
    avg_in_degree: float
    avg_out_degree: float
    self_loops: int


@dataclass(frozen=True)
class EdgeKindStats:
    count: int
    multiplicity: float


@dataclass(frozen=True)
class NetworkStats:
    node_count: int
    edge_count: int
    wcc_diameter_ge2: int
    avg_wcc_diameter: float
    std_wcc_diameter: float
    degree_std: float
    density: float


@dataclass(frozen=True)
class GraphStats:
    nodes: dict[str, NodeClassStats]
    edges: dict[str, EdgeKindStats]
    network: NetworkStats

    def as_dict(self) -> dict:
        return {
            "nodes": {
                label: {
                    "count": s.count,
                    "avg_in_degree": s.avg_in_degree,
                    "avg_out_degree": s.avg_out_degree,
                    "self_loops": s.self_loops,
                }
                for label, s in self.nodes.items()
            },
            "edges": {
                kind: {"count": s.count, "multiplicity": s.multiplicity}
                for kind, s in self.edges.items()
            },
            "network": {
                "node_count": self.network.node_count,
                "edge_count": self.network.edge_count,
                "wcc_diameter_ge2": self.network.wcc_diameter_ge2,
                "avg_wcc_diameter": self.network.avg_wcc_diameter,
                "std_wcc_diameter": self.network.std_wcc_diameter,
                "degree_std": self.network.degree_std,
                "density": self.network.density,
            },
        }


def graph_density(node_count: int, edge_count: int) -> float:
    """Directed density E / (N * (N - 1)); 0.0 below two nodes."""
    if node_count < 2:
        return 0.0
    return edge_count / (node_count * (node_count - 1))


def node_identity(
    doc_id: str,
    segment_id: str,
    label: NodeLabel,
    text: str,
    provision: ProvisionId | None = None,
) -> str:
    """Deterministic node id.

    Identity is (doc, segment, label, text-hash); for Provision nodes the
    canonical provision string joins the key so one citation span that parses
    to several provisions yields one node per provision.
    """
    canonical = provision.canonical() if provision is not None else ""
    key = "\x1f".join((doc_id, segment_id, label.value, text, canonical))
    return "n" + hashlib.sha1(key.encode("utf-8")).hexdigest()[:16]


class LegalKnowledgeGraph:
    def __init__(self, allow_extended_kinds: bool = False):
        self.allow_extended_kinds = allow_extended_kinds
        self.nodes: dict[str, LkgNode] = {}
        self.edges: dict[str, LkgEdge] = {}
        self._out: dict[str, list[str]] = {}
        self._in: dict[str, list[str]] = {}
        self._pair_counts: Counter = Counter()
        self._frozen = False

    # -- construction -------------------------------------------------------

    @property
    def frozen(self) -> bool:
        return self._frozen

    def freeze(self) -> "LegalKnowledgeGraph":
        """Seal the graph; further mutation raises FrozenGraph."""
        self._frozen = True
        return self

    def _check_mutable(self) -> None:
        if self._frozen:
            raise FrozenGraph("graph is frozen; build a new graph to mutate")

    def add_node(
        self,
        label: NodeLabel | str,
        text: str,
        doc_id: str,
        segment_id: str,
        provision: ProvisionId | None = None,
    ) -> str:
        """Insert a node, returning its id.

        Idempotent: re-adding an identical (doc, segment, label, text[,
        provision]) combination returns the existing id.
        """
        self._check_mutable()
        label = coerce_label(label)
        if not text.strip():
            raise ValueError("node text must be nonempty")
        if label is NodeLabel.PROVISION and provision is None:
            raise ValueError("Provision nodes require a resolved ProvisionId")
        if label is not NodeLabel.PROVISION and provision is not None:
            raise ValueError(f"{label.value} nodes must not carry a ProvisionId")
        node_id = node_identity(doc_id, segment_id, label, text, provision)
        if node_id not in self.nodes:
            self._insert_node(
                LkgNode(
                    node_id=node_id,
                    label=label,
                    text=text,
                    doc_id=doc_id,
                    segment_id=segment_id,
                    provision=provision,
                )
            )
        return node_id

    def _insert_node(self, node: LkgNode) -> None:
        self.nodes[node.node_id] = node
        self._out.setdefault(node.node_id, [])
        self._in.setdefault(node.node_id, [])

    def add_edge(
        self,
        kind: EdgeType | ExtendedEdgeType | str,
        src: str,
        dst: str,
        provenance: str = "oracle",
    ) -> str:
        """Insert an edge; parallel edges between the same pair are allowed."""
        self._check_mutable()
        kind = coerce_edge_type(kind)
        if isinstance(kind, ExtendedEdgeType) and not self.allow_extended_kinds:
            raise LabelMismatch(
                f"extended kind {kind.value} requires allow_extended_kinds=True"
            )
        if src not in self.nodes:
            raise UnknownEndpoint(f"unknown src node {src!r}")
        if dst not in self.nodes:
            raise UnknownEndpoint(f"unknown dst node {dst!r}")
        src_node, dst_node = self.nodes[src], self.nodes[dst]
        want_src, want_dst = signature_of(kind)
        if (src_node.label, dst_node.label) != (want_src, want_dst):
            raise LabelMismatch(
                f"{kind.value} requires {want_src.value}->{want_dst.value}, got "
                f"{src_node.label.value}->{dst_node.label.value}"
            )
        if src_node.doc_id != dst_node.doc_id:
            raise CrossDocumentEdge(
                f"edges are intra-document; {src_node.doc_id!r} != {dst_node.doc_id!r}"
            )
        ordinal = self._pair_counts[(kind.value, src, dst)]
        self._pair_counts[(kind.value, src, dst)] += 1
        stem = hashlib.sha1(f"{kind.value}|{src}|{dst}".encode("utf-8")).hexdigest()[:12]
        edge_id = f"e{stem}-{ordinal}"
        edge = LkgEdge(
            edge_id=edge_id,
            kind=kind,
            src=src,
            dst=dst,
            doc_id=src_node.doc_id,
            provenance=provenance,
        )
        self.edges[edge_id] = edge
        self._out[src].append(edge_id)
        self._in[dst].append(edge_id)
        return edge_id

    # -- inspection -----------------------------------------------------------

    def node(self, node_id: str) -> LkgNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNode(f"no node {node_id!r}") from None

    def out_edges(self, node_id: str) -> list[LkgEdge]:
        return [self.edges[eid] for eid in self._out.get(node_id, [])]

    def in_edges(self, node_id: str) -> list[LkgEdge]:
        return [self.edges[eid] for eid in self._in.get(node_id, [])]

    def nodes_with_label(self, label: NodeLabel) -> list[LkgNode]:
        return [n for n in self.nodes.values() if n.label is label]

    # -- statistics -----------------------------------------------------------

    def node_stats(self) -> dict[str, NodeClassStats]:
        by_label: dict[NodeLabel, list[LkgNode]] = {label: [] for label in NodeLabel}
        for node in self.nodes.values():
            by_label[node.label].append(node)
        self_loops: Counter = Counter()
        for edge in self.edges.values():
            src, dst = self.nodes[edge.src], self.nodes[edge.dst]
            if src.segment_id == dst.segment_id:
                self_loops[src.label] += 1
                if dst.label is not src.label:
                    self_loops[dst.label] += 1
        stats = {}
        for label, members in by_label.items():
            count = len(members)
            total_in = sum(len(self._in.get(n.node_id, ())) for n in members)
            total_out = sum(len(self._out.get(n.node_id, ())) for n in members)
            stats[label.value] = NodeClassStats(
                count=count,
                avg_in_degree=total_in / count if count else 0.0,
                avg_out_degree=total_out / count if count else 0.0,
                self_loops=self_loops.get(label, 0),
            )
        return stats

    def edge_stats(self) -> dict[str, EdgeKindStats]:
        kinds: list[EdgeType | ExtendedEdgeType] = list(EdgeType)
        if self.allow_extended_kinds:
            kinds += list(ExtendedEdgeType)
        counts: Counter = Counter()
        pairs: dict[str, set[tuple[str, str]]] = {k.value: set() for k in kinds}
        for edge in self.edges.values():
            counts[edge.kind.value] += 1
            pairs.setdefault(edge.kind.value, set()).add((edge.src, edge.dst))
        stats = {}
        for kind in kinds:
            count = counts.get(kind.value, 0)
            distinct = len(pairs.get(kind.value, ()))
            stats[kind.value] = EdgeKindStats(
                count=count,
                multiplicity=count / distinct if distinct else 0.0,
            )
        return stats

    def network_stats(self) -> NetworkStats:
        n, e = len(self.nodes), len(self.edges)
        degrees = [
            len(self._in.get(nid, ())) + len(self._out.get(nid, ()))
            for nid in self.nodes
        ]
        adj = self._undirected_adjacency()
        diameters = [
            self._component_diameter(c, adj) for c in self._wccs(adj)
        ]
        big = [d for d in diameters if d >= 2]
        return NetworkStats(
            node_count=n,
            edge_count=e,
            wcc_diameter_ge2=len(big),
            avg_wcc_diameter=_mean(big),
            std_wcc_diameter=_pstdev(big),
            degree_std=_pstdev(degrees),
            density=graph_density(n, e),
        )

    def stats(self) -> GraphStats:
        return GraphStats(
            nodes=self.node_stats(),
            edges=self.edge_stats(),
            network=self.network_stats(),
        )

    def _undirected_adjacency(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {nid: set() for nid in self.nodes}
        for edge in self.edges.values():
            if edge.src != edge.dst:
                adj[edge.src].add(edge.dst)
                adj[edge.dst].add(edge.src)
        return adj

    def _wccs(self, adj: dict[str, set[str]] | None = None) -> list[list[str]]:
        if adj is None:
            adj = self._undirected_adjacency()
        seen: set[str] = set()
        components = []
        for start in self.nodes:
            if start in seen:
                continue
            queue = deque([start])
            seen.add(start)
            component = []
            while queue:
                nid = queue.popleft()
                component.append(nid)
                for neighbor in adj[nid]:
                    if neighbor not in seen:
                        seen.add(neighbor)
                        queue.append(neighbor)
            components.append(component)
        return components

    def _component_diameter(
        self, component: list[str], adj: dict[str, set[str]] | None = None
    ) -> int:
        if len(component) < 2:
            return 0
        if adj is None:
            adj = self._undirected_adjacency()
        diameter = 0
        for source in component:
            dist = {source: 0}
            queue = deque([source])
            while queue:
                nid = queue.popleft()
                for neighbor in adj[nid]:
                    if neighbor not in dist:
                        dist[neighbor] = dist[nid] + 1
                        queue.append(neighbor)
            diameter = max(diameter, max(dist.values()))
        return diameter

    # -- traversal -------------------------------------------------------------

    def reasoning_paths(
        self,
        fact: str,
        limit: int | None = None,
        include_partial: bool = False,
    ) -> list[ReasoningPath]:
        """Enumerate Fact -> Application <- Norm <- Provision chains.

        Follows ToFact forward from the fact, then AppliesNorm and DerivesNorm
        backward. Partial chains are excluded unless ``include_partial``.
        Deterministic order: applications, norms, and provisions each sorted
        by node id.
        """
        node = self.node(fact)
        if node.label is not NodeLabel.FACT:
            raise WrongLabel(f"{fact} is {node.label.value}, expected Fact")
        paths: list[ReasoningPath] = []
        seen: set[tuple] = set()
        applications = sorted(
            {e.dst for e in self.out_edges(fact) if e.kind is EdgeType.TO_FACT}
        )
        for app in applications:
            norms = sorted(
                {e.src for e in self.in_edges(app) if e.kind is EdgeType.APPLIES_NORM}
            )
            if not norms and include_partial:
                paths.append(ReasoningPath(fact=fact, application=app))
                continue
            for norm in norms:
                provisions = sorted(
                    {
                        e.src
                        for e in self.in_edges(norm)
                        if e.kind is EdgeType.DERIVES_NORM
                    }
                )
                if not provisions and include_partial:
                    paths.append(ReasoningPath(fact=fact, application=app, norm=norm))
                    continue
                for provision in provisions:
                    key = (fact, app, norm, provision)
                    if key not in seen:
                        seen.add(key)
                        paths.append(
                            ReasoningPath(
                                fact=fact,
                                application=app,
                                norm=norm,
                                provision=provision,
                            )
                        )
        if limit is not None:
            paths = paths[:limit]
        return paths


def _mean(values: Iterable[float]) -> float:
    values = list(values)
    return sum(values) / len(values) if values else 0.0


def _pstdev(values: Iterable[float]) -> float:
    values = list(values)
    if not values:
        return 0.0
    mu = _mean(values)
    return math.sqrt(sum((v - mu) ** 2 for v in values) / len(values))


# -- JSON-LD interchange -------------------------------------------------------


def export_jsonld(graph: LegalKnowledgeGraph) -> dict:
    """Export instances using the interchange class and property names.

    appliesNorm and toFact are emitted outbound from the LegalApplication
    node (the interchange orientation), derivesNorm outbound from the
    Provision node; internal storage direction is unchanged.
    """
    document: dict = {"@context": dict(JSONLD_CONTEXT)}
    if not graph.nodes:
        return document
    entries = []
    for node_id in sorted(graph.nodes):
        node = graph.nodes[node_id]
        entry: dict = {
            "@id": node.node_id,
            "@type": f"LKG:{node.label.value}",
            "LKG:text": node.text,
            "LKG:docId": node.doc_id,
            "LKG:segmentId": node.segment_id,
        }
        if node.provision is not None:
            entry["LKG:provisionId"] = node.provision.canonical()
        if node.label is NodeLabel.LEGAL_APPLICATION:
            norms = sorted(
                e.src for e in graph.in_edges(node_id) if e.kind is EdgeType.APPLIES_NORM
            )
            facts = sorted(
                e.src for e in graph.in_edges(node_id) if e.kind is EdgeType.TO_FACT
            )
            if norms:
                entry["LKG:appliesNorm"] = norms
            if facts:
                entry["LKG:toFact"] = facts
        if node.label is NodeLabel.PROVISION:
            norms = sorted(
                e.dst for e in graph.out_edges(node_id) if e.kind is EdgeType.DERIVES_NORM
            )
            if norms:
                entry["LKG:derivesNorm"] = norms
        entries.append(entry)
    document["@graph"] = entries
    return document


def import_jsonld(document: dict) -> LegalKnowledgeGraph:
    """Rebuild a graph from an exported document, preserving node ids."""
    if not isinstance(document, dict) or "@context" not in document:
        raise SchemaViolation("document must be an object with an @context")
    entries = document.get("@graph", [])
    if not isinstance(entries, list):
        raise SchemaViolation("@graph must be a list")

    graph = LegalKnowledgeGraph()
    for entry in entries:
        if not isinstance(entry, dict):
            raise SchemaViolation("graph entries must be objects")
        unknown = set(entry) - _JSONLD_PROPERTIES
        if unknown:
            raise SchemaViolation(f"unknown properties {sorted(unknown)}")
        type_name = entry.get("@type")
        if type_name not in _JSONLD_CLASSES:
            raise SchemaViolation(f"unknown class {type_name!r}")
        label = _JSONLD_CLASSES[type_name]
        node_id = entry.get("@id")
        text = entry.get("LKG:text")
        doc_id = entry.get("LKG:docId")
        segment_id = entry.get("LKG:segmentId")
        if not all(isinstance(v, str) and v for v in (node_id, text, doc_id, segment_id)):
            raise SchemaViolation(f"entry {node_id!r} missing required literals")
        if node_id in graph.nodes:
            raise SchemaViolation(f"duplicate @id {node_id!r}")
        provision = None
        if label is NodeLabel.PROVISION:
            raw = entry.get("LKG:provisionId")
            if not isinstance(raw, str):
                raise SchemaViolation(f"Provision {node_id!r} missing LKG:provisionId")
            try:
                provision = ProvisionId.from_canonical(raw)
            except ValueError as exc:
                raise SchemaViolation(str(exc)) from exc
        graph._insert_node(
            LkgNode(
                node_id=node_id,
                label=label,
                text=text,
                doc_id=doc_id,
                segment_id=segment_id,
                provision=provision,
            )
        )

    def refs(entry: dict, prop: str) -> list[str]:
        values = entry.get(prop, [])
        if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
            raise SchemaViolation(f"{prop} must be a list of node ids")
        return values

    for entry in entries:
        node_id = entry["@id"]
        label = _JSONLD_CLASSES[entry["@type"]]
        try:
            if label is NodeLabel.LEGAL_APPLICATION:
                for norm in refs(entry, "LKG:appliesNorm"):
                    _import_edge(graph, EdgeType.APPLIES_NORM, norm, node_id)
                for fact in refs(entry, "LKG:toFact"):
                    _import_edge(graph, EdgeType.TO_FACT, fact, node_id)
            elif label is NodeLabel.PROVISION:
                for norm in refs(entry, "LKG:derivesNorm"):
                    _import_edge(graph, EdgeType.DERIVES_NORM, node_id, norm)
            else:
                for prop in ("LKG:appliesNorm", "LKG:toFact", "LKG:derivesNorm"):
                    if prop in entry:
                        raise SchemaViolation(f"{prop} not allowed on {label.value}")
        except LkgError as exc:
            if isinstance(exc, SchemaViolation):
                raise
            raise SchemaViolation(str(exc)) from exc
    return graph


def _import_edge(graph: LegalKnowledgeGraph, kind: EdgeType, src: str, dst: str) -> None:
    if src not in graph.nodes or dst not in graph.nodes:
        raise SchemaViolation(f"dangling reference {src!r} -> {dst!r}")
    graph.add_edge(kind, src, dst, provenance="jsonld")


def graphs_isomorphic(a: LegalKnowledgeGraph, b: LegalKnowledgeGraph) -> bool:
    """Structural equality preserving node ids and edge multisets."""

    def node_view(g: LegalKnowledgeGraph) -> dict:
        return {
            nid: (
                n.label.value,
                n.text,
                n.doc_id,
                n.segment_id,
                n.provision.canonical() if n.provision else None,
            )
            for nid, n in g.nodes.items()
        }

    def edge_view(g: LegalKnowledgeGraph) -> Counter:
        return Counter((e.kind.value, e.src, e.dst) for e in g.edges.values())

    return node_view(a) == node_view(b) and edge_view(a) == edge_view(b)


# -- snapshot persistence --------------------------------------------------------


def to_snapshot_dict(graph: LegalKnowledgeGraph) -> dict:
    node_ids = sorted(graph.nodes)
    index_of = {nid: i for i, nid in enumerate(node_ids)}
    edges = sorted(
        graph.edges.values(), key=lambda e: (e.kind.value, e.src, e.dst, e.edge_id)
    )
    return {
        "version": SNAPSHOT_FORMAT,
        "allow_extended_kinds": graph.allow_extended_kinds,
        "nodes": [
            {
                "node_id": nid,
                "label": graph.nodes[nid].label.value,
                "text": graph.nodes[nid].text,
                "doc_id": graph.nodes[nid].doc_id,
                "segment_id": graph.nodes[nid].segment_id,
                "provision": graph.nodes[nid].provision.canonical()
                if graph.nodes[nid].provision
                else None,
            }
            for nid in node_ids
        ],
        "edges": [
            {
                "kind": e.kind.value,
                "src": index_of[e.src],
                "dst": index_of[e.dst],
                "provenance": e.provenance,
            }
            for e in edges
        ],
    }


def from_snapshot_dict(payload: dict) -> LegalKnowledgeGraph:
    if payload.get("version") != SNAPSHOT_FORMAT:
        raise SchemaViolation(f"snapshot must declare version {SNAPSHOT_FORMAT!r}")
    graph = LegalKnowledgeGraph(
        allow_extended_kinds=payload.get("allow_extended_kinds", False)
    )
    node_ids = []
    for spec in payload["nodes"]:
        provision = (
            ProvisionId.from_canonical(spec["provision"]) if spec["provision"] else None
        )
        node = LkgNode(
            node_id=spec["node_id"],
            label=NodeLabel(spec["label"]),
            text=spec["text"],
            doc_id=spec["doc_id"],
            segment_id=spec["segment_id"],
            provision=provision,
        )
        graph._insert_node(node)
        node_ids.append(node.node_id)
    for spec in payload["edges"]:
        graph.add_edge(
            spec["kind"],
            node_ids[spec["src"]],
            node_ids[spec["dst"]],
            provenance=spec.get("provenance", "oracle"),
        )
    return graph


def save_snapshot(graph: LegalKnowledgeGraph, path: str | Path) -> None:
    payload = to_snapshot_dict(graph)
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


def load_snapshot(path: str | Path) -> LegalKnowledgeGraph:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return from_snapshot_dict(payload)


def snapshot_fingerprint(graph: LegalKnowledgeGraph) -> str:
    canonical = json.dumps(to_snapshot_dict(graph), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
