"""End-to-end graph construction: extract, resolve citations, place, link.

Stages compose through plain data so the CLI can persist each one to a file:
extraction produces candidates per document, placement resolves Provision
candidates into canonical ids and inserts nodes, linking proposes edges, and
the result is a frozen graph. Remote-mode failures degrade to warnings and
skipped sections; partial graphs are legal output.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from lkg.corpus import JudgmentDoc
from lkg.errors import MalformedOutput
from lkg.extraction import NodeCandidate, extract_nodes, validate_candidates
from lkg.graph import LegalKnowledgeGraph
from lkg.linker import LinkContext, PlacedNode, construct_edges, reading_positions
from lkg.normalize import AliasTable, StatuteCatalog, resolve, parse_provision_ref
from lkg.ontology import NodeLabel
from lkg.providers import ProviderConfig

log = logging.getLogger(__name__)


@dataclass
class DocumentExtraction:
    doc_id: str
    candidates: list[NodeCandidate] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    failed_sections: list[str] = field(default_factory=list)


@dataclass
class BuildResult:
    graph: LegalKnowledgeGraph
    warnings: list[str] = field(default_factory=list)
    failed_sections: list[str] = field(default_factory=list)


def extract_document(doc: JudgmentDoc, provider: ProviderConfig) -> DocumentExtraction:
    """Extract and validate candidates for every section of one document."""
    result = DocumentExtraction(doc_id=doc.doc_id)
    sections = [s for s in doc.sections() if s.body]

    def run(section):
        return extract_nodes(doc, section, provider)

    if provider.mode == "remote" and provider.max_in_flight > 1 and len(sections) > 1:
        with ThreadPoolExecutor(max_workers=provider.max_in_flight) as pool:
            outcomes = list(pool.map(_guarded(run), sections))
    else:
        outcomes = [_guarded(run)(section) for section in sections]

    for section, outcome in zip(sections, outcomes):
        if isinstance(outcome, MalformedOutput):
            path = "/".join(map(str, section.path))
            result.failed_sections.append(f"{doc.doc_id}:{path}")
            result.warnings.append(f"section {path} failed extraction: {outcome}")
            continue
        kept, warnings = validate_candidates(outcome, section.text())
        result.candidates.extend(kept)
        result.warnings.extend(f"{w.kind}: {w.message}" for w in warnings)
    return result


def _guarded(fn):
    def wrapper(section):
        try:
            return fn(section)
        except MalformedOutput as exc:
            return exc

    return wrapper


def extract_corpus(
    docs: list[JudgmentDoc], provider: ProviderConfig
) -> dict[str, DocumentExtraction]:
    return {doc.doc_id: extract_document(doc, provider) for doc in docs}


def place_candidates(
    graph: LegalKnowledgeGraph,
    doc: JudgmentDoc,
    candidates: list[NodeCandidate],
    aliases: AliasTable | None = None,
    catalog: StatuteCatalog | None = None,
    normalize_provider: ProviderConfig | None = None,
) -> tuple[list[PlacedNode], list[str]]:
    """Insert candidates as graph nodes, resolving Provision references.

    A citation span that parses to several provisions yields one node per
    resolved id; unresolved references are dropped with a warning (precision
    over recall at the Provision layer).
    """
    positions = reading_positions(doc)
    placed: dict[str, PlacedNode] = {}
    warnings: list[str] = []
    for candidate in candidates:
        position = positions.get(candidate.segment_id)
        if position is None:
            warnings.append(f"candidate references unknown segment {candidate.segment_id}")
            continue
        if candidate.label is NodeLabel.PROVISION:
            refs = parse_provision_ref(candidate.text)
            if not refs:
                warnings.append(f"unparseable citation dropped: {candidate.text[:80]!r}")
                continue
            resolution = resolve(refs, aliases=aliases, provider=normalize_provider, catalog=catalog)
            for ref in resolution.unresolved:
                warnings.append(f"unresolved citation dropped: {ref.source_text[:80]!r}")
            for pid in resolution.resolved:
                node_id = graph.add_node(
                    candidate.label,
                    candidate.text,
                    doc.doc_id,
                    candidate.segment_id,
                    provision=pid,
                )
                placed.setdefault(
                    node_id,
                    PlacedNode(
                        node_id=node_id,
                        label=candidate.label,
                        text=candidate.text,
                        segment_id=candidate.segment_id,
                        position=position,
                        provision=pid,
                    ),
                )
        else:
            node_id = graph.add_node(
                candidate.label, candidate.text, doc.doc_id, candidate.segment_id
            )
            placed.setdefault(
                node_id,
                PlacedNode(
                    node_id=node_id,
                    label=candidate.label,
                    text=candidate.text,
                    segment_id=candidate.segment_id,
                    position=position,
                ),
            )
    return list(placed.values()), warnings


def build_graph(
    docs: list[JudgmentDoc],
    provider: ProviderConfig,
    link_provider: ProviderConfig | None = None,
    aliases: dict[str, AliasTable] | None = None,
    catalog: StatuteCatalog | None = None,
    extractions: dict[str, DocumentExtraction] | None = None,
) -> BuildResult:
    """Run the full construction pipeline over a corpus.

    ``extractions`` short-circuits the extraction stage when candidates were
    already produced (the CLI's stage-per-file composition).
    """
    link_provider = link_provider or provider
    graph = LegalKnowledgeGraph()
    result = BuildResult(graph=graph)
    if extractions is None:
        extractions = extract_corpus(docs, provider)

    for doc in docs:
        extraction = extractions.get(doc.doc_id)
        if extraction is None:
            result.warnings.append(f"no extraction output for {doc.doc_id}")
            continue
        result.warnings.extend(extraction.warnings)
        result.failed_sections.extend(extraction.failed_sections)
        doc_aliases = aliases.get(doc.doc_id) if aliases else None
        placed, place_warnings = place_candidates(
            graph, doc, extraction.candidates, aliases=doc_aliases, catalog=catalog
        )
        result.warnings.extend(place_warnings)
        ctx = LinkContext(doc=doc, nodes=placed, provider=link_provider)
        for edge in construct_edges(ctx):
            graph.add_edge(edge.kind, edge.src, edge.dst, provenance=link_provider.mode)
        result.warnings.extend(ctx.warnings)

    graph.freeze()
    return result


def gold_graph(docs: list[JudgmentDoc]) -> LegalKnowledgeGraph:
    """Reference graph built directly from gold annotations.

    Uses the same node identity and citation resolution as the live pipeline,
    so an oracle-mode run over the same corpus must reproduce it exactly.
    """
    graph = LegalKnowledgeGraph()
    for doc in docs:
        if doc.gold is None:
            continue
        key_to_ids: dict[str, list[str]] = {}
        for node in doc.gold.nodes:
            if node.label is NodeLabel.PROVISION:
                refs = parse_provision_ref(node.text)
                resolution = resolve(refs)
                ids = [
                    graph.add_node(node.label, node.text, doc.doc_id, node.segment_id, provision=pid)
                    for pid in resolution.resolved
                ]
            else:
                ids = [graph.add_node(node.label, node.text, doc.doc_id, node.segment_id)]
            key_to_ids[node.key] = ids
        for edge in doc.gold.edges:
            for src in key_to_ids.get(edge.src, []):
                for dst in key_to_ids.get(edge.dst, []):
                    graph.add_edge(edge.kind, src, dst, provenance="oracle")
    return graph.freeze()
