"""Edge construction over extracted nodes.

Provision->Norm pairs are formed within a section (local proximity holds for
citations and the norms they yield). Norm->Application and Fact->Application
links use scoped-history prompting instead: each application is paired with
every preceding candidate of the requested label, across section boundaries,
because a conclusion may rest on material introduced many segments earlier.
Oversized histories are chunked oldest-first under a token budget; the chunk
union always equals the full history.

Replies address candidates by 1-based position ("Norm 28", "Fact 25"); the
index-to-node mapping is kept locally so replies resolve without echoing node
texts. Out-of-range indices are dropped with a warning; a malformed reply
after retries skips the target and the build continues.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Any, Sequence

from lkg.corpus import GoldAnnotations, JudgmentDoc, Section, segments_in_reading_order
from lkg.errors import MalformedOutput, OracleMissing
from lkg.extraction import load_prompt
from lkg.normalize import ProvisionId
from lkg.ontology import EdgeType, NodeLabel
from lkg.providers import ProviderConfig, chat_json
from lkg.textutil import estimate_tokens, normalize_ws, token_overlap

log = logging.getLogger(__name__)

# Mock-mode linking threshold: containment token overlap between candidate
# and application texts. 0.4 keeps synthetic end-to-end runs meaningful
# without a provider while avoiding all-pairs linking.
MOCK_LINK_THRESHOLD = 0.4

DEFAULT_TOKEN_BUDGET = 8000


@dataclass(frozen=True)
class PlacedNode:
    """An extracted node already inserted into the graph, with its reading-order position."""

    node_id: str
    label: NodeLabel
    text: str
    segment_id: str
    position: int
    provision: ProvisionId | None = None


@dataclass(frozen=True)
class LinkRequest:
    target: str
    candidates: tuple[str, ...]
    source_excerpt: str


@dataclass(frozen=True)
class ProposedEdge:
    kind: EdgeType
    src: str
    dst: str


@dataclass
class LinkContext:
    """Shared state for linking one document."""

    doc: JudgmentDoc
    nodes: list[PlacedNode]
    provider: ProviderConfig
    token_budget: int = DEFAULT_TOKEN_BUDGET
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.nodes = sorted(self.nodes, key=lambda n: (n.position, n.node_id))
        self._by_id = {n.node_id: n for n in self.nodes}
        self._by_seg_label: dict[tuple[str, str], list[PlacedNode]] = {}
        for node in self.nodes:
            self._by_seg_label.setdefault((node.segment_id, node.label.value), []).append(node)

    def placed(self, node_id: str) -> PlacedNode:
        return self._by_id[node_id]

    def for_gold_key(self, key: str) -> PlacedNode | None:
        segment_id, _, label = key.rpartition("#")
        nodes = self._by_seg_label.get((segment_id, label), [])
        return nodes[0] if nodes else None

    def gold(self) -> GoldAnnotations:
        if self.doc.gold is None:
            raise OracleMissing(f"{self.doc.doc_id} has no gold annotations")
        return self.doc.gold

    def applications(self) -> list[PlacedNode]:
        return [n for n in self.nodes if n.label is NodeLabel.LEGAL_APPLICATION]

    def warn(self, message: str) -> None:
        self.warnings.append(message)
        log.warning("%s: %s", self.doc.doc_id, message)


def reading_positions(doc: JudgmentDoc) -> dict[str, int]:
    return {seg.segment_id: i for i, seg in enumerate(segments_in_reading_order(doc))}


# -- Provision -> Norm (same-section pairing) -----------------------------------


def pair_provision_norm(ctx: LinkContext, section: Section) -> list[ProposedEdge]:
    segment_ids = {seg.segment_id for seg in section.segments()}
    if ctx.provider.mode == "oracle":
        return _oracle_derives_norm(ctx, segment_ids)
    provisions = [
        n for n in ctx.nodes if n.label is NodeLabel.PROVISION and n.segment_id in segment_ids
    ]
    norms = [
        n for n in ctx.nodes if n.label is NodeLabel.LEGAL_NORM and n.segment_id in segment_ids
    ]
    if not provisions or not norms:
        return []
    if ctx.provider.mode == "mock":
        edges = []
        for provision in provisions:
            title = provision.provision.law_title if provision.provision else None
            if not title:
                continue
            for norm in norms:
                if title.casefold() in norm.text.casefold():
                    edges.append(
                        ProposedEdge(EdgeType.DERIVES_NORM, provision.node_id, norm.node_id)
                    )
        return edges
    return _remote_provision_norm(ctx, section, provisions, norms)


def _oracle_derives_norm(ctx: LinkContext, segment_ids: set[str]) -> list[ProposedEdge]:
    """Gold DerivesNorm edges whose norm sits in this section.

    Scoping by the norm endpoint emits each gold edge exactly once even if a
    fixture pairs a citation with a norm in another section.
    """
    gold = ctx.gold()
    by_key = gold.by_key()
    edges = []
    for gold_edge in gold.edges:
        if gold_edge.kind is not EdgeType.DERIVES_NORM:
            continue
        norm_gold = by_key.get(gold_edge.dst)
        if norm_gold is None or norm_gold.segment_id not in segment_ids:
            continue
        src = ctx.for_gold_key(gold_edge.src)
        dst = ctx.for_gold_key(gold_edge.dst)
        if src is None or dst is None:
            ctx.warn(f"gold edge endpoint missing from graph: {gold_edge.src} -> {gold_edge.dst}")
            continue
        edges.append(ProposedEdge(EdgeType.DERIVES_NORM, src.node_id, dst.node_id))
    return edges


def _remote_provision_norm(
    ctx: LinkContext,
    section: Section,
    provisions: list[PlacedNode],
    norms: list[PlacedNode],
) -> list[ProposedEdge]:
    prompt = (
        load_prompt("provision_norm")
        .replace("[[LAWS]]", _numbered(provisions))
        .replace("[[NORMS]]", _numbered(norms))
        .replace("[[EXCERPT]]", section.text())
    )

    def check(parsed: Any) -> None:
        if not isinstance(parsed, dict):
            raise ValueError("reply must be a JSON object keyed by law")

    try:
        reply = chat_json(ctx.provider, prompt, validate=check)
    except MalformedOutput:
        ctx.warn(f"provision-norm pairing skipped for section {section.path}")
        return []

    edges = []
    for law_key, norm_value in reply.items():
        provision = _match_entry(law_key, provisions, "law")
        if provision is None:
            ctx.warn(f"provision-norm reply key not matched: {law_key!r}")
            continue
        values = norm_value if isinstance(norm_value, list) else [norm_value]
        for value in values:
            if not isinstance(value, str):
                continue
            norm = _match_entry(value, norms, "norm")
            if norm is None:
                ctx.warn(f"provision-norm reply value not matched: {value!r}")
                continue
            edges.append(ProposedEdge(EdgeType.DERIVES_NORM, provision.node_id, norm.node_id))
    return edges


def _numbered(nodes: Sequence[PlacedNode]) -> str:
    return "\n".join(f"({i + 1}) {node.text}" for i, node in enumerate(nodes))


_INDEX_RE = re.compile(r"(\d+)")


def _match_entry(
    value: str, nodes: Sequence[PlacedNode], kind_word: str
) -> PlacedNode | None:
    """Resolve a reply entry to a node by index ("Norm 3", "(3)", "3") or text."""
    text = value.strip()
    lowered = text.casefold()
    if lowered.startswith((kind_word, "norm", "law", "fact", "application", "(")) or lowered.isdigit():
        match = _INDEX_RE.search(text)
        if match:
            index = int(match.group(1))
            if 1 <= index <= len(nodes):
                return nodes[index - 1]
            return None
    normalized = normalize_ws(text)
    for node in nodes:
        if normalize_ws(node.text) == normalized:
            return node
    for node in nodes:
        if normalized and normalized in normalize_ws(node.text):
            return node
    return None


# -- scoped history ---------------------------------------------------------------


def assemble_history(
    ctx: LinkContext, app: PlacedNode, kind: NodeLabel, token_budget: int | None = None
) -> list[LinkRequest]:
    """All nodes of ``kind`` at or before the application, chunked to budget.

    Returns one LinkRequest per chunk, oldest candidates first; the union of
    chunk candidate sets is the full history.
    """
    if app.label is not NodeLabel.LEGAL_APPLICATION:
        raise ValueError(f"history target must be a LegalApplication, got {app.label.value}")
    budget = token_budget or ctx.token_budget
    candidates = [
        n
        for n in ctx.nodes
        if n.label is kind and n.position <= app.position and n.node_id != app.node_id
    ]
    base_cost = estimate_tokens(app.text) + 200  # template overhead
    requests: list[LinkRequest] = []
    chunk: list[PlacedNode] = []
    cost = base_cost
    for candidate in candidates:
        candidate_cost = estimate_tokens(candidate.text) + 4
        if chunk and cost + candidate_cost > budget:
            requests.append(_request(app, chunk))
            chunk, cost = [], base_cost
        chunk.append(candidate)
        cost += candidate_cost
    requests.append(_request(app, chunk))
    return requests


def _request(app: PlacedNode, chunk: list[PlacedNode]) -> LinkRequest:
    return LinkRequest(
        target=app.node_id,
        candidates=tuple(n.node_id for n in chunk),
        source_excerpt=app.text,
    )


# -- Norm/Fact -> Application -------------------------------------------------------


def link_norm_application(ctx: LinkContext, app: PlacedNode) -> list[ProposedEdge]:
    return _link_application(ctx, app, NodeLabel.LEGAL_NORM, EdgeType.APPLIES_NORM)


def link_fact_application(ctx: LinkContext, app: PlacedNode) -> list[ProposedEdge]:
    return _link_application(ctx, app, NodeLabel.FACT, EdgeType.TO_FACT)


def _link_application(
    ctx: LinkContext, app: PlacedNode, kind: NodeLabel, edge_kind: EdgeType
) -> list[ProposedEdge]:
    if ctx.provider.mode == "oracle":
        gold = ctx.gold()
        app_keys = {
            k for k, node in gold.by_key().items()
            if node.segment_id == app.segment_id and node.label is NodeLabel.LEGAL_APPLICATION
        }
        edges = []
        for gold_edge in gold.edges:
            if gold_edge.kind is not edge_kind or gold_edge.dst not in app_keys:
                continue
            src = ctx.for_gold_key(gold_edge.src)
            if src is None:
                ctx.warn(f"gold edge source missing from graph: {gold_edge.src}")
                continue
            edges.append(ProposedEdge(edge_kind, src.node_id, app.node_id))
        return edges

    requests = assemble_history(ctx, app, kind)
    edges: list[ProposedEdge] = []
    for request in requests:
        if not request.candidates:
            continue
        if ctx.provider.mode == "mock":
            for node_id in request.candidates:
                candidate = ctx.placed(node_id)
                if token_overlap(candidate.text, app.text) >= MOCK_LINK_THRESHOLD:
                    edges.append(ProposedEdge(edge_kind, node_id, app.node_id))
        else:
            edges.extend(_remote_link(ctx, app, request, kind, edge_kind))
    return edges


def _remote_link(
    ctx: LinkContext,
    app: PlacedNode,
    request: LinkRequest,
    kind: NodeLabel,
    edge_kind: EdgeType,
) -> list[ProposedEdge]:
    prompt_name = "norm_application" if kind is NodeLabel.LEGAL_NORM else "fact_application"
    candidates = [ctx.placed(node_id) for node_id in request.candidates]
    prompt = (
        load_prompt(prompt_name)
        .replace("[[CANDIDATES]]", _numbered(candidates))
        .replace("[[TARGET]]", request.source_excerpt)
    )

    def check(parsed: Any) -> None:
        if not isinstance(parsed, dict):
            raise ValueError("reply must be a JSON object")
        for value in parsed.values():
            if not isinstance(value, list):
                raise ValueError("reply values must be lists")

    try:
        reply = chat_json(ctx.provider, prompt, validate=check)
    except MalformedOutput:
        ctx.warn(f"linking skipped for application {app.node_id}")
        return []

    edges = []
    for value in reply.values():
        for entry in value:
            if isinstance(entry, int):
                index = entry
            elif isinstance(entry, str):
                match = _INDEX_RE.search(entry)
                if match is None:
                    ctx.warn(f"unparseable candidate reference {entry!r}")
                    continue
                index = int(match.group(1))
            else:
                continue
            if not 1 <= index <= len(candidates):
                ctx.warn(f"candidate index {index} out of range 1..{len(candidates)}")
                continue
            edges.append(ProposedEdge(edge_kind, candidates[index - 1].node_id, app.node_id))
    return edges


# -- document orchestration ----------------------------------------------------------


def construct_edges(ctx: LinkContext) -> list[ProposedEdge]:
    """All canonical edges for one document's placed nodes."""
    edges: list[ProposedEdge] = []
    for section in ctx.doc.sections():
        edges.extend(pair_provision_norm(ctx, section))
    for app in ctx.applications():
        edges.extend(link_norm_application(ctx, app))
        edges.extend(link_fact_application(ctx, app))
    # A drafted edge set may contain duplicates only through distinct routes
    # (e.g. an oracle gold edge listed once per matching application node);
    # keep them: the graph is a multigraph and duplicates are meaningful.
    return edges
