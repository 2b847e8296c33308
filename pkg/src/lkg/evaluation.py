"""Benchmark harness: gold derivation, predictors, metrics, comparisons.

Gold labels are derived from the graph itself: a query fact's gold set is
every provision reachable over its complete reasoning chains, and facts with
no reachable provision leave the query pool. This is circular by design; the
fact-masked retrieval setting is exactly what keeps the task nontrivial,
since a masked query cannot recover its provisions through its own edges.

Metrics follow the set convention: predictions are deduplicated per query
before counting. Micro rates aggregate globally; macro rates average
per-judgment rates over judgments (a judgment with zero predictions
contributes precision 0). F1 is the harmonic mean, 0 when both components
are 0.
"""

from __future__ import annotations

import csv
import io
import logging
from collections import defaultdict
from dataclasses import dataclass, field

from lkg.corpus import JudgmentDoc
from lkg.errors import (
    DocumentMismatch,
    MalformedOutput,
    ProviderUnavailable,
    ResourceMissing,
    UnknownQuery,
)
from lkg.extraction import load_prompt
from lkg.graph import LegalKnowledgeGraph
from lkg.index import EmbedderConfig, VectorIndex, embed, embed_batch
from lkg.normalize import ProvisionId, parse_provision_ref, resolve
from lkg.ontology import EdgeType, NodeLabel
from lkg.providers import ProviderConfig, chat_json
from lkg.search import SearchQuery, retrieve_provisions
from lkg.textutil import token_overlap

log = logging.getLogger(__name__)

ANNOTATION_OVERLAP_THRESHOLD = 0.8


# -- gold sets ---------------------------------------------------------------


@dataclass
class GoldSet:
    labels: dict[str, frozenset[ProvisionId]]
    doc_of: dict[str, str]

    @property
    def total(self) -> int:
        return sum(len(provisions) for provisions in self.labels.values())

    def queries(self) -> list[str]:
        return sorted(self.labels)


def build_gold(graph: LegalKnowledgeGraph) -> GoldSet:
    """Gold(fact) = provisions reachable over unmasked complete chains."""
    labels: dict[str, frozenset[ProvisionId]] = {}
    doc_of: dict[str, str] = {}
    for node in graph.nodes_with_label(NodeLabel.FACT):
        provisions = {
            graph.node(path.provision).provision
            for path in graph.reasoning_paths(node.node_id)
        }
        if provisions:
            labels[node.node_id] = frozenset(provisions)
            doc_of[node.node_id] = node.doc_id
    return GoldSet(labels=labels, doc_of=doc_of)


# -- predictors ----------------------------------------------------------------


@dataclass(frozen=True)
class PredictorKind:
    kind: str  # lkg | llm-simple | llm-context | llm-rag
    k: int = 3
    m: int = 3

    _KINDS = ("lkg", "llm-simple", "llm-context", "llm-rag")

    def __post_init__(self) -> None:
        if self.kind not in self._KINDS:
            raise ValueError(f"kind must be one of {self._KINDS}")

    @classmethod
    def lkg_retrieval(cls, k: int = 3) -> "PredictorKind":
        return cls(kind="lkg", k=k)

    @classmethod
    def llm_simple(cls) -> "PredictorKind":
        return cls(kind="llm-simple")

    @classmethod
    def llm_with_context(cls) -> "PredictorKind":
        return cls(kind="llm-context")

    @classmethod
    def llm_with_rag(cls, m: int = 3) -> "PredictorKind":
        return cls(kind="llm-rag", m=m)

    @classmethod
    def parse(cls, spec: str) -> "PredictorKind":
        """Parse CLI specs like ``lkg:k=3`` or ``llm-rag:m=5``."""
        name, _, params = spec.strip().partition(":")
        kwargs = {}
        if params:
            for part in params.split(","):
                key, _, value = part.partition("=")
                if key.strip() not in ("k", "m"):
                    raise ValueError(f"unknown predictor parameter {key!r}")
                kwargs[key.strip()] = int(value)
        return cls(kind=name.strip(), **kwargs)

    def label(self) -> str:
        if self.kind == "lkg":
            return f"LKG Retrieval (k={self.k})"
        if self.kind == "llm-simple":
            return "LLM Simple"
        if self.kind == "llm-context":
            return "LLM With Context"
        return f"LLM With RAG (m={self.m})"


@dataclass
class EvalResources:
    graph: LegalKnowledgeGraph | None = None
    index: VectorIndex | None = None
    embedder: EmbedderConfig | None = None
    provider: ProviderConfig | None = None
    docs: dict[str, JudgmentDoc] | None = None
    _section_pool: list[tuple[str, str]] | None = field(default=None, repr=False)
    _section_matrix: object = field(default=None, repr=False)

    def section_pool(self) -> tuple[list[tuple[str, str]], object]:
        """Judgment sections embedded as larger retrieval units (RAG mode)."""
        if self.docs is None or self.embedder is None:
            raise ResourceMissing("RAG predictor needs docs and an embedder")
        if self._section_pool is None:
            pool = []
            for doc_id in sorted(self.docs):
                for section in self.docs[doc_id].sections():
                    text = section.text()
                    if text.strip():
                        path = ".".join(map(str, section.path))
                        pool.append((f"{doc_id}|{path}", text))
            self._section_pool = pool
            self._section_matrix = embed_batch([t for _, t in pool], self.embedder)
        return self._section_pool, self._section_matrix


Predictions = list[tuple[str, frozenset[ProvisionId]]]


def run_predictor(
    gold: GoldSet, predictor: PredictorKind, resources: EvalResources
) -> Predictions:
    """Predict provision sets for every gold query; never aborts mid-run."""
    if predictor.kind == "lkg":
        return _run_lkg(gold, predictor.k, resources)
    return _run_llm(gold, predictor, resources)


def _run_lkg(gold: GoldSet, k: int, resources: EvalResources) -> Predictions:
    if resources.graph is None or resources.index is None or resources.embedder is None:
        raise ResourceMissing("LKG retrieval needs graph, index, and embedder")
    predictions: Predictions = []
    for query in gold.queries():
        hits = retrieve_provisions(
            SearchQuery(node_id=query, k=k, mask=True),
            resources.graph,
            resources.index,
            resources.embedder,
        )
        predictions.append((query, frozenset(hit.provision for hit in hits)))
    return predictions


def _run_llm(
    gold: GoldSet, predictor: PredictorKind, resources: EvalResources
) -> Predictions:
    if resources.provider is None:
        raise ResourceMissing("LLM predictors need a provider")
    if resources.graph is None:
        raise ResourceMissing("LLM predictors need the graph for query texts")
    predictions: Predictions = []
    for query in gold.queries():
        fact_text = resources.graph.node(query).text
        prompt = _llm_prompt(predictor, fact_text, gold.doc_of[query], resources)
        predictions.append((query, _ask_provisions(resources.provider, prompt)))
    return predictions


def _llm_prompt(
    predictor: PredictorKind, fact_text: str, doc_id: str, resources: EvalResources
) -> str:
    if predictor.kind == "llm-simple":
        return load_prompt("predict_simple").replace("[[FACT]]", fact_text)
    if predictor.kind == "llm-context":
        if resources.docs is None or doc_id not in resources.docs:
            raise ResourceMissing("llm-context needs the corpus for case overviews")
        overview = resources.docs[doc_id].case_overview or "(no case overview provided)"
        return (
            load_prompt("predict_context")
            .replace("[[OVERVIEW]]", overview)
            .replace("[[FACT]]", fact_text)
        )
    pool, matrix = resources.section_pool()
    import numpy as np

    vector = embed(fact_text, resources.embedder)
    sims = matrix @ vector
    order = np.argsort(-sims)[: predictor.m]
    passages = "\n\n".join(f"[{i + 1}] {pool[int(j)][1]}" for i, j in enumerate(order))
    return (
        load_prompt("predict_rag")
        .replace("[[PASSAGES]]", passages)
        .replace("[[FACT]]", fact_text)
    )


def _ask_provisions(provider: ProviderConfig, prompt: str) -> frozenset[ProvisionId]:
    def check(parsed) -> None:
        if not isinstance(parsed, dict) or not isinstance(parsed.get("provisions"), list):
            raise ValueError('reply must be {"provisions": [...]}')

    try:
        reply = chat_json(provider, prompt, validate=check)
    except (ProviderUnavailable, MalformedOutput) as exc:
        log.warning("predictor call failed, recording empty prediction: %s", exc)
        return frozenset()
    provisions: set[ProvisionId] = set()
    for item in reply["provisions"]:
        if not isinstance(item, str):
            continue
        resolution = resolve(parse_provision_ref(item))
        provisions.update(resolution.resolved)
    return frozenset(provisions)


# -- metrics --------------------------------------------------------------------


@dataclass(frozen=True)
class MetricsRow:
    method: str
    pred: int
    tp: int
    macro_recall: float
    micro_recall: float
    macro_precision: float
    micro_precision: float
    macro_f1: float
    micro_f1: float


@dataclass
class MetricsReport:
    gold_total: int
    rows: list[MetricsRow] = field(default_factory=list)


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def compute_metrics(
    predictions: Predictions, gold: GoldSet, method: str = ""
) -> MetricsRow:
    """Micro/macro precision, recall, F1 for one predictor's output."""
    per_doc: dict[str, dict[str, int]] = defaultdict(lambda: {"tp": 0, "pred": 0, "gold": 0})
    total_tp = total_pred = 0
    seen_docs: set[str] = set()
    for query, predicted in predictions:
        if query not in gold.labels:
            raise UnknownQuery(f"prediction for unknown query {query!r}")
        predicted = frozenset(predicted)
        gold_set = gold.labels[query]
        doc_id = gold.doc_of[query]
        seen_docs.add(doc_id)
        tp = len(predicted & gold_set)
        per_doc[doc_id]["tp"] += tp
        per_doc[doc_id]["pred"] += len(predicted)
        per_doc[doc_id]["gold"] += len(gold_set)
        total_tp += tp
        total_pred += len(predicted)

    micro_precision = total_tp / total_pred if total_pred else 0.0
    micro_recall = total_tp / gold.total if gold.total else 0.0

    doc_precisions = []
    doc_recalls = []
    for doc_id in sorted(seen_docs):
        counts = per_doc[doc_id]
        doc_precisions.append(counts["tp"] / counts["pred"] if counts["pred"] else 0.0)
        doc_recalls.append(counts["tp"] / counts["gold"] if counts["gold"] else 0.0)
    macro_precision = sum(doc_precisions) / len(doc_precisions) if doc_precisions else 0.0
    macro_recall = sum(doc_recalls) / len(doc_recalls) if doc_recalls else 0.0

    return MetricsRow(
        method=method,
        pred=total_pred,
        tp=total_tp,
        macro_recall=macro_recall,
        micro_recall=micro_recall,
        macro_precision=macro_precision,
        micro_precision=micro_precision,
        macro_f1=_f1(macro_precision, macro_recall),
        micro_f1=_f1(micro_precision, micro_recall),
    )


def benchmark(
    gold: GoldSet, predictors: list[PredictorKind], resources: EvalResources
) -> MetricsReport:
    report = MetricsReport(gold_total=gold.total)
    for predictor in predictors:
        predictions = run_predictor(gold, predictor, resources)
        report.rows.append(compute_metrics(predictions, gold, method=predictor.label()))
    return report


# -- annotation comparison ---------------------------------------------------------


@dataclass(frozen=True)
class AnnotationNode:
    doc_id: str
    segment_id: str
    label: NodeLabel
    text: str


@dataclass(frozen=True)
class AnnotationEdge:
    kind: EdgeType
    src: int  # index into the owning set's node list
    dst: int


@dataclass
class AnnotationSet:
    nodes: list[AnnotationNode] = field(default_factory=list)
    edges: list[AnnotationEdge] = field(default_factory=list)

    @classmethod
    def from_gold(cls, docs: list[JudgmentDoc]) -> "AnnotationSet":
        out = cls()
        index: dict[tuple[str, str], int] = {}
        for doc in docs:
            if doc.gold is None:
                continue
            for node in doc.gold.nodes:
                index[(doc.doc_id, node.key)] = len(out.nodes)
                out.nodes.append(
                    AnnotationNode(doc.doc_id, node.segment_id, node.label, node.text)
                )
            for edge in doc.gold.edges:
                out.edges.append(
                    AnnotationEdge(
                        edge.kind,
                        index[(doc.doc_id, edge.src)],
                        index[(doc.doc_id, edge.dst)],
                    )
                )
        return out

    @classmethod
    def from_graph(cls, graph: LegalKnowledgeGraph) -> "AnnotationSet":
        out = cls()
        index: dict[str, int] = {}
        for node_id in sorted(graph.nodes):
            node = graph.nodes[node_id]
            index[node_id] = len(out.nodes)
            out.nodes.append(
                AnnotationNode(node.doc_id, node.segment_id, node.label, node.text)
            )
        for edge in sorted(graph.edges.values(), key=lambda e: e.edge_id):
            if isinstance(edge.kind, EdgeType):
                out.edges.append(AnnotationEdge(edge.kind, index[edge.src], index[edge.dst]))
        return out

    def doc_ids(self) -> set[str]:
        return {node.doc_id for node in self.nodes}


@dataclass(frozen=True)
class CategoryScore:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


@dataclass
class ComparisonReport:
    nodes: dict[str, CategoryScore]
    edges: dict[str, CategoryScore]


def _score(tp: int, fp: int, fn: int) -> CategoryScore:
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    return CategoryScore(tp=tp, fp=fp, fn=fn, precision=precision, recall=recall, f1=_f1(precision, recall))


def compare_annotations(
    system: AnnotationSet,
    reference: AnnotationSet,
    overlap_threshold: float = ANNOTATION_OVERLAP_THRESHOLD,
) -> ComparisonReport:
    """Score system nodes/edges against reference annotations.

    Nodes match when they share (segment, label) and their texts overlap at
    least ``overlap_threshold``; matching is greedy, best overlap first,
    one-to-one. Edges match when their kind matches and both endpoints
    matched each other.
    """
    if system.doc_ids() != reference.doc_ids():
        raise DocumentMismatch(
            f"annotation sides cover different documents: "
            f"{sorted(system.doc_ids())} vs {sorted(reference.doc_ids())}"
        )

    by_bucket: dict[tuple, list[int]] = defaultdict(list)
    for j, node in enumerate(reference.nodes):
        by_bucket[(node.doc_id, node.segment_id, node.label)].append(j)

    node_match: dict[int, int] = {}
    matched_refs: set[int] = set()
    scored: list[tuple[float, int, int]] = []
    for i, node in enumerate(system.nodes):
        for j in by_bucket.get((node.doc_id, node.segment_id, node.label), []):
            overlap = token_overlap(node.text, reference.nodes[j].text)
            if overlap >= overlap_threshold:
                scored.append((overlap, i, j))
    for overlap, i, j in sorted(scored, key=lambda t: (-t[0], t[1], t[2])):
        if i in node_match or j in matched_refs:
            continue
        node_match[i] = j
        matched_refs.add(j)

    node_scores: dict[str, CategoryScore] = {}
    for label in NodeLabel:
        sys_ids = [i for i, n in enumerate(system.nodes) if n.label is label]
        ref_ids = [j for j, n in enumerate(reference.nodes) if n.label is label]
        tp = sum(1 for i in sys_ids if i in node_match)
        node_scores[label.value] = _score(tp, len(sys_ids) - tp, len(ref_ids) - tp)

    ref_edge_pool: dict[tuple, int] = defaultdict(int)
    for edge in reference.edges:
        ref_edge_pool[(edge.kind, edge.src, edge.dst)] += 1
    edge_scores: dict[str, CategoryScore] = {}
    for kind in EdgeType:
        sys_edges = [e for e in system.edges if e.kind is kind]
        ref_count = sum(1 for e in reference.edges if e.kind is kind)
        pool = dict(ref_edge_pool)
        tp = 0
        for edge in sys_edges:
            src_ref = node_match.get(edge.src)
            dst_ref = node_match.get(edge.dst)
            if src_ref is None or dst_ref is None:
                continue
            key = (kind, src_ref, dst_ref)
            if pool.get(key, 0) > 0:
                pool[key] -= 1
                tp += 1
        edge_scores[kind.value] = _score(tp, len(sys_edges) - tp, ref_count - tp)

    return ComparisonReport(nodes=node_scores, edges=edge_scores)


# -- report rendering ---------------------------------------------------------------


REPORT_COLUMNS = (
    "Method",
    "Pred",
    "TP",
    "Macro Recall",
    "Micro Recall",
    "Macro Precision",
    "Micro Precision",
    "Macro F1",
    "Micro F1",
)


def _row_values(row: MetricsRow) -> list[str]:
    return [
        row.method,
        str(row.pred),
        str(row.tp),
        f"{row.macro_recall:.3f}",
        f"{row.micro_recall:.3f}",
        f"{row.macro_precision:.3f}",
        f"{row.micro_precision:.3f}",
        f"{row.macro_f1:.3f}",
        f"{row.micro_f1:.3f}",
    ]


def render_report_text(report: MetricsReport) -> str:
    rows = [list(REPORT_COLUMNS)] + [_row_values(row) for row in report.rows]
    widths = [max(len(r[c]) for r in rows) for c in range(len(REPORT_COLUMNS))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * widths[c] for c in range(len(widths))))
    lines.append(f"\nGold total: {report.gold_total}")
    return "\n".join(lines) + "\n"


def render_report(report: MetricsReport) -> tuple[str, str]:
    """Both renderings, (aligned plain text, CSV)."""
    return render_report_text(report), render_report_csv(report)


def render_report_csv(report: MetricsReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in report.rows:
        writer.writerow(_row_values(row))
    return buffer.getvalue()


def parse_report_csv(text: str) -> MetricsReport:
    """Inverse of render_report_csv at 3-decimal precision (round-trip checks)."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != REPORT_COLUMNS:
        raise ValueError(f"unexpected report header: {header}")
    report = MetricsReport(gold_total=0)
    for raw in reader:
        report.rows.append(
            MetricsRow(
                method=raw[0],
                pred=int(raw[1]),
                tp=int(raw[2]),
                macro_recall=float(raw[3]),
                micro_recall=float(raw[4]),
                macro_precision=float(raw[5]),
                micro_precision=float(raw[6]),
                macro_f1=float(raw[7]),
                micro_f1=float(raw[8]),
            )
        )
    return report
