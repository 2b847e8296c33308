"""Acceptance criteria, one test per criterion, offline, with stated tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL line
per criterion.
"""

from __future__ import annotations

import random
import time
from collections import Counter

import numpy as np

from lkg.corpus import dump_corpus, parse_corpus_text
from lkg.evaluation import (
    AnnotationEdge,
    AnnotationNode,
    AnnotationSet,
    EvalResources,
    PredictorKind,
    compare_annotations,
    compute_metrics,
    run_predictor,
)
from lkg.graph import export_jsonld, graph_density, graphs_isomorphic, import_jsonld
from lkg.normalize import ProvisionId, canonical_string, parse_provision_ref
from lkg.ontology import EdgeType, NodeLabel, signature_of
from lkg.pipeline import build_graph, extract_corpus, gold_graph
from lkg.providers import ProviderConfig
from lkg.search import SearchQuery, retrieve_provisions
from lkg.synth import synth_corpus

from test_evaluation import synthetic_predictions
from test_graph import build_random_graph
from test_index import brute_force_scan


def _report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"{status}: {name}{suffix}")
    assert ok, f"{name}{suffix}"


def test_c01_metric_arithmetic_reference_rows():
    rows = [
        ("GPT Simple", 4922, 123, 0.099, 0.025),
        ("GPT With Context", 7377, 336, 0.271, 0.046),
        ("GPT With RAG", 7792, 436, 0.351, 0.056),
        ("LKG k=1", 1253, 497, 0.400, 0.397),
        ("LKG k=3", 3470, 829, 0.667, 0.239),
        ("LKG k=7", 7482, 965, 0.777, 0.129),
    ]
    worst = 0.0
    for method, pred, tp, micro_r, micro_p in rows:
        gold, predictions = synthetic_predictions(pred, tp)
        row = compute_metrics(predictions, gold, method=method)
        assert row.pred == pred and row.tp == tp
        worst = max(worst, abs(row.micro_precision - micro_p), abs(row.micro_recall - micro_r))
    _report(
        "metric arithmetic reproduces all six reference rows within ±0.0005",
        worst <= 0.0005,
        f"worst deviation {worst:.5f}",
    )


def test_c02_density_reference_counts():
    density = graph_density(44447, 51296)
    _report(
        "density(44447, 51296) = 2.59e-5 at 3 significant figures",
        abs(density - 2.59e-5) < 1e-7,
        f"computed {density:.4e}",
    )


def test_c03_oracle_end_to_end():
    started = time.monotonic()
    docs = synth_corpus(7, 40)
    # through the corpus file format, as the CLI stages would
    docs = parse_corpus_text(dump_corpus(docs))
    provider = ProviderConfig(mode="oracle")
    extractions = extract_corpus(docs, provider)
    result = build_graph(docs, provider, extractions=extractions)
    reference = gold_graph(docs)
    elapsed = time.monotonic() - started

    identical = graphs_isomorphic(result.graph, reference)
    report = compare_annotations(
        AnnotationSet.from_graph(result.graph), AnnotationSet.from_gold(docs)
    )
    scores = list(report.nodes.values()) + list(report.edges.values())
    perfect = all(s.precision == 1.0 and s.recall == 1.0 for s in scores)
    _report(
        "oracle end-to-end graph equals gold exactly (P = R = 1.0) in under 60 s",
        identical and perfect and elapsed < 60.0,
        f"{len(result.graph.nodes)} nodes, {len(result.graph.edges)} edges, {elapsed:.1f} s",
    )


def test_c04_retrieval_oracle(bench_facts, bench_index, bench_index_approx):
    assert len(bench_facts) >= 2000, f"benchmark corpus too small: {len(bench_facts)}"

    rng = np.random.default_rng(17)
    picks = rng.choice(len(bench_facts), size=500, replace=False)
    exact_ok = True
    for i in picks:
        vector = bench_index.matrix[int(i)]
        if bench_index.query(vector, 10) != brute_force_scan(bench_index, vector, 10):
            exact_ok = False
            break

    recall_by_k = {}
    query_picks = rng.choice(len(bench_facts), size=100, replace=False)
    for k in range(1, 11):
        hits = total = 0
        for i in query_picks:
            vector = bench_index.matrix[int(i)]
            exact = {nid for nid, _ in bench_index.query(vector, k)}
            approx = {nid for nid, _ in bench_index_approx.query(vector, k)}
            hits += len(exact & approx)
            total += len(exact)
        recall_by_k[k] = hits / total
    recall_ok = all(r >= 0.95 for r in recall_by_k.values())
    _report(
        "exact retrieval equals brute force on 500 queries; approximate recall@k >= 0.95 for k=1..10",
        exact_ok and recall_ok,
        f"{len(bench_facts)} facts, min recall {min(recall_by_k.values()):.3f}",
    )


def _uniquely_self_linked(gold):
    owners = Counter(p for provisions in gold.labels.values() for p in provisions)
    out = []
    for query in gold.queries():
        unique = {p for p in gold.labels[query] if owners[p] == 1}
        if unique:
            out.append((query, unique))
    return out


def test_c05_mask_soundness(bench_graph, bench_gold, bench_index, embedder):
    candidates = _uniquely_self_linked(bench_gold)
    assert len(candidates) >= 200, f"only {len(candidates)} uniquely-linked facts"
    sample = random.Random(41).sample(candidates, 200)
    masked_ok = unmasked_ok = True
    for query, unique in sample:
        masked = {
            hit.provision
            for hit in retrieve_provisions(
                SearchQuery(node_id=query, k=3, mask=True), bench_graph, bench_index, embedder
            )
        }
        if masked & unique:
            masked_ok = False
            break
        unmasked = {
            hit.provision
            for hit in retrieve_provisions(
                SearchQuery(node_id=query, k=3, mask=False), bench_graph, bench_index, embedder
            )
        }
        if not unique <= unmasked:
            unmasked_ok = False
            break
    _report(
        "fact-masked retrieval hides uniquely self-linked provisions; unmasked returns them all",
        masked_ok and unmasked_ok,
        "200 sampled query facts",
    )


def test_c06_k_monotonicity(bench_graph, bench_gold, bench_index, embedder):
    resources = EvalResources(graph=bench_graph, index=bench_index, embedder=embedder)
    previous_sets: dict[str, frozenset] = {}
    previous_tp = -1
    nested_ok = True
    tp_by_k = []
    for k in range(1, 8):
        predictions = run_predictor(bench_gold, PredictorKind.lkg_retrieval(k=k), resources)
        row = compute_metrics(predictions, bench_gold)
        tp_by_k.append(row.tp)
        for query, predicted in predictions:
            if query in previous_sets and not previous_sets[query] <= predicted:
                nested_ok = False
        previous_sets = dict(predictions)
        if row.tp < previous_tp:
            nested_ok = False
        previous_tp = row.tp
    _report(
        "predicted provision sets nest across k=1..7 and TP is non-decreasing",
        nested_ok,
        f"TP by k: {tp_by_k}",
    )


def test_c07_jsonld_round_trip():
    rng = random.Random(1234)
    names_ok = True
    round_trip_ok = True
    for i in range(100):
        graph = build_random_graph(rng, n_docs=rng.randint(1, 3))
        document = export_jsonld(graph)
        expected_types = {
            "LKG:Fact", "LKG:Provision", "LKG:LegalNorm", "LKG:LegalApplication"
        }
        if not {e["@type"] for e in document.get("@graph", [])} <= expected_types:
            names_ok = False
        for entry in document.get("@graph", []):
            for prop in entry:
                if prop.startswith("LKG:") and prop not in (
                    "LKG:text", "LKG:docId", "LKG:segmentId", "LKG:provisionId",
                    "LKG:appliesNorm", "LKG:toFact", "LKG:derivesNorm",
                ):
                    names_ok = False
        if not graphs_isomorphic(graph, import_jsonld(document)):
            round_trip_ok = False
    _report(
        "JSON-LD export/import is graph-isomorphic on 100 random graphs with exact class/property names",
        names_ok and round_trip_ok,
    )


def test_c08_graph_invariants_suite():
    rng = random.Random(99)
    checked = 0
    ok = True
    for _ in range(1000):
        graph = build_random_graph(rng, n_docs=rng.randint(1, 2))
        checked += 1
        for edge in graph.edges.values():
            src, dst = graph.nodes[edge.src], graph.nodes[edge.dst]
            if (src.label, dst.label) != signature_of(edge.kind):
                ok = False
            if src.doc_id != dst.doc_id:
                ok = False
        for node in graph.nodes.values():
            if node.label is NodeLabel.PROVISION and graph.in_edges(node.node_id):
                ok = False
        # acyclicity via Kahn's algorithm
        indegree = {nid: 0 for nid in graph.nodes}
        for edge in graph.edges.values():
            indegree[edge.dst] += 1
        queue = [nid for nid, deg in indegree.items() if deg == 0]
        seen = 0
        while queue:
            nid = queue.pop()
            seen += 1
            for edge in graph.out_edges(nid):
                indegree[edge.dst] -= 1
                if indegree[edge.dst] == 0:
                    queue.append(edge.dst)
        if seen != len(graph.nodes):
            ok = False
    _report(
        "label-signature safety, Provision zero in-degree, intra-document edges, acyclicity on 1,000 random graphs",
        ok,
        f"{checked} graphs checked",
    )


def test_c09_normalizer_references_and_round_trip():
    refs = parse_provision_ref("Articles 1 and 2 of the Law on Coexistence with Martians")
    first_ok = [(r.law_title, r.article) for r in refs] == [
        ("Law on Coexistence with Martians", 1),
        ("Law on Coexistence with Martians", 2),
    ]
    (local,) = parse_provision_ref("Article 242 of the Local Autonomy Act")
    second_ok = local.to_id() == ProvisionId("Local Autonomy Act", 242)
    (nationality,) = parse_provision_ref("Article 11 of the Nationality Act")
    third_ok = nationality.to_id() == ProvisionId("Nationality Act", 11)

    rng = random.Random(8)
    words = ["Lunar", "Orbital", "Salvage", "Quarantine", "Transit", "Registry", "Habitat"]
    round_trip_ok = True
    for _ in range(1000):
        title = " ".join(rng.sample(words, rng.randint(1, 3))) + " " + rng.choice(
            ["Act", "Ordinance", "Code", "Law"]
        )
        pid = ProvisionId(
            law_title=title,
            article=rng.randint(1, 999),
            paragraph=rng.choice([None, rng.randint(1, 9)]),
            item=rng.choice([None, rng.randint(1, 9)]),
        )
        parsed = parse_provision_ref(canonical_string(pid))
        if len(parsed) != 1 or parsed[0].to_id() != pid:
            round_trip_ok = False
    _report(
        "reference citations parse to their stated ids; canonical round-trip holds for 1,000 ids",
        first_ok and second_ok and third_ok and round_trip_ok,
    )


def test_c10_annotation_protocol_fixture():
    reference = AnnotationSet()
    layout = [
        ("d/s0/0", NodeLabel.PROVISION, "Article 1 of the X Act"),
        ("d/s0/1", NodeLabel.LEGAL_NORM, "the norm text"),
        ("d/s0/2", NodeLabel.LEGAL_APPLICATION, "the application text"),
        ("d/s0/3", NodeLabel.FACT, "fact one text"),
        ("d/s0/4", NodeLabel.FACT, "fact two text"),
        ("d/s0/5", NodeLabel.FACT, "fact three text"),
    ]
    for segment, label, text in layout:
        reference.nodes.append(AnnotationNode("d", segment, label, text))
    reference.edges = [
        AnnotationEdge(EdgeType.DERIVES_NORM, 0, 1),
        AnnotationEdge(EdgeType.APPLIES_NORM, 1, 2),
        AnnotationEdge(EdgeType.TO_FACT, 3, 2),
        AnnotationEdge(EdgeType.TO_FACT, 4, 2),
        AnnotationEdge(EdgeType.TO_FACT, 5, 2),
    ]
    system = AnnotationSet(nodes=list(reference.nodes), edges=list(reference.edges))
    system.nodes.append(AnnotationNode("d", "d/s0/6", NodeLabel.FACT, "spurious fact"))  # FP
    system.edges = [e for e in system.edges if not (e.kind is EdgeType.TO_FACT and e.src == 5)]  # FN

    report = compare_annotations(system, reference)
    fact = report.nodes["Fact"]
    to_fact = report.edges["ToFact"]
    ok = (
        (fact.tp, fact.fp, fact.fn) == (3, 1, 0)
        and abs(fact.precision - 0.75) < 1e-12
        and fact.recall == 1.0
        and abs(fact.f1 - (2 * 0.75 / 1.75)) < 1e-12
        and (to_fact.tp, to_fact.fp, to_fact.fn) == (2, 0, 1)
        and to_fact.precision == 1.0
        and abs(to_fact.recall - 2 / 3) < 1e-12
        and abs(to_fact.f1 - 0.8) < 1e-12
    )
    _report(
        "annotation comparison reports the injected FP node and FN edge with hand-computed P/R/F1",
        ok,
        f"Fact P={fact.precision:.4f} R={fact.recall:.4f}; ToFact P={to_fact.precision:.4f} R={to_fact.recall:.4f}",
    )
