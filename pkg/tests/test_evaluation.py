"""Gold derivation, predictors, metric arithmetic, annotation comparison."""

from __future__ import annotations

import random
from collections import defaultdict

import pytest

from lkg.errors import ResourceMissing, UnknownQuery
from lkg.evaluation import (
    AnnotationEdge,
    AnnotationNode,
    AnnotationSet,
    EvalResources,
    GoldSet,
    PredictorKind,
    benchmark,
    build_gold,
    compare_annotations,
    compute_metrics,
    parse_report_csv,
    render_report_csv,
    render_report_text,
    run_predictor,
)
from lkg.graph import LegalKnowledgeGraph
from lkg.index import build_index
from lkg.normalize import ProvisionId
from lkg.ontology import EdgeType, NodeLabel
from lkg.providers import ProviderConfig

from conftest import ScriptedTransport, chat_response, scripted_provider

# Reference benchmark rows used as metric-arithmetic fixtures:
# (method, Pred, TP, micro recall, micro precision) with 1242 gold labels.
REFERENCE_ROWS = [
    ("GPT Simple", 4922, 123, 0.099, 0.025),
    ("GPT With Context", 7377, 336, 0.271, 0.046),
    ("GPT With RAG", 7792, 436, 0.351, 0.056),
    ("LKG Retrieval (k=1)", 1253, 497, 0.400, 0.397),
    ("LKG Retrieval (k=2)", 2403, 712, 0.573, 0.296),
    ("LKG Retrieval (k=3)", 3470, 829, 0.667, 0.239),
    ("LKG Retrieval (k=4)", 4415, 887, 0.714, 0.201),
    ("LKG Retrieval (k=5)", 5423, 920, 0.741, 0.170),
    ("LKG Retrieval (k=6)", 6464, 953, 0.767, 0.147),
    ("LKG Retrieval (k=7)", 7482, 965, 0.777, 0.129),
]
REFERENCE_GOLD_TOTAL = 1242


def synthetic_predictions(pred: int, tp: int, gold_total: int = REFERENCE_GOLD_TOTAL):
    """Gold of one provision per query plus predictions hitting the given totals."""
    gold_labels = {}
    doc_of = {}
    for i in range(gold_total):
        query = f"q{i:05d}"
        gold_labels[query] = frozenset({ProvisionId("Gold Act", i + 1)})
        doc_of[query] = f"doc{i % 40}"
    gold = GoldSet(labels=gold_labels, doc_of=doc_of)

    predictions = []
    extra = pred - tp
    queries = sorted(gold_labels)
    base_extra, remainder = divmod(extra, gold_total)
    for i, query in enumerate(queries):
        predicted = set()
        if i < tp:
            predicted.add(ProvisionId("Gold Act", i + 1))
        n_fakes = base_extra + (1 if i < remainder else 0)
        for slot in range(n_fakes):
            predicted.add(ProvisionId(f"Wrong Act {slot}", i + 1))
        predictions.append((query, frozenset(predicted)))
    return gold, predictions


class TestMetricArithmetic:
    @pytest.mark.parametrize("method,pred,tp,micro_r,micro_p", REFERENCE_ROWS)
    def test_reference_rows(self, method, pred, tp, micro_r, micro_p):
        gold, predictions = synthetic_predictions(pred, tp)
        row = compute_metrics(predictions, gold, method=method)
        assert row.pred == pred and row.tp == tp
        assert abs(row.micro_precision - micro_p) <= 0.0005
        assert abs(row.micro_recall - micro_r) <= 0.0005

    def test_perfect_predictions_all_ones(self):
        gold, _ = synthetic_predictions(0, 0)
        predictions = [(q, gold.labels[q]) for q in gold.queries()]
        row = compute_metrics(predictions, gold)
        for value in (
            row.macro_recall, row.micro_recall, row.macro_precision,
            row.micro_precision, row.macro_f1, row.micro_f1,
        ):
            assert value == 1.0

    def test_micro_identities_random(self):
        rng = random.Random(5)
        for _ in range(50):
            gold_total = rng.randint(5, 60)
            gold, _ = synthetic_predictions(0, 0, gold_total=gold_total)
            predictions = []
            for i, query in enumerate(gold.queries()):
                predicted = set()
                if rng.random() < 0.5:
                    predicted.add(ProvisionId("Gold Act", i + 1))
                for slot in range(rng.randint(0, 4)):
                    predicted.add(ProvisionId(f"Wrong Act {slot}", i + 1))
                predictions.append((query, frozenset(predicted)))
            row = compute_metrics(predictions, gold)
            assert row.micro_precision * row.pred == pytest.approx(row.tp)
            assert row.micro_recall * gold.total == pytest.approx(row.tp)
            for f1, p, r in (
                (row.micro_f1, row.micro_precision, row.micro_recall),
                (row.macro_f1, row.macro_precision, row.macro_recall),
            ):
                assert 0.0 <= f1 <= max(p, r) + 1e-12
                if p + r > 0:
                    assert f1 == pytest.approx(2 * p * r / (p + r))

    def test_permutation_invariant(self):
        gold, predictions = synthetic_predictions(500, 100)
        shuffled = list(predictions)
        random.Random(3).shuffle(shuffled)
        assert compute_metrics(predictions, gold) == compute_metrics(shuffled, gold)

    def test_unknown_query_rejected(self):
        gold, _ = synthetic_predictions(0, 0, gold_total=3)
        with pytest.raises(UnknownQuery):
            compute_metrics([("ghost", frozenset())], gold)

    def test_zero_predictions(self):
        gold, _ = synthetic_predictions(0, 0, gold_total=5)
        predictions = [(q, frozenset()) for q in gold.queries()]
        row = compute_metrics(predictions, gold)
        assert row.pred == row.tp == 0
        assert row.micro_precision == row.micro_recall == row.micro_f1 == 0.0


class TestBuildGold:
    def test_single_chain(self):
        graph = LegalKnowledgeGraph()
        p = graph.add_node(NodeLabel.PROVISION, "Article 1 of the X Act", "d", "d/s0/0",
                           provision=ProvisionId("X Act", 1))
        n = graph.add_node(NodeLabel.LEGAL_NORM, "n", "d", "d/s0/1")
        a = graph.add_node(NodeLabel.LEGAL_APPLICATION, "a", "d", "d/s0/2")
        f = graph.add_node(NodeLabel.FACT, "f", "d", "d/s0/3")
        graph.add_edge(EdgeType.DERIVES_NORM, p, n)
        graph.add_edge(EdgeType.APPLIES_NORM, n, a)
        graph.add_edge(EdgeType.TO_FACT, f, a)
        gold = build_gold(graph)
        assert gold.labels == {f: frozenset({ProvisionId("X Act", 1)})}

    def test_shared_provision_deduplicated(self):
        graph = LegalKnowledgeGraph()
        p = graph.add_node(NodeLabel.PROVISION, "Article 1 of the X Act", "d", "d/s0/0",
                           provision=ProvisionId("X Act", 1))
        n = graph.add_node(NodeLabel.LEGAL_NORM, "n", "d", "d/s0/1")
        a1 = graph.add_node(NodeLabel.LEGAL_APPLICATION, "a1", "d", "d/s0/2")
        a2 = graph.add_node(NodeLabel.LEGAL_APPLICATION, "a2", "d", "d/s0/3")
        f = graph.add_node(NodeLabel.FACT, "f", "d", "d/s0/4")
        graph.add_edge(EdgeType.DERIVES_NORM, p, n)
        graph.add_edge(EdgeType.APPLIES_NORM, n, a1)
        graph.add_edge(EdgeType.APPLIES_NORM, n, a2)
        graph.add_edge(EdgeType.TO_FACT, f, a1)
        graph.add_edge(EdgeType.TO_FACT, f, a2)
        gold = build_gold(graph)
        assert len(gold.labels[f]) == 1

    def test_matches_brute_force_reachability(self, bench_graph, bench_gold):
        brute = brute_force_gold(bench_graph)
        assert bench_gold.labels == brute

    def test_facts_without_provisions_excluded(self, bench_graph, bench_gold):
        all_facts = {n.node_id for n in bench_graph.nodes_with_label(NodeLabel.FACT)}
        assert set(bench_gold.labels) < all_facts


def brute_force_gold(graph):
    """Independent transitive-closure oracle over raw edge lists."""
    to_fact = defaultdict(set)
    applied_by = defaultdict(set)
    derived_from = defaultdict(set)
    for edge in graph.edges.values():
        if edge.kind is EdgeType.TO_FACT:
            to_fact[edge.src].add(edge.dst)
        elif edge.kind is EdgeType.APPLIES_NORM:
            applied_by[edge.dst].add(edge.src)
        elif edge.kind is EdgeType.DERIVES_NORM:
            derived_from[edge.dst].add(edge.src)
    out = {}
    for node in graph.nodes.values():
        if node.label is not NodeLabel.FACT:
            continue
        provisions = set()
        for app in to_fact[node.node_id]:
            for norm in applied_by[app]:
                for prov in derived_from[norm]:
                    provisions.add(graph.nodes[prov].provision)
        if provisions:
            out[node.node_id] = frozenset(provisions)
    return out


@pytest.fixture()
def shared_provision_graph(embedder):
    """Two similar facts, separate applications, one shared norm/provision."""
    graph = LegalKnowledgeGraph()
    p = graph.add_node(NodeLabel.PROVISION, "Article 9 of the X Act", "d", "d/s0/0",
                       provision=ProvisionId("X Act", 9))
    n = graph.add_node(NodeLabel.LEGAL_NORM, "claims need protected interests", "d", "d/s0/1")
    a1 = graph.add_node(NodeLabel.LEGAL_APPLICATION, "claim one is admissible", "d", "d/s0/2")
    a2 = graph.add_node(NodeLabel.LEGAL_APPLICATION, "claim two is admissible", "d", "d/s0/3")
    f1 = graph.add_node(NodeLabel.FACT, "the plaintiff filed claim one in June", "d", "d/s0/4")
    f2 = graph.add_node(NodeLabel.FACT, "the plaintiff filed claim two in July", "d", "d/s0/5")
    graph.add_edge(EdgeType.DERIVES_NORM, p, n)
    graph.add_edge(EdgeType.APPLIES_NORM, n, a1)
    graph.add_edge(EdgeType.APPLIES_NORM, n, a2)
    graph.add_edge(EdgeType.TO_FACT, f1, a1)
    graph.add_edge(EdgeType.TO_FACT, f2, a2)
    graph.freeze()
    index = build_index([(f1, graph.nodes[f1].text), (f2, graph.nodes[f2].text)], embedder)
    return graph, index


class TestPredictors:
    def test_lkg_retrieval_trivial_graph(self, shared_provision_graph, embedder):
        graph, index = shared_provision_graph
        gold = build_gold(graph)
        resources = EvalResources(graph=graph, index=index, embedder=embedder)
        predictions = run_predictor(gold, PredictorKind.lkg_retrieval(k=1), resources)
        assert dict(predictions) == {
            q: frozenset({ProvisionId("X Act", 9)}) for q in gold.queries()
        }
        row = compute_metrics(predictions, gold)
        assert row.micro_precision == row.micro_recall == 1.0

    def test_llm_simple_canned(self, shared_provision_graph, embedder):
        graph, index = shared_provision_graph
        gold = build_gold(graph)
        provider = scripted_provider(
            {"provisions": ["Article 242 of the Local Autonomy Act",
                            "Article 11 of the Nationality Act"]}
        )
        resources = EvalResources(graph=graph, index=index, embedder=embedder, provider=provider)
        predictions = run_predictor(gold, PredictorKind.llm_simple(), resources)
        for _, predicted in predictions:
            assert predicted == frozenset(
                {ProvisionId("Local Autonomy Act", 242), ProvisionId("Nationality Act", 11)}
            )

    def test_llm_context_uses_overview(self, shared_provision_graph, embedder, small_docs):
        graph, index = shared_provision_graph
        # rebuild a gold set against the bench graph's first doc instead:
        # simpler: use the shared graph but lend it a docs table
        gold = build_gold(graph)
        transport = ScriptedTransport(chat_response({"provisions": []}))
        provider = ProviderConfig(mode="remote", endpoint="http://test.invalid",
                                  transport=transport)
        from lkg.corpus import JudgmentDoc, Section

        doc = JudgmentDoc(doc_id="d", case_overview="the levy dispute overview",
                          root=Section(path=(), heading=None))
        resources = EvalResources(graph=graph, index=index, embedder=embedder,
                                  provider=provider, docs={"d": doc})
        run_predictor(gold, PredictorKind.llm_with_context(), resources)
        assert "the levy dispute overview" in transport.requests[0]["messages"][0]["content"]

    def test_llm_rag_prompt_has_exactly_m_passages(self, embedder, bench_graph, bench_index,
                                                   bench_gold, bench_docs):
        transport = ScriptedTransport(chat_response({"provisions": []}))
        provider = ProviderConfig(mode="remote", endpoint="http://test.invalid",
                                  transport=transport)
        resources = EvalResources(
            graph=bench_graph, index=bench_index, embedder=embedder, provider=provider,
            docs={d.doc_id: d for d in bench_docs[:10]},
        )
        one_query = GoldSet(
            labels={q: bench_gold.labels[q] for q in bench_gold.queries()[:1]},
            doc_of={q: bench_gold.doc_of[q] for q in bench_gold.queries()[:1]},
        )
        run_predictor(one_query, PredictorKind.llm_with_rag(m=3), resources)
        prompt = transport.requests[0]["messages"][0]["content"]
        assert "[1] " in prompt and "[2] " in prompt and "[3] " in prompt
        assert "[4] " not in prompt

    def test_provider_failure_yields_empty_sets(self, shared_provision_graph, embedder):
        graph, index = shared_provision_graph
        gold = build_gold(graph)
        provider = scripted_provider("still not json", max_retries=0)
        resources = EvalResources(graph=graph, index=index, embedder=embedder, provider=provider)
        predictions = run_predictor(gold, PredictorKind.llm_simple(), resources)
        assert all(predicted == frozenset() for _, predicted in predictions)

    def test_missing_resources(self, shared_provision_graph):
        graph, _ = shared_provision_graph
        gold = build_gold(graph)
        with pytest.raises(ResourceMissing):
            run_predictor(gold, PredictorKind.lkg_retrieval(), EvalResources(graph=graph))

    def test_predictor_spec_parsing(self):
        assert PredictorKind.parse("lkg:k=5") == PredictorKind.lkg_retrieval(k=5)
        assert PredictorKind.parse("llm-simple") == PredictorKind.llm_simple()
        assert PredictorKind.parse("llm-rag:m=7") == PredictorKind.llm_with_rag(m=7)
        with pytest.raises(ValueError):
            PredictorKind.parse("nonsense")


class TestCompareAnnotations:
    def _reference(self):
        ref = AnnotationSet()
        texts = [
            ("d/s0/0", NodeLabel.PROVISION, "Article 1 of the X Act"),
            ("d/s0/1", NodeLabel.LEGAL_NORM, "the norm text"),
            ("d/s0/2", NodeLabel.LEGAL_APPLICATION, "the application text"),
            ("d/s0/3", NodeLabel.FACT, "fact one text"),
            ("d/s0/4", NodeLabel.FACT, "fact two text"),
            ("d/s0/5", NodeLabel.FACT, "fact three text"),
        ]
        for segment, label, text in texts:
            ref.nodes.append(AnnotationNode("d", segment, label, text))
        ref.edges = [
            AnnotationEdge(EdgeType.DERIVES_NORM, 0, 1),
            AnnotationEdge(EdgeType.APPLIES_NORM, 1, 2),
            AnnotationEdge(EdgeType.TO_FACT, 3, 2),
            AnnotationEdge(EdgeType.TO_FACT, 4, 2),
            AnnotationEdge(EdgeType.TO_FACT, 5, 2),
        ]
        return ref

    def test_identical_sets_perfect(self):
        ref = self._reference()
        report = compare_annotations(ref, ref)
        for score in list(report.nodes.values()) + list(report.edges.values()):
            assert score.fp == 0 and score.fn == 0
            assert score.precision == 1.0 and score.recall == 1.0

    def test_injected_fp_node_and_fn_edge(self):
        # Hand-computed: one spurious Fact node -> Fact P=3/4, R=1;
        # one dropped ToFact edge on a 3-edge kind -> P=1, R=2/3.
        ref = self._reference()
        system = self._reference()
        system.nodes.append(AnnotationNode("d", "d/s0/6", NodeLabel.FACT, "spurious fact"))
        system.edges = [e for e in system.edges if not (e.kind is EdgeType.TO_FACT and e.src == 5)]
        report = compare_annotations(system, ref)

        fact = report.nodes["Fact"]
        assert (fact.tp, fact.fp, fact.fn) == (3, 1, 0)
        assert fact.precision == pytest.approx(0.75)
        assert fact.recall == 1.0
        assert fact.f1 == pytest.approx(2 * 0.75 / 1.75)

        to_fact = report.edges["ToFact"]
        assert (to_fact.tp, to_fact.fp, to_fact.fn) == (2, 0, 1)
        assert to_fact.precision == 1.0
        assert to_fact.recall == pytest.approx(2 / 3)
        assert to_fact.f1 == pytest.approx(0.8)

        assert report.nodes["Provision"].precision == 1.0
        assert report.nodes["Provision"].recall == 1.0

    def test_text_overlap_threshold(self):
        ref = self._reference()
        system = self._reference()
        # rewrite one fact with low overlap -> no match: one FP and one FN
        system.nodes[3] = AnnotationNode("d", "d/s0/3", NodeLabel.FACT,
                                         "completely unrelated words entirely")
        report = compare_annotations(system, ref, overlap_threshold=0.8)
        fact = report.nodes["Fact"]
        assert (fact.tp, fact.fp, fact.fn) == (2, 1, 1)

    def test_document_mismatch(self):
        ref = self._reference()
        other = AnnotationSet(nodes=[AnnotationNode("other", "other/s0/0", NodeLabel.FACT, "x")])
        with pytest.raises(Exception):
            compare_annotations(other, ref)

    def test_graph_vs_gold_on_synth(self, small_docs, oracle_graph):
        system = AnnotationSet.from_graph(oracle_graph)
        reference = AnnotationSet.from_gold(small_docs)
        report = compare_annotations(system, reference)
        for score in list(report.nodes.values()) + list(report.edges.values()):
            assert score.precision == 1.0 and score.recall == 1.0


class TestReports:
    def _report(self):
        gold, predictions = synthetic_predictions(100, 40, gold_total=120)
        report_row = compute_metrics(predictions, gold, method="LKG Retrieval (k=1)")
        from lkg.evaluation import MetricsReport

        return MetricsReport(gold_total=gold.total, rows=[report_row])

    def test_empty_report_header_only(self):
        from lkg.evaluation import MetricsReport

        report = MetricsReport(gold_total=0)
        csv_text = render_report_csv(report)
        assert csv_text.splitlines()[0].startswith("Method,Pred,TP")
        assert len(csv_text.splitlines()) == 1

    def test_one_row_csv_two_lines(self):
        assert len(render_report_csv(self._report()).splitlines()) == 2

    def test_column_order(self):
        header = render_report_csv(self._report()).splitlines()[0]
        assert header == (
            "Method,Pred,TP,Macro Recall,Micro Recall,"
            "Macro Precision,Micro Precision,Macro F1,Micro F1"
        )

    def test_csv_round_trip_at_three_decimals(self):
        report = self._report()
        parsed = parse_report_csv(render_report_csv(report))
        original = report.rows[0]
        recovered = parsed.rows[0]
        assert recovered.method == original.method
        assert recovered.pred == original.pred and recovered.tp == original.tp
        for name in ("macro_recall", "micro_recall", "macro_precision",
                     "micro_precision", "macro_f1", "micro_f1"):
            assert getattr(recovered, name) == pytest.approx(
                round(getattr(original, name), 3)
            )

    def test_text_report_contains_columns(self):
        text = render_report_text(self._report())
        for column in ("Method", "Pred", "TP", "Macro Recall", "Micro F1"):
            assert column in text


class TestBenchmarkHarness:
    def test_lkg_sweep_on_bench(self, bench_graph, bench_index, bench_gold, embedder):
        resources = EvalResources(graph=bench_graph, index=bench_index, embedder=embedder)
        report = benchmark(bench_gold, [PredictorKind.lkg_retrieval(k=1)], resources)
        row = report.rows[0]
        assert row.pred > 0 and 0.0 < row.micro_recall <= 1.0
        assert report.gold_total == bench_gold.total
