"""Shared fixtures: synthetic corpora, oracle graphs, canned provider transports."""

from __future__ import annotations

import json

import pytest

from lkg.evaluation import build_gold
from lkg.index import BuildParams, EmbedderConfig, build_index
from lkg.ontology import NodeLabel
from lkg.pipeline import build_graph
from lkg.providers import ProviderConfig
from lkg.synth import SynthParams, synth_corpus

# Benchmark corpus: big enough for the retrieval/mask criteria (>=2,000 facts,
# >=200 facts whose provisions are uniquely self-linked).
BENCH_SEED = 11
BENCH_DOCS = 140
BENCH_PARAMS = SynthParams(
    sections_per_doc=(4, 6),
    facts_per_section=(2, 5),
    max_articles_per_law=120,
    multi_fact_rate=0.2,
    cross_section_rate=0.15,
)


def chat_response(content: object) -> dict:
    """Wrap a JSON value as a chat-completion style provider response."""
    text = content if isinstance(content, str) else json.dumps(content)
    return {"choices": [{"message": {"content": text}}]}


class ScriptedTransport:
    """Returns queued responses in order; records every request payload."""

    def __init__(self, *responses: dict):
        self.responses = list(responses)
        self.requests: list[dict] = []

    def __call__(self, url: str, payload: dict, headers: dict, timeout: float) -> dict:
        self.requests.append(payload)
        if not self.responses:
            raise AssertionError("transport exhausted")
        if len(self.responses) == 1:
            return self.responses[0]
        return self.responses.pop(0)


def scripted_provider(*contents: object, max_retries: int = 2) -> ProviderConfig:
    transport = ScriptedTransport(*[chat_response(c) for c in contents])
    return ProviderConfig(mode="remote", endpoint="http://test.invalid/v1/chat",
                          max_retries=max_retries, transport=transport)


@pytest.fixture(scope="session")
def small_docs():
    return synth_corpus(7, 40)


@pytest.fixture(scope="session")
def oracle_graph(small_docs):
    return build_graph(small_docs, ProviderConfig(mode="oracle")).graph


@pytest.fixture(scope="session")
def embedder():
    return EmbedderConfig()


@pytest.fixture(scope="session")
def bench_docs():
    return synth_corpus(BENCH_SEED, BENCH_DOCS, BENCH_PARAMS)


@pytest.fixture(scope="session")
def bench_graph(bench_docs):
    return build_graph(bench_docs, ProviderConfig(mode="oracle")).graph


@pytest.fixture(scope="session")
def bench_gold(bench_graph):
    return build_gold(bench_graph)


@pytest.fixture(scope="session")
def bench_facts(bench_graph):
    return sorted(bench_graph.nodes_with_label(NodeLabel.FACT), key=lambda n: n.node_id)


@pytest.fixture(scope="session")
def bench_index(bench_facts, embedder):
    return build_index([(n.node_id, n.text) for n in bench_facts], embedder, mode="exact")


@pytest.fixture(scope="session")
def bench_index_approx(bench_facts, embedder):
    return build_index(
        [(n.node_id, n.text) for n in bench_facts],
        embedder,
        mode="approximate",
        build_params=BuildParams(seed=5),
    )
