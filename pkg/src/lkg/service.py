"""Read-only HTTP API over a frozen graph snapshot and vector index.

All endpoints are deterministic functions of (snapshot fingerprint, request);
nothing mutates the loaded state. The service answers /v1/health before a
snapshot is loaded; every data endpoint returns 503 until then. Errors use a
single JSON shape: {"status", "code", "message"}.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from lkg.errors import EmptyIndex, UnknownNode, WrongLabel
from lkg.graph import (
    LegalKnowledgeGraph,
    ReasoningPath,
    export_jsonld,
    load_snapshot,
    snapshot_fingerprint,
)
from lkg.index import EmbedderConfig, VectorIndex, load_index
from lkg.search import ProvisionHit, SearchQuery, retrieve_provisions

log = logging.getLogger(__name__)


@dataclass
class ServiceState:
    graph: LegalKnowledgeGraph
    index: VectorIndex
    embedder: EmbedderConfig
    fingerprint: str


def load_state(
    snapshot_path: str, index_path: str, embedder: EmbedderConfig
) -> ServiceState:
    graph = load_snapshot(snapshot_path).freeze()
    index = load_index(index_path, embedder)
    return ServiceState(
        graph=graph,
        index=index,
        embedder=embedder,
        fingerprint=snapshot_fingerprint(graph),
    )


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _path_payload(graph: LegalKnowledgeGraph, path: ReasoningPath, similarity: float | None = None) -> dict:
    def node_payload(node_id: str | None) -> dict | None:
        if node_id is None:
            return None
        node = graph.node(node_id)
        payload = {"id": node.node_id, "text": node.text}
        if node.provision is not None:
            payload["canonical"] = node.provision.canonical()
        return payload

    out = {
        "fact": node_payload(path.fact),
        "application": node_payload(path.application),
        "norm": node_payload(path.norm),
        "provision": node_payload(path.provision),
    }
    if similarity is not None:
        out["similarity"] = similarity
    return out


def _hit_payload(graph: LegalKnowledgeGraph, hit: ProvisionHit) -> dict:
    return {
        "provision": hit.provision.canonical(),
        "score": hit.score,
        "paths": [
            _path_payload(graph, support.path, support.similarity)
            for support in hit.supporting_paths
        ],
    }


def create_app(state: ServiceState | None = None, cors_origins: list[str] | None = None) -> FastAPI:
    app = FastAPI(title="lkg", docs_url=None, redoc_url=None)
    app.state.lkg = state
    if cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=cors_origins,
            allow_methods=["GET", "POST"],
            allow_headers=["*"],
        )

    @app.exception_handler(ApiError)
    async def handle_api_error(_request: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(
            status_code=exc.status,
            content={"status": exc.status, "code": exc.code, "message": exc.message},
        )

    def require_state() -> ServiceState:
        if app.state.lkg is None:
            raise ApiError(503, "index_missing", "no snapshot loaded")
        return app.state.lkg

    @app.get("/v1/health")
    async def health() -> dict:
        if app.state.lkg is None:
            return {"status": "starting"}
        return {"status": "ok", "snapshot": app.state.lkg.fingerprint}

    @app.post("/v1/search")
    async def search(request: Request) -> dict:
        state = require_state()
        try:
            body = await request.json()
        except Exception:
            raise ApiError(422, "invalid_request", "body must be a JSON object") from None
        if not isinstance(body, dict):
            raise ApiError(422, "invalid_request", "body must be a JSON object")
        text = body.get("text")
        fact_id = body.get("fact_id")
        if (text is None) == (fact_id is None):
            raise ApiError(422, "invalid_request", "exactly one of text/fact_id required")
        k = body.get("k", 3)
        mask = body.get("mask", True)
        if not isinstance(k, int) or isinstance(k, bool) or not 1 <= k <= 100:
            raise ApiError(422, "invalid_request", "k must be an integer in 1..100")
        if not isinstance(mask, bool):
            raise ApiError(422, "invalid_request", "mask must be a boolean")
        if text is not None and (not isinstance(text, str) or not text.strip()):
            raise ApiError(422, "invalid_request", "text must be a nonempty string")
        try:
            query = SearchQuery(
                text=text, node_id=fact_id, k=k, mask=mask
            )
            hits = retrieve_provisions(query, state.graph, state.index, state.embedder)
        except UnknownNode:
            raise ApiError(404, "not_found", f"unknown fact_id {fact_id!r}") from None
        except WrongLabel as exc:
            raise ApiError(422, "invalid_request", str(exc)) from None
        except EmptyIndex:
            raise ApiError(503, "index_missing", "index holds no facts") from None
        return {"hits": [_hit_payload(state.graph, hit) for hit in hits]}

    @app.get("/v1/nodes/{node_id}")
    async def get_node(node_id: str) -> dict:
        state = require_state()
        try:
            node = state.graph.node(node_id)
        except UnknownNode:
            raise ApiError(404, "not_found", f"unknown node {node_id!r}") from None
        return {
            "id": node.node_id,
            "label": node.label.value,
            "text": node.text,
            "doc_id": node.doc_id,
            "segment_id": node.segment_id,
            "provision": node.provision.canonical() if node.provision else None,
            "out_edges": [
                {"kind": e.kind.value, "dst": e.dst}
                for e in sorted(state.graph.out_edges(node_id), key=lambda e: e.edge_id)
            ],
            "in_edges": [
                {"kind": e.kind.value, "src": e.src}
                for e in sorted(state.graph.in_edges(node_id), key=lambda e: e.edge_id)
            ],
        }

    @app.get("/v1/facts/{node_id}/paths")
    async def fact_paths(node_id: str, include_partial: bool = False) -> dict:
        state = require_state()
        try:
            paths = state.graph.reasoning_paths(node_id, include_partial=include_partial)
        except UnknownNode:
            raise ApiError(404, "not_found", f"unknown node {node_id!r}") from None
        except WrongLabel as exc:
            raise ApiError(422, "invalid_request", str(exc)) from None
        return {
            "fact_id": node_id,
            "paths": [_path_payload(state.graph, path) for path in paths],
        }

    @app.get("/v1/stats")
    async def stats() -> dict:
        state = require_state()
        return state.graph.stats().as_dict()

    @app.get("/v1/export/jsonld")
    async def jsonld() -> dict:
        state = require_state()
        return export_jsonld(state.graph)

    return app
