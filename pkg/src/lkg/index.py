"""Fact embeddings and top-k cosine retrieval.

The mock embedder hashes character n-grams into a fixed-dimension signed
bag, L2-normalized, so the whole pipeline runs offline and deterministically;
the remote embedder calls an HTTP endpoint and normalizes whatever comes
back. Exact mode is a brute-force cosine scan and is authoritative; the
approximate mode is a random-projection tree forest queried best-first
(angular splits over unit vectors), re-ranked exactly over the candidate
pool.

Tie-break contract everywhere: similarity descending, then node id ascending.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from lkg.errors import (
    DimensionMismatch,
    EmptyIndex,
    EmptyText,
    ProviderUnavailable,
    StaleIndex,
)

INDEX_FORMAT = "lkg-index/1"

EMBED_MODES = ("mock", "remote")


@dataclass(frozen=True)
class EmbedderConfig:
    mode: str = "mock"
    dim: int = 256
    ngram_sizes: tuple[int, ...] = (2, 3)
    endpoint: str | None = None
    api_key: str | None = None
    model_name: str | None = None
    timeout: float = 30.0

    def __post_init__(self) -> None:
        if self.mode not in EMBED_MODES:
            raise ValueError(f"mode must be one of {EMBED_MODES}")
        if self.dim < 8:
            raise ValueError("dim must be >= 8")
        if self.mode == "remote" and not self.endpoint:
            raise ValueError("remote mode requires an endpoint")

    def fingerprint(self) -> str:
        payload = json.dumps(
            {
                "mode": self.mode,
                "dim": self.dim,
                "ngram_sizes": list(self.ngram_sizes),
                "model_name": self.model_name,
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    @classmethod
    def from_env(cls, env: dict | None = None) -> "EmbedderConfig":
        env = dict(os.environ if env is None else env)
        mode = env.get("LKG_EMBED_MODE", "mock")
        return cls(
            mode=mode,
            endpoint=env.get("LKG_EMBED_ENDPOINT"),
            api_key=env.get("LKG_EMBED_API_KEY"),
        )


def _ngrams(text: str, sizes: Iterable[int]) -> Iterable[str]:
    # Boundary markers guarantee at least one gram for any nonempty text.
    padded = f"\x02{text}\x03"
    for n in sizes:
        for i in range(max(0, len(padded) - n + 1)):
            yield padded[i : i + n]


def embed(text: str, embedder: EmbedderConfig) -> np.ndarray:
    """Embed one text into a unit-norm vector; deterministic per config."""
    if not text or not text.strip():
        raise EmptyText("cannot embed empty text")
    if embedder.mode == "mock":
        return _embed_mock(text, embedder)
    return _embed_remote([text], embedder)[0]


def embed_batch(texts: Sequence[str], embedder: EmbedderConfig) -> np.ndarray:
    for text in texts:
        if not text or not text.strip():
            raise EmptyText("cannot embed empty text")
    if embedder.mode == "mock":
        return np.stack([_embed_mock(t, embedder) for t in texts])
    return _embed_remote(list(texts), embedder)


def _embed_mock(text: str, embedder: EmbedderConfig) -> np.ndarray:
    vector = np.zeros(embedder.dim, dtype=np.float64)
    for gram in _ngrams(text, embedder.ngram_sizes):
        digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
        value = int.from_bytes(digest, "big")
        bucket = value % embedder.dim
        sign = 1.0 if (value >> 63) & 1 else -1.0
        vector[bucket] += sign
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        # Astronomically unlikely signed-sum cancellation; fall back to a
        # deterministic one-hot so the unit-norm invariant holds.
        vector[0] = 1.0
        norm = 1.0
    return vector / norm


def _embed_remote(texts: list[str], embedder: EmbedderConfig) -> np.ndarray:
    import requests

    headers = {"Content-Type": "application/json"}
    if embedder.api_key:
        headers["Authorization"] = f"Bearer {embedder.api_key}"
    payload: dict = {"input": texts}
    if embedder.model_name:
        payload["model"] = embedder.model_name
    try:
        response = requests.post(
            embedder.endpoint, json=payload, headers=headers, timeout=embedder.timeout
        )
        response.raise_for_status()
        data = response.json()
    except requests.RequestException as exc:
        raise ProviderUnavailable(f"embedding endpoint failed: {exc}") from exc
    try:
        vectors = np.array([row["embedding"] for row in data["data"]], dtype=np.float64)
    except (KeyError, TypeError) as exc:
        raise ProviderUnavailable(f"embedding reply malformed: {data!r}") from exc
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return vectors / norms


# -- approximate structure: random-projection tree forest ------------------------


@dataclass(frozen=True)
class BuildParams:
    seed: int = 0
    n_trees: int = 12
    leaf_size: int = 24
    search_k: int | None = None  # candidate pool size; defaults per query

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n_trees": self.n_trees,
            "leaf_size": self.leaf_size,
            "search_k": self.search_k,
        }


class _Node:
    __slots__ = ("normal", "offset", "left", "right", "points")

    def __init__(self, normal=None, offset=0.0, left=None, right=None, points=None):
        self.normal = normal
        self.offset = offset
        self.left = left
        self.right = right
        self.points = points  # leaf payload


def _build_tree(matrix: np.ndarray, points: np.ndarray, rng: np.random.Generator, leaf_size: int) -> _Node:
    if len(points) <= leaf_size:
        return _Node(points=points)
    for _ in range(4):
        a, b = rng.choice(points, size=2, replace=False)
        normal = matrix[a] - matrix[b]
        norm = np.linalg.norm(normal)
        if norm > 1e-12:
            normal = normal / norm
            offset = float(normal @ ((matrix[a] + matrix[b]) / 2.0))
            margins = matrix[points] @ normal - offset
            left_mask = margins < 0
            if left_mask.any() and (~left_mask).any():
                return _Node(
                    normal=normal,
                    offset=offset,
                    left=_build_tree(matrix, points[left_mask], rng, leaf_size),
                    right=_build_tree(matrix, points[~left_mask], rng, leaf_size),
                )
    # Degenerate cloud (duplicates): split arbitrarily but deterministically.
    half = len(points) // 2
    return _Node(
        normal=None,
        offset=0.0,
        left=_build_tree(matrix, points[:half], rng, leaf_size),
        right=_build_tree(matrix, points[half:], rng, leaf_size),
        points=None,
    )


class VectorIndex:
    """Entries (node_id, unit vector) with exact and approximate query modes."""

    def __init__(
        self,
        node_ids: list[str],
        matrix: np.ndarray,
        mode: str = "exact",
        embedder_fingerprint: str = "",
        build_params: BuildParams = BuildParams(),
    ):
        if len(node_ids) != len(set(node_ids)):
            raise ValueError("node_ids must be unique")
        if matrix.ndim != 2 or matrix.shape[0] != len(node_ids):
            raise DimensionMismatch("matrix shape does not match entries")
        if mode not in ("exact", "approximate"):
            raise ValueError("mode must be 'exact' or 'approximate'")
        self.node_ids = list(node_ids)
        self.matrix = matrix.astype(np.float64)
        self.mode = mode
        self.embedder_fingerprint = embedder_fingerprint
        self.build_params = build_params
        # Rank of each entry under ascending node_id: the tie-break key.
        order = sorted(range(len(node_ids)), key=lambda i: node_ids[i])
        self._rank = np.empty(len(node_ids), dtype=np.int64)
        for rank, i in enumerate(order):
            self._rank[i] = rank
        self._trees: list[_Node] = []
        if mode == "approximate" and len(node_ids) > 0:
            self._build_forest()

    def __len__(self) -> int:
        return len(self.node_ids)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1]) if self.matrix.size else 0

    def _build_forest(self) -> None:
        points = np.arange(len(self.node_ids))
        self._trees = [
            _build_tree(
                self.matrix,
                points,
                np.random.default_rng(self.build_params.seed + 7919 * t),
                self.build_params.leaf_size,
            )
            for t in range(self.build_params.n_trees)
        ]

    # -- queries ---------------------------------------------------------------

    def query(
        self,
        vector: np.ndarray,
        k: int,
        exclude: frozenset[str] | set[str] = frozenset(),
    ) -> list[tuple[str, float]]:
        """Top-k by cosine similarity, excluding the given node ids.

        Exact mode scans everything; approximate mode ranks a best-first
        candidate pool. Either way the result is sorted by (similarity desc,
        node_id asc) and has length min(k, usable entries).
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        if len(self.node_ids) == 0:
            raise EmptyIndex("index has no entries")
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (self.dim,):
            raise DimensionMismatch(f"query dim {vector.shape} != index dim {self.dim}")
        if self.mode == "exact":
            candidates = None
            sims = self.matrix @ vector
            rank = self._rank
        else:
            candidates = self._candidate_pool(vector, k)
            sims = self.matrix[candidates] @ vector
            rank = self._rank[candidates]
        order = np.lexsort((rank, -sims))
        results: list[tuple[str, float]] = []
        for position in order:
            idx = int(position) if candidates is None else int(candidates[position])
            node_id = self.node_ids[idx]
            if node_id in exclude:
                continue
            results.append((node_id, float(sims[position])))
            if len(results) == k:
                break
        return results

    def _candidate_pool(self, vector: np.ndarray, k: int) -> np.ndarray:
        budget = self.build_params.search_k or max(64 * k, 1024)
        budget = min(budget, len(self.node_ids))
        seen: set[int] = set()
        heap: list[tuple[float, int, _Node]] = []
        counter = 0
        for tree in self._trees:
            heap.append((-np.inf, counter, tree))
            counter += 1
        heapq.heapify(heap)
        while heap and len(seen) < budget:
            neg_priority, _, node = heapq.heappop(heap)
            priority = -neg_priority
            if node.points is not None:
                seen.update(int(p) for p in node.points)
                continue
            if node.normal is None:
                for child in (node.left, node.right):
                    heapq.heappush(heap, (neg_priority, counter, child))
                    counter += 1
                continue
            # Side with the query keeps the parent priority capped by the
            # margin; the far side is penalized by the negated margin.
            margin = float(node.normal @ vector - node.offset)
            heapq.heappush(heap, (-min(priority, margin), counter, node.right))
            counter += 1
            heapq.heappush(heap, (-min(priority, -margin), counter, node.left))
            counter += 1
        return np.fromiter(seen, dtype=np.int64) if seen else np.arange(len(self.node_ids))


def build_index(
    facts: Sequence[tuple[str, str]],
    embedder: EmbedderConfig,
    mode: str = "exact",
    build_params: BuildParams = BuildParams(),
) -> VectorIndex:
    """Embed (node_id, text) pairs and build a queryable index."""
    if not facts:
        raise ValueError("cannot build an index over zero facts")
    node_ids = [node_id for node_id, _ in facts]
    matrix = embed_batch([text for _, text in facts], embedder)
    return VectorIndex(
        node_ids=node_ids,
        matrix=matrix,
        mode=mode,
        embedder_fingerprint=embedder.fingerprint(),
        build_params=build_params,
    )


def save_index(index: VectorIndex, path: str | Path) -> None:
    payload = {
        "version": INDEX_FORMAT,
        "embedder_fingerprint": index.embedder_fingerprint,
        "mode": index.mode,
        "build_params": index.build_params.as_dict(),
        "entries": [
            {"node_id": node_id, "vector": [float(x) for x in index.matrix[i]]}
            for i, node_id in enumerate(index.node_ids)
        ],
    }
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False) + "\n", encoding="utf-8"
    )


def load_index(path: str | Path, embedder: EmbedderConfig) -> VectorIndex:
    """Load an index, rejecting files built under a different embedder."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("version") != INDEX_FORMAT:
        raise StaleIndex(f"index file must declare version {INDEX_FORMAT!r}")
    expected = embedder.fingerprint()
    if payload.get("embedder_fingerprint") != expected:
        raise StaleIndex(
            "index was built with a different embedder configuration; rebuild it"
        )
    entries = payload["entries"]
    node_ids = [entry["node_id"] for entry in entries]
    matrix = np.array([entry["vector"] for entry in entries], dtype=np.float64)
    params = BuildParams(**payload["build_params"])
    return VectorIndex(
        node_ids=node_ids,
        matrix=matrix,
        mode=payload["mode"],
        embedder_fingerprint=payload["embedder_fingerprint"],
        build_params=params,
    )
