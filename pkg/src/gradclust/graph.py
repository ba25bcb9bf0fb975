"""Weighted undirected similarity graphs over node subsets.

Edges connect pairs whose embedding cosine similarity strictly exceeds a
threshold.  Graphs are immutable after construction; each pipeline iteration
rebuilds the graph it needs instead of editing an old one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .model import Dataset

__all__ = [
    "WeightedGraph",
    "cosine_similarity",
    "build_graph",
    "avg_degree",
    "validate_graph",
    "write_edge_list",
    "read_edge_list",
]

_BLOCK_ROWS = 2048


@dataclass(frozen=True)
class WeightedGraph:
    """Symmetric weighted adjacency over an ordered node subset.

    Nodes keep their dataset row indices.  Internally edges live in CSR
    arrays over positions 0..m-1 of ``nodes``; every undirected edge is
    stored in both directions with bit-identical weight, and there are no
    self loops.  ``total_weight`` is the sum over unordered pairs.
    """

    nodes: tuple[int, ...]
    indptr: np.ndarray
    indices: np.ndarray  # positional neighbor indices
    weights: np.ndarray
    total_weight: float

    @classmethod
    def from_pairs(
        cls,
        nodes: Sequence[int],
        src: np.ndarray,
        dst: np.ndarray,
        wts: np.ndarray,
    ) -> "WeightedGraph":
        """Build from positional pair arrays with src < dst for each edge."""
        nodes = tuple(int(n) for n in nodes)
        m = len(nodes)
        if len(src) == 0:
            indptr = np.zeros(m + 1, dtype=np.int64)
            return cls(nodes, indptr, np.zeros(0, dtype=np.int64), np.zeros(0), 0.0)
        both_src = np.concatenate([src, dst])
        both_dst = np.concatenate([dst, src])
        both_w = np.concatenate([wts, wts])
        order = np.lexsort((both_dst, both_src))
        both_src = both_src[order]
        both_dst = both_dst[order]
        both_w = both_w[order]
        indptr = np.zeros(m + 1, dtype=np.int64)
        np.add.at(indptr, both_src + 1, 1)
        np.cumsum(indptr, out=indptr)
        return cls(nodes, indptr, both_dst.astype(np.int64), both_w, float(wts.sum()))

    @classmethod
    def from_edges(
        cls, nodes: Iterable[int], edges: Iterable[tuple[int, int, float]]
    ) -> "WeightedGraph":
        """Build from explicit (u, v, weight) triples over dataset indices."""
        nodes = tuple(sorted(set(int(n) for n in nodes)))
        pos = {n: i for i, n in enumerate(nodes)}
        seen: set[tuple[int, int]] = set()
        src, dst, wts = [], [], []
        for u, v, w in edges:
            u, v, w = int(u), int(v), float(w)
            if u == v:
                raise ValueError(f"self loop on node {u}")
            if u not in pos or v not in pos:
                raise ValueError(f"edge ({u}, {v}) references a node outside the subset")
            if not np.isfinite(w):
                raise ValueError(f"non-finite weight on edge ({u}, {v})")
            a, b = (pos[u], pos[v]) if pos[u] < pos[v] else (pos[v], pos[u])
            if (a, b) in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            seen.add((a, b))
            src.append(a)
            dst.append(b)
            wts.append(w)
        return cls.from_pairs(
            nodes,
            np.asarray(src, dtype=np.int64),
            np.asarray(dst, dtype=np.int64),
            np.asarray(wts, dtype=np.float64),
        )

    def __post_init__(self) -> None:
        object.__setattr__(self, "_node_arr", np.asarray(self.nodes, dtype=np.int64))

    def _position(self, node: int) -> int:
        arr = self._node_arr
        i = int(np.searchsorted(arr, node))
        if i >= len(arr) or arr[i] != node:
            raise KeyError(f"node {node} is not in the graph")
        return i

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.indices) // 2

    def __contains__(self, node: int) -> bool:
        arr = self._node_arr
        i = int(np.searchsorted(arr, node))
        return i < len(arr) and arr[i] == node

    def neighbors(self, node: int) -> list[tuple[int, float]]:
        """Adjacency list of (neighbor node index, weight) for one node."""
        p = self._position(node)
        sl = slice(self.indptr[p], self.indptr[p + 1])
        return [(int(self._node_arr[j]), float(w)) for j, w in zip(self.indices[sl], self.weights[sl])]

    def adjacency(self) -> dict[int, list[tuple[int, float]]]:
        """Full adjacency as a dict; intended for small graphs and tests."""
        return {n: self.neighbors(n) for n in self.nodes}

    def weighted_degree(self, node: int) -> float:
        """Sum of incident edge weights (0.0 for an isolated node)."""
        p = self._position(node)
        return float(self.weights[self.indptr[p] : self.indptr[p + 1]].sum())


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def build_graph(data: Dataset, subset: Iterable[int], threshold: float) -> WeightedGraph:
    """Similarity graph over ``subset``: edge (i, j) iff cos(i, j) > threshold.

    Isolated nodes are retained.  Pairwise similarities are evaluated in row
    blocks; the result is independent of the iteration order of ``subset``.
    """
    if not (-1.0 <= threshold < 1.0):
        raise ValueError("threshold must lie in [-1, 1)")
    subset = sorted(set(int(i) for i in subset))
    if not subset:
        raise ValueError("cannot build a graph over an empty node subset")
    if subset[0] < 0 or subset[-1] >= len(data):
        raise IndexError("subset references rows outside the dataset")
    X = data.embeddings[subset]
    norms = np.linalg.norm(X, axis=1)
    zero = np.nonzero(norms == 0.0)[0]
    if len(zero):
        raise ValueError(f"zero-norm embedding at dataset row {subset[zero[0]]}")
    unit = X / norms[:, None]
    m = len(subset)
    src_parts, dst_parts, w_parts = [], [], []
    for start in range(0, m, _BLOCK_ROWS):
        stop = min(start + _BLOCK_ROWS, m)
        sims = unit[start:stop] @ unit.T
        np.clip(sims, -1.0, 1.0, out=sims)
        # keep the strict upper triangle only: j > global row index
        cols = np.arange(m)
        mask = (sims > threshold) & (cols[None, :] > (start + np.arange(stop - start))[:, None])
        ii, jj = np.nonzero(mask)
        src_parts.append(ii + start)
        dst_parts.append(jj)
        w_parts.append(sims[ii, jj])
    src = np.concatenate(src_parts) if src_parts else np.zeros(0, dtype=np.int64)
    dst = np.concatenate(dst_parts) if dst_parts else np.zeros(0, dtype=np.int64)
    wts = np.concatenate(w_parts) if w_parts else np.zeros(0)
    return WeightedGraph.from_pairs(subset, src, dst, wts)


def avg_degree(g: WeightedGraph, members: Iterable[int]) -> float:
    """Mean weighted degree over ``members`` in the induced subgraph."""
    members = sorted(set(int(m) for m in members))
    if not members:
        raise ValueError("avg_degree needs a non-empty member set")
    pos = np.array([g._position(m) for m in members], dtype=np.int64)
    inside = np.zeros(g.num_nodes, dtype=bool)
    inside[pos] = True
    total = 0.0
    for p in pos:
        sl = slice(g.indptr[p], g.indptr[p + 1])
        total += float(g.weights[sl][inside[g.indices[sl]]].sum())
    return total / len(members)


def validate_graph(g: WeightedGraph, threshold: float | None = None) -> None:
    """Raise if structural invariants are broken (symmetry, no self loops,
    consistent total weight, and optionally weights > threshold)."""
    m = g.num_nodes
    if len(g.indptr) != m + 1:
        raise ValueError("indptr length mismatch")
    pair_sum = 0.0
    for p in range(m):
        sl = slice(int(g.indptr[p]), int(g.indptr[p + 1]))
        nbrs = g.indices[sl]
        wts = g.weights[sl]
        for q, w in zip(nbrs, wts):
            q = int(q)
            if q == p:
                raise ValueError(f"self loop at position {p}")
            back = slice(int(g.indptr[q]), int(g.indptr[q + 1]))
            hits = np.nonzero(g.indices[back] == p)[0]
            if len(hits) != 1:
                raise ValueError(f"asymmetric edge between positions {p} and {q}")
            if g.weights[back][hits[0]] != w:
                raise ValueError(f"weight mismatch on edge ({p}, {q})")
            if threshold is not None and not (w > threshold):
                raise ValueError(f"stored weight {w} does not exceed threshold {threshold}")
            if q > p:
                pair_sum += float(w)
    if pair_sum == 0.0:
        if g.total_weight != 0.0:
            raise ValueError("total_weight nonzero for an edgeless graph")
    elif abs(g.total_weight - pair_sum) > 1e-9 * abs(pair_sum):
        raise ValueError(f"total_weight {g.total_weight} != recomputed {pair_sum}")


def write_edge_list(g: WeightedGraph, path: str) -> None:
    """Dump edges as ``u v weight`` lines, nodes as dataset row indices."""
    with open(path, "w", encoding="utf-8") as fh:
        for p in range(g.num_nodes):
            u = g.nodes[p]
            sl = slice(g.indptr[p], g.indptr[p + 1])
            for q, w in zip(g.indices[sl], g.weights[sl]):
                if q > p:
                    fh.write(f"{u} {g.nodes[int(q)]} {float(w)!r}\n")


def read_edge_list(path: str) -> WeightedGraph:
    """Parse a ``u v weight`` edge list; nodes are the union of endpoints."""
    edges: list[tuple[int, int, float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'u v weight', got {line!r}")
            try:
                u, v, w = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            edges.append((u, v, w))
    nodes = {u for u, _, _ in edges} | {v for _, v, _ in edges}
    if not nodes:
        raise ValueError(f"{path}: no edges found")
    return WeightedGraph.from_edges(nodes, edges)
