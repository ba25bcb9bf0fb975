"""Independent reference implementations used to check the package.

Everything here is deliberately naive: direct double sums, exhaustive
enumeration, pair counting, and central finite differences.  None of it
shares code with the implementations under test.
"""

from __future__ import annotations

from itertools import permutations

import numpy as np

from gradclust.graph import WeightedGraph


def weight_matrix(g: WeightedGraph) -> np.ndarray:
    """Dense symmetric weight matrix in the graph's node order."""
    m = g.num_nodes
    w = np.zeros((m, m))
    for p in range(m):
        for q, wt in zip(
            g.indices[g.indptr[p] : g.indptr[p + 1]],
            g.weights[g.indptr[p] : g.indptr[p + 1]],
        ):
            w[p, int(q)] = wt
    return w


def naive_modularity(wmat: np.ndarray, labels) -> float:
    """Direct evaluation of the ordered double sum."""
    labels = np.asarray(labels)
    total = wmat.sum() / 2.0
    if total == 0.0:
        return 0.0
    degrees = wmat.sum(axis=1)
    q = 0.0
    n = len(wmat)
    for i in range(n):
        for j in range(n):
            if labels[i] == labels[j]:
                q += wmat[i, j] - degrees[i] * degrees[j] / (2.0 * total)
    return q / (2.0 * total)


def set_partitions(items: list):
    """All set partitions of ``items`` (Bell-number many)."""
    if len(items) == 1:
        yield [items]
        return
    first, rest = items[0], items[1:]
    for smaller in set_partitions(rest):
        for i, subset in enumerate(smaller):
            yield smaller[:i] + [[first] + subset] + smaller[i + 1 :]
        yield [[first]] + smaller


def brute_force_best_modularity(wmat: np.ndarray) -> float:
    n = len(wmat)
    best = -np.inf
    labels = np.empty(n, dtype=np.int64)
    for blocks in set_partitions(list(range(n))):
        for cid, block in enumerate(blocks):
            labels[block] = cid
        best = max(best, naive_modularity(wmat, labels))
    return best


def brute_force_accuracy(pred, truth) -> float:
    """Max matched fraction over all injections of cluster ids onto classes."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    pred_ids = np.unique(pred)
    truth_ids = list(np.unique(truth))
    # pad the class side so every cluster can map somewhere
    slots = truth_ids + [None] * max(0, len(pred_ids) - len(truth_ids))
    best = 0
    for perm in permutations(slots, len(pred_ids)):
        matched = 0
        for cid, t in zip(pred_ids, perm):
            if t is not None:
                matched += int(np.sum((pred == cid) & (truth == t)))
        best = max(best, matched)
    return best / len(pred)


def pair_counting_ari(a, b) -> float:
    """ARI from explicit agreement counts over all unordered pairs."""
    a = np.asarray(a)
    b = np.asarray(b)
    n = len(a)
    same_a = a[:, None] == a[None, :]
    same_b = b[:, None] == b[None, :]
    iu = np.triu_indices(n, k=1)
    both = int(np.sum(same_a[iu] & same_b[iu]))
    only_a = int(np.sum(same_a[iu] & ~same_b[iu]))
    only_b = int(np.sum(~same_a[iu] & same_b[iu]))
    neither = int(np.sum(~same_a[iu] & ~same_b[iu]))
    numerator = 2 * (both * neither - only_a * only_b)
    denominator = (both + only_a) * (only_a + neither) + (both + only_b) * (only_b + neither)
    if denominator == 0:
        return 1.0
    return numerator / denominator


def central_difference_grad(fn, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    grad = np.zeros_like(x)
    for i in range(x.shape[0]):
        for j in range(x.shape[1]):
            plus = x.copy()
            plus[i, j] += h
            minus = x.copy()
            minus[i, j] -= h
            grad[i, j] = (fn(plus) - fn(minus)) / (2.0 * h)
    return grad


def random_weighted_graph(
    seed: int, n_min: int, n_max: int, p_min: float = 0.05, p_max: float = 0.9
) -> WeightedGraph:
    """Seeded Erdos-Renyi style graph with uniform weights in (0.05, 1]."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_min, n_max + 1))
    p = float(rng.uniform(p_min, p_max))
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.append((i, j, float(rng.uniform(0.05, 1.0))))
    return WeightedGraph.from_edges(range(n), edges)
