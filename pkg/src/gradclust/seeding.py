"""Initial clustering and main-community formation.

The first stage labels every sample with k-means, detects communities inside
each cluster on a similarity graph, keeps the largest community per cluster
as its main community, and screens out members that sit suspiciously far
from the community centroid.  Everything else lands in the unlabeled pool
for the merge loop.
"""

from __future__ import annotations

import math

import numpy as np

from .detect import leiden
from .graph import build_graph
from .model import ClusterState, Community, Dataset, Partition, RunConfig, centroid
from .seeds import STREAM_LEIDEN, child_seed

__all__ = [
    "kmeans_init",
    "detect_initial_communities",
    "select_main",
    "risk_screen",
    "build_initial_state",
]

_LLOYD_ROUNDS = 300
_RESTARTS = 10


def _sq_dists(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = (
        (X**2).sum(axis=1)[:, None]
        - 2.0 * (X @ centers.T)
        + (centers**2).sum(axis=1)[None, :]
    )
    np.maximum(d2, 0.0, out=d2)
    return d2


def _kmeanspp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    centers = np.empty((k, X.shape[1]), dtype=np.float64)
    chosen = np.zeros(n, dtype=bool)
    first = int(rng.integers(n))
    centers[0] = X[first]
    chosen[first] = True
    best_d2 = _sq_dists(X, centers[:1])[:, 0]
    for i in range(1, k):
        total = best_d2.sum()
        if total > 0.0:
            probs = best_d2 / total
            nxt = int(rng.choice(n, p=probs))
        else:  # all remaining points coincide with chosen centers
            free = np.nonzero(~chosen)[0]
            nxt = int(free[rng.integers(len(free))])
        centers[i] = X[nxt]
        chosen[nxt] = True
        best_d2 = np.minimum(best_d2, _sq_dists(X, centers[i : i + 1])[:, 0])
    return centers


def _repair_empty(labels: np.ndarray, d2: np.ndarray, k: int) -> np.ndarray:
    """Give every empty cluster the point farthest from its current center,
    never emptying another cluster in the process."""
    counts = np.bincount(labels, minlength=k)
    for cluster in np.nonzero(counts == 0)[0]:
        own = d2[np.arange(len(labels)), labels]
        movable = counts[labels] > 1
        candidates = np.nonzero(movable)[0]
        far = candidates[np.argmax(own[candidates])]
        counts[labels[far]] -= 1
        labels[far] = cluster
        counts[cluster] += 1
    return labels


def _lloyd(X: np.ndarray, centers: np.ndarray, k: int) -> tuple[np.ndarray, float]:
    labels = np.full(len(X), -1, dtype=np.int64)
    for _ in range(_LLOYD_ROUNDS):
        d2 = _sq_dists(X, centers)
        new_labels = np.argmin(d2, axis=1)
        new_labels = _repair_empty(new_labels, d2, k)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            centers[c] = X[labels == c].mean(axis=0)
    d2 = _sq_dists(X, centers)
    inertia = float(d2[np.arange(len(X)), labels].sum())
    return labels, inertia


def kmeans_init(data: Dataset, k: int, seed: int) -> np.ndarray:
    """Full labeling by seeded k-means (k-means++ starts, Lloyd iterations).

    Runs a handful of restarts and keeps the lowest-inertia labeling, which
    makes the initialization stable across nearby seeds.
    """
    n = len(data)
    if k > n:
        raise ValueError(f"cannot form {k} clusters from {n} samples")
    if k == n:
        return np.arange(n, dtype=np.int64)
    X = np.asarray(data.embeddings, dtype=np.float64)
    rng = np.random.default_rng(seed)
    best_labels: np.ndarray | None = None
    best_inertia = np.inf
    for _ in range(_RESTARTS):
        centers = _kmeanspp(X, k, rng)
        labels, inertia = _lloyd(X, centers.copy(), k)
        if best_labels is None or inertia < best_inertia:
            best_inertia = inertia
            best_labels = labels
    return best_labels


def detect_initial_communities(
    data: Dataset, labeling: np.ndarray, cfg: RunConfig
) -> dict[int, Partition]:
    """Leiden partition of each initial cluster's similarity graph."""
    labeling = np.asarray(labeling, dtype=np.int64)
    if len(labeling) != len(data):
        raise ValueError("labeling must cover every sample")
    partitions: dict[int, Partition] = {}
    for cluster in range(cfg.k):
        members = np.nonzero(labeling == cluster)[0]
        if len(members) == 0:
            raise ValueError(f"initial cluster {cluster} is empty")
        g = build_graph(data, members, cfg.similarity_threshold)
        partitions[cluster] = leiden(g, child_seed(cfg.seed, STREAM_LEIDEN, 0, cluster)).partition
    return partitions


def select_main(p: Partition) -> Community:
    """Largest community; ties go to the one containing the smallest node."""
    if len(p.communities) == 0:
        raise ValueError("cannot select a main community from an empty partition")
    return max(p.communities, key=lambda c: (len(c), -c.members[0]))


def risk_screen(
    c: Community, data: Dataset, confidence: float
) -> tuple[Community, set[int]]:
    """Drop members whose centroid distance exceeds the empirical
    ``confidence``-quantile (nearest rank, no interpolation).

    The closest member is always kept, so the screened community is never
    empty.  Returns (kept community, rejected node set).
    """
    if not (0.0 < confidence < 1.0):
        raise ValueError("confidence must lie in (0, 1)")
    members = np.asarray(c.members, dtype=np.int64)
    center = centroid(c, data)
    dists = np.linalg.norm(data.embeddings[members] - center[None, :], axis=1)
    rank = max(1, math.ceil(confidence * len(members)))  # 1-indexed order statistic
    cutoff = np.sort(dists)[rank - 1]
    keep = dists <= cutoff
    if not keep.any():
        keep[np.argmin(dists)] = True
    kept = Community(c.id, tuple(int(m) for m in members[keep]))
    rejected = {int(m) for m in members[~keep]}
    return kept, rejected


def build_initial_state(
    data: Dataset,
    labeling: np.ndarray,
    partitions: dict[int, Partition],
    cfg: RunConfig,
) -> tuple[ClusterState, dict[int, Community]]:
    """Assemble the ClusterState after main selection and risk screening.

    Returns the state plus the unscreened main communities (for purity
    reporting)."""
    mains: dict[int, Community] = {}
    raw_mains: dict[int, Community] = {}
    unlabeled = set(range(len(data)))
    for cluster in range(cfg.k):
        main = select_main(partitions[cluster])
        raw_mains[cluster] = main
        kept, _ = risk_screen(main, data, cfg.confidence)
        mains[cluster] = Community(cluster, kept.members)
        unlabeled.difference_update(kept.members)
    state = ClusterState(k=cfg.k, main_communities=mains, unlabeled=unlabeled)
    state.check(len(data))
    return state, raw_mains
