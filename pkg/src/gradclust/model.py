"""Core data model shared by every stage of the clustering engine.

Dataset and Partition are immutable after construction and safe to share
across threads; ClusterState is mutated only by the pipeline driver.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator

import numpy as np

__all__ = [
    "Dataset",
    "Community",
    "Partition",
    "ClusterState",
    "RunConfig",
    "centroid",
]


@dataclass(frozen=True)
class Dataset:
    """Universe of samples: opaque ids plus an (n, d) embedding matrix.

    Embeddings are copied to float64 and marked read-only; stages that update
    representations produce a new Dataset via :meth:`with_embeddings` instead
    of mutating rows in place.  ``ground_truth`` carries integer class labels
    for evaluation only and never influences clustering decisions.
    """

    ids: tuple[str, ...]
    embeddings: np.ndarray
    ground_truth: np.ndarray | None = None

    def __post_init__(self) -> None:
        emb = np.array(self.embeddings, dtype=np.float64)
        if emb.ndim != 2:
            raise ValueError(f"embeddings must be a 2-d matrix, got shape {emb.shape}")
        n, d = emb.shape
        if d < 1:
            raise ValueError("embeddings need at least one feature column")
        ids = tuple(str(i) for i in self.ids)
        if len(ids) != n:
            raise ValueError(f"{len(ids)} ids for {n} embedding rows")
        if len(set(ids)) != len(ids):
            raise ValueError("sample ids must be unique")
        if not np.isfinite(emb).all():
            bad = np.argwhere(~np.isfinite(emb))[0]
            raise ValueError(f"non-finite embedding entry at row {bad[0]}, column {bad[1]}")
        emb.flags.writeable = False
        truth = self.ground_truth
        if truth is not None:
            truth = np.array(truth, dtype=np.int64)
            if truth.shape != (n,):
                raise ValueError(f"ground_truth shape {truth.shape} does not match {n} samples")
            truth.flags.writeable = False
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "embeddings", emb)
        object.__setattr__(self, "ground_truth", truth)

    def __len__(self) -> int:
        return self.embeddings.shape[0]

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    def with_embeddings(self, embeddings: np.ndarray) -> "Dataset":
        """Return a copy of this dataset with replaced embedding rows."""
        return replace(self, embeddings=embeddings)


@dataclass(frozen=True)
class Community:
    """A set of node indices grouped by detection, ordered ascending."""

    id: int
    members: tuple[int, ...]

    def __post_init__(self) -> None:
        members = tuple(int(m) for m in self.members)
        if not members:
            raise ValueError("community must have at least one member")
        if any(b <= a for a, b in zip(members, members[1:])):
            raise ValueError("community members must be strictly increasing")
        if any(m < 0 for m in members):
            raise ValueError("community members must be non-negative node indices")
        object.__setattr__(self, "members", members)

    @classmethod
    def from_members(cls, id: int, members: Iterable[int]) -> "Community":
        """Build a community from any iterable of node indices."""
        return cls(id, tuple(sorted(set(int(m) for m in members))))

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, node: int) -> bool:
        return node in self.members


@dataclass(frozen=True)
class Partition:
    """Disjoint communities covering a declared node subset."""

    communities: tuple[Community, ...]
    nodes: tuple[int, ...]

    def __post_init__(self) -> None:
        communities = tuple(self.communities)
        nodes = tuple(sorted(int(n) for n in self.nodes))
        if len(set(nodes)) != len(nodes):
            raise ValueError("declared node subset contains duplicates")
        seen: set[int] = set()
        for c in communities:
            overlap = seen.intersection(c.members)
            if overlap:
                raise ValueError(f"communities overlap on nodes {sorted(overlap)[:5]}")
            seen.update(c.members)
        if seen != set(nodes):
            raise ValueError("communities do not cover exactly the declared node subset")
        object.__setattr__(self, "communities", communities)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def from_communities(cls, communities: Iterable[Community]) -> "Partition":
        communities = tuple(communities)
        nodes = tuple(sorted(m for c in communities for m in c.members))
        return cls(communities, nodes)

    def __iter__(self) -> Iterator[Community]:
        return iter(self.communities)

    def __len__(self) -> int:
        return len(self.communities)

    def sizes(self) -> list[int]:
        return [len(c) for c in self.communities]


@dataclass
class ClusterState:
    """Mutable bookkeeping for the merge loop: one main community per cluster
    plus the pool of still-unlabeled nodes."""

    k: int
    main_communities: dict[int, Community]
    unlabeled: set[int]
    iteration: int = 0
    trace: list = field(default_factory=list)

    def labeled_nodes(self) -> set[int]:
        return {m for c in self.main_communities.values() for m in c.members}

    def check(self, total_nodes: int) -> None:
        """Raise if the partition invariant is broken: main communities are
        pairwise disjoint, disjoint from the unlabeled pool, and together with
        it cover all nodes exactly once."""
        labeled: set[int] = set()
        count = 0
        for c in self.main_communities.values():
            labeled.update(c.members)
            count += len(c)
        if count != len(labeled):
            raise ValueError("main communities overlap")
        if labeled & self.unlabeled:
            raise ValueError("main communities intersect the unlabeled pool")
        if len(labeled) + len(self.unlabeled) != total_nodes:
            raise ValueError(
                f"coverage broken: {len(labeled)} labeled + {len(self.unlabeled)} unlabeled"
                f" != {total_nodes} nodes"
            )

    def label_of(self, total_nodes: int) -> np.ndarray:
        """Full labeling (cluster id per node); unlabeled nodes get -1."""
        labels = np.full(total_nodes, -1, dtype=np.int64)
        for cid, c in self.main_communities.items():
            labels[list(c.members)] = cid
        return labels


@dataclass(frozen=True)
class RunConfig:
    """Every hyperparameter of a run, with library defaults."""

    k: int
    similarity_threshold: float = 0.5
    confidence: float = 0.9
    tau: float = 0.5
    learning_rate: float = 1e-4
    batch_size: int = 64
    epochs_per_iteration: int = 100
    max_iterations: int = 50
    seed: int = 0
    distance_sample_cap: int = 256

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if not (-1.0 <= self.similarity_threshold < 1.0):
            raise ValueError("similarity_threshold must lie in [-1, 1)")
        if not (0.0 < self.confidence < 1.0):
            raise ValueError("confidence must lie in (0, 1)")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.epochs_per_iteration < 0:
            raise ValueError("epochs_per_iteration must be non-negative")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.distance_sample_cap < 1:
            raise ValueError("distance_sample_cap must be at least 1")

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "similarity_threshold": self.similarity_threshold,
            "confidence": self.confidence,
            "tau": self.tau,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "epochs_per_iteration": self.epochs_per_iteration,
            "max_iterations": self.max_iterations,
            "seed": self.seed,
            "distance_sample_cap": self.distance_sample_cap,
        }


def centroid(c: Community, data: Dataset) -> np.ndarray:
    """Arithmetic mean of the community's embedding rows."""
    if len(c) == 0:
        raise ValueError("cannot take the centroid of an empty community")
    rows = list(c.members)
    if rows[-1] >= len(data):
        raise IndexError(f"member {rows[-1]} outside dataset of {len(data)} rows")
    return data.embeddings[rows].mean(axis=0)
