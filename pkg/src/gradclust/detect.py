"""Community detection on weighted graphs: modularity, Leiden, Louvain.

Both detectors greedily maximize modularity with seeded node orders, so a
given (graph, seed) pair always produces the identical partition.  Leiden
interposes a refinement stage between local moving and aggregation and
finishes with a connectivity sweep, which guarantees that every community it
returns is internally connected; Louvain aggregates its local-moving
partition directly and carries no such guarantee.

Moves are accepted only when they increase modularity by more than a small
absolute guard, and ties always keep a node in its current community, so the
optimization cannot cycle and the per-pass modularity trace is
non-decreasing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import WeightedGraph
from .model import Community, Partition
from .seeds import child_seed

__all__ = [
    "DetectionResult",
    "modularity",
    "leiden",
    "louvain",
    "is_internally_connected",
]

# Strict improvement required before a node changes community; guards against
# float-noise cycling.
_MIN_GAIN = 1e-12

# Restart budget: the first restart is pure greedy, later ones pick uniformly
# among improving moves to escape shallow basins.  Small graphs get more
# restarts because they are nearly free there and greedy basins matter most.
_RESTART_KEY = 1771
_SMALL_GRAPH = 64
_RESTARTS_SMALL = 8
_RESTARTS_LARGE = 2


@dataclass(frozen=True)
class DetectionResult:
    partition: Partition
    modularity: float
    algorithm: str  # "leiden" or "louvain"
    passes: int
    q_history: tuple[float, ...]  # modularity after each outer pass


class _Csr:
    """Positional adjacency used during optimization.

    Unlike WeightedGraph, aggregate levels may carry self loops: the self
    weight of an aggregate node equals the full ordered-pair weight inside
    the community it stands for, which keeps modularity identical across
    levels.  ``strength[i]`` counts the self loop once, so that
    ``strength.sum() == 2 * total``.
    """

    __slots__ = ("n", "indptr", "indices", "weights", "rows", "strength", "total")

    def __init__(self, n: int, indptr: np.ndarray, indices: np.ndarray, weights: np.ndarray):
        self.n = n
        self.indptr = indptr
        self.indices = indices
        self.weights = weights
        self.rows = np.repeat(np.arange(n), np.diff(indptr))
        self.strength = np.bincount(self.rows, weights=weights, minlength=n)
        self.total = float(self.strength.sum()) / 2.0


def _csr_from_graph(g: WeightedGraph) -> _Csr:
    return _Csr(g.num_nodes, g.indptr, g.indices, g.weights)


def _compact(labels: np.ndarray) -> tuple[np.ndarray, int]:
    uniq, inv = np.unique(labels, return_inverse=True)
    return inv.astype(np.int64), len(uniq)


def _q_of(csr: _Csr, labels: np.ndarray, n_labels: int) -> float:
    w = csr.total
    if w <= 0.0:
        return 0.0
    degree_sums = np.bincount(labels, weights=csr.strength, minlength=n_labels)
    same = labels[csr.rows] == labels[csr.indices]
    internal = float(csr.weights[same].sum())
    return internal / (2.0 * w) - float((degree_sums**2).sum()) / (4.0 * w * w)


def _local_move(
    csr: _Csr, labels: np.ndarray, rng: np.random.Generator, explore: bool
) -> int:
    """Sweep nodes in seeded order, moving each to an improving community,
    until a full sweep moves nothing.  Returns the number of moves made.

    With ``explore`` unset a node always takes the best candidate; otherwise
    it picks uniformly among all strictly improving candidates, which lets
    restarts reach basins the pure greedy cannot.
    """
    n = csr.n
    w = csr.total
    inv_2w2 = 1.0 / (2.0 * w * w)
    total_moves = 0
    while True:
        compacted, n_lab = _compact(labels)
        labels[:] = compacted
        # headroom for nodes that break away into fresh singletons mid-sweep
        degree_sums = np.bincount(labels, weights=csr.strength, minlength=n_lab + n)
        next_label = n_lab
        moved = 0
        for v in rng.permutation(n):
            cur = labels[v]
            s_v = csr.strength[v]
            sl = slice(csr.indptr[v], csr.indptr[v + 1])
            nbrs = csr.indices[sl]
            wts = csr.weights[sl]
            keep = nbrs != v
            if not keep.all():
                nbrs = nbrs[keep]
                wts = wts[keep]
            degree_sums[cur] -= s_v
            if len(nbrs):
                cand, inv = np.unique(labels[nbrs], return_inverse=True)
                link = np.bincount(inv, weights=wts)
            else:
                cand = np.zeros(0, dtype=np.int64)
                link = np.zeros(0)
            gains = link / w - s_v * degree_sums[cand] * inv_2w2
            pos_cur = np.searchsorted(cand, cur)
            if pos_cur < len(cand) and cand[pos_cur] == cur:
                cur_gain = float(gains[pos_cur])
            else:
                cur_gain = -s_v * degree_sums[cur] * inv_2w2
            fresh_gain = 0.0  # breaking away into a fresh singleton
            target = cur
            if explore:
                better = np.nonzero(gains > cur_gain + _MIN_GAIN)[0]
                options = [int(cand[i]) for i in better if cand[i] != cur]
                if fresh_gain > cur_gain + _MIN_GAIN:
                    options.append(-1)
                if options:
                    target = options[int(rng.integers(len(options)))]
            else:
                # candidates are sorted, argmax takes the first maximum, i.e.
                # the smallest community label on ties
                if len(gains):
                    best = int(np.argmax(gains))
                    alt, alt_gain = int(cand[best]), float(gains[best])
                else:
                    alt, alt_gain = -1, -np.inf
                if alt_gain < fresh_gain:
                    alt, alt_gain = -1, fresh_gain
                if alt_gain > cur_gain + _MIN_GAIN:
                    target = alt
            if target == -1:
                target = next_label
                next_label += 1
            labels[v] = target
            degree_sums[target] += s_v
            if target != cur:
                moved += 1
        total_moves += moved
        if moved == 0:
            return total_moves


def _refine(
    csr: _Csr, labels: np.ndarray, rng: np.random.Generator, explore: bool
) -> np.ndarray:
    """Leiden refinement: re-partition each community into connected
    subcommunities by merging singletons along internal edges."""
    n = csr.n
    w = csr.total
    inv_2w2 = 1.0 / (2.0 * w * w)
    refined = np.arange(n, dtype=np.int64)
    size = np.ones(n, dtype=np.int64)
    degree_sums = csr.strength.astype(np.float64).copy()
    for v in rng.permutation(n):
        if size[refined[v]] != 1:
            continue
        parent = labels[v]
        sl = slice(csr.indptr[v], csr.indptr[v + 1])
        nbrs = csr.indices[sl]
        wts = csr.weights[sl]
        keep = (nbrs != v) & (labels[nbrs] == parent)
        nbrs = nbrs[keep]
        wts = wts[keep]
        if not len(nbrs):
            continue
        old = refined[v]
        s_v = csr.strength[v]
        degree_sums[old] -= s_v
        cand, inv = np.unique(refined[nbrs], return_inverse=True)
        link = np.bincount(inv, weights=wts)
        gains = link / w - s_v * degree_sums[cand] * inv_2w2
        if explore:
            better = np.nonzero(gains > _MIN_GAIN)[0]
            pick = int(better[rng.integers(len(better))]) if len(better) else -1
        else:
            pick = int(np.argmax(gains)) if len(gains) else -1
            if pick >= 0 and not (gains[pick] > _MIN_GAIN):
                pick = -1
        if pick >= 0:
            target = int(cand[pick])
            refined[v] = target
            degree_sums[target] += s_v
            size[target] += 1
            size[old] = 0
        else:
            degree_sums[old] += s_v
    return refined


def _aggregate(csr: _Csr, groups: np.ndarray, n_groups: int) -> _Csr:
    """Collapse each group to one node; internal weight becomes a self loop."""
    src = groups[csr.rows]
    dst = groups[csr.indices]
    key = src * n_groups + dst
    uniq, inv = np.unique(key, return_inverse=True)
    wts = np.bincount(inv, weights=csr.weights)
    agg_src = (uniq // n_groups).astype(np.int64)
    agg_dst = (uniq % n_groups).astype(np.int64)
    indptr = np.zeros(n_groups + 1, dtype=np.int64)
    np.add.at(indptr, agg_src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return _Csr(n_groups, indptr, agg_dst, wts)


def _split_disconnected(csr: _Csr, labels: np.ndarray) -> np.ndarray:
    """Replace each community by its connected components.  Splitting a
    disconnected community never lowers modularity."""
    n = csr.n
    out = np.full(n, -1, dtype=np.int64)
    next_label = 0
    for v in range(n):
        if out[v] >= 0:
            continue
        comm = labels[v]
        stack = [v]
        out[v] = next_label
        while stack:
            u = stack.pop()
            sl = slice(csr.indptr[u], csr.indptr[u + 1])
            for nb in csr.indices[sl]:
                nb = int(nb)
                if out[nb] < 0 and labels[nb] == comm:
                    out[nb] = next_label
                    stack.append(nb)
        next_label += 1
    return out


def _partition_from_labels(g: WeightedGraph, labels: np.ndarray) -> Partition:
    groups: dict[int, list[int]] = {}
    for pos, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(g.nodes[pos])
    ordered = sorted(groups.values(), key=lambda members: members[0])
    communities = [Community(cid, tuple(members)) for cid, members in enumerate(ordered)]
    return Partition(tuple(communities), g.nodes)


def _singleton_result(g: WeightedGraph, algorithm: str) -> DetectionResult:
    labels = np.arange(g.num_nodes, dtype=np.int64)
    part = _partition_from_labels(g, labels)
    return DetectionResult(part, modularity(g, part), algorithm, 0, ())


def modularity(g: WeightedGraph, p: Partition) -> float:
    """Quality of a partition: intra-community weight minus its expectation
    under a random rewiring with the same weighted degrees.

    Returns 0.0 for an edgeless graph.
    """
    if p.nodes != g.nodes:
        raise ValueError("partition does not cover exactly the graph's nodes")
    if g.total_weight <= 0.0:
        return 0.0
    csr = _csr_from_graph(g)
    labels = np.empty(g.num_nodes, dtype=np.int64)
    node_arr = np.asarray(g.nodes, dtype=np.int64)
    for c in p.communities:
        labels[np.searchsorted(node_arr, np.asarray(c.members, dtype=np.int64))] = c.id
    labels, n_lab = _compact(labels)
    return _q_of(csr, labels, n_lab)


def _run(g: WeightedGraph, seed: int, algorithm: str, explore: bool) -> DetectionResult:
    if g.total_weight <= 0.0:
        return _singleton_result(g, algorithm)
    rng = np.random.default_rng(seed)
    csr = _csr_from_graph(g)
    level = _Csr(csr.n, csr.indptr, csr.indices, csr.weights)
    node_of_orig = np.arange(csr.n, dtype=np.int64)  # original position -> level node
    labels = np.arange(level.n, dtype=np.int64)
    q_history: list[float] = []
    passes = 0
    prev_q = -np.inf
    while True:
        passes += 1
        moves = _local_move(level, labels, rng, explore)
        labels, n_lab = _compact(labels)
        q_now = _q_of(level, labels, n_lab)
        q_history.append(q_now)
        if moves == 0 or n_lab == level.n or q_now <= prev_q + _MIN_GAIN:
            break
        prev_q = q_now
        if algorithm == "leiden":
            refined = _refine(level, labels, rng, explore)
            refined, n_ref = _compact(refined)
            if n_ref == level.n:
                break  # nothing merged; aggregation would not shrink the graph
            # aggregate nodes start in the community of their parent
            parent = np.zeros(n_ref, dtype=np.int64)
            parent[refined] = labels
            level = _aggregate(level, refined, n_ref)
            labels = parent
            node_of_orig = refined[node_of_orig]
        else:
            level = _aggregate(level, labels, n_lab)
            node_of_orig = labels[node_of_orig]
            labels = np.arange(level.n, dtype=np.int64)
    flat = labels[node_of_orig]
    if algorithm == "leiden":
        flat = _split_disconnected(csr, flat)
    part = _partition_from_labels(g, flat)
    return DetectionResult(part, modularity(g, part), algorithm, passes, tuple(q_history))


def _detect(g: WeightedGraph, seed: int, algorithm: str) -> DetectionResult:
    if g.total_weight <= 0.0:
        return _singleton_result(g, algorithm)
    restarts = _RESTARTS_SMALL if g.num_nodes <= _SMALL_GRAPH else _RESTARTS_LARGE
    best: DetectionResult | None = None
    for r in range(restarts):
        res = _run(g, child_seed(seed, _RESTART_KEY, r), algorithm, explore=r > 0)
        if best is None or res.modularity > best.modularity + _MIN_GAIN:
            best = res
    assert best is not None
    return best


def leiden(g: WeightedGraph, seed: int) -> DetectionResult:
    """Detect communities with local moving, refinement, and aggregation,
    keeping the best of a few seeded restarts.

    Every returned community is internally connected in ``g``.
    """
    return _detect(g, seed, "leiden")


def louvain(g: WeightedGraph, seed: int) -> DetectionResult:
    """Classic two-phase baseline: local moving then aggregation, with no
    refinement stage and no connectivity guarantee."""
    return _detect(g, seed, "louvain")


def is_internally_connected(c: Community, g: WeightedGraph) -> bool:
    """True iff the induced subgraph on the community's members is connected.
    Singletons count as connected."""
    members = set(c.members)
    for m in members:
        if m not in g:
            raise KeyError(f"community member {m} is not a node of the graph")
    if len(members) == 1:
        return True
    start = c.members[0]
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for nb, _ in g.neighbors(u):
            if nb in members and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(members)
