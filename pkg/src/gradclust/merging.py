"""Scoring and execution of isolated-community merges.

Each round detects communities in the unlabeled pool, scores every
(main community, isolated community) pair with an ensemble of the modularity
increment, the average-degree change, and the mean inter-community distance,
then greedily resolves merges in descending score with each isolated
community consumed at most once and each main community receiving at most
one merge per round.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .detect import leiden, modularity
from .graph import avg_degree, build_graph
from .model import ClusterState, Community, Dataset, Partition, RunConfig
from .seeds import STREAM_LEIDEN, STREAM_SAMPLING, child_rng, child_seed

__all__ = [
    "MergeCandidate",
    "delta_modularity",
    "delta_avg_degree",
    "community_distance",
    "ensemble_scores",
    "merge_round",
    "MergeRecord",
    "RoundRecord",
]


@dataclass(frozen=True)
class MergeCandidate:
    """One scored (main community, isolated community) pair."""

    main_id: int
    iso: Community
    delta_q: float
    delta_k: float
    distance_t: float
    score_l: float = float("nan")
    distance_approx: bool = False


@dataclass(frozen=True)
class MergeRecord:
    main_id: int
    iso_members: tuple[int, ...]
    delta_q: float
    delta_k: float
    distance_t: float
    score_l: float
    distance_approx: bool


@dataclass(frozen=True)
class RoundRecord:
    """Outcome of one merge round."""

    iteration: int
    candidate_count: int
    merges: tuple[MergeRecord, ...]
    unlabeled_before: int
    unlabeled_after: int
    done: bool  # unlabeled pool empty after this round
    detect_seconds: float
    merge_seconds: float


def _union_graph(data: Dataset, main: Community, iso: Community, threshold: float):
    overlap = set(main.members) & set(iso.members)
    if overlap:
        raise ValueError(f"main and isolated communities overlap on {sorted(overlap)[:5]}")
    return build_graph(data, set(main.members) | set(iso.members), threshold)


def delta_modularity(
    data: Dataset, main: Community, iso: Community, threshold: float
) -> float:
    """Modularity gain of merging the two communities, evaluated on the
    similarity graph over their union.  Zero when that graph has no edges."""
    g = _union_graph(data, main, iso, threshold)
    if g.total_weight <= 0.0:
        return 0.0
    merged = Partition(
        (Community.from_members(0, list(main.members) + list(iso.members)),), g.nodes
    )
    split = Partition(
        (Community(0, main.members), Community(1, iso.members)), g.nodes
    )
    return modularity(g, merged) - modularity(g, split)


def delta_avg_degree(
    data: Dataset, main: Community, iso: Community, threshold: float
) -> float:
    """Average-degree change: mean weighted degree of the merged node set in
    the union graph, minus the mean degree of the main community alone in its
    induced subgraph."""
    g = _union_graph(data, main, iso, threshold)
    merged_members = list(main.members) + list(iso.members)
    return avg_degree(g, merged_members) - avg_degree(g, main.members)


def community_distance(
    data: Dataset, main: Community, iso: Community, cap: int, seed: int
) -> float:
    """Mean pairwise Euclidean distance between member rows.

    Sides larger than ``cap`` are represented by a seeded uniform subsample
    of that size.
    """
    if cap < 1:
        raise ValueError("cap must be at least 1")
    rng = np.random.default_rng(seed)
    a = np.asarray(main.members, dtype=np.int64)
    b = np.asarray(iso.members, dtype=np.int64)
    if len(a) > cap:
        a = np.sort(rng.choice(a, size=cap, replace=False))
    if len(b) > cap:
        b = np.sort(rng.choice(b, size=cap, replace=False))
    xa = data.embeddings[a]
    xb = data.embeddings[b]
    d2 = (
        (xa**2).sum(axis=1)[:, None]
        - 2.0 * (xa @ xb.T)
        + (xb**2).sum(axis=1)[None, :]
    )
    np.maximum(d2, 0.0, out=d2)
    return float(np.sqrt(d2).mean())


def ensemble_scores(candidates: list[MergeCandidate]) -> list[MergeCandidate]:
    """Fill ``score_l`` for every candidate.

    Each raw term is divided by the largest absolute value of that term over
    the whole candidate set, which preserves signs and never divides by zero;
    a term that is zero everywhere contributes nothing.  The score is then
    normalized modularity gain plus normalized degree change minus normalized
    distance.
    """
    if not candidates:
        raise ValueError("ensemble_scores needs at least one candidate")
    for c in candidates:
        for term in (c.delta_q, c.delta_k, c.distance_t):
            if not np.isfinite(term):
                raise ValueError(f"non-finite raw term in candidate for main {c.main_id}")
    max_q = max(abs(c.delta_q) for c in candidates)
    max_k = max(abs(c.delta_k) for c in candidates)
    max_t = max(abs(c.distance_t) for c in candidates)
    scored = []
    for c in candidates:
        term_q = c.delta_q / max_q if max_q > 0 else 0.0
        term_k = c.delta_k / max_k if max_k > 0 else 0.0
        term_t = c.distance_t / max_t if max_t > 0 else 0.0
        scored.append(replace(c, score_l=term_q + term_k - term_t))
    return scored


class _RoundScorer:
    """Shared-state scorer for all pairs of one round.

    Computes the same quantities as the per-pair operations but reuses the
    normalized embedding matrix and per-community internals, so a round with
    hundreds of candidates stays cheap.
    """

    def __init__(self, data: Dataset, threshold: float):
        self.data = data
        self.threshold = threshold
        norms = np.linalg.norm(data.embeddings, axis=1)
        if np.any(norms == 0.0):
            bad = int(np.nonzero(norms == 0.0)[0][0])
            raise ValueError(f"zero-norm embedding at dataset row {bad}")
        self.unit = data.embeddings / norms[:, None]
        self._internal: dict[tuple[int, ...], tuple[float, int]] = {}

    def _internal_sum(self, members: tuple[int, ...]) -> float:
        """Ordered-pair weight sum inside one community."""
        cached = self._internal.get(members)
        if cached is not None:
            return cached[0]
        rows = self.unit[list(members)]
        sims = rows @ rows.T
        np.clip(sims, -1.0, 1.0, out=sims)
        mask = sims > self.threshold
        np.fill_diagonal(mask, False)
        total = float(sims[mask].sum())
        self._internal[members] = (total, len(members))
        return total

    def raw_terms(self, main: Community, iso: Community) -> tuple[float, float]:
        """(delta_q, delta_k) for one pair, matching the per-pair operations."""
        int_main = self._internal_sum(main.members)
        int_iso = self._internal_sum(iso.members)
        cross = self.unit[list(main.members)] @ self.unit[list(iso.members)].T
        np.clip(cross, -1.0, 1.0, out=cross)
        w_between = float(cross[cross > self.threshold].sum())
        w_union = 0.5 * (int_main + int_iso) + w_between
        if w_union <= 0.0:
            dq = 0.0
        else:
            d_main = int_main + w_between
            d_iso = int_iso + w_between
            dq = w_between / w_union - (d_main * d_iso) / (2.0 * w_union * w_union)
        n_m, n_i = len(main), len(iso)
        merged_avg = (int_main + int_iso + 2.0 * w_between) / (n_m + n_i)
        main_avg = int_main / n_m
        return dq, merged_avg - main_avg


def merge_round(
    state: ClusterState,
    data: Dataset,
    cfg: RunConfig,
    *,
    exhaust: bool = False,
    graph_dump_path: str | None = None,
) -> RoundRecord:
    """Execute one merge round in place and report what happened.

    Detects isolated communities in the unlabeled pool, scores all pairs,
    and merges greedily by descending ensemble score.  With ``exhaust`` the
    one-merge-per-main cap is lifted so that every isolated community is
    absorbed (the forced final round).
    """
    before = len(state.unlabeled)
    if before == 0:
        return RoundRecord(state.iteration, 0, (), 0, 0, True, 0.0, 0.0)

    t0 = time.perf_counter()
    pool = sorted(state.unlabeled)
    g = build_graph(data, pool, cfg.similarity_threshold)
    if graph_dump_path is not None:
        from .graph import write_edge_list

        write_edge_list(g, graph_dump_path)
    isolated = leiden(g, child_seed(cfg.seed, STREAM_LEIDEN, state.iteration)).partition
    detect_seconds = time.perf_counter() - t0

    t1 = time.perf_counter()
    scorer = _RoundScorer(data, cfg.similarity_threshold)
    cap = cfg.distance_sample_cap
    raw: list[MergeCandidate] = []
    for iso_index, iso in enumerate(isolated.communities):
        for main_id in sorted(state.main_communities):
            main = state.main_communities[main_id]
            dq, dk = scorer.raw_terms(main, iso)
            dist_seed = child_seed(cfg.seed, STREAM_SAMPLING, state.iteration, main_id, iso_index)
            t = community_distance(data, main, iso, cap, dist_seed)
            approx = len(main) > cap or len(iso) > cap
            raw.append(MergeCandidate(main_id, iso, dq, dk, t, distance_approx=approx))
    scored = ensemble_scores(raw)
    # stable resolution: best score first, then main id, then first iso member
    order = sorted(
        scored, key=lambda c: (-c.score_l, c.main_id, c.iso.members[0])
    )
    used_mains: set[int] = set()
    used_isos: set[tuple[int, ...]] = set()
    merges: list[MergeRecord] = []
    for cand in order:
        if cand.iso.members in used_isos:
            continue
        if not exhaust and cand.main_id in used_mains:
            continue
        main = state.main_communities[cand.main_id]
        state.main_communities[cand.main_id] = Community.from_members(
            cand.main_id, list(main.members) + list(cand.iso.members)
        )
        state.unlabeled.difference_update(cand.iso.members)
        used_mains.add(cand.main_id)
        used_isos.add(cand.iso.members)
        merges.append(
            MergeRecord(
                cand.main_id,
                cand.iso.members,
                cand.delta_q,
                cand.delta_k,
                cand.distance_t,
                cand.score_l,
                cand.distance_approx,
            )
        )
    merge_seconds = time.perf_counter() - t1
    after = len(state.unlabeled)
    return RoundRecord(
        state.iteration,
        len(scored),
        tuple(merges),
        before,
        after,
        after == 0,
        detect_seconds,
        merge_seconds,
    )
