"""Contrastive embedding refinement driven by main-community pseudo-labels.

Each iteration fine-tunes the embedding rows of pseudo-labeled nodes with a
temperature-scaled softmax contrastive loss: an anchor is pulled toward a
positive sampled from its own main community and pushed away from in-batch
anchors carrying other pseudo-labels.  Rows are updated directly by plain
SGD; unlabeled rows never move.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .model import ClusterState, Dataset, RunConfig
from .seeds import STREAM_REFINE, child_rng

__all__ = ["RefineBatch", "infonce_loss", "infonce_grad", "refine_embeddings", "RefineResult"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RefineBatch:
    """One contrastive mini-batch: per-anchor positive and negative nodes."""

    anchors: tuple[int, ...]
    positives: tuple[int, ...]
    negatives: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if not (len(self.anchors) == len(self.positives) == len(self.negatives)):
            raise ValueError("anchors, positives and negatives must align")
        for a, p, negs in zip(self.anchors, self.positives, self.negatives):
            if p == a:
                raise ValueError(f"anchor {a} cannot be its own positive")
            if a in negs:
                raise ValueError(f"anchor {a} appears in its own negative list")

    def check_labels(self, labels: dict[int, int]) -> None:
        """Verify pseudo-label structure: positives share the anchor's label,
        negatives never do."""
        for a, p, negs in zip(self.anchors, self.positives, self.negatives):
            if labels[p] != labels[a]:
                raise ValueError(f"positive {p} does not share anchor {a}'s label")
            for n in negs:
                if labels[n] == labels[a]:
                    raise ValueError(f"negative {n} shares anchor {a}'s label")


def _pad_negatives(
    negatives: tuple[tuple[int, ...], ...]
) -> tuple[np.ndarray, np.ndarray]:
    b = len(negatives)
    width = max((len(n) for n in negatives), default=0)
    idx = np.zeros((b, max(width, 1)), dtype=np.int64)
    valid = np.zeros((b, max(width, 1)), dtype=bool)
    for i, negs in enumerate(negatives):
        if negs:
            idx[i, : len(negs)] = negs
            valid[i, : len(negs)] = True
    return idx, valid


def _gather_units(emb: np.ndarray, rows: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    vecs = emb[rows]
    norms = np.linalg.norm(vecs, axis=-1)
    if np.any(norms == 0.0):
        bad = rows[np.nonzero(norms == 0.0)[0][0]] if rows.ndim == 1 else int(rows[norms == 0.0].ravel()[0])
        raise ValueError(f"zero-norm embedding for {what} row {bad}")
    return vecs / norms[..., None], norms


def _core(
    emb: np.ndarray,
    anchors: np.ndarray,
    positives: np.ndarray,
    neg_idx: np.ndarray,
    valid: np.ndarray,
    tau: float,
    want_grad: bool,
) -> tuple[float, np.ndarray | None]:
    if tau <= 0:
        raise ValueError("tau must be positive")
    a_hat, a_norm = _gather_units(emb, anchors, "anchor")
    p_hat, p_norm = _gather_units(emb, positives, "positive")
    n_vecs = emb[neg_idx]
    n_norm = np.linalg.norm(n_vecs, axis=-1)
    if np.any((n_norm == 0.0) & valid):
        bad = neg_idx[(n_norm == 0.0) & valid].ravel()[0]
        raise ValueError(f"zero-norm embedding for negative row {int(bad)}")
    safe_norm = np.where(n_norm == 0.0, 1.0, n_norm)
    n_hat = n_vecs / safe_norm[..., None]

    s_pos = np.einsum("bd,bd->b", a_hat, p_hat)
    s_neg = np.einsum("bd,bmd->bm", a_hat, n_hat)
    l_pos = s_pos / tau
    l_neg = np.where(valid, s_neg / tau, -np.inf)
    shift = np.maximum(l_pos, l_neg.max(axis=1, initial=-np.inf))
    e_pos = np.exp(l_pos - shift)
    e_neg = np.where(valid, np.exp(l_neg - shift[:, None]), 0.0)
    z = e_pos + e_neg.sum(axis=1)
    loss = float(np.sum(-(l_pos - shift) + np.log(z)))
    if not want_grad:
        return loss, None

    p_pos = e_pos / z
    c_pos = (p_pos - 1.0) / tau  # coefficient on the positive similarity
    c_neg = (e_neg / z[:, None]) / tau  # coefficients on negative similarities
    grad = np.zeros_like(emb)
    g_anchor = c_pos[:, None] * (p_hat - s_pos[:, None] * a_hat)
    g_anchor += np.einsum("bm,bmd->bd", c_neg, n_hat) - (c_neg * s_neg).sum(axis=1)[:, None] * a_hat
    g_anchor /= a_norm[:, None]
    g_positive = c_pos[:, None] * (a_hat - s_pos[:, None] * p_hat) / p_norm[:, None]
    g_negative = c_neg[..., None] * (a_hat[:, None, :] - s_neg[..., None] * n_hat)
    g_negative /= safe_norm[..., None]
    np.add.at(grad, anchors, g_anchor)
    np.add.at(grad, positives, g_positive)
    if valid.any():
        np.add.at(grad, neg_idx[valid], g_negative[valid])
    return loss, grad


def _batch_arrays(batch: RefineBatch) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    anchors = np.asarray(batch.anchors, dtype=np.int64)
    positives = np.asarray(batch.positives, dtype=np.int64)
    neg_idx, valid = _pad_negatives(batch.negatives)
    return anchors, positives, neg_idx, valid


def infonce_loss(embeddings: np.ndarray, batch: RefineBatch, tau: float) -> float:
    """Summed contrastive loss over the batch's anchors.

    Computed with a max-shifted log-sum-exp; an anchor with no negatives
    contributes exactly zero.
    """
    loss, _ = _core(np.asarray(embeddings, dtype=np.float64), *_batch_arrays(batch), tau, False)
    return loss


def infonce_grad(embeddings: np.ndarray, batch: RefineBatch, tau: float) -> np.ndarray:
    """Analytic gradient of :func:`infonce_loss` w.r.t. every embedding row.

    Rows not appearing in the batch have exactly-zero gradient rows.
    """
    _, grad = _core(np.asarray(embeddings, dtype=np.float64), *_batch_arrays(batch), tau, True)
    assert grad is not None
    return grad


@dataclass(frozen=True)
class RefineResult:
    embeddings: np.ndarray
    epoch_losses: tuple[float, ...]
    skipped: bool


def refine_embeddings(state: ClusterState, data: Dataset, cfg: RunConfig) -> RefineResult:
    """Run seeded mini-batch SGD on the embedding rows of pseudo-labeled nodes.

    Positives are resampled each epoch from the anchor's main community;
    negatives are the other-label anchors of the same mini-batch.  Requires
    at least two main communities, each with at least two members; otherwise
    refinement is skipped with a warning and the embeddings pass through
    untouched.
    """
    mains = state.main_communities
    if len(mains) < 2 or any(len(c) < 2 for c in mains.values()):
        log.warning(
            "skipping refinement at iteration %d: need >= 2 main communities "
            "with >= 2 members each",
            state.iteration,
        )
        return RefineResult(data.embeddings, (), True)
    if cfg.epochs_per_iteration == 0:
        return RefineResult(data.embeddings, (), False)

    members_of = {cid: np.asarray(c.members, dtype=np.int64) for cid, c in mains.items()}
    nodes = np.asarray(sorted(n for m in members_of.values() for n in m), dtype=np.int64)
    label_of = np.empty(len(data), dtype=np.int64)
    own_pos = np.empty(len(data), dtype=np.int64)
    for cid, members in members_of.items():
        label_of[members] = cid
        own_pos[members] = np.arange(len(members))
    sizes = np.array([len(members_of[label_of[n]]) for n in nodes], dtype=np.int64)

    rng = child_rng(cfg.seed, STREAM_REFINE, state.iteration)
    emb = np.array(data.embeddings, dtype=np.float64)
    losses: list[float] = []
    for epoch in range(cfg.epochs_per_iteration):
        perm = rng.permutation(len(nodes))
        shuffled = nodes[perm]
        draws = rng.integers(0, sizes[perm] - 1)
        epoch_loss = 0.0
        for start in range(0, len(shuffled), cfg.batch_size):
            batch_nodes = shuffled[start : start + cfg.batch_size]
            batch_draw = draws[start : start + cfg.batch_size]
            labels = label_of[batch_nodes]
            # skip the anchor's own slot when indexing into its community
            pos_slot = batch_draw + (batch_draw >= own_pos[batch_nodes])
            positives = np.array(
                [members_of[l][s] for l, s in zip(labels.tolist(), pos_slot.tolist())],
                dtype=np.int64,
            )
            neg_idx = np.broadcast_to(batch_nodes, (len(batch_nodes), len(batch_nodes)))
            valid = labels[None, :] != labels[:, None]
            loss, grad = _core(emb, batch_nodes, positives, neg_idx, valid, cfg.tau, True)
            assert grad is not None
            touched = np.unique(np.concatenate([batch_nodes, positives]))
            emb[touched] -= cfg.learning_rate * grad[touched]
            epoch_loss += loss
        if not np.isfinite(epoch_loss):
            raise RuntimeError(
                f"non-finite refinement loss at iteration {state.iteration}, epoch {epoch}"
            )
        losses.append(epoch_loss)
    emb.flags.writeable = False
    return RefineResult(emb, tuple(losses), False)
