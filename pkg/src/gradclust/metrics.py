"""Clustering quality metrics: ACC, NMI, ARI, and community purity.

ACC solves the optimal one-to-one cluster/class assignment exactly on the
contingency table.  ARI is computed with integer pair-count arithmetic and a
single final division, so it agrees exactly with a direct pair-counting
evaluation.
"""

from __future__ import annotations

from math import comb

import numpy as np
from scipy.optimize import linear_sum_assignment

from .model import Community, Dataset

__all__ = ["accuracy", "nmi", "ari", "purity", "contingency"]


def _as_labels(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ValueError(f"label shapes differ: {pred.shape} vs {truth.shape}")
    if len(pred) == 0:
        raise ValueError("cannot score empty labelings")
    return pred, truth


def contingency(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Counts matrix with one row per predicted cluster, one column per class."""
    pred, truth = _as_labels(pred, truth)
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    table = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(table, (pi, ti), 1)
    return table


def accuracy(pred, truth) -> float:
    """Fraction of samples matched under the best cluster-to-class bijection."""
    table = contingency(pred, truth)
    r, c = table.shape
    if r != c:  # pad to square so unmatched clusters/classes map to zeros
        size = max(r, c)
        padded = np.zeros((size, size), dtype=np.int64)
        padded[:r, :c] = table
        table = padded
    rows, cols = linear_sum_assignment(table.max() - table)
    return float(table[rows, cols].sum()) / float(np.asarray(pred).shape[0])


def nmi(pred, truth) -> float:
    """Mutual information normalized by the geometric mean of the entropies.

    Returns 1.0 when both labelings are constant (identical partitions) and
    0.0 when exactly one of them is constant.
    """
    table = contingency(pred, truth).astype(np.float64)
    n = table.sum()
    pa = table.sum(axis=1) / n
    pb = table.sum(axis=0) / n
    h_pred = -float(np.sum(pa * np.log(pa)))
    h_truth = -float(np.sum(pb * np.log(pb)))
    if h_pred <= 0.0 and h_truth <= 0.0:
        return 1.0
    if h_pred <= 0.0 or h_truth <= 0.0:
        return 0.0
    pij = table / n
    mask = pij > 0
    outer = pa[:, None] * pb[None, :]
    info = float(np.sum(pij[mask] * np.log(pij[mask] / outer[mask])))
    value = info / np.sqrt(h_pred * h_truth)
    return float(min(max(value, 0.0), 1.0))


def ari(pred, truth) -> float:
    """Adjusted Rand index from the contingency table.

    Numerator and denominator are exact integers; the single float division
    at the end makes the result identical to pair-counting evaluation.
    """
    table = contingency(pred, truth)
    n = int(table.sum())
    index = sum(comb(int(v), 2) for v in table.ravel())
    sum_a = sum(comb(int(v), 2) for v in table.sum(axis=1))
    sum_b = sum(comb(int(v), 2) for v in table.sum(axis=0))
    pairs = comb(n, 2)
    numerator = 2 * (index * pairs - sum_a * sum_b)
    denominator = (sum_a + sum_b) * pairs - 2 * sum_a * sum_b
    if denominator == 0:
        # both labelings are all-singletons or both one cluster: identical
        return 1.0
    return numerator / denominator


def purity(c: Community, truth) -> float:
    """Largest class share among the community's members."""
    truth = np.asarray(truth, dtype=np.int64)
    if len(c) == 0:
        raise ValueError("purity of an empty community is undefined")
    members = list(c.members)
    if members[-1] >= len(truth):
        raise IndexError("community member outside the labeled range")
    labels = truth[members]
    _, counts = np.unique(labels, return_counts=True)
    return float(counts.max()) / float(len(members))


def evaluate_labels(pred, truth) -> dict[str, float]:
    """ACC / NMI / ARI in one call."""
    return {"acc": accuracy(pred, truth), "nmi": nmi(pred, truth), "ari": ari(pred, truth)}


def dataset_purity(c: Community, data: Dataset) -> float:
    if data.ground_truth is None:
        raise ValueError("dataset carries no ground truth labels")
    return purity(c, data.ground_truth)
