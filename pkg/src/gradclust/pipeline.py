"""End-to-end orchestration: seeding, the refine/detect/merge loop,
synthetic data generation, configuration parsing, and run reports.

Loop order per iteration: refine embeddings on current pseudo-labels first,
then detect communities in the unlabeled pool and merge them.  The
initialization stage forms the first main communities itself, so it runs no
refinement.  If the pool is still non-empty after ``max_iterations`` rounds,
a final forced round merges every remaining isolated community into its
best-scoring main community so the output labeling is always total.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, fields

import numpy as np

from .dataio import write_assignments
from .merging import MergeRecord, RoundRecord, merge_round
from .metrics import evaluate_labels, purity
from .model import ClusterState, Community, Dataset, RunConfig
from .refine import refine_embeddings
from .seeding import build_initial_state, detect_initial_communities, kmeans_init
from .seeds import STREAM_INIT, child_seed

__all__ = [
    "IterationRecord",
    "RunReport",
    "run_pipeline",
    "generate_blobs",
    "parse_config",
    "load_config",
]

# Defaulted choices a reader of the report should know about.
ASSUMPTIONS = (
    "community detection resolution is fixed at 1.0 with seeded node orders",
    "contrastive temperature defaults to 0.5; negatives come from the same mini-batch",
    "ensemble score terms are normalized by the max absolute value over each round's candidates",
    "risk screening keeps members within the empirical nearest-rank distance quantile",
    "refinement updates embedding rows directly with plain SGD (no backbone network)",
    "nmi is normalized by the geometric mean of the label entropies",
)


@dataclass(frozen=True)
class IterationRecord:
    """Everything that happened in one loop iteration."""

    iteration: int
    unlabeled_before: int
    unlabeled_after: int
    candidate_count: int
    merges: tuple[MergeRecord, ...]
    refine_losses: tuple[float, ...]
    refine_skipped: bool
    forced: bool
    seconds: dict[str, float]  # keys: refine, detect, merge

    def to_obj(self) -> dict:
        return {
            "iteration": self.iteration,
            "unlabeled_before": self.unlabeled_before,
            "unlabeled_after": self.unlabeled_after,
            "candidate_count": self.candidate_count,
            "merges": [
                {
                    "main_id": m.main_id,
                    "iso_members": list(m.iso_members),
                    "delta_q": float(m.delta_q),
                    "delta_k": float(m.delta_k),
                    "distance_t": float(m.distance_t),
                    "score_l": float(m.score_l),
                    "distance_approx": m.distance_approx,
                }
                for m in self.merges
            ],
            "refine_losses": [float(v) for v in self.refine_losses],
            "refine_skipped": self.refine_skipped,
            "forced": self.forced,
            "seconds": {k: float(v) for k, v in self.seconds.items()},
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "IterationRecord":
        merges = tuple(
            MergeRecord(
                m["main_id"],
                tuple(m["iso_members"]),
                m["delta_q"],
                m["delta_k"],
                m["distance_t"],
                m["score_l"],
                m["distance_approx"],
            )
            for m in obj["merges"]
        )
        return cls(
            obj["iteration"],
            obj["unlabeled_before"],
            obj["unlabeled_after"],
            obj["candidate_count"],
            merges,
            tuple(obj["refine_losses"]),
            obj["refine_skipped"],
            obj["forced"],
            dict(obj["seconds"]),
        )


@dataclass(frozen=True)
class RunReport:
    """Structured record of a full run; serializes canonically to JSON."""

    config: dict
    n_samples: int
    dim: int
    initial_metrics: dict | None
    final_metrics: dict | None
    purity: dict | None
    iterations: tuple[IterationRecord, ...]
    assumptions: tuple[str, ...] = ASSUMPTIONS

    def __post_init__(self) -> None:
        counts: list[int] = []
        for r in self.iterations:
            counts.extend((r.unlabeled_before, r.unlabeled_after))
        for a, b in zip(counts, counts[1:]):
            if b > a:
                raise ValueError("unlabeled counts must be non-increasing across records")

    def to_obj(self) -> dict:
        return {
            "config": self.config,
            "n_samples": self.n_samples,
            "dim": self.dim,
            "initial_metrics": self.initial_metrics,
            "final_metrics": self.final_metrics,
            "purity": self.purity,
            "iterations": [r.to_obj() for r in self.iterations],
            "assumptions": list(self.assumptions),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_obj(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        obj = json.loads(text)
        return cls(
            obj["config"],
            obj["n_samples"],
            obj["dim"],
            obj["initial_metrics"],
            obj["final_metrics"],
            obj["purity"],
            tuple(IterationRecord.from_obj(r) for r in obj["iterations"]),
            tuple(obj["assumptions"]),
        )


def _record_from_round(
    rr: RoundRecord,
    refine_losses: tuple[float, ...],
    refine_skipped: bool,
    refine_seconds: float,
    forced: bool,
) -> IterationRecord:
    return IterationRecord(
        iteration=rr.iteration,
        unlabeled_before=rr.unlabeled_before,
        unlabeled_after=rr.unlabeled_after,
        candidate_count=rr.candidate_count,
        merges=rr.merges,
        refine_losses=refine_losses,
        refine_skipped=refine_skipped,
        forced=forced,
        seconds={
            "refine": refine_seconds,
            "detect": rr.detect_seconds,
            "merge": rr.merge_seconds,
        },
    )


def _purity_block(
    data: Dataset,
    labeling: np.ndarray,
    raw_mains: dict[int, Community],
    state: ClusterState,
) -> dict:
    truth = data.ground_truth
    clusters, raw, screened = [], [], []
    for cid in sorted(state.main_communities):
        members = np.nonzero(labeling == cid)[0]
        clusters.append(purity(Community.from_members(cid, members), truth))
        raw.append(purity(raw_mains[cid], truth))
        screened.append(purity(state.main_communities[cid], truth))
    return {
        "kmeans_clusters": clusters,
        "mains_unscreened": raw,
        "mains_screened": screened,
    }


def run_pipeline(
    data: Dataset, cfg: RunConfig, *, graph_dump_dir: str | None = None
) -> tuple[np.ndarray, RunReport]:
    """Run the full strategy and return (labels per node, report).

    Raises with a phase-naming diagnostic if any stage fails.
    """
    n = len(data)
    if cfg.k > n:
        raise ValueError(f"k={cfg.k} exceeds the {n} available samples")
    truth = data.ground_truth

    def _phase(name, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except Exception as exc:
            raise RuntimeError(f"pipeline failed during {name}: {exc}") from exc

    labeling = _phase("initial clustering", kmeans_init, data, cfg.k, child_seed(cfg.seed, STREAM_INIT))
    initial_metrics = evaluate_labels(labeling, truth) if truth is not None else None
    partitions = _phase("initial community detection", detect_initial_communities, data, labeling, cfg)
    state, raw_mains = _phase("main community selection", build_initial_state, data, labeling, partitions, cfg)
    purity_info = _purity_block(data, labeling, raw_mains, state) if truth is not None else None

    current = data
    while state.unlabeled and state.iteration < cfg.max_iterations:
        state.iteration += 1
        t0 = time.perf_counter()
        refined = _phase("refinement", refine_embeddings, state, current, cfg)
        refine_seconds = time.perf_counter() - t0
        if not refined.skipped and refined.embeddings is not current.embeddings:
            current = current.with_embeddings(refined.embeddings)
        dump = (
            os.path.join(graph_dump_dir, f"round{state.iteration:03d}_unlabeled.edges")
            if graph_dump_dir
            else None
        )
        rr = _phase("merging", merge_round, state, current, cfg, graph_dump_path=dump)
        state.check(n)
        state.trace.append(
            _record_from_round(rr, refined.epoch_losses, refined.skipped, refine_seconds, False)
        )

    if state.unlabeled:
        state.iteration += 1
        dump = (
            os.path.join(graph_dump_dir, f"round{state.iteration:03d}_forced.edges")
            if graph_dump_dir
            else None
        )
        rr = _phase("forced merging", merge_round, state, current, cfg, exhaust=True, graph_dump_path=dump)
        state.check(n)
        state.trace.append(_record_from_round(rr, (), True, 0.0, True))
        if state.unlabeled:
            raise RuntimeError("pipeline failed during forced merging: pool not emptied")

    labels = state.label_of(n)
    final_metrics = evaluate_labels(labels, truth) if truth is not None else None
    report = RunReport(
        config=cfg.as_dict(),
        n_samples=n,
        dim=data.dim,
        initial_metrics=initial_metrics,
        final_metrics=final_metrics,
        purity=purity_info,
        iterations=tuple(state.trace),
    )
    return labels, report


def generate_blobs(k: int, n: int, d: int, spread: float, seed: int) -> Dataset:
    """Synthetic benchmark data: k isotropic Gaussian clusters with unit-norm
    random centers, noise scale ``spread``, and balanced sizes (within one)."""
    if k < 1 or n < k:
        raise ValueError("need n >= k >= 1")
    if spread <= 0:
        raise ValueError("spread must be positive")
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(k, d))
    centers /= np.linalg.norm(centers, axis=1)[:, None]
    sizes = np.full(k, n // k, dtype=np.int64)
    sizes[: n % k] += 1
    rows = []
    labels = []
    for c in range(k):
        rows.append(centers[c] + spread * rng.normal(size=(sizes[c], d)))
        labels.extend([c] * sizes[c])
    X = np.concatenate(rows, axis=0)
    y = np.asarray(labels, dtype=np.int64)
    perm = rng.permutation(n)
    X = X[perm]
    y = y[perm]
    ids = tuple(f"s{i:05d}" for i in range(n))
    return Dataset(ids, X, y)


_INT_KEYS = {"k", "batch_size", "epochs_per_iteration", "max_iterations", "seed",
             "distance_sample_cap"}
_FLOAT_KEYS = {"similarity_threshold", "confidence", "tau", "learning_rate"}


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse a flat ``key = value`` document into a RunConfig.

    Blank lines and ``#`` comments are ignored; unknown or repeated keys are
    errors, and ``k`` must be present.
    """
    known = {f.name for f in fields(RunConfig)}
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in known:
            raise ValueError(f"{source}:{lineno}: unknown config key {key!r}")
        if key in values:
            raise ValueError(f"{source}:{lineno}: duplicate config key {key!r}")
        try:
            values[key] = int(value) if key in _INT_KEYS else float(value)
        except ValueError:
            raise ValueError(f"{source}:{lineno}: bad value {value!r} for {key!r}") from None
    if "k" not in values:
        raise ValueError(f"{source}: missing required key 'k'")
    return RunConfig(**values)  # type: ignore[arg-type]


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), source=path)


def save_run_outputs(out_dir: str, data: Dataset, labels: np.ndarray, report: RunReport) -> None:
    os.makedirs(out_dir, exist_ok=True)
    write_assignments(os.path.join(out_dir, "assignments.csv"), data.ids, labels)
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
