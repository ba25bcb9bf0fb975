"""Command-line interface.

Subcommands: ``run`` (full pipeline), ``gen`` (synthetic datasets), ``eval``
(score a labeling against ground truth), ``detect`` (one-shot community
detection on an edge list, for debugging).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from .dataio import load_dataset, read_assignments, save_dataset
from .detect import leiden, louvain
from .graph import read_edge_list
from .metrics import evaluate_labels
from .pipeline import generate_blobs, load_config, run_pipeline, save_run_outputs


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    data = load_dataset(args.data, args.format)
    dump_dir = None
    if args.debug_graphs:
        dump_dir = os.path.join(args.out, "graphs")
        os.makedirs(dump_dir, exist_ok=True)
    labels, report = run_pipeline(data, cfg, graph_dump_dir=dump_dir)
    save_run_outputs(args.out, data, labels, report)
    if not args.quiet:
        print(f"labeled {len(labels)} samples into {cfg.k} clusters "
              f"in {len(report.iterations)} merge rounds")
        if report.final_metrics is not None:
            m = report.final_metrics
            print(f"acc={m['acc']:.4f} nmi={m['nmi']:.4f} ari={m['ari']:.4f}")
        print(f"outputs written to {args.out}")
    return 0


def _cmd_gen(args: argparse.Namespace) -> int:
    data = generate_blobs(args.k, args.n, args.d, args.spread, args.seed)
    save_dataset(data, args.out, args.format)
    if not args.quiet:
        print(f"wrote {args.n} samples ({args.k} clusters, dim {args.d}) to {args.out}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    data = load_dataset(args.data, args.format)
    if data.ground_truth is None:
        print("error: dataset has no ground-truth labels", file=sys.stderr)
        return 1
    assigned = read_assignments(args.assignments)
    missing = [i for i in data.ids if i not in assigned]
    if missing:
        print(f"error: assignments missing {len(missing)} ids (first: {missing[0]})",
              file=sys.stderr)
        return 1
    pred = np.array([assigned[i] for i in data.ids], dtype=np.int64)
    metrics = evaluate_labels(pred, data.ground_truth)
    print(f"acc={metrics['acc']:.6f} nmi={metrics['nmi']:.6f} ari={metrics['ari']:.6f}")
    return 0


def _cmd_detect(args: argparse.Namespace) -> int:
    g = read_edge_list(args.edges)
    algorithm = leiden if args.algorithm == "leiden" else louvain
    result = algorithm(g, args.seed)
    print(f"{result.algorithm}: {len(result.partition)} communities, "
          f"modularity {result.modularity:.6f}, {result.passes} passes")
    for c in result.partition:
        print(f"  community {c.id}: {' '.join(str(m) for m in c.members)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gradclust",
                                     description="Graph-community clustering engine")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the full pipeline on a dataset")
    run.add_argument("--config", required=True, help="key = value config file")
    run.add_argument("--data", required=True, help="dataset path")
    run.add_argument("--format", choices=("csv", "bin"), default="csv")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--quiet", action="store_true")
    run.add_argument("--debug-graphs", action="store_true",
                     help="dump per-round edge lists under OUT/graphs/")
    run.set_defaults(fn=_cmd_run)

    gen = sub.add_parser("gen", help="generate a synthetic blob dataset")
    gen.add_argument("--k", type=int, required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--d", type=int, required=True)
    gen.add_argument("--spread", type=float, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.add_argument("--format", choices=("csv", "bin"), default="csv")
    gen.add_argument("--quiet", action="store_true")
    gen.set_defaults(fn=_cmd_gen)

    ev = sub.add_parser("eval", help="score assignments against ground truth")
    ev.add_argument("--assignments", required=True, help="id,cluster csv")
    ev.add_argument("--data", required=True, help="dataset with a label column")
    ev.add_argument("--format", choices=("csv", "bin"), default="csv")
    ev.set_defaults(fn=_cmd_eval)

    det = sub.add_parser("detect", help="one-shot community detection on an edge list")
    det.add_argument("--edges", required=True, help="'u v weight' text file")
    det.add_argument("--algorithm", choices=("leiden", "louvain"), default="leiden")
    det.add_argument("--seed", type=int, default=0)
    det.set_defaults(fn=_cmd_detect)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
