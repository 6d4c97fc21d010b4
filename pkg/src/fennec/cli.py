"""Command-line entry point wiring all pipeline stages.

Exit codes: 0 success, 2 validation error (bad flags, bad config, bad
inputs), 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import archi2vec as a2v
from .config import PipelineConfig
from .data import (
    load_manifest,
    load_matrix,
    load_transfer_space,
    save_labeled_csv,
    save_matrix,
    save_report,
    save_transfer_space,
    transfer_space_digest,
)
from .evaluate import leave_one_out_eval
from .fda import build_performance_matrix
from .forest import ForestConfig
from .merge import (
    MergeConfig,
    fit_proxy_regressor,
    load_proxy_regressor,
    proxy_regressor_digest,
    rank_models,
    save_proxy_regressor,
)
from .meta import (
    attach_architecture_features,
    fit_meta,
    layout_from_manifest,
    load_meta_model,
    meta_model_digest,
    meta_training_pairs,
    save_meta_model,
)
from .nmf import NmfConfig, factorize
from .pipeline import clusters_path_for, load_arch_embedding_table, run_pipeline
from .synthbench import SynthBenchConfig, generate_benchmark

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def _global_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--resume", action="store_true", help="skip stages whose artifacts exist")
    common.add_argument("--force", action="store_true", help="ignore config-digest mismatches")
    common.add_argument("--verbose", "-v", action="count", default=0, help="increase log verbosity")
    return common


def _attach_arch(manifest, arch: str | None):
    if arch is None:
        return manifest
    embeddings, clusters = load_arch_embedding_table(arch)
    return attach_architecture_features(manifest, embeddings, clusters)


def _cmd_fda(args) -> int:
    manifest = load_manifest(args.manifest)
    matrix = build_performance_matrix(
        manifest, probe_size=args.probe_size, seed=args.seed, gamma=args.gamma
    )
    save_matrix(matrix, args.out, comments=(f"seed: {args.seed}",))
    print(f"wrote {args.out} ({len(matrix.model_ids)} models x {len(matrix.task_ids)} tasks)")
    return EXIT_OK


def _cmd_factorize(args) -> int:
    matrix = load_matrix(args.matrix)
    cfg = NmfConfig(
        k=args.k,
        alpha_m=args.alpha_m,
        alpha_d=args.alpha_d,
        max_iters=args.max_iters,
        rel_tol=args.rel_tol,
        seed=args.seed,
        init=args.init,
    )
    space = factorize(matrix, cfg)
    save_transfer_space(space, args.out)
    print(
        f"wrote {args.out} (k={space.k}, {space.iterations_run} iterations, "
        f"objective {space.final_objective:.6g})"
    )
    for w in space.warnings:
        logger.warning("%s", w)
    return EXIT_OK


def _cmd_archi2vec(args) -> int:
    graph_paths = sorted(Path(args.graphs).glob("*.json"))
    if not graph_paths:
        raise ValueError(f"no graph JSON files under {args.graphs}")
    graphs = [a2v.load_graph(p) for p in graph_paths]
    embeddings = a2v.train_graph_embeddings(
        graphs,
        d_emb=args.dim,
        wl_iterations=args.wl,
        epochs=args.epochs,
        seed=args.seed,
        negative=args.negative,
    )
    ids = [e.graph_id for e in embeddings]
    save_labeled_csv(ids, [f"e{i}" for i in range(args.dim)],
                     np.vstack([e.vector for e in embeddings]), args.out,
                     comments=(f"seed: {args.seed}",))
    clusters = a2v.cluster_architectures(embeddings, min(args.clusters, len(embeddings)), args.seed)
    save_labeled_csv(ids, ["cluster"], np.array([[float(clusters[i])] for i in ids]),
                     clusters_path_for(args.out), comments=(f"seed: {args.seed}",))
    print(f"wrote {args.out} ({len(ids)} graphs, dim {args.dim}) and {clusters_path_for(args.out)}")
    return EXIT_OK


def _cmd_train_meta(args) -> int:
    manifest = _attach_arch(load_manifest(args.manifest), args.arch)
    matrix = load_matrix(args.matrix)
    layout = layout_from_manifest(
        manifest, include_embedding=not args.no_embedding, include_onehot=not args.no_onehot
    )
    model = fit_meta(meta_training_pairs(manifest, matrix, layout), layout=layout)
    save_meta_model(model, args.out)
    print(f"wrote {args.out} (training rmse {model.training_rmse:.6g})")
    return EXIT_OK


def _cmd_train_proxy(args) -> int:
    manifest = load_manifest(args.manifest)
    space = load_transfer_space(args.space)
    pairs = []
    for tid in space.task_ids:
        task = manifest.task(tid)
        if task.proxy_embedding is not None:
            pairs.append((task.proxy_embedding, space.task_vector(tid)))
    cfg = ForestConfig(num_trees=args.trees, max_depth=args.max_depth,
                       min_leaf=args.min_leaf, seed=args.seed)
    regressor = fit_proxy_regressor(pairs, cfg)
    save_proxy_regressor(regressor, args.out)
    r2 = ", ".join(f"{v:.3f}" for v in regressor.training_r2)
    print(f"wrote {args.out} ({len(pairs)} training tasks, per-dimension R2 [{r2}])")
    return EXIT_OK


def _check_digests(args) -> None:
    found = {
        "transfer space": transfer_space_digest(args.space),
        "meta model": meta_model_digest(args.meta),
        "proxy regressor": proxy_regressor_digest(args.proxy_model),
    }
    expected = PipelineConfig.load(args.config).digest() if args.config else None
    present = {name: d for name, d in found.items() if d is not None}
    distinct = set(present.values())
    if expected is not None:
        distinct.add(expected)
    if len(distinct) > 1:
        detail = ", ".join(f"{name}={d}" for name, d in present.items())
        if expected is not None:
            detail += f", config={expected}"
        if not args.force:
            raise ValueError(f"config digest mismatch across artifacts ({detail}); use --force to override")
        logger.warning("config digest mismatch ignored by --force (%s)", detail)
    missing = [name for name, d in found.items() if d is None]
    if missing and (expected is not None or present):
        logger.warning("artifacts without a config digest: %s", ", ".join(missing))


def _cmd_rank(args) -> int:
    manifest = _attach_arch(load_manifest(args.manifest), args.arch)
    _check_digests(args)
    space = load_transfer_space(args.space)
    regressor = load_proxy_regressor(args.proxy_model)
    meta_model = load_meta_model(args.meta)
    layout = meta_model.layout or layout_from_manifest(manifest)
    cfg = MergeConfig(alpha=args.alpha, normalize=args.normalize)
    task = manifest.task(args.task)
    report = rank_models(space, regressor, meta_model, manifest, task, cfg, layout)
    save_report(report, args.out)
    top = report.entries[0]
    print(f"wrote {args.out} (top model {top.model_id}, merged score {top.merged_score:.6g})")
    return EXIT_OK


def _cmd_eval(args) -> int:
    manifest = _attach_arch(load_manifest(args.manifest), args.arch)
    summary = leave_one_out_eval(
        manifest,
        master_seed=args.seed,
        num_seeds=args.seeds,
        probe_size=args.probe_size,
        gamma=args.gamma,
        nmf_cfg=NmfConfig(k=args.k, alpha_m=args.alpha_m, alpha_d=args.alpha_d),
        merge_cfg=MergeConfig(alpha=args.alpha, normalize=args.normalize),
    )
    doc = {
        "mean_pearson": summary.mean_pearson,
        "std_pearson": summary.std_pearson,
        "per_task": summary.per_task,
        "offline_seconds": summary.offline_seconds,
        "online_seconds": summary.online_seconds,
        "runs": [
            {"held_out_task": r.held_out_task, "seed": r.seed, "pearson": r.pearson, "timing": r.timing}
            for r in summary.runs
        ],
    }
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {args.out} (mean Pearson {summary.mean_pearson:.4f} +/- {summary.std_pearson:.4f})")
    return EXIT_OK


def _cmd_synth_bench(args) -> int:
    cfg = SynthBenchConfig(
        num_models=args.models, num_tasks=args.tasks, k=args.k, seed=args.seed, noise=args.noise,
        min_samples=args.min_samples, max_samples=args.max_samples,
    )
    manifest = generate_benchmark(args.out, cfg)
    print(
        f"wrote {args.out} ({len(manifest.models)} models, {len(manifest.tasks)} tasks, "
        f"latent dimension {cfg.k})"
    )
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    config = PipelineConfig.load(args.config)
    if args.verbose == 0 and config.verbosity > 0:
        logging.getLogger().setLevel(logging.INFO if config.verbosity == 1 else logging.DEBUG)
    status = run_pipeline(config, base_dir=Path(args.config).parent, resume=args.resume)
    print("pipeline done: " + ", ".join(f"{k}={v}" for k, v in status.items()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="fennec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fda", parents=[common], help="build the historical performance matrix")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--probe-size", type=int, default=500)
    p.add_argument("--gamma", type=float, default=1e-4)
    p.set_defaults(func=_cmd_fda)

    p = sub.add_parser("factorize", parents=[common], help="factorize the matrix into the transfer space")
    p.add_argument("--matrix", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--alpha-m", type=float, default=0.01)
    p.add_argument("--alpha-d", type=float, default=0.01)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--rel-tol", type=float, default=1e-6)
    p.add_argument("--init", choices=["seeded-uniform", "nndsvd-like"], default="seeded-uniform")
    p.set_defaults(func=_cmd_factorize)

    p = sub.add_parser("archi2vec", parents=[common], help="embed architecture graphs and cluster them")
    p.add_argument("--graphs", required=True, help="directory of graph JSON files")
    p.add_argument("--out", required=True, help="output embeddings CSV")
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--wl", type=int, default=2)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--negative", type=int, default=5)
    p.add_argument("--clusters", type=int, default=4)
    p.set_defaults(func=_cmd_archi2vec)

    p = sub.add_parser("train-meta", parents=[common], help="fit the meta-feature linear model")
    p.add_argument("--manifest", required=True)
    p.add_argument("--matrix", required=True)
    p.add_argument("--arch", default=None, help="arch embeddings CSV from the archi2vec stage")
    p.add_argument("--no-embedding", action="store_true", help="exclude the embedding block")
    p.add_argument("--no-onehot", action="store_true", help="exclude the cluster one-hot block")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train_meta)

    p = sub.add_parser("train-proxy", parents=[common], help="fit the cold-start proxy regressor")
    p.add_argument("--manifest", required=True)
    p.add_argument("--space", required=True, help="transfer space directory")
    p.add_argument("--out", required=True)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=12)
    p.add_argument("--min-leaf", type=int, default=2)
    p.set_defaults(func=_cmd_train_proxy)

    p = sub.add_parser("rank", parents=[common], help="rank all models for one target task")
    p.add_argument("--manifest", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--space", required=True)
    p.add_argument("--proxy-model", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--arch", default=None)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--normalize", choices=["zscore", "none"], default="zscore")
    p.add_argument("--config", default=None, help="pipeline config to validate artifact digests against")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("eval", parents=[common], help="leave-one-task-out evaluation")
    p.add_argument("--manifest", required=True)
    p.add_argument("--arch", default=None)
    p.add_argument("--seeds", type=int, default=5, help="number of derived evaluation seeds")
    p.add_argument("--probe-size", type=int, default=500)
    p.add_argument("--gamma", type=float, default=1e-4)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--alpha-m", type=float, default=0.01)
    p.add_argument("--alpha-d", type=float, default=0.01)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--normalize", choices=["zscore", "none"], default="zscore")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("synth-bench", parents=[common], help="generate the planted synthetic benchmark")
    p.add_argument("--models", type=int, default=30)
    p.add_argument("--tasks", type=int, default=8)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--noise", type=float, default=0.02)
    p.add_argument("--min-samples", type=int, default=560)
    p.add_argument("--max-samples", type=int, default=640)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth_bench)

    p = sub.add_parser("pipeline", parents=[common], help="run all stages from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # runtime failures, including failed stages
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
