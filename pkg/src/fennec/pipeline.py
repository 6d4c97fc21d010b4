"""Stage orchestration for the full ranking pipeline.

Stages run in dependency order (fda, factorize, archi2vec, train-meta,
train-proxy, rank/eval). Each stage writes its artifacts under the
configured output directory, stamps them with the config digest, and logs
a small JSON record with wall-clock timing. With ``resume`` a stage whose
artifacts already exist is skipped; on failure the stage's partial
artifacts are removed and the stage name is reported.
"""

from __future__ import annotations

import json
import logging
import shutil
import time
from pathlib import Path

import numpy as np

from . import archi2vec as a2v
from .config import PipelineConfig
from .data import (
    Manifest,
    load_labeled_csv,
    load_manifest,
    load_matrix,
    load_transfer_space,
    save_labeled_csv,
    save_matrix,
    save_report,
    save_transfer_space,
)
from .evaluate import leave_one_out_eval
from .fda import build_performance_matrix
from .forest import ForestConfig
from .merge import (
    MergeConfig,
    fit_proxy_regressor,
    load_proxy_regressor,
    rank_models,
    save_proxy_regressor,
)
from .meta import (
    attach_architecture_features,
    fit_meta,
    layout_from_manifest,
    load_meta_model,
    meta_training_pairs,
    save_meta_model,
)
from .nmf import factorize

__all__ = ["run_pipeline", "load_arch_embedding_table", "clusters_path_for"]

logger = logging.getLogger(__name__)


def clusters_path_for(embeddings_path: str | Path) -> Path:
    path = Path(embeddings_path)
    return path.with_name(path.stem + ".clusters.csv")


def load_arch_embedding_table(path: str | Path):
    """Read an embeddings CSV (plus its sibling clusters file, if present)."""
    row_ids, _, values = load_labeled_csv(path)
    embeddings = {rid: values[i] for i, rid in enumerate(row_ids)}
    clusters = None
    cpath = clusters_path_for(path)
    if cpath.exists():
        crow_ids, _, cvalues = load_labeled_csv(cpath)
        clusters = {rid: int(cvalues[i, 0]) for i, rid in enumerate(crow_ids)}
    return embeddings, clusters


def _write_log(out_dir: Path, stage: str, record: dict) -> None:
    log_dir = out_dir / "logs"
    log_dir.mkdir(parents=True, exist_ok=True)
    (log_dir / f"{stage}.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _remove(paths: list[Path]) -> None:
    for p in paths:
        if p.is_dir():
            shutil.rmtree(p, ignore_errors=True)
        elif p.exists():
            p.unlink()


class _Stage:
    """Runs one stage with caching, timing, logging and cleanup-on-failure."""

    def __init__(self, name: str, out_dir: Path, artifacts: list[Path], resume: bool):
        self.name = name
        self.out_dir = out_dir
        self.artifacts = artifacts
        self.resume = resume

    def run(self, fn) -> bool:
        if self.resume and self.artifacts and all(p.exists() for p in self.artifacts):
            logger.info("stage %s: cached", self.name)
            _write_log(self.out_dir, self.name, {"stage": self.name, "status": "cached",
                                                 "artifacts": [str(p) for p in self.artifacts]})
            return False
        start = time.perf_counter()
        try:
            fn()
        except Exception as exc:
            _remove(self.artifacts)
            _write_log(self.out_dir, self.name, {"stage": self.name, "status": "failed", "error": str(exc)})
            raise RuntimeError(f"stage {self.name} failed: {exc}") from exc
        seconds = time.perf_counter() - start
        logger.info("stage %s: done in %.3fs", self.name, seconds)
        _write_log(self.out_dir, self.name, {"stage": self.name, "status": "done", "seconds": seconds,
                                             "artifacts": [str(p) for p in self.artifacts]})
        return True


def run_pipeline(config: PipelineConfig, base_dir: str | Path = ".", resume: bool = False) -> dict:
    """Run every configured stage; returns a status map of stage -> ran/cached.

    ``base_dir`` anchors the relative paths in the config.
    """
    base = Path(base_dir)
    out_dir = base / config.paths.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = config.digest()
    manifest = load_manifest(base / config.paths.manifest)
    status: dict[str, str] = {}

    matrix_path = out_dir / "perf_matrix.csv"
    space_dir = out_dir / "transfer_space"
    arch_path = out_dir / "arch_embeddings.csv"
    meta_path = out_dir / "meta_model.json"
    proxy_path = out_dir / "proxy_regressor.json"

    def stage(name, artifacts, fn):
        ran = _Stage(name, out_dir, artifacts, resume).run(fn)
        status[name] = "ran" if ran else "cached"

    def fda_stage():
        seed = config.stage_seed("fda")
        matrix = build_performance_matrix(
            manifest,
            probe_size=config.fda.probe_size,
            seed=seed,
            gamma=config.fda.gamma,
        )
        save_matrix(matrix, matrix_path, comments=(f"config_digest: {digest}", f"seed: {seed}"))

    stage("fda", [matrix_path], fda_stage)

    def factorize_stage():
        matrix = load_matrix(matrix_path)
        space = factorize(matrix, config.nmf_config())
        save_transfer_space(space, space_dir, config_digest=digest)

    stage("factorize", [space_dir / "model_factors.csv", space_dir / "task_factors.csv",
                        space_dir / "meta.json"], factorize_stage)

    graphs_dir = None if config.paths.graphs_dir is None else base / config.paths.graphs_dir
    have_graphs = graphs_dir is not None and graphs_dir.is_dir() and any(graphs_dir.glob("*.json"))
    if have_graphs:
        def archi2vec_stage():
            graphs = [a2v.load_graph(p) for p in sorted(graphs_dir.glob("*.json"))]
            seed = config.stage_seed("archi2vec")
            embeddings = a2v.train_graph_embeddings(
                graphs,
                d_emb=config.archi2vec.dim,
                wl_iterations=config.archi2vec.wl,
                epochs=config.archi2vec.epochs,
                seed=seed,
                negative=config.archi2vec.negative,
            )
            ids = [e.graph_id for e in embeddings]
            cols = [f"e{i}" for i in range(config.archi2vec.dim)]
            table = np.vstack([e.vector for e in embeddings])
            save_labeled_csv(ids, cols, table, arch_path,
                             comments=(f"config_digest: {digest}", f"seed: {seed}"))
            cluster_seed = config.stage_seed("archi2vec-clusters")
            clusters = a2v.cluster_architectures(
                embeddings, min(config.archi2vec.clusters, len(embeddings)), cluster_seed,
            )
            cvals = np.array([[float(clusters[i])] for i in ids])
            save_labeled_csv(ids, ["cluster"], cvals, clusters_path_for(arch_path),
                             comments=(f"config_digest: {digest}", f"seed: {cluster_seed}"))

        stage("archi2vec", [arch_path, clusters_path_for(arch_path)], archi2vec_stage)
    else:
        logger.info("stage archi2vec: no graphs directory, skipped")
        status["archi2vec"] = "skipped"

    def effective_manifest() -> Manifest:
        if arch_path.exists():
            embeddings, clusters = load_arch_embedding_table(arch_path)
            return attach_architecture_features(manifest, embeddings, clusters)
        return manifest

    def train_meta_stage():
        local = effective_manifest()
        matrix = load_matrix(matrix_path)
        layout = layout_from_manifest(local, config.include_embedding, config.include_onehot)
        model = fit_meta(meta_training_pairs(local, matrix, layout), layout=layout)
        save_meta_model(model, meta_path, config_digest=digest)

    stage("train-meta", [meta_path], train_meta_stage)

    def train_proxy_stage():
        space = load_transfer_space(space_dir)
        pairs = []
        for tid in space.task_ids:
            task = manifest.task(tid)
            if task.proxy_embedding is not None:
                pairs.append((task.proxy_embedding, space.task_vector(tid)))
        regressor = fit_proxy_regressor(pairs, ForestConfig(seed=config.stage_seed("train-proxy")))
        save_proxy_regressor(regressor, proxy_path, config_digest=digest)

    stage("train-proxy", [proxy_path], train_proxy_stage)

    if config.rank_tasks:
        report_paths = [out_dir / "report" / f"{tid}.json" for tid in config.rank_tasks]

        def rank_stage():
            local = effective_manifest()
            space = load_transfer_space(space_dir)
            regressor = load_proxy_regressor(proxy_path)
            meta_model = load_meta_model(meta_path)
            layout = meta_model.layout or layout_from_manifest(
                local, config.include_embedding, config.include_onehot
            )
            cfg = MergeConfig(alpha=config.merge.alpha, normalize=config.merge.normalize)
            for tid, rpath in zip(config.rank_tasks, report_paths):
                report = rank_models(space, regressor, meta_model, local, local.task(tid),
                                     cfg, layout, config_digest=digest)
                save_report(report, rpath)

        stage("rank", report_paths, rank_stage)

    if config.eval.run:
        eval_path = out_dir / "eval_report.json"

        def eval_stage():
            summary = leave_one_out_eval(
                effective_manifest(),
                master_seed=config.seed,
                num_seeds=config.eval.num_seeds,
                probe_size=config.fda.probe_size,
                gamma=config.fda.gamma,
                nmf_cfg=config.nmf_config(seed=0),
                merge_cfg=MergeConfig(alpha=config.merge.alpha, normalize=config.merge.normalize),
                include_embedding=config.include_embedding,
                include_onehot=config.include_onehot,
            )
            doc = {
                "config_digest": digest,
                "mean_pearson": summary.mean_pearson,
                "std_pearson": summary.std_pearson,
                "per_task": summary.per_task,
                "offline_seconds": summary.offline_seconds,
                "online_seconds": summary.online_seconds,
                "runs": [
                    {
                        "held_out_task": r.held_out_task,
                        "seed": r.seed,
                        "pearson": r.pearson,
                        "timing": r.timing,
                    }
                    for r in summary.runs
                ],
            }
            eval_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")

        stage("eval", [eval_path], eval_stage)

    _write_log(out_dir, "pipeline", {"stage": "pipeline", "status": "done",
                                     "config": config.to_dict(), "stages": status})
    return status
