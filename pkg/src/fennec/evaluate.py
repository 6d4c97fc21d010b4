"""Leave-one-task-out evaluation of the full ranking pipeline.

Each task in turn becomes the target: the performance matrix loses that
task's column, the factorization, cold-start regressor and meta model are
re-fitted on what remains, and the held-out task is ranked cold. The
estimated scores are compared against ground-truth transfer accuracies by
Pearson correlation. The protocol repeats over several derived seeds
(probe subsampling and factorization/regressor randomness both vary) and
reports mean and standard deviation.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .data import Manifest, PerformanceMatrix
from .fda import DEFAULT_GAMMA, DEFAULT_PROBE_SIZE, build_performance_matrix
from .forest import ForestConfig
from .merge import MergeConfig, fit_proxy_regressor, rank_models
from .meta import fit_meta, layout_from_manifest, meta_training_pairs
from .nmf import NmfConfig, factorize
from .seeding import derive_seed

__all__ = ["EvalRun", "EvalSummary", "pearson", "leave_one_out_eval"]

logger = logging.getLogger(__name__)


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Sample Pearson correlation; constant inputs are an error, never NaN."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be 1-D vectors of equal length")
    if x.shape[0] < 2:
        raise ValueError("need at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = np.sqrt(np.sum(dx * dx))
    sy = np.sqrt(np.sum(dy * dy))
    if sx == 0 or sy == 0:
        raise ValueError("correlation is undefined for a constant vector")
    return float(np.sum(dx * dy) / (sx * sy))


@dataclass(frozen=True)
class EvalRun:
    """One (held-out task, seed) fold."""

    held_out_task: str
    seed: int
    model_ids: tuple[str, ...]
    estimated: tuple[float, ...]
    ground_truth: tuple[float, ...]
    pearson: float
    timing: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class EvalSummary:
    runs: tuple[EvalRun, ...]
    mean_pearson: float
    std_pearson: float
    per_task: dict[str, dict[str, float]]
    offline_seconds: float
    online_seconds: float


def _eligible_tasks(manifest: Manifest) -> list[str]:
    eligible = []
    for t in manifest.tasks:
        if t.ground_truth_accuracies is None:
            logger.warning("task %s has no ground-truth accuracies, skipped", t.task_id)
            continue
        if t.proxy_embedding is None:
            logger.warning("task %s has no proxy embedding, skipped", t.task_id)
            continue
        eligible.append(t.task_id)
    return eligible


def leave_one_out_eval(
    manifest: Manifest,
    master_seed: int = 0,
    num_seeds: int = 5,
    probe_size: int = DEFAULT_PROBE_SIZE,
    gamma: float = DEFAULT_GAMMA,
    nmf_cfg: NmfConfig = NmfConfig(),
    forest_cfg: ForestConfig = ForestConfig(),
    merge_cfg: MergeConfig = MergeConfig(),
    include_embedding: bool = True,
    include_onehot: bool = True,
) -> EvalSummary:
    """Run the leave-one-task-out protocol over derived seeds.

    The held-out task's performance column, meta rows and proxy pair are
    all excluded from every fitted component; only its proxy embedding and
    statistics are used at ranking time.
    """
    eligible = _eligible_tasks(manifest)
    if len(eligible) < 3:
        raise ValueError(f"need at least 3 tasks with ground truth and proxy embeddings, have {len(eligible)}")

    layout = layout_from_manifest(manifest, include_embedding, include_onehot)
    runs: list[EvalRun] = []
    offline_seconds = 0.0
    online_seconds = 0.0

    for s in range(num_seeds):
        seed = derive_seed(master_seed, f"eval-seed:{s}")
        t0 = time.perf_counter()
        full = build_performance_matrix(manifest, probe_size=probe_size, seed=seed, gamma=gamma)
        matrix_seconds = time.perf_counter() - t0
        offline_seconds += matrix_seconds

        for tid in eligible:
            task = manifest.task(tid)
            gt_map = task.ground_truth_accuracies

            t1 = time.perf_counter()
            historical = full.drop_task(tid)
            if tid in historical.task_ids:
                raise AssertionError(f"leakage: held-out task {tid} still present in the historical matrix")
            k = min(nmf_cfg.k, len(historical.model_ids), len(historical.task_ids))
            if k < nmf_cfg.k:
                logger.info("k clamped from %d to %d for fold %s", nmf_cfg.k, k, tid)
            space = factorize(
                historical,
                NmfConfig(
                    k=k,
                    alpha_m=nmf_cfg.alpha_m,
                    alpha_d=nmf_cfg.alpha_d,
                    max_iters=nmf_cfg.max_iters,
                    rel_tol=nmf_cfg.rel_tol,
                    seed=derive_seed(seed, f"nmf:{tid}"),
                    init=nmf_cfg.init,
                ),
            )
            proxy_pairs = []
            for hid in space.task_ids:
                hist_task = manifest.task(hid)
                if hist_task.proxy_embedding is not None:
                    proxy_pairs.append((hist_task.proxy_embedding, space.task_vector(hid)))
            regressor = fit_proxy_regressor(
                proxy_pairs,
                ForestConfig(
                    num_trees=forest_cfg.num_trees,
                    max_depth=forest_cfg.max_depth,
                    min_leaf=forest_cfg.min_leaf,
                    bootstrap=forest_cfg.bootstrap,
                    max_features=forest_cfg.max_features,
                    seed=derive_seed(seed, f"forest:{tid}"),
                ),
            )
            meta_model = fit_meta(meta_training_pairs(manifest, historical, layout))
            fit_seconds = time.perf_counter() - t1
            offline_seconds += fit_seconds

            missing_gt = [m for m in space.model_ids if m not in gt_map]
            if missing_gt:
                logger.warning("task %s lacks ground truth for %d models, skipped", tid, len(missing_gt))
                continue

            t2 = time.perf_counter()
            report = rank_models(space, regressor, meta_model, manifest, task, merge_cfg, layout)
            rank_seconds = time.perf_counter() - t2
            online_seconds += rank_seconds

            by_model = {e.model_id: e.merged_score for e in report.entries}
            estimated = tuple(by_model[m] for m in space.model_ids)
            truth = tuple(float(gt_map[m]) for m in space.model_ids)
            runs.append(
                EvalRun(
                    held_out_task=tid,
                    seed=seed,
                    model_ids=space.model_ids,
                    estimated=estimated,
                    ground_truth=truth,
                    pearson=pearson(np.array(estimated), np.array(truth)),
                    timing={
                        "matrix_build": matrix_seconds,
                        "offline_fits": fit_seconds,
                        "rank": rank_seconds,
                    },
                )
            )

    if not runs:
        raise ValueError("no evaluable folds (every task lacked ground truth or proxy embeddings)")

    correlations = np.array([r.pearson for r in runs])
    per_task: dict[str, dict[str, float]] = {}
    for tid in eligible:
        vals = np.array([r.pearson for r in runs if r.held_out_task == tid])
        if vals.size:
            per_task[tid] = {"mean": float(vals.mean()), "std": float(vals.std())}
    return EvalSummary(
        runs=tuple(runs),
        mean_pearson=float(correlations.mean()),
        std_pearson=float(correlations.std()),
        per_task=per_task,
        offline_seconds=offline_seconds,
        online_seconds=online_seconds,
    )
