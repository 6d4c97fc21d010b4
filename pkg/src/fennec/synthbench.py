"""Planted synthetic benchmark for desk-scale pipeline validation.

Real ground truth for a model repository takes thousands of GPU hours of
fine-tuning; this generator plants a low-rank structure instead. Latent
model and task vectors are sampled, ground-truth transfer scores are
their inner products plus noise, proxy embeddings and architecture
embeddings are noisy linear images of the latent vectors, and forward
features are class-conditional Gaussians whose class separation grows
with the planted score. A correct pipeline must therefore recover the
planted ranking; recovery thresholds are fixture parameters, not claims
about any real benchmark.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .archi2vec import lloyd_kmeans
from .data import (
    FeatureSet,
    Manifest,
    ModelRecord,
    TaskRecord,
    save_feature_set,
    save_manifest,
    save_vector,
)
from .seeding import derive_seed

__all__ = ["SynthBenchConfig", "generate_benchmark"]


@dataclass(frozen=True)
class SynthBenchConfig:
    num_models: int = 30
    num_tasks: int = 8
    k: int = 4
    seed: int = 0
    noise: float = 0.02            # ground-truth noise, relative to the score spread
    proxy_dim: int = 16
    arch_dim: int = 8
    num_clusters: int = 4
    min_samples: int = 560
    max_samples: int = 640
    min_classes: int = 3
    max_classes: int = 4
    min_feature_dim: int = 6
    max_feature_dim: int = 10
    min_separation: float = 0.5    # class-mean separation mapped from planted scores
    max_separation: float = 2.4

    def __post_init__(self):
        if self.num_models < 2 or self.num_tasks < 3:
            raise ValueError("need at least 2 models and 3 tasks")
        if self.k > min(self.num_models, self.num_tasks):
            raise ValueError("k exceeds min(models, tasks)")


def _rng(cfg: SynthBenchConfig, name: str) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(cfg.seed, name)))


def generate_benchmark(out_dir: str | Path, cfg: SynthBenchConfig = SynthBenchConfig()) -> Manifest:
    """Write a planted benchmark (manifest, features, proxies) under out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    model_ids = [f"model_{i:03d}" for i in range(cfg.num_models)]
    task_ids = [f"task_{j:02d}" for j in range(cfg.num_tasks)]

    latent_rng = _rng(cfg, "latent")
    model_latent = latent_rng.uniform(0.2, 1.0, size=(cfg.num_models, cfg.k))
    # Task vectors share a positive base direction: transfer preferences of
    # related tasks correlate, which is what makes history worth mining.
    task_latent = latent_rng.uniform(0.5, 1.5, size=(cfg.num_tasks, cfg.k))

    raw = model_latent @ task_latent.T
    spread = float(raw.max() - raw.min())
    noise_rng = _rng(cfg, "gt-noise")
    noisy = raw + noise_rng.normal(0.0, cfg.noise * spread, size=raw.shape)

    # Affine squash into (0.05, 0.95) so scores store as plausible accuracies.
    lo, hi = noisy.min(), noisy.max()
    accuracies = 0.05 + 0.9 * (noisy - lo) / max(hi - lo, 1e-12)

    proxy_rng = _rng(cfg, "proxy")
    proxy_map = proxy_rng.normal(0.0, 1.0, size=(cfg.proxy_dim, cfg.k))
    proxies = task_latent @ proxy_map.T + proxy_rng.normal(0.0, 0.01, size=(cfg.num_tasks, cfg.proxy_dim))

    arch_rng = _rng(cfg, "arch")
    arch_map = arch_rng.normal(0.0, 1.0, size=(cfg.arch_dim, cfg.k))
    arch = model_latent @ arch_map.T + arch_rng.normal(0.0, 0.02, size=(cfg.num_models, cfg.arch_dim))
    _, clusters, _ = lloyd_kmeans(arch, min(cfg.num_clusters, cfg.num_models), derive_seed(cfg.seed, "clusters"))

    # Model statistics monotone in overall planted quality, plus jitter.
    quality = raw.mean(axis=1)
    q01 = (quality - quality.min()) / max(quality.max() - quality.min(), 1e-12)
    stats_rng = _rng(cfg, "stats")
    param_counts = np.round(10 ** (5.0 + 2.5 * q01 + stats_rng.normal(0, 0.1, cfg.num_models))).astype(int)
    layer_counts = np.round(10 ** (1.0 + 1.2 * q01 + stats_rng.normal(0, 0.05, cfg.num_models))).astype(int)

    task_rng = _rng(cfg, "tasks")
    class_counts = task_rng.integers(cfg.min_classes, cfg.max_classes + 1, size=cfg.num_tasks)
    sample_counts = task_rng.integers(cfg.min_samples, cfg.max_samples + 1, size=cfg.num_tasks)
    feature_dims = task_rng.integers(
        np.maximum(cfg.min_feature_dim, class_counts), cfg.max_feature_dim + 1, size=cfg.num_tasks
    )

    sep_lo, sep_hi = cfg.min_separation, cfg.max_separation
    sep = sep_lo + (sep_hi - sep_lo) * (raw - raw.min()) / max(raw.max() - raw.min(), 1e-12)

    tasks = []
    for j, tid in enumerate(task_ids):
        n, c, d = int(sample_counts[j]), int(class_counts[j]), int(feature_dims[j])
        labels = np.arange(n) % c
        feature_files = {}
        for i, mid in enumerate(model_ids):
            frng = _rng(cfg, f"features:{tid}:{mid}")
            means = np.zeros((c, d))
            means[np.arange(c), np.arange(c)] = sep[i, j]
            feats = means[labels] + frng.normal(0.0, 1.0, size=(n, d))
            rel = f"features/{tid}/{mid}.csv"
            save_feature_set(
                FeatureSet(task_id=tid, model_id=mid, features=feats, labels=labels),
                out_dir / rel,
            )
            feature_files[mid] = rel
        proxy_rel = f"proxy/{tid}.csv"
        save_vector(proxies[j], out_dir / proxy_rel)
        tasks.append(
            TaskRecord(
                task_id=tid,
                class_count=c,
                sample_count=n,
                feature_files=feature_files,
                proxy_embedding=proxies[j],
                proxy_embedding_path=proxy_rel,
                ground_truth_accuracies={mid: float(accuracies[i, j]) for i, mid in enumerate(model_ids)},
            )
        )

    models = [
        ModelRecord(
            model_id=mid,
            param_count=int(param_counts[i]),
            layer_count=int(layer_counts[i]),
            arch_embedding=arch[i],
            cluster_id=int(clusters[i]),
        )
        for i, mid in enumerate(model_ids)
    ]

    manifest = Manifest(models=tuple(models), tasks=tuple(tasks), root=out_dir)
    save_manifest(manifest, out_dir / "manifest.json")
    return manifest
