"""Cold-start task mapping and final score merging.

A new task never has a column in the performance matrix. Its latent
vector is inferred by a random-forest regressor trained on historical
(proxy embedding, task factor) pairs; transfer scores are then plain
inner products against the model factors, and the meta model contributes
a second score from task statistics alone. Ranking therefore needs no
forward features and no labels for the target task: per model it costs
one k-dim dot product and one meta-vector dot product.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Manifest, RankingEntry, RankingReport, TaskRecord, TransferSpace
from .forest import ForestConfig, RegressionForest, fit_forest
from .meta import MetaLayout, MetaModel, assemble_meta, layout_from_manifest, meta_score

__all__ = [
    "MergeConfig",
    "ProxyRegressor",
    "fit_proxy_regressor",
    "infer_task_vector",
    "merge_scores",
    "rank_models",
    "save_proxy_regressor",
    "load_proxy_regressor",
]


@dataclass(frozen=True)
class MergeConfig:
    alpha: float = 0.5
    normalize: str = "zscore"

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.normalize not in ("zscore", "none"):
            raise ValueError(f"normalize must be 'zscore' or 'none', got {self.normalize!r}")


@dataclass(frozen=True)
class ProxyRegressor:
    """Forest mapping proxy embeddings to latent task vectors (clamped >= 0)."""

    forest: RegressionForest

    @property
    def input_dim(self) -> int:
        return self.forest.input_dim

    @property
    def output_dim(self) -> int:
        return self.forest.output_dim

    @property
    def training_r2(self) -> np.ndarray:
        return self.forest.training_r2


def fit_proxy_regressor(
    pairs: "list[tuple[np.ndarray, np.ndarray]]", cfg: ForestConfig = ForestConfig()
) -> ProxyRegressor:
    """Train the cold-start regressor on all historical tasks."""
    if len(pairs) < 2:
        raise ValueError("need at least 2 (proxy, factor) pairs")
    g_dim = len(pairs[0][0])
    d_dim = len(pairs[0][1])
    for g, d in pairs:
        if len(g) != g_dim or len(d) != d_dim:
            raise ValueError("inconsistent proxy or factor dimensions across pairs")
    X = np.vstack([np.asarray(g, dtype=float) for g, _ in pairs])
    Y = np.vstack([np.asarray(d, dtype=float) for _, d in pairs])
    return ProxyRegressor(forest=fit_forest(X, Y, cfg))


def infer_task_vector(reg: ProxyRegressor, proxy_embedding: np.ndarray) -> np.ndarray:
    """Predicted latent task vector, clamped non-negative."""
    g = np.asarray(proxy_embedding, dtype=float)
    if g.shape != (reg.input_dim,):
        raise ValueError(f"proxy embedding must have dimension {reg.input_dim}, got shape {g.shape}")
    return np.clip(reg.forest.predict_one(g), 0.0, None)


def _znorm(v: np.ndarray) -> np.ndarray:
    std = v.std()
    if std < 1e-12:
        return np.zeros_like(v)
    return (v - v.mean()) / std


def merge_scores(trans: np.ndarray, meta: np.ndarray, cfg: MergeConfig) -> np.ndarray:
    """Weighted sum of the two component scores, optionally z-normalized first."""
    trans = np.asarray(trans, dtype=float)
    meta = np.asarray(meta, dtype=float)
    if trans.shape != meta.shape:
        raise ValueError("component score vectors must have matching lengths")
    if cfg.normalize == "zscore":
        trans = _znorm(trans)
        meta = _znorm(meta)
    return (1.0 - cfg.alpha) * trans + cfg.alpha * meta


def rank_models(
    space: TransferSpace,
    reg: ProxyRegressor,
    meta_model: MetaModel,
    manifest: Manifest,
    task: TaskRecord,
    cfg: MergeConfig = MergeConfig(),
    layout: "MetaLayout | None" = None,
    config_digest: "str | None" = None,
) -> RankingReport:
    """Rank every model in the transfer space for one target task.

    Reads nothing from disk: the target task contributes only its proxy
    embedding and its class/sample statistics. Entries are sorted by
    descending merged score, ties broken by model_id.
    """
    if task.proxy_embedding is None:
        raise ValueError(f"task {task.task_id} has no proxy embedding")
    if layout is None:
        layout = layout_from_manifest(manifest)

    d_t = infer_task_vector(reg, task.proxy_embedding)
    trans = space.model_factors @ d_t
    meta = np.array(
        [meta_score(meta_model, assemble_meta(manifest.model(mid), task, layout)) for mid in space.model_ids]
    )
    merged = merge_scores(trans, meta, cfg)

    order = sorted(range(len(space.model_ids)), key=lambda i: (-merged[i], space.model_ids[i]))
    entries = tuple(
        RankingEntry(
            model_id=space.model_ids[i],
            trans_score=float(trans[i]),
            meta_score=float(meta[i]),
            merged_score=float(merged[i]),
            rank=rank,
        )
        for rank, i in enumerate(order, start=1)
    )
    return RankingReport(
        task_id=task.task_id,
        alpha=cfg.alpha,
        entries=entries,
        normalize=cfg.normalize,
        config_digest=config_digest,
    )


def save_proxy_regressor(reg: ProxyRegressor, path: str | Path, config_digest: str | None = None) -> None:
    doc = reg.forest.to_dict()
    doc["config_digest"] = config_digest
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, sort_keys=True) + "\n", encoding="utf-8")


def load_proxy_regressor(path: str | Path) -> ProxyRegressor:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return ProxyRegressor(forest=RegressionForest.from_dict(doc))


def proxy_regressor_digest(path: str | Path) -> str | None:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return doc.get("config_digest")
