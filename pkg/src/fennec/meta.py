"""Meta features and the linear score model.

A (model, task) pair gets a cheap feature vector: log10 parameter and
layer counts, the model's architecture embedding, a one-hot of its
architecture cluster, then log10 class count and sample volume for the
task. A linear regressor maps these vectors to historical transfer
scores; at ranking time the same regressor scores unseen tasks from their
statistics alone.

Vector layouts are digest-checked end to end: a model trained under one
layout refuses vectors assembled under another.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Manifest, ModelRecord, PerformanceMatrix, TaskRecord, format_float

__all__ = [
    "MetaLayout",
    "MetaVector",
    "MetaModel",
    "layout_from_manifest",
    "assemble_meta",
    "fit_meta",
    "meta_score",
    "meta_training_pairs",
    "attach_architecture_features",
    "save_meta_model",
    "load_meta_model",
    "meta_model_digest",
]

_CONSTANT_STD = 1e-12
RIDGE_FALLBACK = 1e-6


@dataclass(frozen=True)
class MetaLayout:
    """Fixed layout of a meta vector for one training run."""

    d_emb: int = 0
    num_clusters: int = 0
    include_embedding: bool = True
    include_onehot: bool = True

    @property
    def embedding_width(self) -> int:
        return self.d_emb if self.include_embedding else 0

    @property
    def onehot_width(self) -> int:
        return self.num_clusters if self.include_onehot else 0

    @property
    def width(self) -> int:
        return 2 + self.embedding_width + self.onehot_width + 2

    def digest(self) -> str:
        desc = json.dumps(
            {
                "counts": 2,
                "embedding": self.embedding_width,
                "onehot": self.onehot_width,
                "task": 2,
            },
            sort_keys=True,
        )
        return hashlib.blake2b(desc.encode("utf-8"), digest_size=16).hexdigest()


@dataclass(frozen=True)
class MetaVector:
    values: np.ndarray
    layout_digest: str
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or not np.all(np.isfinite(vals)):
            raise ValueError("meta vector must be a finite 1-D vector")
        vals = np.ascontiguousarray(vals)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "warnings", tuple(self.warnings))


@dataclass(frozen=True)
class MetaModel:
    """Linear model over standardized meta features.

    ``weights`` has one entry per feature dimension (zero for dimensions
    dropped as constant); ``feature_std`` holds 1.0 there so scoring never
    divides by zero.
    """

    weights: np.ndarray
    intercept: float
    feature_mean: np.ndarray
    feature_std: np.ndarray
    dropped: tuple[int, ...]
    training_rmse: float
    layout_digest: str
    layout: "MetaLayout | None" = None

    def __post_init__(self):
        for name in ("weights", "feature_mean", "feature_std"):
            arr = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=float))
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if np.any(self.feature_std <= 0):
            raise ValueError("feature_std entries must be positive")


def layout_from_manifest(
    manifest: Manifest,
    include_embedding: bool = True,
    include_onehot: bool = True,
) -> MetaLayout:
    """Derive the vector layout from whatever the manifest's models carry.

    Embedding width is taken from the models' embeddings (which must all
    agree); the one-hot width is ``max(cluster_id) + 1``. A block whose
    inputs are entirely absent is omitted from the layout.
    """
    widths = {m.arch_embedding.shape[0] for m in manifest.models if m.arch_embedding is not None}
    if len(widths) > 1:
        raise ValueError(f"models carry embeddings of differing widths: {sorted(widths)}")
    d_emb = widths.pop() if widths else 0
    clusters = [m.cluster_id for m in manifest.models if m.cluster_id is not None]
    num_clusters = (max(clusters) + 1) if clusters else 0
    return MetaLayout(
        d_emb=d_emb,
        num_clusters=num_clusters,
        include_embedding=include_embedding and d_emb > 0,
        include_onehot=include_onehot and num_clusters > 0,
    )


def assemble_meta(model: ModelRecord, task: TaskRecord, layout: MetaLayout) -> MetaVector:
    """Concatenate model and task meta features in the layout's fixed order."""
    if model.param_count <= 0 or model.layer_count <= 0:
        raise ValueError(f"model {model.model_id}: param_count and layer_count must be positive")
    if task.class_count <= 0 or task.sample_count <= 0:
        raise ValueError(f"task {task.task_id}: class_count and sample_count must be positive")

    warnings = []
    parts = [np.array([math.log10(model.param_count), math.log10(model.layer_count)])]

    if layout.include_embedding:
        if model.arch_embedding is None:
            warnings.append(f"model {model.model_id}: no architecture embedding, using zeros")
            parts.append(np.zeros(layout.d_emb))
        else:
            if model.arch_embedding.shape[0] != layout.d_emb:
                raise ValueError(
                    f"model {model.model_id}: embedding width {model.arch_embedding.shape[0]} "
                    f"does not match layout width {layout.d_emb}"
                )
            parts.append(model.arch_embedding)

    if layout.include_onehot:
        onehot = np.zeros(layout.num_clusters)
        if model.cluster_id is None:
            warnings.append(f"model {model.model_id}: no cluster id, using zero one-hot")
        else:
            if not (0 <= model.cluster_id < layout.num_clusters):
                raise ValueError(
                    f"model {model.model_id}: cluster_id {model.cluster_id} outside [0, {layout.num_clusters})"
                )
            onehot[model.cluster_id] = 1.0
        parts.append(onehot)

    parts.append(np.array([math.log10(task.class_count), math.log10(task.sample_count)]))
    return MetaVector(values=np.concatenate(parts), layout_digest=layout.digest(), warnings=tuple(warnings))


def fit_meta(
    pairs: "list[tuple[MetaVector, float]]",
    ridge: float = RIDGE_FALLBACK,
    layout: "MetaLayout | None" = None,
) -> MetaModel:
    """Least squares from meta vectors to transfer scores.

    Features are standardized, constant dimensions dropped; when the
    normal matrix is rank-deficient the solve falls back to a small ridge
    penalty (intercept unpenalized). The solve order is fixed, so
    identical pairs give bit-identical weights.
    """
    if not pairs:
        raise ValueError("no training pairs")
    digest = pairs[0][0].layout_digest
    if any(mv.layout_digest != digest for mv, _ in pairs):
        raise ValueError("training pairs mix different meta-vector layouts")
    if layout is not None and layout.digest() != digest:
        raise ValueError("declared layout does not match the training pairs")

    X = np.vstack([mv.values for mv, _ in pairs])
    y = np.array([target for _, target in pairs], dtype=float)
    n, dim = X.shape

    mean = X.mean(axis=0)
    std = X.std(axis=0)
    dropped = tuple(int(i) for i in np.flatnonzero(std <= _CONSTANT_STD))
    keep = np.flatnonzero(std > _CONSTANT_STD)
    if n < keep.size + 1:
        raise ValueError(f"{n} pairs cannot determine {keep.size} weights plus an intercept")

    safe_std = np.where(std > _CONSTANT_STD, std, 1.0)
    design = np.column_stack([(X[:, keep] - mean[keep]) / safe_std[keep], np.ones(n)])
    gram = design.T @ design
    rhs = design.T @ y
    if np.linalg.matrix_rank(gram) < gram.shape[0]:
        penalty = ridge * np.eye(gram.shape[0])
        penalty[-1, -1] = 0.0
        solution = np.linalg.solve(gram + penalty, rhs)
    else:
        solution = np.linalg.solve(gram, rhs)

    weights = np.zeros(dim)
    weights[keep] = solution[:-1]
    intercept = float(solution[-1])
    residual = design @ solution - y
    rmse = float(np.sqrt(np.mean(residual * residual)))
    return MetaModel(
        weights=weights,
        intercept=intercept,
        feature_mean=mean,
        feature_std=safe_std,
        dropped=dropped,
        training_rmse=rmse,
        layout_digest=digest,
        layout=layout,
    )


def meta_score(model: MetaModel, mv: MetaVector) -> float:
    """Standardized dot product plus intercept."""
    if mv.layout_digest != model.layout_digest:
        raise ValueError("meta vector layout digest does not match the fitted model")
    if mv.values.shape != model.weights.shape:
        raise ValueError(
            f"meta vector length {mv.values.shape[0]} does not match model width {model.weights.shape[0]}"
        )
    standardized = (mv.values - model.feature_mean) / model.feature_std
    return float(standardized @ model.weights + model.intercept)


def meta_training_pairs(
    manifest: Manifest, matrix: PerformanceMatrix, layout: MetaLayout
) -> list[tuple[MetaVector, float]]:
    """One (meta vector, score) pair per performance-matrix cell."""
    pairs = []
    for j, tid in enumerate(matrix.task_ids):
        task = manifest.task(tid)
        for i, mid in enumerate(matrix.model_ids):
            mv = assemble_meta(manifest.model(mid), task, layout)
            pairs.append((mv, float(matrix.values[i, j])))
    return pairs


def attach_architecture_features(
    manifest: Manifest,
    embeddings: "dict[str, np.ndarray] | None" = None,
    clusters: "dict[str, int] | None" = None,
) -> Manifest:
    """Manifest copy with architecture embeddings / cluster ids filled in."""
    models = []
    for m in manifest.models:
        emb = embeddings.get(m.model_id) if embeddings else None
        cid = clusters.get(m.model_id) if clusters else None
        models.append(
            dataclasses.replace(
                m,
                arch_embedding=emb if emb is not None else m.arch_embedding,
                cluster_id=cid if cid is not None else m.cluster_id,
            )
        )
    return Manifest(models=tuple(models), tasks=manifest.tasks, root=manifest.root)


def save_meta_model(model: MetaModel, path: str | Path, config_digest: str | None = None) -> None:
    doc = {
        "weights": [format_float(w) for w in model.weights],
        "intercept": format_float(model.intercept),
        "feature_mean": [format_float(v) for v in model.feature_mean],
        "feature_std": [format_float(v) for v in model.feature_std],
        "dropped": list(model.dropped),
        "training_rmse": format_float(model.training_rmse),
        "layout_digest": model.layout_digest,
        "layout": None if model.layout is None else dataclasses.asdict(model.layout),
        "config_digest": config_digest,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_meta_model(path: str | Path) -> MetaModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    layout = None if doc.get("layout") is None else MetaLayout(**doc["layout"])
    return MetaModel(
        weights=np.array([float(w) for w in doc["weights"]]),
        intercept=float(doc["intercept"]),
        feature_mean=np.array([float(v) for v in doc["feature_mean"]]),
        feature_std=np.array([float(v) for v in doc["feature_std"]]),
        dropped=tuple(doc["dropped"]),
        training_rmse=float(doc["training_rmse"]),
        layout_digest=doc["layout_digest"],
        layout=layout,
    )


def meta_model_digest(path: str | Path) -> str | None:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return doc.get("config_digest")
