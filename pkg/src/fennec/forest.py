"""Multi-output regression forest built on CART trees.

Trees split on total squared-error reduction summed over output
dimensions, draw a bootstrap sample per tree, and consider a random
feature subset at every split. All randomness comes from per-tree
generators derived from one seed, so fits are reproducible. Trees
serialize to plain nested dicts for JSON storage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .seeding import derive_seed

__all__ = ["ForestConfig", "RegressionForest", "fit_forest"]


@dataclass(frozen=True)
class ForestConfig:
    num_trees: int = 100
    max_depth: int | None = 12
    min_leaf: int = 2
    bootstrap: bool = True
    max_features: "int | str | None" = "third"   # "third" = ceil(dim/3), None = all
    seed: int = 0

    def __post_init__(self):
        if self.num_trees < 1:
            raise ValueError("num_trees must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be None or >= 0")

    def features_per_split(self, dim: int) -> int:
        if self.max_features is None:
            return dim
        if self.max_features == "third":
            return min(dim, max(1, math.ceil(dim / 3)))
        return min(dim, max(1, int(self.max_features)))


def _leaf(y: np.ndarray) -> dict:
    return {"value": y.mean(axis=0).tolist()}


def _best_split(X: np.ndarray, y: np.ndarray, features: np.ndarray, min_leaf: int):
    """Split with the smallest child SSE over the candidate features.

    Returns (feature, threshold, child_sse) or None. Candidates are
    midpoints between consecutive distinct sorted values; ties keep the
    first candidate in (feature, threshold) order.
    """
    n = X.shape[0]
    best = None
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y[order]
        s1 = np.cumsum(ys, axis=0)
        s2 = np.cumsum(ys * ys, axis=0)
        total1 = s1[-1]
        total2 = s2[-1]
        # Split after position i (1-based count of left samples).
        counts = np.arange(1, n)
        left1 = s1[:-1]
        left2 = s2[:-1]
        sse_left = np.sum(left2 - left1 * left1 / counts[:, None], axis=1)
        right_counts = n - counts
        right1 = total1 - left1
        right2 = total2 - left2
        sse_right = np.sum(right2 - right1 * right1 / right_counts[:, None], axis=1)
        child_sse = sse_left + sse_right

        valid = (counts >= min_leaf) & (right_counts >= min_leaf) & (xs[:-1] < xs[1:])
        if not np.any(valid):
            continue
        idx = np.flatnonzero(valid)
        pos = idx[np.argmin(child_sse[idx])]
        score = float(child_sse[pos])
        if best is None or score < best[2] - 1e-15:
            threshold = float((xs[pos] + xs[pos + 1]) / 2.0)
            best = (int(f), threshold, score)
    return best


def _build_tree(X, y, rng, cfg: ForestConfig, mtry: int, depth: int) -> dict:
    n = X.shape[0]
    if n < 2 * cfg.min_leaf or (cfg.max_depth is not None and depth >= cfg.max_depth):
        return _leaf(y)
    if np.all(y == y[0]):
        return _leaf(y)
    features = np.sort(rng.choice(X.shape[1], size=mtry, replace=False))
    split = _best_split(X, y, features, cfg.min_leaf)
    if split is None:
        return _leaf(y)
    f, threshold, _ = split
    mask = X[:, f] <= threshold
    return {
        "feature": f,
        "threshold": threshold,
        "left": _build_tree(X[mask], y[mask], rng, cfg, mtry, depth + 1),
        "right": _build_tree(X[~mask], y[~mask], rng, cfg, mtry, depth + 1),
    }


def _predict_tree(node: dict, x: np.ndarray) -> np.ndarray:
    while "value" not in node:
        node = node["left"] if x[node["feature"]] <= node["threshold"] else node["right"]
    return np.asarray(node["value"])


class RegressionForest:
    """Fitted ensemble; immutable once built."""

    def __init__(self, trees: list[dict], config: ForestConfig, input_dim: int, output_dim: int,
                 training_r2: np.ndarray):
        self.trees = trees
        self.config = config
        self.input_dim = input_dim
        self.output_dim = output_dim
        self.training_r2 = np.asarray(training_r2, dtype=float)

    def predict_one(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.input_dim,):
            raise ValueError(f"expected input of dimension {self.input_dim}, got shape {x.shape}")
        acc = np.zeros(self.output_dim)
        for tree in self.trees:
            acc += _predict_tree(tree, x)
        return acc / len(self.trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.vstack([self.predict_one(row) for row in X])

    def to_dict(self) -> dict:
        return {
            "num_trees": self.config.num_trees,
            "max_depth": self.config.max_depth,
            "min_leaf": self.config.min_leaf,
            "bootstrap": self.config.bootstrap,
            "max_features": self.config.max_features,
            "seed": self.config.seed,
            "input_dim": self.input_dim,
            "output_dim": self.output_dim,
            "training_r2": self.training_r2.tolist(),
            "trees": self.trees,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RegressionForest":
        cfg = ForestConfig(
            num_trees=doc["num_trees"],
            max_depth=doc["max_depth"],
            min_leaf=doc["min_leaf"],
            bootstrap=doc["bootstrap"],
            max_features=doc["max_features"],
            seed=doc["seed"],
        )
        return cls(
            trees=doc["trees"],
            config=cfg,
            input_dim=int(doc["input_dim"]),
            output_dim=int(doc["output_dim"]),
            training_r2=np.asarray(doc["training_r2"], dtype=float),
        )


def fit_forest(X: np.ndarray, y: np.ndarray, cfg: ForestConfig) -> RegressionForest:
    """Fit the forest; y may be (n,) or (n, outputs)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if X.ndim != 2 or y.shape[0] != X.shape[0]:
        raise ValueError("X must be 2-D with one target row per sample")
    n, dim = X.shape
    mtry = cfg.features_per_split(dim)

    trees = []
    for t in range(cfg.num_trees):
        rng = np.random.Generator(np.random.PCG64(derive_seed(cfg.seed, f"tree:{t}")))
        idx = rng.integers(0, n, size=n) if cfg.bootstrap else np.arange(n)
        trees.append(_build_tree(X[idx], y[idx], rng, cfg, mtry, depth=0))

    forest = RegressionForest(trees, cfg, input_dim=dim, output_dim=y.shape[1],
                              training_r2=np.zeros(y.shape[1]))
    predictions = forest.predict(X)
    ss_res = np.sum((predictions - y) ** 2, axis=0)
    ss_tot = np.sum((y - y.mean(axis=0)) ** 2, axis=0)
    r2 = np.where(ss_tot > 1e-30, 1.0 - ss_res / np.where(ss_tot > 1e-30, ss_tot, 1.0),
                  np.where(ss_res < 1e-30, 1.0, 0.0))
    forest.training_r2 = r2
    return forest
