"""Fisher-discriminant transfer scoring.

A (model, task) pair is scored without any fine-tuning: fit a Fisher
discriminant on the model's forward features for the task, classify the
same features with the induced Gaussian-Bayes rule (identity covariance),
and sum the softmax probability mass assigned to the true classes. The
resulting score lies in (0, n] and fills one cell of the historical
performance matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .data import FeatureSet, Manifest, PerformanceMatrix, load_feature_set
from .seeding import derive_seed

__all__ = [
    "FdaModel",
    "fit_fda",
    "fda_posterior",
    "fda_score",
    "build_performance_matrix",
    "scatter_matrices",
    "stratified_probe_indices",
]

DEFAULT_GAMMA = 1e-4
DEFAULT_PROBE_SIZE = 500
_RANK_CUTOFF = 1e-10


@dataclass(frozen=True)
class FdaModel:
    """Fitted discriminant: projection, projected class means, priors.

    ``projection`` has one column per retained generalized eigenvector of
    the between/within scatter pair, sorted by descending eigenvalue, with
    the sign of each column fixed so its largest-magnitude entry is
    positive.
    """

    projection: np.ndarray        # (D, D')
    class_means: np.ndarray       # (C, D')
    priors: np.ndarray            # (C,)
    eigenvalues: np.ndarray       # (D',)
    classes: np.ndarray           # (C,) original label values

    @property
    def input_dim(self) -> int:
        return self.projection.shape[0]

    @property
    def projected_dim(self) -> int:
        return self.projection.shape[1]


def scatter_matrices(X: np.ndarray, y: np.ndarray):
    """Sample-normalized within-class and between-class scatter.

    Both matrices carry a 1/n factor, so eigenvectors normalized against
    the within-class scatter project the data to unit within-class
    variance: exactly the scale the identity-covariance Bayes rule
    assumes.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    n, d = X.shape
    mean_all = X.mean(axis=0)
    s_w = np.zeros((d, d))
    s_b = np.zeros((d, d))
    for c in np.unique(y):
        xc = X[y == c]
        mu_c = xc.mean(axis=0)
        centered = xc - mu_c
        s_w += centered.T @ centered
        diff = (mu_c - mean_all)[:, None]
        s_b += xc.shape[0] * (diff @ diff.T)
    return s_w / n, s_b / n


def fit_fda(features: FeatureSet, gamma: float = DEFAULT_GAMMA, class_count: int | None = None) -> FdaModel:
    """Fit the Fisher discriminant for one feature set.

    Solves the generalized eigenproblem of the between-class scatter
    against the shrinkage-regularized within-class scatter by Cholesky
    reduction to an ordinary symmetric eigenproblem. Retains at most C-1
    directions, dropping eigenvalues below 1e-10 of the largest.

    Parameters
    ----------
    features : FeatureSet
        Forward features and labels; needs at least two classes and
        strictly more samples than classes.
    gamma : float
        Within-scatter shrinkage: S_W + gamma * trace(S_W)/D * I.
    class_count : int, optional
        Declared number of classes. When given, every class id in
        [0, class_count) must actually occur.
    """
    X = features.features
    y = features.labels
    n, d = X.shape
    classes = np.unique(y)
    if class_count is not None:
        missing = sorted(set(range(class_count)) - set(classes.tolist()))
        if missing:
            raise ValueError(f"class {missing[0]} has 0 samples")
    if classes.size < 2:
        raise ValueError("need at least 2 classes to fit a discriminant")
    if n <= classes.size:
        raise ValueError(f"need more samples ({n}) than classes ({classes.size})")

    s_w, s_b = scatter_matrices(X, y)
    s_w_reg = s_w + gamma * (np.trace(s_w) / d) * np.eye(d)
    try:
        chol = np.linalg.cholesky(s_w_reg)
    except np.linalg.LinAlgError:
        raise ValueError("regularized within-class scatter is singular after shrinkage") from None

    # L^-1 S_B L^-T is symmetric; its eigenpairs map back via u = L^-T v.
    half = solve_triangular(chol, s_b, lower=True)
    reduced = solve_triangular(chol, half.T, lower=True)
    reduced = (reduced + reduced.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(reduced)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]

    lam_max = eigvals[0] if eigvals.size else 0.0
    keep = min(classes.size - 1, int(np.sum(eigvals > _RANK_CUTOFF * max(lam_max, 0.0))))
    eigvals = eigvals[:keep]
    u = solve_triangular(chol.T, eigvecs[:, :keep], lower=False)

    # Deterministic sign: largest-magnitude entry of each column positive.
    for j in range(u.shape[1]):
        if u[np.argmax(np.abs(u[:, j])), j] < 0:
            u[:, j] = -u[:, j]

    projected = X @ u
    class_means = np.vstack([projected[y == c].mean(axis=0) for c in classes]) if keep else np.zeros((classes.size, 0))
    priors = np.array([(y == c).sum() / n for c in classes])
    return FdaModel(
        projection=u,
        class_means=class_means,
        priors=priors,
        eigenvalues=eigvals,
        classes=classes,
    )


def _class_scores(model: FdaModel, projected: np.ndarray) -> np.ndarray:
    """Unnormalized log score of each class for already-projected rows."""
    mu = model.class_means
    return projected @ mu.T - 0.5 * np.sum(mu * mu, axis=1) + np.log(model.priors)


def fda_posterior(model: FdaModel, x: np.ndarray) -> np.ndarray:
    """Per-class unnormalized log scores for one raw feature vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.input_dim,):
        raise ValueError(f"expected a vector of dimension {model.input_dim}, got shape {x.shape}")
    return _class_scores(model, (x @ model.projection)[None, :])[0]


def _softmax_rows(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def fda_score(model: FdaModel, features: FeatureSet) -> float:
    """Sum over samples of the softmax probability of the true class."""
    label_to_col = {int(c): i for i, c in enumerate(model.classes)}
    try:
        cols = np.array([label_to_col[int(l)] for l in features.labels])
    except KeyError as exc:
        raise ValueError(f"label {exc.args[0]} was not present when the discriminant was fitted") from None
    scores = _class_scores(model, features.features @ model.projection)
    probs = _softmax_rows(scores)
    return float(probs[np.arange(len(cols)), cols].sum())


def stratified_probe_indices(labels: np.ndarray, probe_size: int, seed: int) -> np.ndarray:
    """Seeded stratified subsample: class quotas by largest remainder, at least one each.

    Returns sorted row indices; the identity permutation when the set is
    already within the probe size.
    """
    labels = np.asarray(labels)
    n = labels.shape[0]
    if n <= probe_size:
        return np.arange(n)
    rng = np.random.Generator(np.random.PCG64(seed))
    classes, counts = np.unique(labels, return_counts=True)
    exact = probe_size * counts / n
    quotas = np.maximum(1, np.floor(exact).astype(int))
    quotas = np.minimum(quotas, counts)
    # Distribute the remainder by largest fractional part, class order as tie-break.
    while quotas.sum() < probe_size:
        frac = np.where(quotas < counts, exact - quotas, -np.inf)
        best = int(np.argmax(frac))
        if not np.isfinite(frac[best]):
            break
        quotas[best] += 1
    while quotas.sum() > probe_size:
        frac = np.where(quotas > 1, exact - quotas, np.inf)
        best = int(np.argmin(frac))
        if not np.isfinite(frac[best]):
            break
        quotas[best] -= 1
    picked = []
    for c, q in zip(classes, quotas):
        idx = np.flatnonzero(labels == c)
        picked.append(rng.choice(idx, size=q, replace=False))
    return np.sort(np.concatenate(picked))


def _probe_subset(fs: FeatureSet, probe_size: int, seed: int) -> FeatureSet:
    idx = stratified_probe_indices(fs.labels, probe_size, seed)
    if idx.shape[0] == fs.n:
        return fs
    return FeatureSet(
        task_id=fs.task_id,
        model_id=fs.model_id,
        features=fs.features[idx],
        labels=fs.labels[idx],
    )


def build_performance_matrix(
    manifest: Manifest,
    task_ids: "list[str] | None" = None,
    model_ids: "list[str] | None" = None,
    probe_size: int = DEFAULT_PROBE_SIZE,
    seed: int = 0,
    gamma: float = DEFAULT_GAMMA,
) -> PerformanceMatrix:
    """Score every requested (model, task) pair into a performance matrix.

    Each cell fits the discriminant on the pair's (probe-subsampled)
    feature set and scores the same set. The probe subsample is stratified
    and seeded per task, so all models of a task see the same rows. If any
    feature file is missing the build aborts and reports every missing
    pair; partial matrices are never returned.
    """
    model_ids = list(model_ids if model_ids is not None else manifest.model_ids())
    task_ids = list(task_ids if task_ids is not None else manifest.task_ids())

    missing = [
        (m, t)
        for t in task_ids
        for m in model_ids
        if manifest.feature_path(t, m) is None or not manifest.feature_path(t, m).exists()
    ]
    if missing:
        listed = ", ".join(f"({m}, {t})" for m, t in missing)
        raise ValueError(f"missing feature files for pairs: {listed}")

    values = np.zeros((len(model_ids), len(task_ids)))
    for j, tid in enumerate(task_ids):
        task = manifest.task(tid)
        probe_seed = derive_seed(seed, f"probe:{tid}")
        for i, mid in enumerate(model_ids):
            fs = load_feature_set(
                manifest.feature_path(tid, mid), task_id=tid, model_id=mid, class_count=task.class_count
            )
            probe = _probe_subset(fs, probe_size, probe_seed)
            model = fit_fda(probe, gamma=gamma, class_count=task.class_count)
            values[i, j] = fda_score(model, probe)
    return PerformanceMatrix(model_ids=tuple(model_ids), task_ids=tuple(task_ids), values=values)
