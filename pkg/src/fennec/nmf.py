"""Latent transfer space via non-negative matrix factorization.

The performance matrix is factorized into non-negative model and task
factor matrices by multiplicative updates extended with Frobenius
regularization (the regularizer adds an ``alpha * factor`` term to each
update denominator). Multiplicative updates keep the recorded objective
non-increasing and converge well inside the 500-iteration default cap on
matrices of this scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import PerformanceMatrix, TransferSpace

__all__ = ["NmfConfig", "factorize", "transfer_score"]

_EPS_DENOM = 1e-12
_INIT_FLOOR = 1e-6


@dataclass(frozen=True)
class NmfConfig:
    """Settings for the factorization.

    ``rel_tol`` is measured against the initial objective: updates stop
    once a sweep improves the objective by less than
    ``rel_tol * J_initial`` (or at ``max_iters``).
    """

    k: int = 8
    alpha_m: float = 0.01
    alpha_d: float = 0.01
    max_iters: int = 500
    rel_tol: float = 1e-6
    seed: int = 0
    init: str = "seeded-uniform"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.alpha_m < 0 or self.alpha_d < 0:
            raise ValueError("regularization weights must be non-negative")
        if self.init not in ("seeded-uniform", "nndsvd-like"):
            raise ValueError(f"unknown init {self.init!r}")


def _objective(p, w, h, alpha_m, alpha_d) -> float:
    resid = p - w @ h.T
    return float(np.sum(resid * resid) + alpha_m * np.sum(w * w) + alpha_d * np.sum(h * h))


def _init_factors(p: np.ndarray, k: int, init: str, seed: int):
    m, n = p.shape
    if init == "seeded-uniform":
        rng = np.random.Generator(np.random.PCG64(seed))
        w = rng.uniform(_INIT_FLOOR, 1.0, size=(m, k))
        h = rng.uniform(_INIT_FLOOR, 1.0, size=(n, k))
        return w, h
    # nndsvd-like: non-negative parts of the leading singular vectors,
    # zeros floored so multiplicative updates cannot lock on them.
    u, s, vt = np.linalg.svd(p, full_matrices=False)
    w = np.zeros((m, k))
    h = np.zeros((n, k))
    w[:, 0] = np.sqrt(s[0]) * np.abs(u[:, 0])
    h[:, 0] = np.sqrt(s[0]) * np.abs(vt[0, :])
    for j in range(1, min(k, s.size)):
        x, yv = u[:, j], vt[j, :]
        xp, xn = np.clip(x, 0, None), np.clip(-x, 0, None)
        yp, yn = np.clip(yv, 0, None), np.clip(-yv, 0, None)
        pos = np.linalg.norm(xp) * np.linalg.norm(yp)
        neg = np.linalg.norm(xn) * np.linalg.norm(yn)
        if pos >= neg:
            xs, ys, norm = xp, yp, pos
        else:
            xs, ys, norm = xn, yn, neg
        if norm > 0:
            scale = np.sqrt(s[j] * norm)
            w[:, j] = scale * xs / np.linalg.norm(xs)
            h[:, j] = scale * ys / np.linalg.norm(ys)
    floor = _INIT_FLOOR * max(p.max(), 1.0)
    return np.maximum(w, floor), np.maximum(h, floor)


def factorize(p: PerformanceMatrix, cfg: NmfConfig) -> TransferSpace:
    """Factorize a performance matrix into the latent transfer space.

    Runs multiplicative updates until the relative objective change drops
    below ``cfg.rel_tol`` or ``cfg.max_iters`` sweeps have run. An all-zero
    input yields zero factors and a warning flag rather than an error;
    all-zero rows or columns likewise converge to zero factor rows and are
    flagged.
    """
    values = p.values
    m, n = values.shape
    if cfg.k > min(m, n):
        raise ValueError(f"k={cfg.k} exceeds min(M, N)={min(m, n)}")

    warnings = []
    zero_rows = [p.model_ids[i] for i in np.flatnonzero(~values.any(axis=1))]
    zero_cols = [p.task_ids[j] for j in np.flatnonzero(~values.any(axis=0))]
    if zero_rows:
        warnings.append("all-zero model rows: " + ", ".join(zero_rows))
    if zero_cols:
        warnings.append("all-zero task columns: " + ", ".join(zero_cols))

    if not values.any():
        return TransferSpace(
            model_ids=p.model_ids,
            task_ids=p.task_ids,
            model_factors=np.zeros((m, cfg.k)),
            task_factors=np.zeros((n, cfg.k)),
            k=cfg.k,
            alpha_m=cfg.alpha_m,
            alpha_d=cfg.alpha_d,
            final_objective=0.0,
            iterations_run=0,
            seed=cfg.seed,
            warnings=("all-zero matrix",) + tuple(warnings),
        )

    w, h = _init_factors(values, cfg.k, cfg.init, cfg.seed)
    objective = _objective(values, w, h, cfg.alpha_m, cfg.alpha_d)
    history = [objective]
    initial = max(objective, np.finfo(float).tiny)
    iterations = 0
    for _ in range(cfg.max_iters):
        w = w * (values @ h) / (w @ (h.T @ h) + cfg.alpha_m * w + _EPS_DENOM)
        h = h * (values.T @ w) / (h @ (w.T @ w) + cfg.alpha_d * h + _EPS_DENOM)
        iterations += 1
        previous, objective = objective, _objective(values, w, h, cfg.alpha_m, cfg.alpha_d)
        history.append(objective)
        if previous - objective <= cfg.rel_tol * initial:
            break

    return TransferSpace(
        model_ids=p.model_ids,
        task_ids=p.task_ids,
        model_factors=w,
        task_factors=h,
        k=cfg.k,
        alpha_m=cfg.alpha_m,
        alpha_d=cfg.alpha_d,
        final_objective=objective,
        iterations_run=iterations,
        seed=cfg.seed,
        warnings=tuple(warnings),
        objective_history=tuple(history),
    )


def transfer_score(space: TransferSpace, model_index: int, task_vector: np.ndarray) -> float:
    """Inner product of one model factor row with a task vector (O(k))."""
    task_vector = np.asarray(task_vector, dtype=float)
    if task_vector.shape != (space.k,):
        raise ValueError(f"task vector must have length k={space.k}, got shape {task_vector.shape}")
    return float(space.model_factors[model_index] @ task_vector)
