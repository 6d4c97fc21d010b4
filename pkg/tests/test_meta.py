import numpy as np
import pytest

from fennec.data import Manifest, ModelRecord, TaskRecord
from fennec.meta import (
    MetaLayout,
    MetaModel,
    MetaVector,
    assemble_meta,
    fit_meta,
    layout_from_manifest,
    load_meta_model,
    meta_score,
    meta_training_pairs,
    save_meta_model,
)


def _vector(values, digest="layout-x"):
    return MetaVector(values=np.asarray(values, dtype=float), layout_digest=digest)


def test_assemble_log_prefix_and_suffix():
    layout = MetaLayout(d_emb=2, num_clusters=3)
    model = ModelRecord(model_id="m", param_count=10**7, layer_count=100,
                        arch_embedding=np.array([0.5, -0.5]), cluster_id=2)
    task = TaskRecord(task_id="t", class_count=10, sample_count=10**4)
    mv = assemble_meta(model, task, layout)
    assert mv.values[0] == pytest.approx(7.0)
    assert mv.values[1] == pytest.approx(2.0)
    assert np.array_equal(mv.values[2:4], [0.5, -0.5])
    assert np.array_equal(mv.values[4:7], [0, 0, 1])
    assert mv.values[-2] == pytest.approx(1.0)
    assert mv.values[-1] == pytest.approx(4.0)
    assert mv.warnings == ()


def test_assemble_cluster_changes_only_onehot():
    layout = MetaLayout(d_emb=2, num_clusters=3)
    task = TaskRecord(task_id="t", class_count=4, sample_count=100)
    emb = np.array([1.0, 2.0])
    a = assemble_meta(ModelRecord(model_id="a", param_count=10, layer_count=5,
                                  arch_embedding=emb, cluster_id=0), task, layout)
    b = assemble_meta(ModelRecord(model_id="b", param_count=10, layer_count=5,
                                  arch_embedding=emb, cluster_id=2), task, layout)
    diff = np.flatnonzero(a.values != b.values)
    assert set(diff) <= {4, 5, 6}


def test_assemble_missing_embedding_warns_with_zeros():
    layout = MetaLayout(d_emb=3, num_clusters=0, include_onehot=False)
    mv = assemble_meta(ModelRecord(model_id="m", param_count=10, layer_count=2),
                       TaskRecord(task_id="t", class_count=2, sample_count=10), layout)
    assert np.array_equal(mv.values[2:5], np.zeros(3))
    assert any("no architecture embedding" in w for w in mv.warnings)


def test_assemble_rejects_nonpositive_counts():
    layout = MetaLayout(include_embedding=False, include_onehot=False)
    with pytest.raises(ValueError, match="positive"):
        assemble_meta(ModelRecord(model_id="m", param_count=0, layer_count=2),
                      TaskRecord(task_id="t", class_count=2, sample_count=10), layout)


def test_layout_from_manifest(tmp_path):
    manifest = Manifest(
        models=(
            ModelRecord(model_id="a", param_count=1, layer_count=1,
                        arch_embedding=np.zeros(4), cluster_id=1),
            ModelRecord(model_id="b", param_count=1, layer_count=1,
                        arch_embedding=np.ones(4), cluster_id=3),
        ),
        tasks=(),
        root=tmp_path,
    )
    layout = layout_from_manifest(manifest)
    assert layout.d_emb == 4 and layout.num_clusters == 4
    assert layout.width == 2 + 4 + 4 + 2
    bare = layout_from_manifest(manifest, include_embedding=False, include_onehot=False)
    assert bare.width == 4
    assert bare.digest() != layout.digest()


def test_exact_linear_targets_fit_exactly():
    rng = np.random.Generator(np.random.PCG64(0))
    X = rng.normal(size=(40, 6))
    w_true = rng.normal(size=6)
    y = X @ w_true + 2.5
    pairs = [(_vector(x), float(t)) for x, t in zip(X, y)]
    model = fit_meta(pairs)
    assert model.training_rmse <= 1e-8
    for x, t in zip(X, y):
        assert meta_score(model, _vector(x)) == pytest.approx(t, abs=1e-8)


def test_constant_targets_fit_as_intercept():
    rng = np.random.Generator(np.random.PCG64(1))
    X = rng.normal(size=(30, 4))
    pairs = [(_vector(x), 3.25) for x in X]
    model = fit_meta(pairs)
    assert model.intercept == pytest.approx(3.25, abs=1e-10)
    assert np.linalg.norm(model.weights) <= 1e-8


def test_planted_weights_within_confidence_of_oracle():
    rng = np.random.Generator(np.random.PCG64(7))
    n, dim, sigma = 200, 10, 0.1
    X = rng.normal(size=(n, dim))
    w_true = rng.normal(size=dim)
    y = X @ w_true + 1.0 + rng.normal(scale=sigma, size=n)
    pairs = [(_vector(x), float(t)) for x, t in zip(X, y)]
    model = fit_meta(pairs)

    # independent normal-equations oracle on the same standardization
    mean, std = X.mean(axis=0), X.std(axis=0)
    Xs = (X - mean) / std
    design = np.column_stack([Xs, np.ones(n)])
    oracle = np.linalg.solve(design.T @ design, design.T @ y)
    assert np.allclose(model.weights, oracle[:-1], atol=1e-8)
    assert model.intercept == pytest.approx(oracle[-1], abs=1e-8)

    # scoring matches the oracle's own evaluation on fresh vectors
    fresh = rng.normal(size=(5, dim))
    for x in fresh:
        oracle_pred = float(np.concatenate([(x - mean) / std, [1.0]]) @ oracle)
        assert meta_score(model, _vector(x)) == pytest.approx(oracle_pred, abs=1e-10)

    # both agree with the planted weights (expressed in standardized space)
    cov_inv = np.linalg.inv(design.T @ design)
    stderr = sigma * np.sqrt(np.diag(cov_inv))[:-1]
    assert np.all(np.abs(model.weights - w_true * std) <= 3 * stderr + 1e-12)


def test_prediction_at_centroid_is_target_mean():
    rng = np.random.Generator(np.random.PCG64(3))
    X = rng.normal(size=(25, 5))
    y = rng.normal(size=25)
    model = fit_meta([(_vector(x), float(t)) for x, t in zip(X, y)])
    assert meta_score(model, _vector(X.mean(axis=0))) == pytest.approx(float(y.mean()), abs=1e-10)


def test_zero_weights_returns_intercept():
    model = MetaModel(weights=np.zeros(3), intercept=4.25, feature_mean=np.zeros(3),
                      feature_std=np.ones(3), dropped=(), training_rmse=0.0,
                      layout_digest="layout-x")
    rng = np.random.Generator(np.random.PCG64(4))
    for x in rng.normal(size=(10, 3)):
        assert meta_score(model, _vector(x)) == 4.25


def test_layout_digest_mismatch_errors():
    rng = np.random.Generator(np.random.PCG64(5))
    X = rng.normal(size=(10, 3))
    model = fit_meta([(_vector(x, "layout-a"), 0.5 * i) for i, x in enumerate(X)])
    with pytest.raises(ValueError, match="digest"):
        meta_score(model, _vector(X[0], "layout-b"))
    with pytest.raises(ValueError, match="mix"):
        fit_meta([(_vector(X[0], "layout-a"), 1.0), (_vector(X[1], "layout-b"), 2.0)])


def test_constant_dimension_dropped_and_prediction_invariant():
    rng = np.random.Generator(np.random.PCG64(6))
    X = rng.normal(size=(30, 4))
    w = np.array([1.0, -2.0, 0.5, 3.0])
    y = X @ w + 0.25
    with_const = np.insert(X, 2, 7.5, axis=1)

    plain = fit_meta([(_vector(x, "p"), float(t)) for x, t in zip(X, y)])
    padded = fit_meta([(_vector(x, "q"), float(t)) for x, t in zip(with_const, y)])
    assert padded.dropped == (2,)
    assert padded.weights[2] == 0.0
    for xp, x in zip(with_const, X):
        assert meta_score(padded, _vector(xp, "q")) == pytest.approx(
            meta_score(plain, _vector(x, "p")), abs=1e-10
        )


def test_fit_determinism():
    rng = np.random.Generator(np.random.PCG64(8))
    X = rng.normal(size=(20, 4))
    y = rng.normal(size=20)
    pairs = [(_vector(x), float(t)) for x, t in zip(X, y)]
    a, b = fit_meta(pairs), fit_meta(pairs)
    assert a.weights.tobytes() == b.weights.tobytes()
    assert a.intercept == b.intercept


def test_too_few_pairs_error():
    rng = np.random.Generator(np.random.PCG64(9))
    X = rng.normal(size=(4, 6))
    with pytest.raises(ValueError, match="cannot determine"):
        fit_meta([(_vector(x), 1.0 * i) for i, x in enumerate(X)])


def test_ridge_fallback_on_collinear_features():
    rng = np.random.Generator(np.random.PCG64(10))
    base = rng.normal(size=(30, 2))
    X = np.column_stack([base, base[:, 0] + base[:, 1]])  # exactly collinear
    y = base @ np.array([1.0, 2.0]) + 0.5
    model = fit_meta([(_vector(x), float(t)) for x, t in zip(X, y)])
    assert np.all(np.isfinite(model.weights))
    assert model.training_rmse <= 1e-6


def test_meta_model_save_load_round_trip(tmp_path):
    layout = MetaLayout(d_emb=2, num_clusters=2)
    rng = np.random.Generator(np.random.PCG64(11))
    X = rng.normal(size=(20, layout.width))
    pairs = [(MetaVector(values=x, layout_digest=layout.digest()), float(i)) for i, x in enumerate(X)]
    model = fit_meta(pairs, layout=layout)
    save_meta_model(model, tmp_path / "meta.json")
    loaded = load_meta_model(tmp_path / "meta.json")
    assert np.array_equal(loaded.weights, model.weights)
    assert loaded.intercept == model.intercept
    assert loaded.layout == layout
    for x in X[:5]:
        mv = MetaVector(values=x, layout_digest=layout.digest())
        assert meta_score(loaded, mv) == meta_score(model, mv)


def test_meta_training_pairs_alignment(tmp_path):
    from fennec.data import PerformanceMatrix

    manifest = Manifest(
        models=(
            ModelRecord(model_id="a", param_count=100, layer_count=4),
            ModelRecord(model_id="b", param_count=200, layer_count=8),
        ),
        tasks=(
            TaskRecord(task_id="t1", class_count=2, sample_count=50),
            TaskRecord(task_id="t2", class_count=4, sample_count=70),
        ),
        root=tmp_path,
    )
    matrix = PerformanceMatrix(model_ids=("a", "b"), task_ids=("t1", "t2"),
                               values=np.array([[1.0, 2.0], [3.0, 4.0]]))
    layout = layout_from_manifest(manifest)
    pairs = meta_training_pairs(manifest, matrix, layout)
    assert len(pairs) == 4
    assert [p[1] for p in pairs] == [1.0, 3.0, 2.0, 4.0]
