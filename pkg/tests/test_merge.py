import json

import numpy as np
import pytest

from fennec.data import Manifest, ModelRecord, TaskRecord, TransferSpace, save_report
from fennec.forest import ForestConfig, fit_forest
from fennec.merge import (
    MergeConfig,
    fit_proxy_regressor,
    infer_task_vector,
    load_proxy_regressor,
    merge_scores,
    rank_models,
    save_proxy_regressor,
)
from fennec.meta import MetaLayout, MetaVector, fit_meta


def test_forest_constant_targets():
    rng = np.random.Generator(np.random.PCG64(0))
    X = rng.normal(size=(20, 4))
    y = np.full((20, 2), 3.5)
    forest = fit_forest(X, y, ForestConfig(num_trees=10, seed=0))
    for x in X:
        assert np.array_equal(forest.predict_one(x), [3.5, 3.5])
    assert np.all(forest.training_r2 == 1.0)


def test_single_full_tree_memorizes_training_set():
    rng = np.random.Generator(np.random.PCG64(1))
    X = rng.normal(size=(30, 3))
    y = rng.normal(size=(30, 2))
    cfg = ForestConfig(num_trees=1, max_depth=None, min_leaf=1, bootstrap=False, max_features=None, seed=0)
    forest = fit_forest(X, y, cfg)
    assert np.array_equal(forest.predict(X), y)
    assert np.all(forest.training_r2 == 1.0)


def test_forest_beats_nearest_neighbor_on_planted_map():
    # Sparse linear map: two relevant input dims per output. The forest must
    # find them; the distance-based baseline is diluted by the other dims.
    rng = np.random.Generator(np.random.PCG64(12))
    dim, out = 8, 3
    A = np.zeros((out, dim))
    for r in range(out):
        cols = rng.choice(dim, size=2, replace=False)
        A[r, cols] = rng.uniform(0.5, 1.5, size=2)
    mu = rng.uniform(1, 3, size=dim)
    g_train = mu + 0.5 * rng.normal(size=(100, dim))
    d_train = g_train @ A.T
    g_test = mu + 0.5 * rng.normal(size=(30, dim))
    d_test = g_test @ A.T

    reg = fit_proxy_regressor(list(zip(g_train, d_train)), ForestConfig(num_trees=100, seed=12))
    pred = np.vstack([infer_task_vector(reg, g) for g in g_test])
    rmse = np.sqrt(np.mean((pred - d_test) ** 2))
    assert rmse <= 0.25 * np.sqrt(np.mean(d_test ** 2))

    nn_pred = np.array([d_train[np.argmin(np.sum((g_train - g) ** 2, axis=1))] for g in g_test])
    nn_rmse = np.sqrt(np.mean((nn_pred - d_test) ** 2))
    assert rmse < nn_rmse


def test_proxy_regressor_validation():
    with pytest.raises(ValueError, match="at least 2"):
        fit_proxy_regressor([(np.zeros(3), np.zeros(2))])
    with pytest.raises(ValueError, match="inconsistent"):
        fit_proxy_regressor([(np.zeros(3), np.zeros(2)), (np.zeros(4), np.zeros(2))])


def test_infer_memorizing_forest_returns_training_target():
    rng = np.random.Generator(np.random.PCG64(2))
    g = rng.normal(size=(10, 4))
    d = rng.uniform(0.1, 1.0, size=(10, 3))
    cfg = ForestConfig(num_trees=1, max_depth=None, min_leaf=1, bootstrap=False, max_features=None, seed=0)
    reg = fit_proxy_regressor(list(zip(g, d)), cfg)
    for gj, dj in zip(g, d):
        assert np.allclose(infer_task_vector(reg, gj), dj, atol=1e-12)
    # identical queries, identical outputs
    assert np.array_equal(infer_task_vector(reg, g[3]), infer_task_vector(reg, g[3].copy()))


def test_infer_clamps_negative_predictions():
    rng = np.random.Generator(np.random.PCG64(3))
    g = rng.normal(size=(12, 3))
    d = -np.abs(rng.normal(size=(12, 2))) - 0.5   # all-negative targets
    reg = fit_proxy_regressor(list(zip(g, d)), ForestConfig(num_trees=5, seed=1))
    out = infer_task_vector(reg, g[0])
    assert np.all(out == 0.0)


def test_infer_dimension_mismatch():
    rng = np.random.Generator(np.random.PCG64(4))
    reg = fit_proxy_regressor([(rng.normal(size=3), np.ones(2)) for _ in range(4)],
                              ForestConfig(num_trees=2, seed=0))
    with pytest.raises(ValueError, match="dimension"):
        infer_task_vector(reg, np.zeros(5))


def _walk(tree, x):
    while "value" not in tree:
        tree = tree["left"] if x[tree["feature"]] <= tree["threshold"] else tree["right"]
    return np.asarray(tree["value"])


def test_prediction_matches_manual_tree_average():
    rng = np.random.Generator(np.random.PCG64(5))
    g = rng.normal(size=(25, 4))
    d = np.abs(rng.normal(size=(25, 2)))
    reg = fit_proxy_regressor(list(zip(g, d)), ForestConfig(num_trees=7, seed=9))
    x = rng.normal(size=4)
    manual = np.mean([_walk(t, x) for t in reg.forest.trees], axis=0)
    assert np.allclose(reg.forest.predict_one(x), manual, atol=1e-12)


def test_proxy_regressor_json_round_trip(tmp_path):
    rng = np.random.Generator(np.random.PCG64(6))
    g = rng.normal(size=(15, 3))
    d = np.abs(rng.normal(size=(15, 2)))
    reg = fit_proxy_regressor(list(zip(g, d)), ForestConfig(num_trees=10, seed=2))
    save_proxy_regressor(reg, tmp_path / "reg.json", config_digest="abc")
    loaded = load_proxy_regressor(tmp_path / "reg.json")
    for x in rng.normal(size=(10, 3)):
        assert np.array_equal(infer_task_vector(reg, x), infer_task_vector(loaded, x))
    assert json.loads((tmp_path / "reg.json").read_text())["config_digest"] == "abc"


def test_merge_arithmetic():
    cfg = MergeConfig(alpha=0.5, normalize="none")
    assert merge_scores(np.array([0.2]), np.array([0.6]), cfg)[0] == pytest.approx(0.4, abs=1e-12)
    assert merge_scores(np.array([0.2]), np.array([0.6]), MergeConfig(alpha=0.0, normalize="none"))[0] == 0.2
    assert merge_scores(np.array([0.2]), np.array([0.6]), MergeConfig(alpha=1.0, normalize="none"))[0] == 0.6


def test_merge_config_validation():
    with pytest.raises(ValueError, match="alpha"):
        MergeConfig(alpha=1.5)
    with pytest.raises(ValueError, match="normalize"):
        MergeConfig(normalize="minmax")


def test_merge_monotonicity_without_normalization():
    rng = np.random.Generator(np.random.PCG64(7))
    trans = rng.normal(size=10)
    meta = rng.normal(size=10)
    order = np.argsort(trans)
    trans_sorted, meta_sorted = trans[order], np.sort(meta)  # A >= B on both components
    for alpha in np.linspace(0, 1, 11):
        merged = merge_scores(trans_sorted, meta_sorted, MergeConfig(alpha=float(alpha), normalize="none"))
        assert np.all(np.diff(merged) >= -1e-12)


def test_znorm_preserves_component_order():
    rng = np.random.Generator(np.random.PCG64(8))
    trans = rng.normal(size=12)
    merged = merge_scores(trans, np.zeros(12), MergeConfig(alpha=0.0, normalize="zscore"))
    assert np.array_equal(np.argsort(merged), np.argsort(trans))


def test_merged_score_shift_leaves_ordering_unchanged():
    rng = np.random.Generator(np.random.PCG64(9))
    merged = rng.normal(size=15)
    assert np.array_equal(np.argsort(-(merged + 42.0)), np.argsort(-merged))


def _ranking_fixture(tmp_path, n_models=6, k=3, seed=0):
    rng = np.random.Generator(np.random.PCG64(seed))
    model_ids = tuple(f"m{i}" for i in range(n_models))
    task_ids = ("h0", "h1", "h2", "h3")
    space = TransferSpace(
        model_ids=model_ids,
        task_ids=task_ids,
        model_factors=rng.uniform(0.1, 1, size=(n_models, k)),
        task_factors=rng.uniform(0.1, 1, size=(4, k)),
        k=k, alpha_m=0.01, alpha_d=0.01, final_objective=1.0, iterations_run=10,
    )
    g_dim = 5
    proxies = rng.normal(size=(4, g_dim))
    reg = fit_proxy_regressor(
        [(proxies[j], space.task_factors[j]) for j in range(4)],
        ForestConfig(num_trees=20, seed=seed),
    )
    models = tuple(
        ModelRecord(model_id=m, param_count=int(10 ** (5 + i * 0.2)), layer_count=10 + i)
        for i, m in enumerate(model_ids)
    )
    layout = MetaLayout(include_embedding=False, include_onehot=False)
    tasks = tuple(
        TaskRecord(task_id=t, class_count=3 + j, sample_count=100 * (j + 1),
                   proxy_embedding=proxies[j])
        for j, t in enumerate(task_ids)
    )
    manifest = Manifest(models=models, tasks=tasks, root=tmp_path)
    pairs = []
    for j, t in enumerate(tasks):
        for i, m in enumerate(models):
            from fennec.meta import assemble_meta

            pairs.append((assemble_meta(m, t, layout), float(space.model_factors[i] @ space.task_factors[j])))
    meta_model = fit_meta(pairs, layout=layout)
    target = TaskRecord(task_id="target", class_count=4, sample_count=250,
                        proxy_embedding=rng.normal(size=g_dim))
    return space, reg, meta_model, manifest, target, layout


def test_rank_alpha_zero_matches_trans_ordering(tmp_path):
    space, reg, meta_model, manifest, target, layout = _ranking_fixture(tmp_path)
    report = rank_models(space, reg, meta_model, manifest, target,
                         MergeConfig(alpha=0.0, normalize="none"), layout)
    trans = {e.model_id: e.trans_score for e in report.entries}
    expected = sorted(trans, key=lambda m: (-trans[m], m))
    assert report.ordering() == expected
    for e in report.entries:
        assert e.merged_score == e.trans_score


def test_rank_alpha_one_matches_meta_ordering(tmp_path):
    space, reg, meta_model, manifest, target, layout = _ranking_fixture(tmp_path)
    report = rank_models(space, reg, meta_model, manifest, target,
                         MergeConfig(alpha=1.0, normalize="none"), layout)
    meta = {e.model_id: e.meta_score for e in report.entries}
    expected = sorted(meta, key=lambda m: (-meta[m], m))
    assert report.ordering() == expected
    for e in report.entries:
        assert e.merged_score == e.meta_score


def test_rank_requires_proxy_embedding(tmp_path):
    space, reg, meta_model, manifest, _, layout = _ranking_fixture(tmp_path)
    bare = TaskRecord(task_id="bare", class_count=2, sample_count=10)
    with pytest.raises(ValueError, match="proxy embedding"):
        rank_models(space, reg, meta_model, manifest, bare, MergeConfig(), layout)


def test_rank_never_reads_feature_files(tmp_path):
    # The fixture manifest declares no feature files at all, and the target
    # task record carries only statistics and a proxy embedding. Ranking
    # succeeding here proves the online path needs no forward features.
    space, reg, meta_model, manifest, target, layout = _ranking_fixture(tmp_path)
    for t in manifest.tasks:
        assert not t.feature_files
    report = rank_models(space, reg, meta_model, manifest, target, MergeConfig(), layout)
    assert len(report.entries) == len(space.model_ids)


def test_rank_deterministic_bytes(tmp_path):
    space, reg, meta_model, manifest, target, layout = _ranking_fixture(tmp_path)
    r1 = rank_models(space, reg, meta_model, manifest, target, MergeConfig(), layout)
    r2 = rank_models(space, reg, meta_model, manifest, target, MergeConfig(), layout)
    save_report(r1, tmp_path / "a.json")
    save_report(r2, tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_rank_tie_break_is_lexicographic(tmp_path):
    space, reg, meta_model, manifest, target, layout = _ranking_fixture(tmp_path)
    # force total ties by zeroing both components
    object.__setattr__(space, "model_factors", np.zeros_like(space.model_factors))
    zero_meta = fit_meta(
        [(MetaVector(values=np.zeros(4), layout_digest=layout.digest()), 0.0) for _ in range(6)]
    )
    report = rank_models(space, reg, zero_meta, manifest, target,
                         MergeConfig(alpha=0.5, normalize="none"), layout)
    assert report.ordering() == sorted(report.ordering())
