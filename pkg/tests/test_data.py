import numpy as np
import pytest

from fennec.data import (
    FeatureSet,
    Manifest,
    ModelRecord,
    PerformanceMatrix,
    RankingEntry,
    RankingReport,
    TaskRecord,
    TransferSpace,
    format_float,
    load_feature_set,
    load_manifest,
    load_matrix,
    load_report,
    load_transfer_space,
    load_vector,
    save_feature_set,
    save_manifest,
    save_matrix,
    save_report,
    save_transfer_space,
    save_vector,
)


def test_feature_set_smallest_valid(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("label,f0,f1\n0,1.5,2.0\n1,0.25,-1.0\n0,3.0,4.0\n")
    fs = load_feature_set(path, class_count=2)
    assert fs.n == 3 and fs.dim == 2
    assert fs.labels.tolist() == [0, 1, 0]


def test_feature_set_label_out_of_range(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("label,f0\n0,1.0\n5,2.0\n")
    with pytest.raises(ValueError, match="label out of range at row 1"):
        load_feature_set(path, class_count=3)


def test_feature_set_dimension_mismatch(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("label,f0,f1\n0,1.0,2.0\n1,3.0\n")
    with pytest.raises(ValueError, match="dimension mismatch at row 1"):
        load_feature_set(path)


def test_feature_set_non_finite(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("label,f0\n0,1.0\n1,nan\n")
    with pytest.raises(ValueError, match="non-finite value at row 1"):
        load_feature_set(path)


def test_feature_set_parse_failure_and_header(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("label,f0\n0,abc\n")
    with pytest.raises(ValueError, match="parse failure at row 0"):
        load_feature_set(path)
    path.write_text("f0,f1\n1.0,2.0\n")
    with pytest.raises(ValueError, match="malformed header"):
        load_feature_set(path)


def test_feature_set_round_trip(tmp_path):
    rng = np.random.Generator(np.random.PCG64(0))
    fs = FeatureSet(task_id="t", model_id="m",
                    features=rng.normal(size=(5, 3)), labels=np.array([0, 1, 2, 0, 1]))
    path = tmp_path / "f.csv"
    save_feature_set(fs, path)
    loaded = load_feature_set(path, task_id="t", model_id="m")
    assert np.array_equal(loaded.features, fs.features)
    assert np.array_equal(loaded.labels, fs.labels)
    # second save is byte-identical
    save_feature_set(loaded, tmp_path / "g.csv")
    assert (tmp_path / "g.csv").read_bytes() == path.read_bytes()


def test_matrix_round_trip(tmp_path):
    pm = PerformanceMatrix(model_ids=("m1", "m2"), task_ids=("ta", "tb"),
                           values=np.array([[1.0, 2.0], [3.0, 4.0]]))
    path = tmp_path / "p.csv"
    save_matrix(pm, path)
    loaded = load_matrix(path)
    assert loaded.model_ids == pm.model_ids
    assert loaded.task_ids == pm.task_ids
    assert np.array_equal(loaded.values, pm.values)
    save_matrix(loaded, tmp_path / "q.csv")
    assert (tmp_path / "q.csv").read_bytes() == path.read_bytes()


def test_matrix_rejects_negative_entry():
    with pytest.raises(ValueError, match="non-negative"):
        PerformanceMatrix(model_ids=("m",), task_ids=("t",), values=np.array([[-0.5]]))


def test_matrix_shape_mismatch_on_load(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text(",ta,tb\nm1,1.0,2.0,3.0\n")
    with pytest.raises(ValueError, match="expected 2"):
        load_matrix(path)


def test_matrix_malformed_header(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("model,ta\nm1,1.0\n")
    with pytest.raises(ValueError, match="first cell must be empty"):
        load_matrix(path)


def test_float_rendering_is_exact():
    rng = np.random.Generator(np.random.PCG64(42))
    values = np.concatenate([rng.normal(size=50) * 10.0 ** rng.integers(-12, 12, size=50),
                             np.array([0.0, 1.0, 1e-300, 1e300])])
    for v in values:
        assert float(format_float(v)) == v


def test_vector_round_trip_with_comments(tmp_path):
    vec = np.array([1.5, -2.25, 3e-7])
    path = tmp_path / "v.csv"
    save_vector(vec, path, comments=("produced by a test",))
    assert np.array_equal(load_vector(path), vec)
    with pytest.raises(ValueError, match="single-line"):
        (tmp_path / "bad.csv").write_text("1,2\n3,4\n")
        load_vector(tmp_path / "bad.csv")


def _manifest(tmp_path):
    return Manifest(
        models=(
            ModelRecord(model_id="m1", param_count=1000, layer_count=10),
            ModelRecord(model_id="m2", param_count=2000, layer_count=20,
                        arch_embedding=np.array([0.1, 0.2]), cluster_id=1),
        ),
        tasks=(
            TaskRecord(task_id="t1", class_count=3, sample_count=30,
                       feature_files={"m1": "features/t1/m1.csv"},
                       ground_truth_accuracies={"m1": 0.5, "m2": 0.75}),
            TaskRecord(task_id="t2", class_count=2, sample_count=20,
                       proxy_embedding=np.array([1.0, 0.0, 0.0])),
        ),
        root=tmp_path,
    )


def test_manifest_round_trip(tmp_path):
    manifest = _manifest(tmp_path)
    save_manifest(manifest, tmp_path / "manifest.json")
    loaded = load_manifest(tmp_path / "manifest.json")
    assert loaded.model_ids() == ["m1", "m2"]
    assert loaded.task_ids() == ["t1", "t2"]
    assert loaded.model("m2").cluster_id == 1
    assert np.array_equal(loaded.model("m2").arch_embedding, [0.1, 0.2])
    assert np.array_equal(loaded.task("t2").proxy_embedding, [1.0, 0.0, 0.0])
    assert loaded.task("t1").ground_truth_accuracies == {"m1": 0.5, "m2": 0.75}


def test_manifest_rejects_dangling_reference(tmp_path):
    with pytest.raises(ValueError, match="unknown model"):
        Manifest(
            models=(ModelRecord(model_id="m1", param_count=1, layer_count=1),),
            tasks=(TaskRecord(task_id="t", class_count=2, sample_count=2,
                              feature_files={"ghost": "x.csv"}),),
            root=tmp_path,
        )


def test_manifest_rejects_duplicates(tmp_path):
    m = ModelRecord(model_id="m", param_count=1, layer_count=1)
    with pytest.raises(ValueError, match="duplicate model_id"):
        Manifest(models=(m, m), tasks=(), root=tmp_path)


def test_manifest_missing_proxy_file(tmp_path):
    (tmp_path / "manifest.json").write_text(
        '{"models": [], "tasks": [{"task_id": "t", "class_count": 2, "sample_count": 5, '
        '"proxy_embedding_path": "proxy/t.csv"}]}'
    )
    with pytest.raises(ValueError, match="does not exist"):
        load_manifest(tmp_path / "manifest.json")


def test_identifier_rules():
    with pytest.raises(ValueError, match="CSV"):
        ModelRecord(model_id="a,b", param_count=1, layer_count=1)
    with pytest.raises(ValueError, match="accuracy"):
        TaskRecord(task_id="t", class_count=2, sample_count=2,
                   ground_truth_accuracies={"m": 1.5})


def test_transfer_space_round_trip(tmp_path):
    space = TransferSpace(
        model_ids=("m1", "m2", "m3"),
        task_ids=("t1", "t2"),
        model_factors=np.array([[0.5, 1.0], [0.0, 2.0], [1.5, 0.25]]),
        task_factors=np.array([[1.0, 0.5], [2.0, 0.0]]),
        k=2, alpha_m=0.01, alpha_d=0.02,
        final_objective=1.25, iterations_run=17, seed=9,
        warnings=("something",), objective_history=(3.0, 2.0, 1.25),
    )
    save_transfer_space(space, tmp_path / "space")
    loaded = load_transfer_space(tmp_path / "space")
    assert loaded.model_ids == space.model_ids
    assert np.array_equal(loaded.model_factors, space.model_factors)
    assert np.array_equal(loaded.task_factors, space.task_factors)
    assert loaded.final_objective == space.final_objective
    assert loaded.iterations_run == 17
    assert loaded.objective_history == space.objective_history
    assert loaded.warnings == ("something",)


def test_transfer_space_invariants():
    with pytest.raises(ValueError, match="non-negative"):
        TransferSpace(model_ids=("m",), task_ids=("t",),
                      model_factors=np.array([[-1.0]]), task_factors=np.array([[1.0]]),
                      k=1, alpha_m=0, alpha_d=0, final_objective=0, iterations_run=0)


def test_report_round_trip_and_validation(tmp_path):
    entries = (
        RankingEntry("b", 1.0, 2.0, 1.5, 1),
        RankingEntry("a", 0.5, 0.5, 0.5, 2),
        RankingEntry("c", 0.1, 0.2, 0.15, 3),
    )
    report = RankingReport(task_id="t", alpha=0.5, entries=entries)
    save_report(report, tmp_path / "r.json")
    loaded = load_report(tmp_path / "r.json")
    assert loaded.ordering() == ["b", "a", "c"]
    assert loaded.alpha == 0.5

    with pytest.raises(ValueError, match="permutation"):
        RankingReport(task_id="t", alpha=0.5,
                      entries=(RankingEntry("a", 0, 0, 1.0, 1), RankingEntry("b", 0, 0, 0.5, 3)))
    with pytest.raises(ValueError, match="descending"):
        RankingReport(task_id="t", alpha=0.5,
                      entries=(RankingEntry("a", 0, 0, 0.5, 1), RankingEntry("b", 0, 0, 1.0, 2)))
    # ties must be broken lexicographically
    with pytest.raises(ValueError, match="ties"):
        RankingReport(task_id="t", alpha=0.5,
                      entries=(RankingEntry("b", 0, 0, 1.0, 1), RankingEntry("a", 0, 0, 1.0, 2)))


def test_loaded_arrays_are_immutable(tmp_path):
    pm = PerformanceMatrix(model_ids=("m",), task_ids=("t",), values=np.array([[1.0]]))
    with pytest.raises(ValueError):
        pm.values[0, 0] = 2.0
