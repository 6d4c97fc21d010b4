"""Shared data model and on-disk formats.

Every interchange file is UTF-8 text so artifacts stay diffable and
language-neutral:

* feature sets      -- CSV with header ``label,f0,f1,...,f{D-1}``
* labeled matrices  -- CSV, first row = column ids, first column = row ids
* vectors           -- single-line CSV (leading ``#`` comment lines allowed)
* manifest, reports -- JSON

Floats are rendered with 17 significant digits, which is enough for
float64 round trips, so save -> load -> save is byte-identical.

All loaded objects are validated once and then treated as immutable;
loaders are pure functions and safe to call concurrently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "ModelRecord",
    "TaskRecord",
    "FeatureSet",
    "PerformanceMatrix",
    "TransferSpace",
    "RankingEntry",
    "RankingReport",
    "Manifest",
    "format_float",
    "load_feature_set",
    "save_feature_set",
    "load_matrix",
    "save_matrix",
    "load_vector",
    "save_vector",
    "load_labeled_csv",
    "save_labeled_csv",
    "load_manifest",
    "save_manifest",
    "load_transfer_space",
    "save_transfer_space",
    "load_report",
    "save_report",
]


def format_float(x: float) -> str:
    """Render a float with 17 significant digits (exact float64 round trip)."""
    return format(float(x), ".17g")


def _check_identifier(kind: str, value: str) -> str:
    if not isinstance(value, str) or not value:
        raise ValueError(f"{kind} must be a non-empty string, got {value!r}")
    if "," in value or "\n" in value or value.startswith("#"):
        raise ValueError(f"{kind} {value!r} contains characters not representable in CSV cells")
    return value


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelRecord:
    """One pre-trained model in the repository manifest."""

    model_id: str
    param_count: int
    layer_count: int
    arch_graph_path: str | None = None
    arch_embedding: np.ndarray | None = None
    cluster_id: int | None = None

    def __post_init__(self):
        _check_identifier("model_id", self.model_id)
        if self.param_count < 0 or self.layer_count < 0:
            raise ValueError(f"model {self.model_id}: counts must be non-negative")
        if self.arch_embedding is not None:
            emb = np.asarray(self.arch_embedding, dtype=float)
            if emb.ndim != 1 or not np.all(np.isfinite(emb)):
                raise ValueError(f"model {self.model_id}: arch_embedding must be a finite 1-D vector")
            object.__setattr__(self, "arch_embedding", _freeze(emb))


@dataclass(frozen=True)
class TaskRecord:
    """One task in the repository manifest.

    ``feature_files`` maps model_id to the forward-feature CSV for this task;
    ``ground_truth_accuracies`` is only present for benchmark tasks whose
    fine-tuned accuracies are known.
    """

    task_id: str
    class_count: int
    sample_count: int
    feature_files: dict[str, str] = field(default_factory=dict)
    proxy_embedding: np.ndarray | None = None
    proxy_embedding_path: str | None = None
    ground_truth_accuracies: dict[str, float] | None = None

    def __post_init__(self):
        _check_identifier("task_id", self.task_id)
        if self.class_count < 1:
            raise ValueError(f"task {self.task_id}: class_count must be positive")
        if self.sample_count < 1:
            raise ValueError(f"task {self.task_id}: sample_count must be positive")
        if self.proxy_embedding is not None:
            vec = np.asarray(self.proxy_embedding, dtype=float)
            if vec.ndim != 1 or not np.all(np.isfinite(vec)):
                raise ValueError(f"task {self.task_id}: proxy_embedding must be a finite 1-D vector")
            object.__setattr__(self, "proxy_embedding", _freeze(vec))
        if self.ground_truth_accuracies is not None:
            for mid, acc in self.ground_truth_accuracies.items():
                if not (0.0 <= acc <= 1.0):
                    raise ValueError(
                        f"task {self.task_id}: ground-truth accuracy for {mid} is {acc}, outside [0, 1]"
                    )


@dataclass(frozen=True)
class FeatureSet:
    """Forward features of one model on one task: n samples by D dims plus labels."""

    task_id: str
    model_id: str
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        if feats.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        if labels.ndim != 1 or labels.shape[0] != feats.shape[0]:
            raise ValueError("labels length must equal the number of feature rows")
        bad = np.flatnonzero(~np.isfinite(feats).all(axis=1))
        if bad.size:
            raise ValueError(f"non-finite feature value at row {bad[0]}")
        neg = np.flatnonzero(labels < 0)
        if neg.size:
            raise ValueError(f"negative label at row {neg[0]}")
        object.__setattr__(self, "features", _freeze(feats))
        object.__setattr__(self, "labels", _freeze(labels))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class PerformanceMatrix:
    """Historical performance matrix: models by tasks, every entry >= 0."""

    model_ids: tuple[str, ...]
    task_ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        model_ids = tuple(_check_identifier("model_id", m) for m in self.model_ids)
        task_ids = tuple(_check_identifier("task_id", t) for t in self.task_ids)
        if len(set(model_ids)) != len(model_ids):
            raise ValueError("duplicate model_id in performance matrix")
        if len(set(task_ids)) != len(task_ids):
            raise ValueError("duplicate task_id in performance matrix")
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(model_ids), len(task_ids)):
            raise ValueError(
                f"matrix shape {values.shape} does not match {len(model_ids)} models x {len(task_ids)} tasks"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("performance matrix contains non-finite entries")
        if np.any(values < 0):
            raise ValueError("performance matrix entries must be non-negative")
        object.__setattr__(self, "model_ids", model_ids)
        object.__setattr__(self, "task_ids", task_ids)
        object.__setattr__(self, "values", _freeze(values))

    def column(self, task_id: str) -> np.ndarray:
        return self.values[:, self.task_ids.index(task_id)]

    def drop_task(self, task_id: str) -> "PerformanceMatrix":
        """Matrix with one task column removed (leave-one-out helper)."""
        j = self.task_ids.index(task_id)
        keep = [i for i in range(len(self.task_ids)) if i != j]
        return PerformanceMatrix(
            model_ids=self.model_ids,
            task_ids=tuple(self.task_ids[i] for i in keep),
            values=self.values[:, keep],
        )


@dataclass(frozen=True)
class TransferSpace:
    """Non-negative factor matrices spanning the latent transfer space."""

    model_ids: tuple[str, ...]
    task_ids: tuple[str, ...]
    model_factors: np.ndarray
    task_factors: np.ndarray
    k: int
    alpha_m: float
    alpha_d: float
    final_objective: float
    iterations_run: int
    seed: int = 0
    warnings: tuple[str, ...] = ()
    objective_history: tuple[float, ...] = ()

    def __post_init__(self):
        mf = np.asarray(self.model_factors, dtype=float)
        tf = np.asarray(self.task_factors, dtype=float)
        if mf.shape != (len(self.model_ids), self.k) or tf.shape != (len(self.task_ids), self.k):
            raise ValueError("factor matrix shapes do not match ids and k")
        if np.any(mf < 0) or np.any(tf < 0):
            raise ValueError("factor matrices must be non-negative")
        if not (1 <= self.k <= min(len(self.model_ids), len(self.task_ids))):
            raise ValueError(f"k={self.k} outside [1, min(M, N)]")
        object.__setattr__(self, "model_ids", tuple(self.model_ids))
        object.__setattr__(self, "task_ids", tuple(self.task_ids))
        object.__setattr__(self, "model_factors", _freeze(mf))
        object.__setattr__(self, "task_factors", _freeze(tf))
        object.__setattr__(self, "warnings", tuple(self.warnings))
        object.__setattr__(self, "objective_history", tuple(float(v) for v in self.objective_history))

    def model_vector(self, model_id: str) -> np.ndarray:
        return self.model_factors[self.model_ids.index(model_id)]

    def task_vector(self, task_id: str) -> np.ndarray:
        return self.task_factors[self.task_ids.index(task_id)]


@dataclass(frozen=True)
class RankingEntry:
    model_id: str
    trans_score: float
    meta_score: float
    merged_score: float
    rank: int


@dataclass(frozen=True)
class RankingReport:
    """Per-task ranking: merged scores sorted descending, ties broken by model_id."""

    task_id: str
    alpha: float
    entries: tuple[RankingEntry, ...]
    normalize: str = "zscore"
    config_digest: str | None = None

    def __post_init__(self):
        entries = tuple(self.entries)
        ranks = sorted(e.rank for e in entries)
        if ranks != list(range(1, len(entries) + 1)):
            raise ValueError("ranks must be a permutation of 1..M")
        ordered = sorted(entries, key=lambda e: e.rank)
        for a, b in zip(ordered, ordered[1:]):
            if a.merged_score < b.merged_score or (
                a.merged_score == b.merged_score and a.model_id > b.model_id
            ):
                raise ValueError("entries must be in descending merged-score order, ties by model_id")
        object.__setattr__(self, "entries", ordered)

    def ordering(self) -> list[str]:
        return [e.model_id for e in self.entries]


@dataclass(frozen=True)
class Manifest:
    """Repository manifest: the single entry point naming all models and tasks.

    Relative paths inside the manifest are resolved against ``root``.
    """

    models: tuple[ModelRecord, ...]
    tasks: tuple[TaskRecord, ...]
    root: Path

    def __post_init__(self):
        model_ids = [m.model_id for m in self.models]
        task_ids = [t.task_id for t in self.tasks]
        if len(set(model_ids)) != len(model_ids):
            raise ValueError("duplicate model_id in manifest")
        if len(set(task_ids)) != len(task_ids):
            raise ValueError("duplicate task_id in manifest")
        known = set(model_ids)
        for t in self.tasks:
            for mid in t.feature_files:
                if mid not in known:
                    raise ValueError(f"task {t.task_id} references unknown model {mid!r}")
            for mid in (t.ground_truth_accuracies or {}):
                if mid not in known:
                    raise ValueError(f"task {t.task_id} ground truth references unknown model {mid!r}")
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "root", Path(self.root))

    def model(self, model_id: str) -> ModelRecord:
        for m in self.models:
            if m.model_id == model_id:
                return m
        raise KeyError(model_id)

    def task(self, task_id: str) -> TaskRecord:
        for t in self.tasks:
            if t.task_id == task_id:
                return t
        raise KeyError(task_id)

    def model_ids(self) -> list[str]:
        return [m.model_id for m in self.models]

    def task_ids(self) -> list[str]:
        return [t.task_id for t in self.tasks]

    def feature_path(self, task_id: str, model_id: str) -> Path | None:
        rel = self.task(task_id).feature_files.get(model_id)
        return None if rel is None else self.root / rel


# ---------------------------------------------------------------------------
# Feature-set CSV
# ---------------------------------------------------------------------------

def _read_text_rows(path: Path) -> list[str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [ln for ln in lines if ln and not ln.startswith("#")]


def load_feature_set(
    path: str | Path,
    task_id: str = "",
    model_id: str = "",
    class_count: int | None = None,
) -> FeatureSet:
    """Load and validate a forward-feature CSV.

    When ``class_count`` is given, labels are checked against
    ``[0, class_count)``; violations are reported with their row index.
    """
    path = Path(path)
    rows = _read_text_rows(path)
    if not rows:
        raise ValueError(f"{path}: empty feature file")
    header = rows[0].split(",")
    if header[0] != "label" or len(header) < 2:
        raise ValueError(f"{path}: malformed header {rows[0]!r}, expected 'label,f0,...'")
    dim = len(header) - 1
    if header[1:] != [f"f{i}" for i in range(dim)]:
        raise ValueError(f"{path}: malformed header {rows[0]!r}, expected 'label,f0,...'")

    labels = np.empty(len(rows) - 1, dtype=int)
    feats = np.empty((len(rows) - 1, dim), dtype=float)
    for r, line in enumerate(rows[1:]):
        cells = line.split(",")
        if len(cells) != dim + 1:
            raise ValueError(f"{path}: dimension mismatch at row {r} ({len(cells) - 1} values, expected {dim})")
        try:
            labels[r] = int(cells[0])
            feats[r] = [float(c) for c in cells[1:]]
        except ValueError as exc:
            raise ValueError(f"{path}: parse failure at row {r}: {exc}") from None
        if not np.all(np.isfinite(feats[r])):
            raise ValueError(f"{path}: non-finite value at row {r}")
        if labels[r] < 0 or (class_count is not None and labels[r] >= class_count):
            raise ValueError(f"{path}: label out of range at row {r}")
    return FeatureSet(task_id=task_id or path.stem, model_id=model_id or path.stem, features=feats, labels=labels)


def save_feature_set(fs: FeatureSet, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["label," + ",".join(f"f{i}" for i in range(fs.dim))]
    for lab, row in zip(fs.labels, fs.features):
        lines.append(str(int(lab)) + "," + ",".join(format_float(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Labeled matrix CSV (performance matrix, factor matrices, embedding tables)
# ---------------------------------------------------------------------------

def save_labeled_csv(
    row_ids: "tuple[str, ...] | list[str]",
    col_ids: "tuple[str, ...] | list[str]",
    values: np.ndarray,
    path: str | Path,
    comments: "tuple[str, ...]" = (),
) -> None:
    values = np.asarray(values, dtype=float)
    if values.shape != (len(row_ids), len(col_ids)):
        raise ValueError("values shape does not match row/column ids")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# {c}" for c in comments]
    lines.append("," + ",".join(col_ids))
    for rid, row in zip(row_ids, values):
        lines.append(rid + "," + ",".join(format_float(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_labeled_csv(path: str | Path) -> tuple[list[str], list[str], np.ndarray]:
    path = Path(path)
    rows = _read_text_rows(path)
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    header = rows[0].split(",")
    if header[0] != "":
        raise ValueError(f"{path}: malformed header, first cell must be empty")
    col_ids = header[1:]
    if not col_ids or any(not c for c in col_ids):
        raise ValueError(f"{path}: malformed header, empty column id")
    row_ids: list[str] = []
    values = np.empty((len(rows) - 1, len(col_ids)), dtype=float)
    for r, line in enumerate(rows[1:]):
        cells = line.split(",")
        if len(cells) != len(col_ids) + 1:
            raise ValueError(
                f"{path}: row {r} has {len(cells) - 1} values, expected {len(col_ids)}"
            )
        row_ids.append(cells[0])
        try:
            values[r] = [float(c) for c in cells[1:]]
        except ValueError as exc:
            raise ValueError(f"{path}: parse failure at row {r}: {exc}") from None
    return row_ids, col_ids, values


def save_matrix(pm: PerformanceMatrix, path: str | Path, comments: "tuple[str, ...]" = ()) -> None:
    """Write a performance matrix; negative entries were already rejected on construction."""
    save_labeled_csv(pm.model_ids, pm.task_ids, pm.values, path, comments=comments)


def load_matrix(path: str | Path) -> PerformanceMatrix:
    row_ids, col_ids, values = load_labeled_csv(path)
    return PerformanceMatrix(model_ids=tuple(row_ids), task_ids=tuple(col_ids), values=values)


# ---------------------------------------------------------------------------
# Vectors
# ---------------------------------------------------------------------------

def save_vector(vec: np.ndarray, path: str | Path, comments: "tuple[str, ...]" = ()) -> None:
    vec = np.asarray(vec, dtype=float)
    if vec.ndim != 1:
        raise ValueError("vector files hold 1-D vectors")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(format_float(v) for v in vec))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_vector(path: str | Path) -> np.ndarray:
    rows = _read_text_rows(path)
    if len(rows) != 1:
        raise ValueError(f"{path}: expected a single-line vector CSV")
    try:
        vec = np.array([float(c) for c in rows[0].split(",")], dtype=float)
    except ValueError as exc:
        raise ValueError(f"{path}: parse failure: {exc}") from None
    if not np.all(np.isfinite(vec)):
        raise ValueError(f"{path}: non-finite vector entry")
    return vec


# ---------------------------------------------------------------------------
# Manifest JSON
# ---------------------------------------------------------------------------

def load_manifest(path: str | Path) -> Manifest:
    """Load ``manifest.json`` and resolve declared proxy-embedding files."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON: {exc}") from None
    root = path.parent
    models = []
    for m in doc.get("models", []):
        models.append(
            ModelRecord(
                model_id=m["model_id"],
                param_count=int(m["param_count"]),
                layer_count=int(m["layer_count"]),
                arch_graph_path=m.get("arch_graph_path"),
                arch_embedding=None if m.get("arch_embedding") is None else np.array(m["arch_embedding"], dtype=float),
                cluster_id=m.get("cluster_id"),
            )
        )
    tasks = []
    for t in doc.get("tasks", []):
        proxy = t.get("proxy_embedding")
        if proxy is not None:
            proxy = np.array(proxy, dtype=float)
        elif t.get("proxy_embedding_path"):
            proxy_path = root / t["proxy_embedding_path"]
            if not proxy_path.exists():
                raise ValueError(f"task {t.get('task_id')}: proxy embedding file {proxy_path} does not exist")
            proxy = load_vector(proxy_path)
        tasks.append(
            TaskRecord(
                task_id=t["task_id"],
                class_count=int(t["class_count"]),
                sample_count=int(t["sample_count"]),
                feature_files=dict(t.get("feature_files", {})),
                proxy_embedding=proxy,
                proxy_embedding_path=t.get("proxy_embedding_path"),
                ground_truth_accuracies=t.get("ground_truth_accuracies"),
            )
        )
    return Manifest(models=tuple(models), tasks=tuple(tasks), root=root)


def save_manifest(manifest: Manifest, path: str | Path) -> None:
    doc = {
        "models": [
            {
                "model_id": m.model_id,
                "param_count": m.param_count,
                "layer_count": m.layer_count,
                "arch_graph_path": m.arch_graph_path,
                "arch_embedding": None if m.arch_embedding is None else [float(v) for v in m.arch_embedding],
                "cluster_id": m.cluster_id,
            }
            for m in manifest.models
        ],
        "tasks": [
            {
                "task_id": t.task_id,
                "class_count": t.class_count,
                "sample_count": t.sample_count,
                "feature_files": t.feature_files,
                # Prefer the file reference when the vector lives on disk.
                "proxy_embedding_path": t.proxy_embedding_path,
                "proxy_embedding": (
                    None
                    if t.proxy_embedding is None or t.proxy_embedding_path is not None
                    else [float(v) for v in t.proxy_embedding]
                ),
                "ground_truth_accuracies": t.ground_truth_accuracies,
            }
            for t in manifest.tasks
        ],
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Transfer space directory
# ---------------------------------------------------------------------------

def save_transfer_space(space: TransferSpace, out_dir: str | Path, config_digest: str | None = None) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    factor_cols = [f"f{i}" for i in range(space.k)]
    save_labeled_csv(space.model_ids, factor_cols, space.model_factors, out_dir / "model_factors.csv")
    save_labeled_csv(space.task_ids, factor_cols, space.task_factors, out_dir / "task_factors.csv")
    meta = {
        "k": space.k,
        "alpha_m": space.alpha_m,
        "alpha_d": space.alpha_d,
        "final_objective": space.final_objective,
        "iterations_run": space.iterations_run,
        "seed": space.seed,
        "warnings": list(space.warnings),
        "objective_history": list(space.objective_history),
        "config_digest": config_digest,
    }
    (out_dir / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_transfer_space(space_dir: str | Path) -> TransferSpace:
    space_dir = Path(space_dir)
    meta = json.loads((space_dir / "meta.json").read_text(encoding="utf-8"))
    model_ids, _, model_factors = load_labeled_csv(space_dir / "model_factors.csv")
    task_ids, _, task_factors = load_labeled_csv(space_dir / "task_factors.csv")
    return TransferSpace(
        model_ids=tuple(model_ids),
        task_ids=tuple(task_ids),
        model_factors=model_factors,
        task_factors=task_factors,
        k=int(meta["k"]),
        alpha_m=float(meta["alpha_m"]),
        alpha_d=float(meta["alpha_d"]),
        final_objective=float(meta["final_objective"]),
        iterations_run=int(meta["iterations_run"]),
        seed=int(meta.get("seed", 0)),
        warnings=tuple(meta.get("warnings", ())),
        objective_history=tuple(meta.get("objective_history", ())),
    )


def transfer_space_digest(space_dir: str | Path) -> str | None:
    meta = json.loads((Path(space_dir) / "meta.json").read_text(encoding="utf-8"))
    return meta.get("config_digest")


# ---------------------------------------------------------------------------
# Ranking report JSON
# ---------------------------------------------------------------------------

def save_report(report: RankingReport, path: str | Path) -> None:
    doc = {
        "task_id": report.task_id,
        "alpha": report.alpha,
        "normalize": report.normalize,
        "config_digest": report.config_digest,
        "entries": [
            {
                "model_id": e.model_id,
                "trans_score": e.trans_score,
                "meta_score": e.meta_score,
                "merged_score": e.merged_score,
                "rank": e.rank,
            }
            for e in report.entries
        ],
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_report(path: str | Path) -> RankingReport:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    entries = tuple(
        RankingEntry(
            model_id=e["model_id"],
            trans_score=float(e["trans_score"]),
            meta_score=float(e["meta_score"]),
            merged_score=float(e["merged_score"]),
            rank=int(e["rank"]),
        )
        for e in doc["entries"]
    )
    return RankingReport(
        task_id=doc["task_id"],
        alpha=float(doc["alpha"]),
        entries=entries,
        normalize=doc.get("normalize", "zscore"),
        config_digest=doc.get("config_digest"),
    )
