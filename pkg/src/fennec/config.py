"""Pipeline configuration: one JSON document drives every stage.

Configs are validated strictly (unknown keys are rejected), hashed into a
digest that stamps every emitted artifact, and expanded into per-stage
seeds so that rerunning one stage never perturbs another's randomness.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .forest import ForestConfig
from .merge import MergeConfig
from .nmf import NmfConfig
from .seeding import derive_seed

__all__ = ["PipelineConfig", "FdaSettings", "Archi2vecSettings", "EvalSettings", "PathSettings"]


@dataclass(frozen=True)
class PathSettings:
    manifest: str = "manifest.json"
    out_dir: str = "artifacts"
    graphs_dir: str | None = None


@dataclass(frozen=True)
class FdaSettings:
    probe_size: int = 500
    gamma: float = 1e-4

    def __post_init__(self):
        if self.probe_size < 1:
            raise ValueError("probe_size must be >= 1")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")


@dataclass(frozen=True)
class Archi2vecSettings:
    dim: int = 64
    wl: int = 2
    clusters: int = 4
    epochs: int = 100
    negative: int = 5

    def __post_init__(self):
        if self.dim < 2 or self.wl < 0 or self.clusters < 1 or self.epochs < 1 or self.negative < 1:
            raise ValueError("invalid archi2vec settings")


@dataclass(frozen=True)
class EvalSettings:
    run: bool = False
    num_seeds: int = 5

    def __post_init__(self):
        if self.num_seeds < 1:
            raise ValueError("num_seeds must be >= 1")


_SECTIONS = {
    "paths": PathSettings,
    "fda": FdaSettings,
    "nmf": NmfConfig,
    "archi2vec": Archi2vecSettings,
    "merge": MergeConfig,
    "eval": EvalSettings,
}


@dataclass(frozen=True)
class PipelineConfig:
    paths: PathSettings = field(default_factory=PathSettings)
    fda: FdaSettings = field(default_factory=FdaSettings)
    nmf: NmfConfig = field(default_factory=NmfConfig)
    archi2vec: Archi2vecSettings = field(default_factory=Archi2vecSettings)
    merge: MergeConfig = field(default_factory=MergeConfig)
    eval: EvalSettings = field(default_factory=EvalSettings)
    seed: int = 0
    rank_tasks: tuple[str, ...] = ()
    include_embedding: bool = True
    include_onehot: bool = True
    verbosity: int = 0

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        known_top = set(_SECTIONS) | {"seed", "rank_tasks", "include_embedding", "include_onehot", "verbosity"}
        unknown = set(doc) - known_top
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for name, section_cls in _SECTIONS.items():
            section = doc.get(name, {})
            if not isinstance(section, dict):
                raise ValueError(f"config section {name!r} must be an object")
            valid = {f.name for f in section_cls.__dataclass_fields__.values()}
            bad = set(section) - valid
            if bad:
                raise ValueError(f"unknown keys in config section {name!r}: {sorted(bad)}")
            kwargs[name] = section_cls(**section)
        return cls(
            seed=int(doc.get("seed", 0)),
            rank_tasks=tuple(doc.get("rank_tasks", ())),
            include_embedding=bool(doc.get("include_embedding", True)),
            include_onehot=bool(doc.get("include_onehot", True)),
            verbosity=int(doc.get("verbosity", 0)),
            **kwargs,
        )

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON: {exc}") from None
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["rank_tasks"] = list(self.rank_tasks)
        return doc

    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def stage_seed(self, stage: str) -> int:
        return derive_seed(self.seed, stage)

    def forest_config(self, seed: int | None = None) -> ForestConfig:
        return ForestConfig(seed=self.stage_seed("train-proxy") if seed is None else seed)

    def nmf_config(self, seed: int | None = None) -> NmfConfig:
        return NmfConfig(
            k=self.nmf.k,
            alpha_m=self.nmf.alpha_m,
            alpha_d=self.nmf.alpha_d,
            max_iters=self.nmf.max_iters,
            rel_tol=self.nmf.rel_tol,
            seed=self.stage_seed("factorize") if seed is None else seed,
            init=self.nmf.init,
        )
