"""Fennec: rank pre-trained models for a new task without fine-tuning.

The pipeline factorizes a historical matrix of Fisher-discriminant
transfer scores into a latent transfer space, embeds model architectures
as graphs, regresses cheap meta features onto the scores, and merges
transfer and meta scores into one ranking per target task.
"""

from .archi2vec import (
    ATOM_VOCABULARY,
    ArchGraph,
    GraphEmbedding,
    cluster_architectures,
    cosine_similarity,
    load_graph,
    save_graph,
    train_graph_embeddings,
    wl_relabel,
)
from .config import PipelineConfig
from .data import (
    FeatureSet,
    Manifest,
    ModelRecord,
    PerformanceMatrix,
    RankingEntry,
    RankingReport,
    TaskRecord,
    TransferSpace,
    load_feature_set,
    load_manifest,
    load_matrix,
    load_report,
    load_transfer_space,
    save_manifest,
    save_matrix,
    save_report,
    save_transfer_space,
)
from .evaluate import EvalRun, EvalSummary, leave_one_out_eval, pearson
from .fda import FdaModel, build_performance_matrix, fda_posterior, fda_score, fit_fda
from .forest import ForestConfig
from .merge import (
    MergeConfig,
    ProxyRegressor,
    fit_proxy_regressor,
    infer_task_vector,
    merge_scores,
    rank_models,
)
from .meta import (
    MetaLayout,
    MetaModel,
    MetaVector,
    assemble_meta,
    fit_meta,
    layout_from_manifest,
    meta_score,
)
from .nmf import NmfConfig, factorize, transfer_score
from .pipeline import run_pipeline
from .synthbench import SynthBenchConfig, generate_benchmark

__version__ = "0.1.0"
