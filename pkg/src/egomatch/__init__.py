"""Ego-neighbor matching anomaly detection for attributed graphs.

Pipeline: load (or inject anomalies into) a graph, preprocess it once into
ego/neighbor feature matrices, train the linear matching network with a
contrastive loss, then score nodes by negated ego-neighbor similarity and
evaluate with ROC-AUC.
"""
import os as _os

# honor the thread-count override before numpy loads its BLAS
_threads = _os.environ.get("EGOMATCH_NUM_THREADS")
if _threads:
    for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)
del _os, _threads

from .backend import active_backend, available_backends, set_backend, use_backend
from .errors import (
    ConfigError,
    DimensionError,
    EgomatchError,
    InputFormatError,
    UndefinedMetricError,
)
from .graphio import (
    Graph,
    build_graph,
    degrees,
    load_graph,
    load_labels,
    save_graph,
    save_labels,
)
from .injection import (
    InjectionConfig,
    inject_anomalies,
    inject_attribute,
    inject_structural,
)
from .metrics import ScoreReport, evaluate, roc_auc, score
from .model import (
    EmbeddingPair,
    ModelParameters,
    PairBatch,
    PairRole,
    backward,
    cosine,
    embed,
    init_parameters,
    load_checkpoint,
    pairwise_similarity,
    remap,
    save_checkpoint,
)
from .propagation import (
    PreprocessedFeatures,
    anonymized_propagate,
    normalized_adjacency_apply,
)
from .training import (
    EpochStats,
    NegativeAssignment,
    TrainingConfig,
    contrastive_loss,
    sample_negatives,
    train,
    train_preprocessed,
)

__version__ = "0.1.0"
