"""Anomaly scoring and ROC/AUC evaluation.

The anomaly score of a node is the negated ego-neighbor similarity: one
deterministic pass over the preprocessed features, no negatives, no
repeated estimation. AUC follows the Mann-Whitney convention (ties across
the class boundary earn half credit) computed via an O(n log n) rank sum;
the ROC curve sweeps thresholds at the distinct score values.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, UndefinedMetricError
from .model import ModelParameters, row_similarities
from .propagation import PreprocessedFeatures


@dataclass(eq=False)
class ScoreReport:
    """Scores plus optional ground-truth evaluation results."""

    scores: np.ndarray
    labels: np.ndarray | None = None
    auc: float | None = None
    roc_points: np.ndarray | None = None

    def to_metrics_dict(self, extra: dict | None = None) -> dict:
        out = {
            "n": int(self.scores.size),
            "anomaly_count": int(self.labels.sum()) if self.labels is not None else None,
            "auc": self.auc,
            "roc_points": self.roc_points.tolist() if self.roc_points is not None else None,
        }
        if extra:
            out.update(extra)
        return out


def score(params: ModelParameters, prep: PreprocessedFeatures) -> np.ndarray:
    """Per-node anomaly scores in [-1, 1]; higher means more anomalous."""
    if prep.num_features != params.d:
        raise DimensionError(
            f"model expects {params.d} input features, "
            f"preprocessed matrices have {prep.num_features}"
        )
    return -row_similarities(params, prep.ego, prep.neighbor)


def roc_auc(scores, labels) -> tuple[float, np.ndarray]:
    """AUC and ROC points for 0/1 labels.

    AUC equals the Mann-Whitney statistic (ties count one half). The ROC
    points start at (0, 0), end at (1, 1), and contain one point per
    distinct score; their trapezoidal area equals the returned AUC.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.ndim != 1 or scores.shape != labels.shape:
        raise DimensionError(
            f"scores {scores.shape} and labels {labels.shape} must be "
            f"matching vectors"
        )
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos + n_neg != labels.size:
        raise UndefinedMetricError("labels must be 0 or 1")
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(
            "AUC is undefined when only one class is present"
        )

    # midranks: ties share the average of the ranks they would occupy
    order = np.argsort(scores, kind="stable")
    sorted_scores = scores[order]
    boundaries = np.flatnonzero(sorted_scores[1:] != sorted_scores[:-1]) + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [scores.size]])
    group_ranks = (starts + 1 + ends) / 2.0
    ranks = np.empty(scores.size)
    ranks[order] = np.repeat(group_ranks, ends - starts)
    rank_sum = ranks[labels == 1].sum()
    auc = (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)

    # threshold sweep over distinct scores, descending
    desc = np.argsort(-scores, kind="stable")
    desc_labels = labels[desc]
    tp = np.cumsum(desc_labels == 1)
    fp = np.cumsum(desc_labels == 0)
    last_of_group = np.flatnonzero(
        np.concatenate([scores[desc][1:] != scores[desc][:-1], [True]])
    )
    points = np.concatenate([
        [[0.0, 0.0]],
        np.column_stack([fp[last_of_group] / n_neg, tp[last_of_group] / n_pos]),
    ])
    return float(auc), points


def evaluate(scores, labels) -> ScoreReport:
    """Bundle scores with their ROC/AUC against ground-truth labels."""
    auc, points = roc_auc(scores, labels)
    return ScoreReport(
        scores=np.asarray(scores, dtype=np.float64),
        labels=np.asarray(labels),
        auc=auc,
        roc_points=points,
    )


def save_scores(path, scores) -> None:
    """One float per line, node order; exact float64 round-trip."""
    with open(path, "w") as fh:
        for value in np.asarray(scores, dtype=np.float64):
            fh.write(f"{value:.17g}\n")


def load_scores(path) -> np.ndarray:
    return np.loadtxt(path, dtype=np.float64, ndmin=1)


def save_metrics_json(path, report: ScoreReport, extra: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_metrics_dict(extra), fh, sort_keys=True, indent=2)
        fh.write("\n")
