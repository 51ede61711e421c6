"""Classification and agreement metrics.

Truth vectors may be given as booleans, 0/1 or -1/+1; anything > 0 is the
positive class.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import stats


class RocCurve(NamedTuple):
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray


def _positive(values, name):
    values = np.asarray(values)
    if values.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    return values > 0


def _paired(a, b):
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("no values")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("values must be finite")
    return a, b


def f1(pred, truth):
    """F1 of the positive class; 0 when precision + recall is 0."""
    pred = _positive(pred, "pred")
    truth = _positive(truth, "truth")
    if pred.shape != truth.shape:
        raise ValueError("pred and truth differ in length")
    tp = np.count_nonzero(pred & truth)
    denom = np.count_nonzero(pred) + np.count_nonzero(truth)
    return 0.0 if tp == 0 else 2.0 * tp / denom


def _scores_truth(scores, truth):
    scores = np.asarray(scores, dtype=np.float64).ravel()
    truth = _positive(np.asarray(truth).ravel(), "truth")
    if scores.shape != truth.shape:
        raise ValueError("scores and truth differ in length")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    n_pos = np.count_nonzero(truth)
    if n_pos == 0 or n_pos == truth.size:
        raise ValueError("AUC needs both classes in truth")
    return scores, truth, n_pos, truth.size - n_pos


def auc(scores, truth):
    """Area under the ROC curve by rank sums; tied pairs count one half."""
    scores, truth, n_pos, n_neg = _scores_truth(scores, truth)
    ranks = stats.rankdata(scores)
    u = ranks[truth].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_points(scores, truth):
    """ROC curve with one point per distinct score, plus the origin.

    Point ``i`` classifies ``score >= thresholds[i]`` as positive; the first
    threshold is ``inf`` (nothing selected).
    """
    scores, truth, n_pos, n_neg = _scores_truth(scores, truth)
    values, inverse = np.unique(-scores, return_inverse=True)
    pos = np.bincount(inverse, weights=truth, minlength=values.size)
    neg = np.bincount(inverse, weights=~truth, minlength=values.size)
    tpr = np.concatenate([[0.0], np.cumsum(pos) / n_pos])
    fpr = np.concatenate([[0.0], np.cumsum(neg) / n_neg])
    thresholds = np.concatenate([[np.inf], -values])
    return RocCurve(fpr, tpr, thresholds)


def auc_from_roc(curve: RocCurve):
    """Trapezoidal area under ``curve``."""
    return float(np.sum(np.diff(curve.fpr) * (curve.tpr[1:] + curve.tpr[:-1]) / 2.0))


def pearson(a, b):
    a, b = _paired(a, b)
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise ValueError("correlation is undefined for a constant input")
    return float(stats.pearsonr(a, b).statistic)


def spearman(a, b):
    """Rank correlation with average ranks for ties."""
    a, b = _paired(a, b)
    return pearson(stats.rankdata(a), stats.rankdata(b))


def mean_ranks(scores):
    """Average rank of each method over datasets (rank 1 = highest score).

    ``scores`` has shape (n_datasets, n_methods); ties share average ranks.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2 or scores.size == 0:
        raise ValueError("scores must be a non-empty (datasets, methods) matrix")
    return stats.rankdata(-scores, axis=1).mean(axis=0)
