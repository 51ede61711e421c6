"""Bagged ensembles of cluster detectors and significance trees.

Each member sees a bootstrap sample of the labeled rows. Tree members draw
``floor(sqrt(d))`` candidate features at every split; cluster members work
on one random feature subset of ``ceil(d / 2)`` features by default. The
ensemble score is the mean of the members' 0/1 outputs, thresholded at a
value tuned for maximum significance.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from ._rng import derive_seed, make_rng
from .cluster import ClusterDetector, fit_cluster_detector
from .significance import ScoredPredictions, check_alpha, tune_threshold
from .table import EventTable
from .tree import SigTree, argsort_features, grow_tree

BASE_KINDS = ("kmeans", "lima-tree", "noisy-tree")


class OobPredictions(NamedTuple):
    """Out-of-bag scores; ``rows`` are the scored table rows."""

    scores: np.ndarray
    is_on: np.ndarray
    rows: np.ndarray


@dataclass(frozen=True)
class ModelSpec:
    """Hyperparameters for one detector (single model or ensemble).

    ``n_estimators=None`` trains one model on all rows, without bootstrap or
    feature randomization; its output is the crisp 0/1 class.
    """

    kind: str
    alpha: float
    k: int = 8
    max_depth: int = 4
    n_estimators: int | None = None
    feature_subset_size: int | None = None
    tune: str = "oob"

    def __post_init__(self):
        if self.kind not in BASE_KINDS:
            raise ValueError(f"kind must be one of {BASE_KINDS}, got {self.kind!r}")
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        if self.n_estimators is not None and self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        if self.tune not in ("oob", "full", "none"):
            raise ValueError("tune must be 'oob', 'full' or 'none'")

    @property
    def hyperparameters(self):
        return {
            "kind": self.kind,
            "alpha": self.alpha,
            "k": self.k,
            "max_depth": self.max_depth,
            "n_estimators": self.n_estimators,
            "feature_subset_size": self.feature_subset_size,
            "tune": self.tune,
        }


@dataclass(frozen=True)
class EnsembleModel:
    members: tuple
    threshold: float
    spec: ModelSpec
    seed: int
    n_features: int
    feature_names: tuple
    # training-row indices drawn per member (None for unbagged models)
    membership: tuple | None = field(default=None, compare=False)

    @property
    def base_kind(self):
        return self.spec.kind

    def member_outputs(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        return np.stack([m.predict(X) for m in self.members]).astype(np.uint8)

    def predict_score(self, X):
        """Mean of the members' 0/1 outputs, in [0, 1]."""
        outputs = self.member_outputs(X)
        return outputs.sum(axis=0, dtype=np.int64) / len(self.members)

    def predict(self, X):
        return (self.predict_score(X) > self.threshold).astype(np.uint8)


def _labeled(table):
    rows = np.flatnonzero(table.labeled_mask)
    if rows.size == 0:
        raise ValueError("table has no On/Off rows to train on")
    return rows, table.features[rows], table.on_mask[rows]


def _fit_member(index, spec, X, is_on, order, seed, bootstrap):
    n, d = X.shape
    member_seed = derive_seed(seed, index)
    rng = make_rng(seed, index, 0xB007)
    drawn = rng.integers(0, n, size=n) if bootstrap else None
    if spec.kind == "kmeans":
        if bootstrap:
            size = spec.feature_subset_size or math.ceil(d / 2)
            subset = np.sort(rng.choice(d, size=size, replace=False))
            Xb, onb = X[drawn], is_on[drawn]
        else:
            subset, Xb, onb = None, X, is_on
        return fit_cluster_detector(Xb, onb, spec.k, spec.alpha, seed=member_seed,
                                    feature_subset=subset), drawn
    criterion = "lima" if spec.kind == "lima-tree" else "noisy"
    weights = np.bincount(drawn, minlength=n).astype(np.float64) if bootstrap else None
    subsample = (spec.feature_subset_size or max(1, math.isqrt(d))) if bootstrap else None
    tree = grow_tree(X, is_on, spec.alpha, criterion, spec.max_depth, seed=member_seed,
                     feature_subsample=subsample, weights=weights, order=order)
    return tree, drawn


def fit_ensemble(table: EventTable, spec: ModelSpec, seed=0, threads=1):
    """Train the detector described by ``spec`` on the labeled rows of ``table``.

    Member ``t`` draws all its randomness from the stream ``(seed, t)``, so
    the result does not depend on ``threads`` or execution order.
    """
    rows, X, is_on = _labeled(table)
    bootstrap = spec.n_estimators is not None
    n_members = spec.n_estimators or 1
    order = argsort_features(X) if spec.kind != "kmeans" else None

    def work(t):
        return _fit_member(t, spec, X, is_on, order, seed, bootstrap)

    if threads > 1 and n_members > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            fitted = list(pool.map(work, range(n_members)))
    else:
        fitted = [work(t) for t in range(n_members)]
    members = tuple(m for m, _ in fitted)
    membership = tuple(rows[drawn] for _, drawn in fitted) if bootstrap else None
    model = EnsembleModel(members, 0.5, spec, int(seed), table.n_features,
                          table.feature_names, membership)
    if not bootstrap or spec.tune == "none":
        return model
    if spec.tune == "oob":
        preds, _ = oob_scores(model, table)
    else:
        preds = ScoredPredictions(model.predict_score(X), is_on)
    return tune_ensemble(model, preds)


def oob_scores(model: EnsembleModel, table: EventTable):
    """Out-of-bag ensemble scores for the labeled training rows.

    Returns ``(OobPredictions, skipped)``; rows drawn by every member have
    no out-of-bag estimate and are only counted in ``skipped``.
    """
    if model.membership is None:
        raise ValueError("model was trained without bootstrap; no out-of-bag rows")
    rows, X, is_on = _labeled(table)
    position = np.full(table.n_rows, -1, dtype=np.int64)
    position[rows] = np.arange(rows.size)
    in_bag = np.zeros((len(model.members), rows.size), dtype=bool)
    for t, drawn in enumerate(model.membership):
        at = position[drawn]
        if np.any(at < 0):
            raise ValueError("bootstrap membership does not match this table")
        in_bag[t, at] = True
    outputs = model.member_outputs(X)
    out_of_bag = ~in_bag
    votes = np.sum(outputs * out_of_bag, axis=0, dtype=np.int64)
    count = out_of_bag.sum(axis=0)
    ok = count > 0
    preds = OobPredictions(votes[ok] / count[ok], is_on[ok], rows[ok])
    return preds, int(np.count_nonzero(~ok))


def tune_ensemble(model: EnsembleModel, preds: ScoredPredictions, alpha=None):
    """Return ``model`` with its threshold set to the significance maximizer."""
    alpha = model.spec.alpha if alpha is None else alpha
    if len(preds.scores) == 0:
        raise ValueError("no predictions to tune on")
    result = tune_threshold(preds.scores, preds.is_on, alpha)
    return replace(model, threshold=result.theta)


def member_kind(member):
    if isinstance(member, SigTree):
        return "tree"
    if isinstance(member, ClusterDetector):
        return "cluster"
    raise TypeError(f"unknown member type {type(member).__name__}")
