"""Decision trees grown by maximizing the significance of detection.

Two split criteria are supported:

``"lima"``
    the better of the two signed side significances; a weak side can be
    discarded later as a negative leaf.
``"noisy"``
    the sum of the squared side significances, which balances both sides.

Trees are grown breadth first, one compiled sweep per level and feature.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._backend import kernels
from ._rng import make_rng
from .significance import _b_scalar, _sigma_scalar, check_alpha, li_ma_significance

CRITERIA = {"lima": 0, "noisy": 1}

# splits must beat the node value by more than float noise; homogeneous
# children of a pure node otherwise tie with the parent up to rounding
_REL_GAIN = 1e-12


class SplitCandidate(NamedTuple):
    feature: int
    theta: float
    score: float
    left_sigma: float
    right_sigma: float


class FeatureOrder(NamedTuple):
    """Per-feature row order and sorted values, both shape (d, n)."""

    order: np.ndarray
    values: np.ndarray


def argsort_features(X):
    """Sort every feature once; shared by all trees grown on ``X``."""
    X = np.asarray(X, dtype=np.float64)
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T, dtype=np.int64)
    values = np.ascontiguousarray(np.take_along_axis(X.T, order, axis=1))
    return FeatureOrder(order, values)


def _criterion_code(criterion):
    try:
        return CRITERIA[criterion]
    except KeyError:
        raise ValueError(f"criterion must be one of {sorted(CRITERIA)}, got {criterion!r}") from None


def _prepare(X, is_on, weights):
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be two-dimensional")
    is_on = np.ascontiguousarray(is_on, dtype=np.uint8)
    if weights is None:
        weights = np.ones(X.shape[0])
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if is_on.shape != (X.shape[0],) or weights.shape != (X.shape[0],):
        raise ValueError("is_on and weights need one entry per row")
    return X, is_on, weights


def _run_level(order, is_on, weights, node_of, mask, tot_on, tot_off, alpha, code):
    m = len(tot_on)
    out = (np.full(m, -1, dtype=np.int32), np.zeros(m), np.full(m, -np.inf),
           np.zeros(m), np.zeros(m))
    kernels().level_best_splits(order.values, order.order, is_on, weights, node_of, mask,
                                np.ascontiguousarray(tot_on, dtype=np.float64),
                                np.ascontiguousarray(tot_off, dtype=np.float64),
                                float(alpha), code, *out)
    return out


def best_split(X, is_on, alpha, criterion="lima", feature_subset=None, weights=None,
               order=None):
    """Best (feature, threshold) split of one node, or None if unsplittable.

    Thresholds are midpoints between consecutive distinct feature values;
    rows with ``x[feature] <= theta`` go left.
    """
    alpha = check_alpha(alpha)
    code = _criterion_code(criterion)
    X, is_on, weights = _prepare(X, is_on, weights)
    n, d = X.shape
    if n < 2:
        return None
    mask = np.zeros((1, d), dtype=np.uint8)
    if feature_subset is None:
        mask[0] = 1
    else:
        subset = np.asarray(feature_subset, dtype=np.int64)
        if subset.size == 0:
            raise ValueError("feature_subset is empty")
        mask[0, subset] = 1
    if order is None:
        order = argsort_features(X)
    node_of = np.where(weights > 0, 0, -1).astype(np.int32)
    tot_on = [float(np.sum(weights[is_on == 1]))]
    tot_off = [float(np.sum(weights[is_on == 0]))]
    feat, theta, score, lon, loff = _run_level(order, is_on, weights, node_of, mask,
                                               tot_on, tot_off, alpha, code)
    if feat[0] < 0:
        return None
    left = li_ma_significance(lon[0], loff[0], alpha)
    right = li_ma_significance(tot_on[0] - lon[0], tot_off[0] - loff[0], alpha)
    return SplitCandidate(int(feat[0]), float(theta[0]), float(score[0]), left, right)


@dataclass(frozen=True)
class SigTree:
    """Flat-array binary tree; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    n_on: np.ndarray
    n_off: np.ndarray
    sigma: np.ndarray
    label: np.ndarray
    depth: np.ndarray
    n_features: int
    max_depth: int
    criterion: str
    alpha: float
    seed: int

    @property
    def n_nodes(self):
        return len(self.feature)

    @property
    def leaves(self):
        return np.flatnonzero(self.feature < 0)

    def apply(self, X):
        """Leaf index reached by every row."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        out = np.empty(X.shape[0], dtype=np.int32)
        kernels().apply_tree(np.ascontiguousarray(X), self.feature, self.threshold, self.left,
                             self.right, out)
        return out

    def predict(self, X):
        return self.label[self.apply(X)]


def grow_tree(X, is_on, alpha, criterion="noisy", max_depth=4, seed=0,
              feature_subsample=None, weights=None, order=None):
    """Grow a significance tree on weighted On/Off rows.

    Parameters
    ----------
    X : (n, d) array
        Features of labeled rows only.
    is_on : (n,) bool array
        True for On-region rows, False for Off-region rows.
    alpha : float
        On/Off exposure ratio.
    criterion : {"lima", "noisy"}
    max_depth : int
        Depth 0 yields a single leaf.
    seed : int
        Seeds the per-split feature draws when ``feature_subsample`` is set.
    feature_subsample : int, optional
        Number of features drawn afresh at every split (forest mode).
    weights : (n,) array, optional
        Row multiplicities, e.g. bootstrap counts. Zero-weight rows are ignored.
    order : FeatureOrder, optional
        Precomputed :func:`argsort_features` of ``X``.

    Nodes split while the best split's score strictly beats the node's own
    value: ``max(sigma, 0)`` for ``"lima"`` (keep or discard the node),
    ``sigma**2`` for ``"noisy"``.
    A leaf is positive iff its significance is positive.
    """
    alpha = check_alpha(alpha)
    code = _criterion_code(criterion)
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    X, is_on, weights = _prepare(X, is_on, weights)
    n, d = X.shape
    if n == 0:
        raise ValueError("cannot grow a tree on an empty table")
    if feature_subsample is not None and not 1 <= feature_subsample <= d:
        raise ValueError(f"feature_subsample must lie in [1, {d}]")
    if order is None:
        order = argsort_features(X)
    rng = make_rng(seed, 0x7EE) if feature_subsample is not None else None
    active = weights > 0
    on_w = np.where(is_on == 1, weights, 0.0)
    off_w = np.where(is_on == 1, 0.0, weights)

    feature, threshold, left, right, n_on, n_off, depth = [-1], [0.0], [-1], [-1], [], [], [0]
    n_on.append(float(np.sum(on_w)))
    n_off.append(float(np.sum(off_w)))
    node_of = np.where(active, 0, -1).astype(np.int32)
    frontier = [0]
    for level in range(max_depth):
        if not frontier:
            break
        rows_per_node = np.bincount(node_of + 1, minlength=len(feature) + 1)[1:]
        cand = [q for q in frontier if rows_per_node[q] >= 2]
        if not cand:
            break
        # spare last slot maps inactive rows (-1) to -1
        local = np.full(len(feature) + 1, -1, dtype=np.int32)
        local[cand] = np.arange(len(cand), dtype=np.int32)
        node_local = local[node_of]
        mask = np.zeros((len(cand), d), dtype=np.uint8)
        if rng is None:
            mask[:] = 1
        else:
            picks = np.argsort(rng.random((len(cand), d)), axis=1)[:, :feature_subsample]
            np.put_along_axis(mask, picks, 1, axis=1)
        tot_on = np.array([n_on[q] for q in cand])
        tot_off = np.array([n_off[q] for q in cand])
        feat, theta, score, lon, loff = _run_level(order, is_on, weights, node_local,
                                                   mask, tot_on, tot_off, alpha, code)
        frontier = []
        split_nodes = []
        for i, q in enumerate(cand):
            if feat[i] < 0:
                continue
            if code == 0:
                # an unsplit node is either kept or discarded as negative
                node_value = max(_sigma_scalar(n_on[q], n_off[q], alpha), 0.0)
            else:
                node_value = _b_scalar(n_on[q], n_off[q], alpha)[0]
            if not score[i] > node_value + _REL_GAIN * max(1.0, abs(node_value)):
                continue
            lq, rq = len(feature), len(feature) + 1
            feature[q], threshold[q], left[q], right[q] = int(feat[i]), float(theta[i]), lq, rq
            for counts in ((lon[i], loff[i]), (n_on[q] - lon[i], n_off[q] - loff[i])):
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                n_on.append(float(counts[0]))
                n_off.append(float(counts[1]))
                depth.append(level + 1)
            frontier += [lq, rq]
            split_nodes.append(q)
        if not split_nodes:
            break
        kernels().route_rows(X, np.array(feature, dtype=np.int32),
                             np.array(threshold, dtype=np.float64),
                             np.array(left, dtype=np.int32),
                             np.array(right, dtype=np.int32), node_of)

    n_on = np.array(n_on)
    n_off = np.array(n_off)
    sigma = np.asarray(li_ma_significance(n_on, n_off, alpha), dtype=np.float64)
    return SigTree(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        n_on=n_on,
        n_off=n_off,
        sigma=sigma,
        label=(sigma > 0).astype(np.uint8),
        depth=np.array(depth, dtype=np.int32),
        n_features=d,
        max_depth=int(max_depth),
        criterion=criterion,
        alpha=alpha,
        seed=int(seed),
    )
