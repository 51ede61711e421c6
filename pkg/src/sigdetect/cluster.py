"""K-means detector: cluster all events, then pick the clusters to call positive.

The cluster-to-class assignment maximizes the significance of the selected
clusters' pooled On/Off counts. It is solved on the relaxed box [0, 1]^k by
projected gradient ascent, then rounded and polished by single flips.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from ._rng import make_rng
from .significance import _sigma_scalar, check_alpha, li_ma_significance

MAX_EXHAUSTIVE_K = 20


def nearest_centroid(X, centroids):
    """Closest centroid per row; ties go to the lowest centroid index."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    C = np.ascontiguousarray(centroids, dtype=np.float64)
    if X.ndim != 2 or C.ndim != 2 or X.shape[1] != C.shape[1]:
        raise ValueError(f"dimension mismatch: rows have {X.shape[-1]} features, "
                         f"centroids {C.shape[-1]}")
    out = np.empty(X.shape[0], dtype=np.int64)
    kernels().nearest_centroid(X, C, out)
    return out


def _kmeanspp(X, k, rng):
    # greedy k-means++: several D^2-sampled candidates per step, keep the one
    # that lowers the potential most
    n = X.shape[0]
    n_trials = 2 + int(math.log(k))
    centers = np.empty((k, X.shape[1]))
    first = int(rng.integers(n))
    centers[0] = X[first]
    closest = np.sum((X - X[first]) ** 2, axis=1)
    for c in range(1, k):
        potential = closest.sum()
        if potential > 0:
            cum = np.cumsum(closest)
            picks = np.searchsorted(cum, rng.random(n_trials) * potential, side="right")
            picks = np.minimum(picks, n - 1)
        else:  # fewer distinct points than clusters
            picks = rng.integers(n, size=n_trials)
        dist = np.sum((X[None, :, :] - X[picks][:, None, :]) ** 2, axis=2)
        dist = np.minimum(closest[None, :], dist)
        best = int(np.argmin(dist.sum(axis=1)))
        centers[c] = X[picks[best]]
        closest = dist[best]
    return centers


def fit_kmeans(X, k, seed=0, max_iter=300):
    """k-means++ seeding followed by Lloyd iterations until labels stop changing.

    Empty clusters keep their previous centroid. Deterministic given ``seed``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be two-dimensional")
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite")
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > X.shape[0]:
        raise ValueError(f"k={k} exceeds the number of rows ({X.shape[0]})")
    centers = _kmeanspp(X, k, make_rng(seed, 0xC1))
    labels = None
    for _ in range(max_iter):
        new_labels = nearest_centroid(X, centers)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        size = np.bincount(labels, minlength=k)
        filled = size > 0
        for j in range(X.shape[1]):
            sums = np.bincount(labels, weights=X[:, j], minlength=k)
            centers[filled, j] = sums[filled] / size[filled]
    return centers


def cluster_counts(X, is_on, centroids):
    """Per-cluster (n_on, n_off) tallies of labeled rows, shape (k, 2)."""
    labels = nearest_centroid(X, centroids)
    is_on = np.asarray(is_on, dtype=bool)
    k = len(centroids)
    return np.column_stack([
        np.bincount(labels[is_on], minlength=k),
        np.bincount(labels[~is_on], minlength=k),
    ]).astype(np.float64)


def _as_counts(counts):
    counts = np.asarray(counts, dtype=np.float64)
    if counts.ndim != 2 or counts.shape[1] != 2 or counts.shape[0] < 1:
        raise ValueError("counts must have shape (k, 2) with k >= 1")
    if np.any(counts < 0) or not np.all(np.isfinite(counts)):
        raise ValueError("counts must be finite and non-negative")
    return counts


def assignment_significance(counts, assignment, alpha):
    counts = _as_counts(counts)
    selected = np.asarray(assignment, dtype=np.float64) @ counts
    return li_ma_significance(selected[0], selected[1], alpha)


def _flip_pass(counts, best, alpha):
    on, off = counts[:, 0], counts[:, 1]
    n_on, n_off = float(best @ on), float(best @ off)
    best_sigma = li_ma_significance(n_on, n_off, alpha)
    for c in range(len(best)):
        sign = -1.0 if best[c] else 1.0
        t_on, t_off = n_on + sign * on[c], n_off + sign * off[c]
        trial_sigma = li_ma_significance(max(t_on, 0.0), max(t_off, 0.0), alpha)
        if trial_sigma > best_sigma:
            best[c] ^= 1
            n_on, n_off, best_sigma = t_on, t_off, trial_sigma
    return best, best_sigma


def exhaustive_assignment(counts, alpha):
    """Best of all 2^k assignments.

    Ties go to the fewest selected clusters, then the lexicographically
    smallest vector.
    """
    alpha = check_alpha(alpha)
    counts = _as_counts(counts)
    k = len(counts)
    if k > MAX_EXHAUSTIVE_K:
        raise ValueError(f"exhaustive search is limited to k <= {MAX_EXHAUSTIVE_K}")
    # bit (k-1-c) of a code holds a_c, so integer order is lexicographic order
    codes = np.arange(2 ** k, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(k - 1, -1, -1)) & 1
    sums = bits.astype(np.float64) @ counts
    sigma = li_ma_significance(sums[:, 0], sums[:, 1], alpha)
    tied = np.flatnonzero(sigma == sigma.max())
    size = bits[tied].sum(axis=1)
    best = tied[size == size.min()][0]
    return bits[best].astype(np.uint8)


def optimize_assignment(counts, alpha, n_iter=500, step=0.1):
    """Relaxed significance maximization over [0, 1]^k.

    Projected gradient ascent from a = 0.5 with max-norm-normalized steps of
    length ``step``, then rounding at 0.5 and one pass of single flips that
    strictly improve the significance. Never worse than selecting nothing.
    """
    alpha = check_alpha(alpha)
    counts = _as_counts(counts)
    k = len(counts)
    zero = np.zeros(k, dtype=np.uint8)
    if not np.any(counts > 0):
        return zero
    on, off = counts[:, 0], counts[:, 1]
    a = np.full(k, 0.5)
    balance_dir = on - alpha * off
    for _ in range(n_iter):
        n_on, n_off = float(a @ on), float(a @ off)
        sigma = _sigma_scalar(n_on, n_off, alpha)
        if abs(sigma) > 1e-9:
            # d sigma = dB / (2 sigma), with dB/dn_on = 2 ln a, dB/dn_off = 2 ln b;
            # counts floored so both logs exist
            f_on, f_off = max(n_on, 1e-12), max(n_off, 1e-12)
            total = f_on + f_off
            excess = f_on - alpha * f_off
            g_on = 2.0 * math.log1p(excess / (alpha * total))
            g_off = 2.0 * math.log1p(-excess / total)
            grad = (g_on * on + g_off * off) / (2.0 * sigma)
        else:  # at balance sigma is linear in the excess
            grad = balance_dir
        scale = np.max(np.abs(grad))
        if not scale > 0:
            break
        a = np.clip(a + step * grad / scale, 0.0, 1.0)

    best, best_sigma = _flip_pass(counts, (a > 0.5).astype(np.uint8), alpha)
    if best_sigma < 0.0:
        return zero
    return best


@dataclass(frozen=True)
class ClusterDetector:
    centroids: np.ndarray
    assignment: np.ndarray
    feature_subset: np.ndarray
    n_features: int
    seed: int

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        return self.assignment[nearest_centroid(X[:, self.feature_subset], self.centroids)]


def fit_cluster_detector(X, is_on, k, alpha, seed=0, feature_subset=None, max_iter=300,
                         method="pga"):
    """Cluster labeled rows and assign clusters to classes.

    ``method`` is ``"pga"`` (relaxed ascent) or ``"exhaustive"`` (k <= 20).
    """
    X = np.asarray(X, dtype=np.float64)
    d = X.shape[1]
    if feature_subset is None:
        feature_subset = np.arange(d)
    feature_subset = np.sort(np.asarray(feature_subset, dtype=np.int64))
    Xs = np.ascontiguousarray(X[:, feature_subset])
    centroids = fit_kmeans(Xs, k, seed=seed, max_iter=max_iter)
    counts = cluster_counts(Xs, is_on, centroids)
    if method == "pga":
        assignment = optimize_assignment(counts, alpha)
    elif method == "exhaustive":
        assignment = exhaustive_assignment(counts, alpha)
    else:
        raise ValueError(f"unknown assignment method {method!r}")
    return ClusterDetector(centroids, assignment, feature_subset, d, int(seed))
