"""Evaluation protocols.

* grouped cross-validation with pooled holdout predictions, scored by the
  significance of detection on the full table;
* class-conditional label-noise (CCN) injection and stratified CV measuring
  F1 against clean labels;
* the fake-On transform used as a sanity check.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._rng import derive_seed, make_rng
from .ensemble import EnsembleModel, ModelSpec, fit_ensemble, oob_scores
from .metrics import auc, f1
from .significance import candidate_thresholds, li_ma_significance, tune_threshold
from .table import ON, DataError, EventTable


class NoiseSpec(NamedTuple):
    """Flip rates: ``p_plus`` turns positives Off, ``p_minus`` turns negatives On."""

    p_plus: float
    p_minus: float

    def validate(self):
        for name, p in zip(self._fields, self):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p!r}")
        return self

    @property
    def standard_regime(self):
        """True when ``p_plus + p_minus < 1``, where On still means more positives."""
        return self.p_plus + self.p_minus < 1.0


def inject_ccn_noise(clean_labels, noise: NoiseSpec, seed=0):
    """Region tags (On / Off(0)) drawn from clean +1/-1 labels.

    Row ``i`` flips iff ``u_i < p`` for its class rate ``p``, where ``u`` is
    one uniform stream addressed by ``seed``; flips therefore depend on the
    label, the seed and the row index only.
    """
    noise = NoiseSpec(*noise).validate()
    label = np.asarray(clean_labels)
    if label.ndim != 1 or not np.all(np.isin(label, (-1, 1))):
        raise ValueError("clean labels must be a vector of +1/-1")
    positive = label > 0
    u = make_rng(seed, 0xCC4).random(label.size)
    flip = u < np.where(positive, noise.p_plus, noise.p_minus)
    return np.where(positive != flip, ON, 0).astype(np.int64)


def fake_on_transform(table: EventTable, promote: int):
    """Drop the On rows and re-tag Off region ``promote`` as On.

    Other Off regions keep their indices; features are untouched.
    """
    offs = np.unique(table.region[table.off_mask])
    if offs.size < 2:
        raise DataError(f"fake-On needs at least 2 Off regions, table has {offs.size}")
    if promote not in offs:
        raise DataError(f"no Off region {promote}; present: {offs.tolist()}")
    keep = np.flatnonzero(~table.on_mask)
    out = table.take(keep)
    region = out.region.copy()
    region[region == promote] = ON
    return out.with_region(region)


def group_folds(groups, n_folds, seed=0):
    """Fold index per row; each group key lands in exactly one fold.

    Sorted distinct keys are shuffled with a seeded permutation and dealt
    round-robin, so every fold receives at least one group.
    """
    if n_folds < 2:
        raise ValueError("n_folds must be >= 2")
    keys, inverse = np.unique(np.asarray(groups), return_inverse=True)
    if keys.size < n_folds:
        raise DataError(f"{keys.size} distinct groups cannot fill {n_folds} folds")
    perm = make_rng(seed, 0xF01D).permutation(keys.size)
    fold_of_key = np.empty(keys.size, dtype=np.int64)
    fold_of_key[perm] = np.arange(keys.size) % n_folds
    return fold_of_key[inverse.ravel()]


def stratified_folds(labels, n_folds, seed=0):
    """Fold index per row with each class spread evenly over the folds."""
    if n_folds < 2:
        raise ValueError("n_folds must be >= 2")
    labels = np.asarray(labels)
    fold = np.empty(labels.size, dtype=np.int64)
    rng = make_rng(seed, 0x5F)
    for value in np.unique(labels):
        rows = np.flatnonzero(labels == value)
        if rows.size < n_folds:
            raise DataError(f"class {value} has {rows.size} rows, fewer than {n_folds} folds")
        fold[rng.permutation(rows)] = np.arange(rows.size) % n_folds
    return fold


class CvPredictions(NamedTuple):
    """Pooled holdout output; one entry per labeled table row."""

    scores: np.ndarray
    is_on: np.ndarray
    rows: np.ndarray
    fold: np.ndarray
    predicted: np.ndarray
    folds: list


def grouped_cv_predict(table: EventTable, spec: ModelSpec, n_folds, seed=0, threads=1):
    """Score every labeled row with a model that never saw its group.

    ``predicted`` applies each fold model's own threshold; ``scores`` are
    the raw model scores for pooled threshold tuning.
    """
    rows = np.flatnonzero(table.labeled_mask)
    labeled = table.take(rows)
    fold = group_folds(labeled.group, n_folds, seed)
    scores = np.empty(rows.size)
    predicted = np.empty(rows.size, dtype=np.uint8)
    diagnostics = []
    for f in range(n_folds):
        test = np.flatnonzero(fold == f)
        train = labeled.take(np.flatnonzero(fold != f))
        model = fit_ensemble(train, spec, seed=derive_seed(seed, 0xF0, f), threads=threads)
        scores[test] = model.predict_score(labeled.features[test])
        predicted[test] = scores[test] > model.threshold
        diagnostics.append({
            "fold": f,
            "train_on": train.n_on,
            "train_off": train.n_off,
            "test_on": int(np.count_nonzero(labeled.on_mask[test])),
            "test_off": int(np.count_nonzero(labeled.off_mask[test])),
            "theta": float(model.threshold),
        })
    return CvPredictions(scores, labeled.on_mask, rows, fold, predicted, diagnostics)


def pooled_significance(preds: CvPredictions, alpha, tune="pooled"):
    """Significance of pooled holdout predictions.

    ``tune="pooled"`` picks one threshold on the pooled scores; ``"fold"``
    keeps every fold model's own threshold. Returns ``(sigma, theta)``,
    with ``theta`` None in fold mode.
    """
    if tune == "pooled":
        result = tune_threshold(preds.scores, preds.is_on, alpha)
        return result.sigma, result.theta
    if tune == "fold":
        sel = preds.predicted.astype(bool)
        n_on = np.count_nonzero(sel & preds.is_on)
        n_off = np.count_nonzero(sel & ~preds.is_on)
        return li_ma_significance(n_on, n_off, alpha), None
    raise ValueError("tune must be 'pooled' or 'fold'")


def _mean_std(values):
    values = np.asarray(values, dtype=np.float64)
    return float(values.mean()), float(values.std())


_SIX_DECIMALS = ("sigma", "theta")


def _rounded(value, key=""):
    if isinstance(value, dict):
        return {k: _rounded(v, k) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_rounded(v, key) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            return None
        digits = 6 if any(tag in key for tag in _SIX_DECIMALS) else 4
        # + 0.0 turns -0.0 into 0.0
        return round(float(value), digits) + 0.0
    return value


@dataclass
class EvalReport:
    """Results of one protocol run; unset statistics are omitted on output."""

    protocol: str
    params: dict
    sigma: float | None = None
    sigma_mean: float | None = None
    sigma_std: float | None = None
    f1: float | None = None
    f1_std: float | None = None
    oracle_f1: float | None = None
    oracle_f1_std: float | None = None
    auc: float | None = None
    pearson: float | None = None
    spearman: float | None = None
    skipped: int = 0
    runs: list = field(default_factory=list)

    def to_dict(self):
        out = {"protocol": self.protocol, "params": dict(self.params)}
        for name in ("sigma", "sigma_mean", "sigma_std", "f1", "f1_std", "oracle_f1",
                     "oracle_f1_std", "auc", "pearson", "spearman"):
            value = getattr(self, name)
            if value is not None:
                out[name] = _rounded(value, name)
        out["skipped"] = int(self.skipped)
        out["runs"] = _rounded(self.runs)
        return out

    def to_json(self):
        """Sorted-key JSON; sigma and theta to 6 decimals, other metrics to 4."""
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def evaluate_grouped(table: EventTable, spec: ModelSpec, n_folds, seed=0, repeats=1,
                     tune="pooled", threads=1, protocol="grouped-cv"):
    """Grouped CV repeated ``repeats`` times with derived seeds."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    runs, sigmas = [], []
    for r in range(repeats):
        run_seed = derive_seed(seed, 0x6C, r)
        preds = grouped_cv_predict(table, spec, n_folds, run_seed, threads)
        sigma, theta = pooled_significance(preds, spec.alpha, tune)
        sigmas.append(sigma)
        runs.append({"repeat": r, "sigma": sigma, "theta": theta, "folds": preds.folds})
    mean, std = _mean_std(sigmas)
    params = {"model": spec.hyperparameters, "folds": n_folds, "seed": int(seed),
              "repeats": repeats, "tune": tune, "n_on": table.n_on, "n_off": table.n_off}
    return EvalReport(protocol, params, sigma=sigmas[0], sigma_mean=mean, sigma_std=std,
                      runs=runs)


def tune_threshold_f1(scores, truth):
    """Threshold maximizing F1 against ``truth`` (ties: smallest threshold).

    Uses the same candidate set as significance tuning.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    truth = np.asarray(truth).ravel() > 0
    if scores.size == 0 or scores.shape != truth.shape:
        raise ValueError("need equally long, non-empty scores and truth")
    values, inverse = np.unique(scores, return_inverse=True)
    pos = np.bincount(inverse, weights=truth, minlength=values.size)
    cnt = np.bincount(inverse, minlength=values.size)
    tp = np.concatenate([np.cumsum(pos[::-1])[::-1], [0.0]])
    selected = np.concatenate([np.cumsum(cnt[::-1])[::-1], [0]])
    denom = selected + np.count_nonzero(truth)
    score = np.divide(2.0 * tp, denom, out=np.zeros_like(tp), where=tp > 0)
    best = int(np.argmax(score))
    return float(candidate_thresholds(values)[best]), float(score[best])


def _oracle_threshold(model: EnsembleModel, train: EventTable):
    # same fitted model, threshold tuned for F1 on clean labels instead of
    # significance on region tags
    if model.membership is not None:
        preds, _ = oob_scores(model, train)
        return tune_threshold_f1(preds.scores, train.clean_label[preds.rows])[0]
    return tune_threshold_f1(model.predict_score(train.features), train.clean_label)[0]


def stratified_cv_f1(table: EventTable, noise: NoiseSpec, spec: ModelSpec, n_folds=10,
                     n_trials=20, seed=0, threads=1):
    """F1 against clean labels of models trained on noise-injected tags.

    Per trial, noise is drawn once for all rows but only training rows
    enter fitting; held-out rows are judged by their clean labels. F1 and
    AUC are computed on the pooled holdout predictions of the trial. The
    oracle column re-tunes each fold model's threshold for F1 on clean
    out-of-bag labels.
    """
    if table.clean_label is None:
        raise DataError("noisy-label evaluation needs clean labels")
    noise = NoiseSpec(*noise).validate()
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    clean = table.clean_label
    runs, f1s, oracle_f1s, aucs = [], [], [], []
    for t in range(n_trials):
        fold = stratified_folds(clean, n_folds, derive_seed(seed, 0x7A, t))
        noisy = inject_ccn_noise(clean, noise, derive_seed(seed, 0x401, t))
        noisy_table = table.with_region(noisy)
        scores = np.empty(table.n_rows)
        pred = np.zeros(table.n_rows, dtype=bool)
        oracle_pred = np.zeros(table.n_rows, dtype=bool)
        for f in range(n_folds):
            test = np.flatnonzero(fold == f)
            train = noisy_table.take(np.flatnonzero(fold != f))
            model = fit_ensemble(train, spec, seed=derive_seed(seed, 0xF1, t, f),
                                 threads=threads)
            scores[test] = model.predict_score(table.features[test])
            pred[test] = scores[test] > model.threshold
            oracle_pred[test] = scores[test] > _oracle_threshold(model, train)
        run = {"trial": t, "f1": f1(pred, clean), "oracle_f1": f1(oracle_pred, clean),
               "flipped": int(np.count_nonzero((noisy == ON) != (clean > 0)))}
        if np.ptp(scores) > 0:
            run["auc"] = auc(scores, clean)
            aucs.append(run["auc"])
        f1s.append(run["f1"])
        oracle_f1s.append(run["oracle_f1"])
        runs.append(run)
    params = {"model": spec.hyperparameters, "folds": n_folds, "trials": n_trials,
              "seed": int(seed), "p_plus": noise.p_plus, "p_minus": noise.p_minus,
              "standard_regime": noise.standard_regime}
    f1_mean, f1_std = _mean_std(f1s)
    oracle_mean, oracle_std = _mean_std(oracle_f1s)
    return EvalReport("noisy-cv", params, f1=f1_mean, f1_std=f1_std, oracle_f1=oracle_mean,
                      oracle_f1_std=oracle_std,
                      auc=float(np.mean(aucs)) if aucs else None, runs=runs)
