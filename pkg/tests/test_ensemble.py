import math

import numpy as np
import pytest

import sigdetect.tree as tree_module
from sigdetect import EventTable, ModelSpec, fit_ensemble, oob_scores, tune_ensemble
from sigdetect.ensemble import EnsembleModel
from sigdetect.persistence import dumps_model
from sigdetect.significance import ScoredPredictions, li_ma_significance, tune_threshold
from sigdetect.synthetic import wobble_table
from sigdetect.table import ON


@pytest.fixture(scope="module")
def small_table():
    return wobble_table(n=1000, gamma_fraction=0.2, n_features=4, seed=1)


def test_spec_validation():
    with pytest.raises(ValueError):
        ModelSpec("svm", 0.2)
    with pytest.raises(ValueError):
        ModelSpec("kmeans", -1.0)
    with pytest.raises(ValueError):
        ModelSpec("kmeans", 0.2, n_estimators=0)
    with pytest.raises(ValueError):
        ModelSpec("kmeans", 0.2, tune="holdout")


def test_single_model_is_deterministic_and_crisp(small_table):
    spec = ModelSpec("noisy-tree", 0.2, max_depth=4)
    a = fit_ensemble(small_table, spec, seed=0)
    b = fit_ensemble(small_table, spec, seed=0)
    assert len(a.members) == 1 and a.membership is None
    assert dumps_model(a) == dumps_model(b)
    scores = a.predict_score(small_table.features)
    assert set(np.unique(scores)) <= {0.0, 1.0}
    assert np.array_equal(scores, a.members[0].predict(small_table.features))


def test_every_split_draws_floor_sqrt_d_features(monkeypatch):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(600, 22))
    region = np.where(rng.random(600) < 0.4, ON, 0)
    table = EventTable(X, region)
    seen = []
    original = tree_module._run_level

    def spy(order, is_on, weights, node_of, mask, *rest):
        seen.append(mask.sum(axis=1))
        return original(order, is_on, weights, node_of, mask, *rest)

    monkeypatch.setattr(tree_module, "_run_level", spy)
    fit_ensemble(table, ModelSpec("lima-tree", 0.5, max_depth=5, n_estimators=20), seed=2)
    counts = np.concatenate(seen)
    assert counts.size > 20
    assert math.isqrt(22) == 4
    assert np.all(counts == 4)


def test_bootstrap_draws_n_rows_with_distinct_fraction():
    table = wobble_table(n=1000, n_features=2, seed=3)
    model = fit_ensemble(table, ModelSpec("noisy-tree", 0.2, max_depth=2, n_estimators=50,
                                          tune="none"), seed=4)
    for drawn in model.membership:
        assert drawn.size == 1000
        assert 0.60 <= np.unique(drawn).size / 1000 <= 0.67


def test_kmeans_members_use_half_the_features(small_table):
    model = fit_ensemble(small_table, ModelSpec("kmeans", 0.2, k=4, n_estimators=5), seed=0)
    for member in model.members:
        assert member.feature_subset.size == math.ceil(small_table.n_features / 2)
    custom = fit_ensemble(small_table, ModelSpec("kmeans", 0.2, k=4, n_estimators=3,
                                                 feature_subset_size=3), seed=0)
    assert all(m.feature_subset.size == 3 for m in custom.members)


@pytest.mark.parametrize("kind", ["kmeans", "lima-tree", "noisy-tree"])
def test_reproducible_regardless_of_threads(small_table, kind):
    spec = ModelSpec(kind, 0.2, k=6, max_depth=4, n_estimators=12)
    one = fit_ensemble(small_table, spec, seed=9, threads=1)
    many = fit_ensemble(small_table, spec, seed=9, threads=4)
    assert dumps_model(one) == dumps_model(many)
    assert one.threshold == many.threshold
    assert all(np.array_equal(a, b) for a, b in zip(one.membership, many.membership))
    assert np.array_equal(one.predict_score(small_table.features),
                          many.predict_score(small_table.features))


def test_different_seeds_differ(small_table):
    spec = ModelSpec("noisy-tree", 0.2, max_depth=4, n_estimators=5)
    a = fit_ensemble(small_table, spec, seed=0)
    b = fit_ensemble(small_table, spec, seed=1)
    assert not all(np.array_equal(x, y) for x, y in zip(a.membership, b.membership))


class Const:
    n_features = 1

    def __init__(self, value):
        self.value = value

    def predict(self, X):
        return np.full(len(X), self.value, dtype=np.uint8)


def const_model(values, membership=None):
    spec = ModelSpec("noisy-tree", 1.0, n_estimators=len(values))
    return EnsembleModel(tuple(Const(v) for v in values), 0.5, spec, 0, 1, ("f0",), membership)


def test_predict_score_is_member_mean():
    X = np.zeros((3, 1))
    assert const_model([1, 1, 1]).predict_score(X).tolist() == [1.0] * 3
    assert const_model([1, 0, 1, 0]).predict_score(X).tolist() == [0.5] * 3
    assert const_model([0]).predict_score(X).tolist() == [0.0] * 3
    with pytest.raises(ValueError):
        const_model([1]).predict_score(np.zeros((2, 2)))


def test_oob_uses_only_members_without_the_row():
    table = EventTable(np.zeros((3, 1)), [ON, 0, ON])
    # row 0 only in member 0's bag; row 1 in both; row 2 in neither
    model = const_model([1, 0], membership=(np.array([0, 1]), np.array([1, 1])))
    preds, skipped = oob_scores(model, table)
    assert skipped == 1
    assert preds.rows.tolist() == [0, 2]
    assert preds.scores.tolist() == [0.0, 0.5]
    assert preds.is_on.tolist() == [True, True]


def test_oob_respects_recorded_membership(small_table):
    model = fit_ensemble(small_table, ModelSpec("lima-tree", 0.2, max_depth=3,
                                                n_estimators=30, tune="none"), seed=5)
    preds, skipped = oob_scores(model, small_table)
    assert skipped == 0 and preds.rows.size == small_table.n_rows
    outputs = model.member_outputs(small_table.features)
    for row, score in zip(preds.rows[:50], preds.scores[:50]):
        out = [t for t, drawn in enumerate(model.membership) if row not in drawn]
        assert score == outputs[out, row].mean()


def test_oob_has_no_skips_for_large_ensembles():
    table = wobble_table(n=1000, n_features=2, seed=6)
    skips = []
    for seed in range(5):
        model = fit_ensemble(table, ModelSpec("noisy-tree", 0.2, max_depth=1, n_estimators=100,
                                              tune="none"), seed=seed)
        skips.append(oob_scores(model, table)[1])
    assert skips == [0] * 5


def test_oob_requires_bootstrap(small_table):
    model = fit_ensemble(small_table, ModelSpec("lima-tree", 0.2, max_depth=2))
    with pytest.raises(ValueError):
        oob_scores(model, small_table)


def test_tune_ensemble_delegates():
    scores = np.array([0.9, 0.8, 0.2, 0.7, 0.1])
    is_on = np.array([True, True, True, False, False])
    model = tune_ensemble(const_model([1]), ScoredPredictions(scores, is_on))
    assert model.threshold == tune_threshold(scores, is_on, 1.0).theta == 0.75


def test_tune_ensemble_perfect_separation():
    scores = np.array([1.0] * 50 + [0.0] * 50)
    is_on = scores > 0.5
    model = tune_ensemble(const_model([1]), ScoredPredictions(scores, is_on))
    assert model.threshold == 0.5
    assert tune_threshold(scores, is_on, 1.0).sigma == li_ma_significance(50, 0, 1.0)


@pytest.mark.parametrize("tune", ["oob", "full"])
def test_tuned_threshold_is_finite(small_table, tune):
    model = fit_ensemble(small_table, ModelSpec("noisy-tree", 0.2, max_depth=3,
                                                n_estimators=10, tune=tune), seed=0)
    assert math.isfinite(model.threshold)
    assert np.all((model.predict_score(small_table.features) >= 0)
                  & (model.predict_score(small_table.features) <= 1))
