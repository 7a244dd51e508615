import json

import numpy as np
import pytest

from pitchipw.errors import DimensionMismatch, SingleClass
from pitchipw.propensity import (ForestHyperparams, PropensityModel, Tree, _best_split, clip_propensity, count_clipped,
                                 load_model, predict_propensity, save_model, train_forest)


def separable(n=500, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, (n, 1))
    return x, (x[:, 0] > 0).astype(int)


def leaf(value):
    return Tree(np.array([-1]), np.array([np.nan]), np.array([-1]), np.array([-1]), np.array([value]))


def test_separable_held_out_accuracy():
    x, z = separable(500)
    model = train_forest(x, z, ForestHyperparams(n_trees=25, max_depth=4, features_per_split=1, seed=3))
    xt, zt = separable(1000, seed=99)
    assert ((model.predict(xt) > 0.5) == zt).mean() >= 0.95
    assert model.oob_accuracy >= 0.95


def test_single_class():
    x, _ = separable(20)
    with pytest.raises(SingleClass):
        train_forest(x, np.ones(20, dtype=int), ForestHyperparams(n_trees=2, features_per_split=1))


def test_identical_vectors_warn_and_give_constant_prediction():
    X = np.ones((30, 2))
    z = np.r_[np.zeros(10, int), np.ones(20, int)]
    with pytest.warns(UserWarning, match="identical"):
        m = train_forest(X, z, ForestHyperparams(n_trees=4, features_per_split=2))
    assert all(len(t.feature) == 1 for t in m.trees)
    p = m.predict(np.array([[1.0, 1.0], [5.0, -2.0]]))
    assert p[0] == p[1]


def test_same_seed_same_bytes(tmp_path):
    rng = np.random.default_rng(1)
    X = rng.normal(size=(400, 6))
    z = (X[:, 0] + rng.normal(size=400) > 0).astype(int)
    hp = ForestHyperparams(n_trees=10, max_depth=5, features_per_split=3, seed=7)
    save_model(tmp_path / "a.json", train_forest(X, z, hp))
    save_model(tmp_path / "b.json", train_forest(X, z, hp, threads=3))
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    other = ForestHyperparams(n_trees=10, max_depth=5, features_per_split=3, seed=8)
    save_model(tmp_path / "c.json", train_forest(X, z, other))
    assert (tmp_path / "a.json").read_bytes() != (tmp_path / "c.json").read_bytes()


def test_order_invariance_with_unit_ids():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(300, 4))
    z = (X[:, 1] > 0.2).astype(int)
    ids = np.arange(300)
    perm = rng.permutation(300)
    hp = ForestHyperparams(n_trees=6, max_depth=4, features_per_split=2, seed=1)
    a = train_forest(X, z, hp, unit_id=ids)
    b = train_forest(X[perm], z[perm], hp, unit_id=ids[perm])
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())


def test_tree_invariants():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(600, 5))
    z = (X[:, 0] * X[:, 1] > 0).astype(int)
    hp = ForestHyperparams(n_trees=8, max_depth=3, features_per_split=2, seed=2)
    m = train_forest(X, z, hp)
    for t in m.trees:
        assert t.depth() <= 3
        leaves = t.leaves()
        assert np.all((leaves >= 0) & (leaves <= 1))
    p = m.predict(X)
    assert np.all((p >= 0) & (p <= 1))
    assert np.allclose(p, np.mean([t.predict(X) for t in m.trees], axis=0))


def test_best_split_midpoint_and_tie_rule():
    xs = np.array([0.0, 1.0, 2.0, 3.0])
    ys = np.array([0.0, 0.0, 1.0, 1.0])
    gain, thr = _best_split(xs, ys, 1)
    assert thr == 1.5 and gain > 0
    # two equally good cuts (after 1 or after 3 of 4 equal-Gini arrangements): smallest threshold wins
    xs = np.array([0.0, 1.0, 2.0, 3.0])
    ys = np.array([0.0, 1.0, 1.0, 0.0])
    _, thr = _best_split(xs, ys, 1)
    assert thr == 0.5
    assert _best_split(np.array([1.0, 1.0]), np.array([0.0, 1.0]), 1) is None


def test_stumps_recover_threshold():
    rng = np.random.default_rng(4)
    x = rng.uniform(0, 10, (800, 1))
    z = (x[:, 0] > 6.3).astype(int)
    m = train_forest(x, z, ForestHyperparams(n_trees=15, max_depth=1, features_per_split=1, seed=0))
    thr = np.median([t.threshold[0] for t in m.trees])
    assert abs(thr - 6.3) < 0.1


def test_predict_examples():
    m = PropensityModel([leaf(1.0)], ForestHyperparams(n_trees=1, features_per_split=1), ("a",))
    assert predict_propensity(m, np.array([0.3])) == 1.0
    m2 = PropensityModel([leaf(0.2), leaf(0.6)], ForestHyperparams(n_trees=2, features_per_split=1), ("a",))
    assert predict_propensity(m2, np.array([5.0])) == pytest.approx(0.4)
    with pytest.raises(DimensionMismatch):
        predict_propensity(m2, np.array([1.0, 2.0]))
    with pytest.raises(DimensionMismatch):
        m2.predict(np.zeros((3, 2)))


def test_adding_a_tree_is_a_mean_update():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(200, 3))
    z = (X[:, 2] > 0).astype(int)
    m = train_forest(X, z, ForestHyperparams(n_trees=5, max_depth=3, features_per_split=2, seed=1))
    k = len(m.trees) - 1
    smaller = PropensityModel(m.trees[:k], m.hyperparams, m.feature_names)
    new = m.trees[k].predict(X)
    assert np.allclose(m.predict(X), smaller.predict(X) + (new - smaller.predict(X)) / (k + 1))


def test_model_round_trip(tmp_path):
    x, z = separable(100)
    m = train_forest(x, z, ForestHyperparams(n_trees=3, max_depth=2, features_per_split=1, seed=0), feature_names=("x",))
    save_model(tmp_path / "m.json", m, {"seed": 0})
    back = load_model(tmp_path / "m.json")
    assert np.array_equal(back.predict(x), m.predict(x))
    assert back.feature_names == ("x",)
    assert json.loads((tmp_path / "m.json").read_text())["format"] == "pitchipw-forest/1"


def test_clip_examples():
    assert clip_propensity(0.0, 0.01) == 0.01
    assert clip_propensity(0.5, 0.01) == 0.5
    assert clip_propensity(0.999, 0.01) == 0.99
    assert count_clipped([0.0, 0.5, 0.999, 0.01], 0.01) == 2
    assert np.array_equal(clip_propensity(np.array([0.0, 1.0]), 0.1), [0.1, 0.9])
    with pytest.raises(ValueError):
        clip_propensity(0.5, 0.5)
    with pytest.raises(ValueError):
        clip_propensity(1.5, 0.01)


def test_hyperparam_validation():
    for bad in ({"n_trees": 0}, {"max_depth": 0}, {"min_leaf": 0}, {"features_per_split": 0}):
        with pytest.raises(ValueError):
            ForestHyperparams(**bad)
    x, z = separable(20)
    with pytest.raises(ValueError):
        train_forest(x, z, ForestHyperparams(n_trees=1, features_per_split=2))
