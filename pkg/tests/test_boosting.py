import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from seispipe.boosting import (GbtConfig, apply_bins, auc, load_gbt, predict_proba,
                               quantize_features, save_gbt, train_gbt, weighted_logloss)
from seispipe.errors import CheckpointError, DegenerateLabels, ShapeMismatch, SingleClass

from oracles import auc_pairs

FULL = dict(subsample=1.0, colsample=1.0)


def toy(n=60, f=3, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, f))
    y = (X[:, 0] + 0.5 * X[:, 1] + 0.3 * rng.standard_normal(n) > 0).astype(int)
    return X, y


# -- binning -------------------------------------------------------------------------

def test_few_distinct_values_get_one_bin_each():
    X = np.array([[3.0], [1.0], [2.0], [1.0], [3.0]])
    binned, (edges,) = quantize_features(X, 256)
    assert edges.tolist() == [1.5, 2.5]
    assert binned[:, 0].tolist() == [2, 0, 1, 0, 2]


def test_two_bins_split_at_the_median():
    binned, (edges,) = quantize_features(np.array([[1.0], [2.0], [3.0], [4.0]]), 2)
    assert edges.tolist() == [2.5] and binned[:, 0].tolist() == [0, 0, 1, 1]


def test_many_values_are_capped_and_monotone():
    x = np.random.default_rng(1).standard_normal(5000)
    binned, (edges,) = quantize_features(x[:, None], 16)
    assert binned.max() <= 15 and np.all(np.diff(edges) > 0)
    order = np.argsort(x)
    assert np.all(np.diff(binned[order, 0].astype(int)) >= 0)
    assert np.array_equal(apply_bins(x[:, None], [edges]), binned)


def test_binning_errors():
    with pytest.raises(ShapeMismatch):
        quantize_features(np.zeros(4))
    with pytest.raises(ValueError):
        quantize_features(np.array([[np.nan]]))
    with pytest.raises(ShapeMismatch):
        apply_bins(np.zeros((2, 3)), [np.zeros(1)])


# -- single trees against brute force --------------------------------------------------

def brute_force_stump(X, y, lam, lr, min_child, spw):
    """Best depth-1 tree by enumerating every feature and every midpoint threshold."""
    w = np.where(y == 1, spw, 1.0)
    g = w * (0.5 - y)
    h = w * 0.25
    G, H = g.sum(), h.sum()
    best = (0.0, None)
    for j in range(X.shape[1]):
        vals = np.unique(X[:, j])
        for a, b in zip(vals[:-1], vals[1:]):
            thr = (a + b) / 2
            left = X[:, j] < thr
            GL, HL = g[left].sum(), h[left].sum()
            GR, HR = G - GL, H - HL
            if HL < min_child or HR < min_child:
                continue
            gain = 0.5 * (GL ** 2 / (HL + lam) + GR ** 2 / (HR + lam) - G ** 2 / (H + lam))
            if gain > best[0] + 1e-12:
                best = (gain, (j, thr, -GL / (HL + lam) * lr, -GR / (HR + lam) * lr))
    return best[1], -G / (H + lam) * lr


@pytest.mark.parametrize("seed", range(8))
def test_first_stump_matches_exhaustive_search(seed):
    rng = np.random.default_rng(seed)
    X = np.round(rng.standard_normal((40, 3)), 2)
    y = rng.integers(0, 2, 40)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    cfg = GbtConfig(rounds=1, max_depth=1, learning_rate=0.3, l2_lambda=0.7,
                    min_child_weight=0.5, scale_pos_weight=1.5, **FULL)
    tree = train_gbt(X, y, cfg).trees[0]
    split, root = brute_force_stump(X, y, 0.7, 0.3, 0.5, 1.5)
    assert abs(tree.value[0] - root) <= 1e-12
    j, thr, wl, wr = split
    assert tree.feature[0] == j and tree.threshold[0] == thr
    assert abs(tree.value[tree.left[0]] - wl) <= 1e-12
    assert abs(tree.value[tree.right[0]] - wr) <= 1e-12


def test_leaf_weight_formula_on_unsplittable_root():
    X, y = toy(30)
    cfg = GbtConfig(rounds=1, learning_rate=0.1, l2_lambda=2.0, min_child_weight=1e9,
                    scale_pos_weight=1.0, **FULL)
    (tree,) = train_gbt(X, y, cfg).trees
    g = 0.5 - y
    assert tree.feature.tolist() == [-1]
    assert abs(tree.value[0] - (-g.sum() / (30 * 0.25 + 2.0) * 0.1)) <= 1e-15


def test_depth_limit_and_raw_vs_binned_prediction_agree():
    X, y = toy(200, 4, seed=2)
    model = train_gbt(X, y, GbtConfig(rounds=5, max_depth=3, seed=1))
    binned, _ = quantize_features(X, 256)
    for t in model.trees:
        assert t.depth <= 3
        assert np.array_equal(t.predict(X), t.predict_binned(binned))


# -- ensembles --------------------------------------------------------------------------

def test_training_loss_never_increases():
    X, y = toy(150, seed=3)
    cfg = GbtConfig(rounds=40, max_depth=3, learning_rate=0.2, **FULL)
    model = train_gbt(X, y, cfg)
    w = np.where(y == 1, cfg_spw(y), 1.0)
    margin = np.zeros(len(y))
    losses = [weighted_logloss(margin, y, w)]
    for t in model.trees:
        margin = margin + t.predict(X)
        losses.append(weighted_logloss(margin, y, w))
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


def cfg_spw(y):
    return (y == 0).sum() / (y == 1).sum()


def test_default_positive_weight_is_class_ratio():
    y = np.r_[np.ones(10632, dtype=int), np.zeros(59498, dtype=int)]
    X = np.arange(y.size, dtype=float)[:, None]
    model = train_gbt(X, y, GbtConfig(rounds=1, max_depth=1, histogram_bins=16))
    assert model.config.scale_pos_weight == 59498 / 10632


def test_seeded_training_is_reproducible():
    X, y = toy(120, seed=4)
    a = train_gbt(X, y, GbtConfig(rounds=20, seed=7))
    b = train_gbt(X, y, GbtConfig(rounds=20, seed=7))
    assert np.array_equal(a.margin(X), b.margin(X))
    c = train_gbt(X, y, GbtConfig(rounds=20, seed=8))
    assert not np.array_equal(a.margin(X), c.margin(X))


def test_early_stopping_keeps_best_prefix():
    X, y = toy(200, seed=5)
    Xv, yv = toy(80, seed=6)
    model = train_gbt(X, y, GbtConfig(rounds=300, early_stopping_rounds=5, max_depth=2), Xv, yv)
    best = model.best_round
    assert len(model.trees) == best + 1
    assert model.history[best] == max(model.history)
    assert len(model.history) <= best + 1 + 5
    assert len(model.history) < 300
    assert abs(auc(predict_proba(model, Xv), yv) - model.history[best]) <= 1e-12


def test_label_and_shape_errors():
    X, y = toy(20)
    with pytest.raises(DegenerateLabels):
        train_gbt(X, np.zeros(20, dtype=int))
    with pytest.raises(ValueError):
        train_gbt(X, np.full(20, 2))
    with pytest.raises(ShapeMismatch):
        train_gbt(X, y[:-1])
    model = train_gbt(X, y, GbtConfig(rounds=2))
    with pytest.raises(ShapeMismatch):
        model.margin(np.zeros((2, 4)))


def test_config_validation():
    for kw in ({"rounds": 0}, {"learning_rate": 0.0}, {"subsample": 1.5}, {"l2_lambda": -1},
               {"histogram_bins": 1}):
        with pytest.raises(ValueError):
            GbtConfig(**kw)


# -- ranking ------------------------------------------------------------------------------

def test_auc_examples():
    assert auc([0.1, 0.9], [0, 1]) == 1.0
    assert auc([0.9, 0.1], [0, 1]) == 0.0
    assert auc([0.5, 0.5, 0.5], [0, 1, 1]) == 0.5
    with pytest.raises(SingleClass):
        auc([0.1, 0.2], [1, 1])
    with pytest.raises(ShapeMismatch):
        auc([0.1], [0, 1])


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 60).flatmap(lambda n: st.tuples(
    hnp.arrays(np.float64, n, elements=st.sampled_from([0.0, 0.25, 0.5, 1.0, -3.0, 7.5])),
    hnp.arrays(np.int64, n, elements=st.integers(0, 1)))))
def test_auc_equals_pair_count_with_ties(data):
    scores, labels = data
    if labels.min() == labels.max():
        labels[0] = 1 - labels[0]
    assert auc(scores, labels) == float(auc_pairs(scores.tolist(), labels.tolist()))


# -- model files ----------------------------------------------------------------------------

def test_save_load_round_trip():
    X, y = toy(100, seed=9)
    model = train_gbt(X, y, GbtConfig(rounds=15, max_depth=3))
    blob = save_gbt(model, {"note": 1})
    back, config = load_gbt(blob)
    assert config["note"] == 1 and back.config == model.config
    assert np.array_equal(back.margin(X), model.margin(X))
    with pytest.raises(CheckpointError):
        load_gbt(blob[:-1])
    with pytest.raises(CheckpointError):
        load_gbt(b"SPMD" + blob[4:])
