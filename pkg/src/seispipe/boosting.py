"""Histogram-based gradient-boosted trees for binary classification.

Logistic loss with optional positive-class weighting, depth-wise tree growth
on quantile-binned features, row and per-tree column subsampling, and early
stopping on validation AUC.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata

from .errors import DegenerateLabels, ShapeMismatch, SingleClass

HESSIAN_FLOOR = 1e-16
MODEL_MAGIC = b"SPGB"


@dataclass(frozen=True)
class GbtConfig:
    rounds: int = 1000
    max_depth: int = 6
    learning_rate: float = 0.05
    subsample: float = 0.8
    colsample: float = 0.8
    l2_lambda: float = 1.0
    scale_pos_weight: float | None = None  # None: negatives / positives of the training labels
    histogram_bins: int = 256
    early_stopping_rounds: int = 50
    min_child_weight: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.rounds < 1 or self.max_depth < 1:
            raise ValueError("rounds and max_depth must be at least 1")
        for name in ("learning_rate", "subsample", "colsample"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1]")
        if self.l2_lambda < 0 or self.min_child_weight < 0:
            raise ValueError("l2_lambda and min_child_weight must be non-negative")
        if not 2 <= self.histogram_bins <= 65536:
            raise ValueError("histogram_bins must lie in 2..65536")


# -- binning -----------------------------------------------------------------------

def quantize_features(X, bins: int = 256):
    """Map each feature to at most ``bins`` quantile bins.

    Returns ``(binned, edges)``; ``binned[i, j]`` counts the edges of feature j
    that are <= ``X[i, j]``. Features with at most ``bins`` distinct values get
    one bin per value (edges at midpoints), so binned splits equal exact splits.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D feature matrix, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite")
    edges = []
    binned = np.empty(X.shape, dtype=np.uint16)
    for j in range(X.shape[1]):
        col = X[:, j]
        uniq = np.unique(col)
        if uniq.size <= bins:
            e = (uniq[:-1] + uniq[1:]) / 2.0
        else:
            e = np.unique(np.quantile(col, np.linspace(0.0, 1.0, bins + 1)[1:-1]))
        edges.append(e)
        binned[:, j] = np.searchsorted(e, col, side="right")
    return binned, edges


def apply_bins(X, edges):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != len(edges):
        raise ShapeMismatch(f"expected {len(edges)} features, got {X.shape}")
    out = np.empty(X.shape, dtype=np.uint16)
    for j, e in enumerate(edges):
        out[:, j] = np.searchsorted(e, X[:, j], side="right")
    return out


# -- trees ---------------------------------------------------------------------------

@dataclass
class Tree:
    """Flat node arrays; ``feature == -1`` marks a leaf.

    Rows go left when ``x[feature] < threshold`` (equivalently bin <= split_bin).
    """

    feature: np.ndarray
    split_bin: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def depth(self) -> int:
        depth = np.zeros(self.feature.size, dtype=int)
        for n in range(self.feature.size):
            if self.feature[n] >= 0:
                depth[self.left[n]] = depth[self.right[n]] = depth[n] + 1
        return int(depth.max())

    def _route(self, go_left_fn, m):
        node = np.zeros(m, dtype=np.int64)
        while True:
            f = self.feature[node]
            active = f >= 0
            if not active.any():
                return self.value[node]
            idx = np.flatnonzero(active)
            left = go_left_fn(idx, f[idx], node[idx])
            node[idx] = np.where(left, self.left[node[idx]], self.right[node[idx]])

    def predict(self, X):
        return self._route(lambda i, f, n: X[i, f] < self.threshold[n], X.shape[0])

    def predict_binned(self, binned):
        return self._route(lambda i, f, n: binned[i, f] <= self.split_bin[n], binned.shape[0])


def _best_split(gh, cols, lam, min_child):
    """Best (gain, column position, bin) from per-feature cumulative histograms."""
    G_hist, H_hist = gh
    GL = np.cumsum(G_hist, axis=1)[:, :-1]
    HL = np.cumsum(H_hist, axis=1)[:, :-1]
    G = G_hist.sum(axis=1, keepdims=True)
    H = H_hist.sum(axis=1, keepdims=True)
    GR, HR = G - GL, H - HL
    gain = 0.5 * (GL ** 2 / (HL + lam) + GR ** 2 / (HR + lam) - G ** 2 / (H + lam))
    gain = np.where((HL >= min_child) & (HR >= min_child) & (HL > 0) & (HR > 0), gain, -np.inf)
    if gain.size == 0:
        return -np.inf, -1, -1
    flat = int(np.argmax(gain))
    j, b = divmod(flat, gain.shape[1])
    return float(gain[j, b]), j, b


def _grow_tree(binned, edges, g, h, rows, cols, cfg: GbtConfig, n_bins: int) -> Tree:
    lam = cfg.l2_lambda
    feature, split_bin, threshold, left, right, value = [], [], [], [], [], []

    def new_node():
        for arr in (feature, split_bin, left, right):
            arr.append(-1)
        threshold.append(np.nan)
        value.append(0.0)
        return len(feature) - 1

    offsets = (np.arange(cols.size) * n_bins)[None, :]
    root = new_node()
    frontier = [(root, rows)]
    for depth in range(cfg.max_depth + 1):
        nxt = []
        for node, idx in frontier:
            G, H = g[idx].sum(), h[idx].sum()
            value[node] = -G / (H + lam) * cfg.learning_rate
            if depth == cfg.max_depth or idx.size < 2:
                continue
            codes = (binned[np.ix_(idx, cols)].astype(np.int64) + offsets).ravel()
            size = cols.size * n_bins
            G_hist = np.bincount(codes, weights=np.repeat(g[idx], cols.size), minlength=size)
            H_hist = np.bincount(codes, weights=np.repeat(h[idx], cols.size), minlength=size)
            gain, j, b = _best_split((G_hist.reshape(cols.size, n_bins),
                                      H_hist.reshape(cols.size, n_bins)),
                                     cols, lam, cfg.min_child_weight)
            if not gain > 0.0:
                continue
            f = int(cols[j])
            go_left = binned[idx, f] <= b
            lnode, rnode = new_node(), new_node()
            feature[node], split_bin[node] = f, b
            threshold[node] = edges[f][b]
            left[node], right[node] = lnode, rnode
            nxt += [(lnode, idx[go_left]), (rnode, idx[~go_left])]
        frontier = nxt
        if not frontier:
            break
    return Tree(np.array(feature), np.array(split_bin), np.array(threshold),
                np.array(left), np.array(right), np.array(value))


# -- model -----------------------------------------------------------------------------

@dataclass
class GbtModel:
    trees: list
    base_score_logit: float
    feature_count: int
    config: GbtConfig = field(default_factory=GbtConfig)
    best_round: int = -1
    history: list = field(default_factory=list)  # validation AUC per round

    def margin(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.feature_count:
            raise ShapeMismatch(f"model expects {self.feature_count} features, got {X.shape}")
        out = np.full(X.shape[0], self.base_score_logit)
        for t in self.trees:
            out += t.predict(X)
        return out


def predict_proba(model: GbtModel, X) -> np.ndarray:
    """Probability of the positive class."""
    return expit(model.margin(X))


def weighted_logloss(margin, y, w):
    p = np.clip(expit(margin), 1e-15, 1 - 1e-15)
    return float(np.sum(w * -(y * np.log(p) + (1 - y) * np.log(1 - p))) / np.sum(w))


def auc(scores, labels) -> float:
    """Area under the ROC curve via the rank-sum (Mann-Whitney) statistic.

    Tied scores count one half.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ShapeMismatch("scores and labels differ in length")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("AUC needs both classes")
    ranks = rankdata(scores, method="average")
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _check_labels(y):
    y = np.asarray(y)
    if y.ndim != 1 or not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be a 1-D array of 0/1")
    if np.unique(y).size < 2:
        raise DegenerateLabels("training labels contain a single class")
    return y.astype(np.float64)


def train_gbt(X, y, cfg: GbtConfig = GbtConfig(), X_val=None, y_val=None) -> GbtModel:
    """Fit a boosted ensemble; stops early when validation AUC stalls.

    Without a validation set all ``cfg.rounds`` trees are grown.
    """
    X = np.asarray(X, dtype=np.float64)
    yf = _check_labels(y)
    if X.ndim != 2 or X.shape[0] != yf.size:
        raise ShapeMismatch(f"X {X.shape} does not match {yf.size} labels")
    spw = cfg.scale_pos_weight
    if spw is None:
        spw = float((yf == 0).sum() / (yf == 1).sum())
        cfg = replace(cfg, scale_pos_weight=spw)
    w = np.where(yf == 1, spw, 1.0)

    binned, edges = quantize_features(X, cfg.histogram_bins)
    n_bins = max((e.size + 1 for e in edges), default=1)
    M, F = X.shape
    rng = np.random.default_rng(cfg.seed)
    n_rows = max(1, int(round(cfg.subsample * M)))
    n_cols = max(1, int(round(cfg.colsample * F)))

    use_val = X_val is not None and y_val is not None and len(y_val) > 0
    if use_val:
        yv = np.asarray(y_val)
        binned_val = apply_bins(X_val, edges)
        val_margin = np.zeros(yv.size)

    model = GbtModel([], 0.0, F, cfg)
    margin = np.full(M, model.base_score_logit)
    best_auc, best_round = -np.inf, -1
    for t in range(cfg.rounds):
        p = expit(margin)
        g = w * (p - yf)
        h = np.maximum(w * p * (1.0 - p), HESSIAN_FLOOR)
        rows = np.arange(M) if n_rows == M else np.sort(rng.choice(M, n_rows, replace=False))
        cols = np.arange(F) if n_cols == F else np.sort(rng.choice(F, n_cols, replace=False))
        tree = _grow_tree(binned, edges, g, h, rows, cols, cfg, n_bins)
        model.trees.append(tree)
        margin += tree.predict_binned(binned)
        if use_val:
            val_margin += tree.predict_binned(binned_val)
            score = auc(val_margin, yv)
            model.history.append(score)
            if score > best_auc:
                best_auc, best_round = score, t
            elif t - best_round >= cfg.early_stopping_rounds:
                break
    if use_val:
        del model.trees[best_round + 1:]
        model.best_round = best_round
    else:
        model.best_round = len(model.trees) - 1
    return model


# -- model files -------------------------------------------------------------------------

def save_gbt(model: GbtModel, extra: dict | None = None) -> bytes:
    from .neural.checkpoint import pack_tensors

    config = {"kind": "gbt", "model": asdict(model.config),
              "base_score_logit": model.base_score_logit, "feature_count": model.feature_count,
              "best_round": model.best_round, "n_trees": len(model.trees)}
    config.update(extra or {})
    tensors = {}
    for k, t in enumerate(model.trees):
        for name in ("feature", "split_bin", "threshold", "left", "right", "value"):
            tensors[f"tree{k}.{name}"] = getattr(t, name)
    return pack_tensors(MODEL_MAGIC, config, tensors)


def load_gbt(buf: bytes):
    from .neural.checkpoint import unpack_tensors

    config, tensors = unpack_tensors(MODEL_MAGIC, buf)
    trees = []
    for k in range(config["n_trees"]):
        get = lambda name: tensors[f"tree{k}.{name}"]
        trees.append(Tree(get("feature").astype(np.int64), get("split_bin").astype(np.int64),
                          get("threshold"), get("left").astype(np.int64),
                          get("right").astype(np.int64), get("value")))
    model = GbtModel(trees, config["base_score_logit"], config["feature_count"],
                     GbtConfig(**config["model"]), config["best_round"])
    return model, config


def config_json(cfg: GbtConfig) -> str:
    return json.dumps(asdict(cfg), sort_keys=True)
