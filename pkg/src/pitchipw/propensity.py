"""Random-forest propensity model P(inside demand | confounders), written on numpy.

Trees are grown on bootstrap resamples with Gini splits over a random
subset of features at each node. Everything random flows from one master
seed: tree ``i`` draws from ``SeedSequence(seed, spawn_key=(i,))`` so the
forest is identical whether trees are grown serially or on threads.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, SingleClass

MODEL_FORMAT = "pitchipw-forest/1"


@dataclass(frozen=True)
class ForestHyperparams:
    n_trees: int = 130
    max_depth: int = 9
    min_leaf: int = 1
    features_per_split: int = 5  # ceil(sqrt(18))
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.features_per_split < 1:
            raise ValueError("features_per_split must be >= 1")


@dataclass
class Tree:
    """Flat binary tree. ``feature == -1`` marks a leaf; rows with x <= threshold go left."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        while True:
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                return self.leaf_value[node]
            ri = rows[inner]
            ni = node[inner]
            go_left = X[ri, f[inner]] <= self.threshold[ni]
            node[inner] = np.where(go_left, self.left[ni], self.right[ni])

    def depth(self) -> int:
        depth = np.zeros(len(self.feature), dtype=int)
        for i in range(len(self.feature)):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def leaves(self) -> np.ndarray:
        return self.leaf_value[self.feature < 0]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": [None if math.isnan(t) else t for t in self.threshold.tolist()],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "leaf_value": self.leaf_value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.array([np.nan if t is None else t for t in d["threshold"]], dtype=float),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            leaf_value=np.asarray(d["leaf_value"], dtype=float),
        )


@dataclass
class PropensityModel:
    trees: list[Tree]
    hyperparams: ForestHyperparams
    feature_names: tuple[str, ...]
    oob_accuracy: float = float("nan")

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise DimensionMismatch(f"expected {self.n_features} features, got {X.shape[1]}")
        total = np.zeros(len(X))
        for tree in self.trees:
            total += tree.predict(X)
        return total / len(self.trees)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "feature_names": list(self.feature_names),
            "hyperparams": asdict(self.hyperparams),
            "oob_accuracy": None if math.isnan(self.oob_accuracy) else self.oob_accuracy,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PropensityModel":
        if d.get("format") != MODEL_FORMAT:
            raise ValueError(f"unsupported model format {d.get('format')!r}")
        oob = d.get("oob_accuracy")
        return cls(
            trees=[Tree.from_dict(t) for t in d["trees"]],
            hyperparams=ForestHyperparams(**d["hyperparams"]),
            feature_names=tuple(d["feature_names"]),
            oob_accuracy=float("nan") if oob is None else float(oob),
        )


def save_model(path: str | Path, model: PropensityModel, metadata: dict | None = None) -> None:
    body = model.to_dict()
    if metadata is not None:
        body["metadata"] = metadata
    Path(path).write_text(json.dumps(body, separators=(",", ":")) + "\n")


def load_model(path: str | Path) -> PropensityModel:
    return PropensityModel.from_dict(json.loads(Path(path).read_text()))


def _best_split(xs: np.ndarray, ys: np.ndarray, min_leaf: int):
    """Best Gini split of one feature: (gain, threshold) or None.

    Ties go to the smallest threshold.
    """
    order = np.argsort(xs, kind="stable")
    xs = xs[order]
    n = len(xs)
    # candidate split after position i (left = [0..i])
    valid = xs[:-1] < xs[1:]
    if min_leaf > 1:
        pos = np.arange(1, n)
        valid &= (pos >= min_leaf) & (n - pos >= min_leaf)
    if not valid.any():
        return None
    cum_pos = np.cumsum(ys[order])[:-1]
    n_left = np.arange(1, n, dtype=float)
    n_right = n - n_left
    total_pos = cum_pos[-1] + ys[order][-1]
    pl, nl = cum_pos, n_left - cum_pos
    pr, nr = total_pos - cum_pos, n_right - (total_pos - cum_pos)
    score = (pl * pl + nl * nl) / n_left + (pr * pr + nr * nr) / n_right
    score = np.where(valid, score, -np.inf)
    i = int(np.argmax(score))
    gain = score[i] - (total_pos ** 2 + (n - total_pos) ** 2) / n
    lo, hi = xs[i], xs[i + 1]
    thr = lo + (hi - lo) / 2.0
    if thr >= hi:  # adjacent floats
        thr = lo
    return gain, thr


def _grow_tree(X: np.ndarray, y: np.ndarray, sample: np.ndarray, hp: ForestHyperparams,
               rng: np.random.Generator) -> Tree:
    n_feat = X.shape[1]
    k = min(hp.features_per_split, n_feat)
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        value.append(float(y[idx].mean()))
        return len(feature) - 1

    root = new_node(sample)
    stack = [(root, sample, 0)]
    while stack:
        node, idx, depth = stack.pop()
        n = len(idx)
        v = value[node]
        if depth >= hp.max_depth or n < 2 * hp.min_leaf or v == 0.0 or v == 1.0:
            continue
        ys = y[idx]
        chosen = []
        for f in rng.permutation(n_feat):
            col = X[idx, f]
            if col.min() < col.max():
                chosen.append((int(f), col))
                if len(chosen) == k:
                    break
        best = None
        for f, col in sorted(chosen, key=lambda t: t[0]):
            res = _best_split(col, ys, hp.min_leaf)
            if res is None:
                continue
            gain, thr = res
            if gain > 0 and (best is None or gain > best[0]):
                best = (gain, f, thr, col)
        if best is None:
            continue
        _, f, thr, col = best
        go_left = col <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[node], threshold[node] = f, thr
        lnode = new_node(li)
        rnode = new_node(ri)
        left[node], right[node] = lnode, rnode
        # right pushed first so the left subtree is numbered first
        stack.append((rnode, ri, depth + 1))
        stack.append((lnode, li, depth + 1))
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold, dtype=float),
                np.array(left, dtype=np.int64), np.array(right, dtype=np.int64), np.array(value, dtype=float))


def train_forest(X, z, hp: ForestHyperparams = ForestHyperparams(), unit_id=None,
                 feature_names=None, threads: int = 1) -> PropensityModel:
    """Fit the forest on (X, z); rows are first put in ``unit_id`` order."""
    X = np.asarray(X, dtype=float)
    z = np.asarray(z)
    if X.ndim != 2 or len(X) != len(z) or len(X) == 0:
        raise ValueError("X must be a nonempty 2-d array matching z")
    if feature_names is None:
        feature_names = tuple(f"x{j}" for j in range(X.shape[1]))
    if len(feature_names) != X.shape[1]:
        raise DimensionMismatch(f"{len(feature_names)} feature names for {X.shape[1]} columns")
    if hp.features_per_split > X.shape[1]:
        raise ValueError("features_per_split exceeds the number of features")
    if not np.isin(z, (0, 1)).all():
        raise ValueError("z must be 0/1")
    if z.min() == z.max():
        raise SingleClass(f"all {len(z)} records have Z={int(z[0])}")
    if unit_id is not None:
        order = np.argsort(np.asarray(unit_id), kind="stable")
        X, z = X[order], z[order]
    if np.all(X == X[0]):
        warnings.warn("all feature vectors are identical; every tree is a single leaf", stacklevel=2)
    y = z.astype(float)
    n = len(y)

    def fit_one(i):
        rng = np.random.default_rng(np.random.SeedSequence(hp.seed, spawn_key=(i,)))
        sample = rng.integers(0, n, n)
        return _grow_tree(X, y, sample, hp, rng), sample

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            fitted = list(pool.map(fit_one, range(hp.n_trees)))
    else:
        fitted = [fit_one(i) for i in range(hp.n_trees)]

    oob_sum = np.zeros(n)
    oob_cnt = np.zeros(n)
    for tree, sample in fitted:
        out = np.ones(n, dtype=bool)
        out[sample] = False
        if out.any():
            oob_sum[out] += tree.predict(X[out])
            oob_cnt[out] += 1
    seen = oob_cnt > 0
    oob_acc = float(((oob_sum[seen] / oob_cnt[seen] > 0.5) == (y[seen] == 1)).mean()) if seen.any() else float("nan")
    return PropensityModel([t for t, _ in fitted], hp, tuple(feature_names), oob_acc)


def predict_propensity(model: PropensityModel, x) -> float | np.ndarray:
    """Mean leaf fraction across trees; a single vector returns a float."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        if x.shape[0] != model.n_features:
            raise DimensionMismatch(f"expected {model.n_features} features, got {x.shape[0]}")
        return float(model.predict(x[None, :])[0])
    return model.predict(x)


def clip_propensity(p, epsilon: float = 0.01):
    """Clamp to [epsilon, 1 - epsilon]."""
    if not 0 < epsilon < 0.5:
        raise ValueError("epsilon must be in (0, 0.5)")
    if np.isscalar(p):
        if not 0 <= p <= 1:
            raise ValueError(f"propensity {p} outside [0, 1]")
        return min(max(float(p), epsilon), 1 - epsilon)
    return np.clip(np.asarray(p, dtype=float), epsilon, 1 - epsilon)


def count_clipped(p, epsilon: float = 0.01) -> int:
    p = np.asarray(p, dtype=float)
    return int(((p < epsilon) | (p > 1 - epsilon)).sum())
