"""Binary information-gain decision tree and a bagged random forest."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .estimators import _check_predict_input, _encode_targets, _normalize, _ScoreThresholdMixin

_GAIN_EPS = 1e-12


def _entropy_rows(counts: np.ndarray) -> np.ndarray:
    """Entropy in bits of each row of a class-count matrix."""
    counts = np.asarray(counts, dtype=float)
    n = counts.sum(axis=-1, keepdims=True)
    p = counts / np.where(n > 0, n, 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1)), 0.0)
    return -terms.sum(axis=-1)


def best_split(X, y_idx, n_classes, features, min_leaf):
    """Best ``(gain, feature, threshold)`` over ``features`` or ``None``.

    Thresholds are midpoints between consecutive distinct values.  Ties go
    to the lowest feature index, then the lowest threshold.
    """
    feats = np.sort(np.asarray(list(features), dtype=int))
    n = len(y_idx)
    if n < 2 or len(feats) == 0:
        return None
    Xf = X[:, feats]
    order = np.argsort(Xf, axis=0, kind="stable")
    xs = np.take_along_axis(Xf, order, axis=0)
    onehot = np.eye(n_classes)[y_idx]
    total = onehot.sum(axis=0)
    left = np.cumsum(onehot[order], axis=0)[:-1]  # (n-1, F, C)
    right = total - left
    nl = np.arange(1, n, dtype=float)[:, None]
    nr = n - nl
    child = (nl * _entropy_rows(left) + nr * _entropy_rows(right)) / n
    gain = _entropy_rows(total) - child
    valid = xs[:-1] < xs[1:]
    valid &= (nl >= min_leaf) & (nr >= min_leaf)
    gain = np.where(valid, gain, -np.inf)
    top = gain.max()
    if not np.isfinite(top) or top <= _GAIN_EPS:
        return None
    # first column (lowest feature) holding a near-maximal gain, then first row
    rows, cols = np.nonzero(gain >= top - _GAIN_EPS)
    c = cols.min()
    i = rows[cols == c].min()
    lo, hi = xs[i, c], xs[i + 1, c]
    thr = (lo + hi) / 2.0
    if not lo <= thr < hi:
        thr = lo
    return float(gain[i, c]), int(feats[c]), float(thr)


class _TreeBuilder:
    def __init__(self, n_classes, max_depth, min_leaf, max_features=None, rng=None):
        self.n_classes = n_classes
        self.max_depth = max_depth
        self.min_leaf = max(1, int(min_leaf))
        self.max_features = max_features
        self.rng = rng
        self.feature, self.threshold, self.left, self.right, self.counts = [], [], [], [], []

    def _candidate_batches(self, n_features):
        if self.max_features is None or self.max_features >= n_features:
            yield range(n_features)
            return
        perm = self.rng.permutation(n_features)
        for s in range(0, n_features, self.max_features):
            yield perm[s:s + self.max_features]

    def build(self, X, y_idx):
        self._grow(X, y_idx, depth=0)
        return (
            np.array(self.feature, dtype=int),
            np.array(self.threshold, dtype=float),
            np.array(self.left, dtype=int),
            np.array(self.right, dtype=int),
            np.vstack(self.counts),
        )

    def _new_node(self, counts):
        self.feature.append(-1)
        self.threshold.append(np.nan)
        self.left.append(-1)
        self.right.append(-1)
        self.counts.append(counts)
        return len(self.feature) - 1

    def _grow(self, X, y_idx, depth):
        counts = np.bincount(y_idx, minlength=self.n_classes)
        node = self._new_node(counts)
        if (
            np.count_nonzero(counts) <= 1
            or len(y_idx) < 2 * self.min_leaf
            or (self.max_depth is not None and depth >= self.max_depth)
        ):
            return node
        split = None
        # keep drawing feature batches until one yields a useful split
        for batch in self._candidate_batches(X.shape[1]):
            split = best_split(X, y_idx, self.n_classes, batch, self.min_leaf)
            if split is not None:
                break
        if split is None:
            return node
        _, f, thr = split
        mask = X[:, f] <= thr
        self.feature[node] = f
        self.threshold[node] = thr
        self.left[node] = self._grow(X[mask], y_idx[mask], depth + 1)
        self.right[node] = self._grow(X[~mask], y_idx[~mask], depth + 1)
        return node


def _apply(tree, X):
    feature, threshold, left, right = tree[:4]
    node = np.zeros(len(X), dtype=int)
    active = feature[node] >= 0
    while active.any():
        idx = np.nonzero(active)[0]
        cur = node[idx]
        go_left = X[idx, feature[cur]] <= threshold[cur]
        node[idx] = np.where(go_left, left[cur], right[cur])
        active = feature[node] >= 0
    return node


class InfoGainTree(_ScoreThresholdMixin, ClassifierMixin, BaseEstimator):
    """Binary-split decision tree grown by information gain (C4.5-like, unpruned).

    Parameters
    ----------
    max_depth : int or None, default=None
    min_leaf : int, default=2
        Minimum number of training rows on each side of a split.
    """

    def __init__(self, max_depth=None, min_leaf=2):
        self.max_depth = max_depth
        self.min_leaf = min_leaf

    def fit(self, X, y):
        X, y_idx = _encode_targets(self, X, y)
        self.tree_ = _TreeBuilder(len(self.classes_), self.max_depth, self.min_leaf).build(X, y_idx)
        return self

    @property
    def n_nodes_(self):
        return len(self.tree_[0])

    def apply(self, X):
        return _apply(self.tree_, _check_predict_input(self, X))

    def predict_proba(self, X):
        leaves = self.apply(X)
        return _normalize(self.tree_[4][leaves])


class RandomForest(_ScoreThresholdMixin, ClassifierMixin, BaseEstimator):
    """Bagged information-gain trees with per-split feature subsampling.

    The class score is the fraction of trees voting for it.  Tree ``t`` draws
    every random number from ``default_rng([seed, t])``, so results do not
    depend on ``n_jobs``.

    Parameters
    ----------
    n_trees : int, default=100
    features_per_split : int or None, default=None
        ``None`` means ``ceil(sqrt(n_features))``.
    seed : int, default=0
    bootstrap : bool, default=True
    min_leaf : int, default=1
    max_depth : int or None, default=None
    n_jobs : int, default=1
    """

    def __init__(self, n_trees=100, features_per_split=None, seed=0, bootstrap=True,
                 min_leaf=1, max_depth=None, n_jobs=1):
        self.n_trees = n_trees
        self.features_per_split = features_per_split
        self.seed = seed
        self.bootstrap = bootstrap
        self.min_leaf = min_leaf
        self.max_depth = max_depth
        self.n_jobs = n_jobs

    def _grow_one(self, t, X, y_idx, m):
        rng = np.random.default_rng([int(self.seed), t])
        if self.bootstrap:
            rows = rng.integers(0, len(y_idx), len(y_idx))
            X, y_idx = X[rows], y_idx[rows]
        builder = _TreeBuilder(len(self.classes_), self.max_depth, self.min_leaf, m, rng)
        return builder.build(X, y_idx)

    def fit(self, X, y):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        X, y_idx = _encode_targets(self, X, y)
        m = self.features_per_split or math.ceil(math.sqrt(X.shape[1]))
        self.features_per_split_ = m
        if self.n_jobs and self.n_jobs > 1:
            with ThreadPoolExecutor(self.n_jobs) as pool:
                self.trees_ = list(pool.map(lambda t: self._grow_one(t, X, y_idx, m), range(self.n_trees)))
        else:
            self.trees_ = [self._grow_one(t, X, y_idx, m) for t in range(self.n_trees)]
        return self

    def tree_votes(self, X):
        """``(n_trees, n_samples)`` array of class indices voted by each tree."""
        X = _check_predict_input(self, X)
        votes = []
        for tree in self.trees_:
            p = _normalize(tree[4][_apply(tree, X)])
            if len(self.classes_) == 2:
                votes.append((p[:, 1] >= 0.5).astype(int))
            else:
                votes.append(np.argmax(p, axis=1))
        return np.vstack(votes)

    def predict_proba(self, X):
        votes = self.tree_votes(X)
        out = np.zeros((votes.shape[1], len(self.classes_)))
        for c in range(len(self.classes_)):
            out[:, c] = (votes == c).mean(axis=0)
        return out
