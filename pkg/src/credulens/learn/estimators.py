"""ZeroR, OneR and k-nearest-neighbour classifiers with the sklearn API."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

ONE_R_MIN_BUCKET = 6


class _ScoreThresholdMixin:
    """Binary labels come from ``P(classes_[1]) >= 0.5``; argmax otherwise."""

    def predict(self, X):
        proba = self.predict_proba(X)
        if len(self.classes_) == 2:
            return self.classes_[(proba[:, 1] >= 0.5).astype(int)]
        return self.classes_[np.argmax(proba, axis=1)]

    def decision_score(self, X):
        """Positive-class confidence in ``[0, 1]`` for binary problems."""
        return self.predict_proba(X)[:, -1]


def _encode_targets(est, X, y, min_classes=2):
    X, y = check_X_y(X, y, dtype=float)
    check_classification_targets(y)
    est.classes_, y_idx = np.unique(y, return_inverse=True)
    if len(est.classes_) < min_classes:
        raise ValueError(
            f"{type(est).__name__} needs at least {min_classes} classes, got {len(est.classes_)}"
        )
    est.n_features_in_ = X.shape[1]
    return X, y_idx


def _check_predict_input(est, X):
    check_is_fitted(est, "classes_")
    X = check_array(X, dtype=float)
    if X.shape[1] != est.n_features_in_:
        raise ValueError(f"expected {est.n_features_in_} features, got {X.shape[1]}")
    return X


def _normalize(counts):
    counts = np.asarray(counts, dtype=float)
    total = counts.sum(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(total > 0, counts / np.where(total > 0, total, 1), 0.0)
    return out


class ZeroR(_ScoreThresholdMixin, ClassifierMixin, BaseEstimator):
    """Always predicts the training class distribution."""

    def fit(self, X, y):
        X, y_idx = _encode_targets(self, X, y, min_classes=1)
        self.class_prior_ = np.bincount(y_idx, minlength=len(self.classes_)) / len(y_idx)
        return self

    def predict_proba(self, X):
        X = _check_predict_input(self, X)
        return np.tile(self.class_prior_, (X.shape[0], 1))


@dataclass(frozen=True)
class OneRule:
    """A single-attribute rule.

    Numeric rules hold sorted ``thresholds`` and one class-count row per
    bucket; nominal rules map each seen value to its class counts.
    """

    feature: int
    nominal: bool
    thresholds: np.ndarray
    bucket_counts: np.ndarray
    values: np.ndarray
    default_counts: np.ndarray
    n_correct: int
    n: int

    @property
    def accuracy(self) -> float:
        return self.n_correct / self.n if self.n else 0.0

    def bucket_of(self, x: np.ndarray) -> np.ndarray:
        if self.nominal:
            pos = np.searchsorted(self.values, x)
            pos = np.clip(pos, 0, len(self.values) - 1)
            return np.where(self.values[pos] == x, pos, -1)
        return np.searchsorted(self.thresholds, x, side="right")

    def proba(self, x: np.ndarray) -> np.ndarray:
        b = self.bucket_of(np.asarray(x))
        table = np.vstack([self.bucket_counts, self.default_counts])
        return _normalize(table[b])  # b == -1 selects the default row


def _majority(counts) -> int:
    return int(np.argmax(counts))


def _is_nominal(x) -> bool:
    if x.dtype.kind not in "biuf":
        return True
    return bool(np.all((x == 0) | (x == 1)))


def fit_one_rule(x, y_idx, n_classes, min_bucket=ONE_R_MIN_BUCKET, feature=0, nominal=None) -> OneRule:
    """Build the OneR rule for one attribute.

    Numeric values are scanned in sorted order; a bucket closes once its
    majority class holds at least ``min_bucket`` instances and the next
    distinct value's majority class differs.  Adjacent buckets sharing a
    majority class are then merged.  Columns whose values are all 0/1, or
    non-numeric columns, are treated as nominal (one bucket per value).
    """
    x = np.asarray(x)
    y_idx = np.asarray(y_idx, dtype=int)
    if nominal is None:
        nominal = _is_nominal(x)
    values, inv = np.unique(x, return_inverse=True)
    counts = np.zeros((len(values), n_classes), dtype=int)
    np.add.at(counts, (inv, y_idx), 1)
    default = counts.sum(axis=0)

    if nominal:
        correct = int(counts.max(axis=1).sum())
        return OneRule(feature, True, np.empty(0), counts, values, default, correct, len(x))

    # greedy bucketing over distinct values
    buckets, uppers = [], []
    cur = np.zeros(n_classes, dtype=int)
    for g in range(len(values)):
        cur = cur + counts[g]
        last = g == len(values) - 1
        if last or (cur.max() >= min_bucket and _majority(counts[g + 1]) != _majority(cur)):
            buckets.append(cur)
            uppers.append(g)
            cur = np.zeros(n_classes, dtype=int)

    merged, merged_uppers = [buckets[0]], [uppers[0]]
    for b, u in zip(buckets[1:], uppers[1:]):
        if _majority(b) == _majority(merged[-1]):
            merged[-1] = merged[-1] + b
            merged_uppers[-1] = u
        else:
            merged.append(b)
            merged_uppers.append(u)
    thresholds = np.array(
        [(values[u] + values[u + 1]) / 2.0 for u in merged_uppers[:-1]], dtype=float
    )
    table = np.vstack(merged)
    correct = int(table.max(axis=1).sum())
    return OneRule(feature, False, thresholds, table, values, default, correct, len(x))


class OneR(_ScoreThresholdMixin, ClassifierMixin, BaseEstimator):
    """Holte's one-rule classifier.

    Parameters
    ----------
    min_bucket : int, default=6
        Minimum majority-class count before a numeric bucket may close.
    """

    def __init__(self, min_bucket=ONE_R_MIN_BUCKET):
        self.min_bucket = min_bucket

    def fit(self, X, y):
        X, y_idx = _encode_targets(self, X, y)
        k = len(self.classes_)
        best = None
        for j in range(X.shape[1]):
            rule = fit_one_rule(X[:, j], y_idx, k, self.min_bucket, feature=j)
            if best is None or rule.n_correct > best.n_correct:
                best = rule
        self.rule_ = best
        return self

    def predict_proba(self, X):
        X = _check_predict_input(self, X)
        return self.rule_.proba(X[:, self.rule_.feature])


class KNN(_ScoreThresholdMixin, ClassifierMixin, BaseEstimator):
    """k-nearest neighbours on z-scored features, Euclidean distance.

    The score of a class is the fraction of the ``k`` neighbours carrying
    it.  Equal distances are resolved by training-row order.
    """

    def __init__(self, k=1):
        self.k = k

    def fit(self, X, y):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        X, y_idx = _encode_targets(self, X, y)
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale_ = np.where(std > 0, std, 1.0)
        self.X_ = (X - self.mean_) / self.scale_
        self.y_ = y_idx
        return self

    def predict_proba(self, X, chunk=64):
        X = _check_predict_input(self, X)
        Z = (X - self.mean_) / self.scale_
        k = min(self.k, len(self.y_))
        n_classes = len(self.classes_)
        out = np.zeros((len(Z), n_classes))
        for start in range(0, len(Z), chunk):
            diff = Z[start:start + chunk, None, :] - self.X_[None, :, :]
            d2 = np.einsum("ijk,ijk->ij", diff, diff)
            nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
            labels = self.y_[nearest]
            for c in range(n_classes):
                out[start:start + chunk, c] = (labels == c).sum(axis=1) / k
        return out
