"""Single-attribute relevance scores and normalized feature rankings.

Three evaluators score each attribute against the class: information gain,
symmetric uncertainty and OneR training accuracy.  Numeric attributes are
discretized into equal-frequency bins by rank before entropies are taken,
so any strictly increasing transform of a column leaves its score intact.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_is_fitted, check_X_y

from .features import FeatureMatrix
from .learn.estimators import ONE_R_MIN_BUCKET, fit_one_rule

N_BINS = 10
EVALUATORS = ("one_r", "symmetric_uncertainty", "info_gain")
EVALUATOR_TITLES = {
    "one_r": "OneR",
    "symmetric_uncertainty": "SymmetricalUncert",
    "info_gain": "InfoGain",
}


def _is_numeric(a: np.ndarray) -> bool:
    return a.dtype.kind in "biuf"


def discretize(attr, n_bins: int = N_BINS) -> np.ndarray:
    """Equal-frequency bin codes for a numeric column; category codes otherwise.

    Cut points are the sample values at sorted positions ``floor(n*j/n_bins)``;
    repeated cut points collapse into one.  A value equal to a cut point goes
    to the upper bin.
    """
    a = np.asarray(attr)
    if not _is_numeric(a):
        return np.unique(a, return_inverse=True)[1]
    a = a.astype(float)
    s = np.sort(a)
    pos = [(len(a) * j) // n_bins for j in range(1, n_bins)]
    cuts = np.unique(s[[p for p in pos if 0 < p < len(a)]])
    cuts = cuts[cuts > s[0]]
    return np.searchsorted(cuts, a, side="right")


def entropy(codes) -> float:
    """Shannon entropy in bits of a discrete column."""
    _, counts = np.unique(np.asarray(codes), return_counts=True)
    p = counts / counts.sum()
    return float(-(p * np.log2(p)).sum())


def conditional_entropy(labels, codes) -> float:
    labels = np.asarray(labels)
    codes = np.asarray(codes)
    h = 0.0
    for c in np.unique(codes):
        mask = codes == c
        h += mask.mean() * entropy(labels[mask])
    return h


def _check_pair(attr, labels):
    attr = np.asarray(attr)
    labels = np.asarray(labels)
    if attr.shape[0] != labels.shape[0]:
        raise ValueError(f"length mismatch: {attr.shape[0]} values, {labels.shape[0]} labels")
    if attr.shape[0] < 2:
        raise ValueError("need at least 2 rows")
    return attr, labels


def info_gain(attr, labels, n_bins: int = N_BINS) -> float:
    """``H(label) - H(label | discretized attr)`` in bits."""
    attr, labels = _check_pair(attr, labels)
    codes = discretize(attr, n_bins)
    return max(0.0, entropy(labels) - conditional_entropy(labels, codes))


def symmetric_uncertainty(attr, labels, n_bins: int = N_BINS) -> float:
    """``2 IG / (H(attr) + H(label))``, defined as 0 when both entropies vanish."""
    attr, labels = _check_pair(attr, labels)
    codes = discretize(attr, n_bins)
    h_attr = entropy(codes)
    h_lab = entropy(labels)
    if h_attr + h_lab == 0:
        return 0.0
    ig = max(0.0, h_lab - conditional_entropy(labels, codes))
    return min(1.0, 2.0 * ig / (h_attr + h_lab))


def one_r_eval(attr, labels, min_bucket: int = ONE_R_MIN_BUCKET) -> float:
    """Training accuracy (fraction) of a OneR rule on this attribute alone."""
    attr, labels = _check_pair(attr, labels)
    classes, y_idx = np.unique(labels, return_inverse=True)
    if not _is_numeric(attr):
        attr = np.unique(attr, return_inverse=True)[1]
        return fit_one_rule(attr, y_idx, len(classes), min_bucket, nominal=True).accuracy
    return fit_one_rule(attr.astype(float), y_idx, len(classes), min_bucket).accuracy


_SCORERS = {
    "one_r": one_r_eval,
    "symmetric_uncertainty": symmetric_uncertainty,
    "info_gain": info_gain,
}


def score_features(X, y, evaluator: str) -> np.ndarray:
    try:
        fn = _SCORERS[evaluator]
    except KeyError:
        raise ValueError(f"unknown evaluator {evaluator!r}; choose from {EVALUATORS}") from None
    X = np.asarray(X, dtype=float)
    return np.array([fn(X[:, j], y) for j in range(X.shape[1])])


@dataclass(frozen=True)
class RankedFeature:
    feature: str
    raw: float
    normalized: float


@dataclass(frozen=True)
class RankingReport:
    evaluator: str
    entries: tuple[RankedFeature, ...]
    params: dict = field(default_factory=dict)

    def top(self, n: int = 6) -> list[str]:
        return [f"{e.feature} ({e.normalized:.3f})" for e in self.entries[:n]]


def rank_scores(names, raw, evaluator: str, params=None) -> RankingReport:
    raw = np.asarray(raw, dtype=float)
    peak = raw.max() if len(raw) else 0.0
    norm = raw / peak if peak > 0 else np.zeros_like(raw)
    order = sorted(range(len(raw)), key=lambda j: (-norm[j], j))
    entries = tuple(RankedFeature(names[j], float(raw[j]), float(norm[j])) for j in order)
    return RankingReport(evaluator, entries, dict(params or {}))


def rank_features(matrix: FeatureMatrix, evaluator: str, positive: str | None = None) -> RankingReport:
    """Rank every feature column by ``evaluator``, normalized to the top score."""
    labeled = matrix.labeled()
    y = np.asarray(labeled.labels) if positive is None else labeled.target(positive)
    raw = score_features(labeled.X, y, evaluator)
    params = {"n_bins": N_BINS, "binning": "equal_frequency"} if evaluator != "one_r" else {
        "min_bucket": ONE_R_MIN_BUCKET}
    return rank_scores(list(matrix.feature_names), raw, evaluator, params)


def format_table(reports: list[RankingReport], top: int = 6) -> str:
    """Plain-text side-by-side ranking, one column per evaluator."""
    header = ["Rank"] + [EVALUATOR_TITLES.get(r.evaluator, r.evaluator) for r in reports]
    rows = [header]
    for i in range(top):
        rows.append([str(i + 1)] + [r.top(top)[i] if i < len(r.entries) else "" for r in reports])
    widths = [max(len(row[c]) for row in rows) for c in range(len(header))]
    return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows)


class AttributeRanker(SelectorMixin, BaseEstimator):
    """Scores columns with one evaluator and keeps the ``k`` best.

    After ``fit``: ``scores_`` (raw), ``normalized_scores_`` and ``ranking_``
    (column indices, best first).
    """

    def __init__(self, evaluator="info_gain", k=6):
        self.evaluator = evaluator
        self.k = k

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        self.n_features_in_ = X.shape[1]
        self.scores_ = score_features(X, y, self.evaluator)
        peak = self.scores_.max()
        self.normalized_scores_ = self.scores_ / peak if peak > 0 else np.zeros_like(self.scores_)
        self.ranking_ = np.array(
            sorted(range(X.shape[1]), key=lambda j: (-self.normalized_scores_[j], j))
        )
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "ranking_")
        mask = np.zeros(self.n_features_in_, dtype=bool)
        mask[self.ranking_[: self.k]] = True
        return mask
