"""Metrics, fold construction and the two evaluation protocols.

Bot detection uses stratified k-fold cross-validation.  Credulous detection
first under-samples the majority class into disjoint balanced folds, runs
cross-validation inside each, and averages the per-fold results.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import clone
from sklearn.model_selection import StratifiedKFold

from ..features import FeatureMatrix
from ..stats import _midranks
from .estimators import KNN, OneR, ZeroR
from .tree import InfoGainTree, RandomForest

ALGORITHMS = {
    "zero_r": ZeroR,
    "one_r": OneR,
    "knn": KNN,
    "tree": InfoGainTree,
    "info_gain_tree": InfoGainTree,
    "forest": RandomForest,
    "random_forest": RandomForest,
}

POSITIVE_LABELS = ("bot", "credulous")


def make_algo(name: str, **params):
    """Instantiate one of the implemented classifiers by name."""
    try:
        cls = ALGORITHMS[name]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}") from None
    accepted = cls().get_params()
    return cls(**{k: v for k, v in params.items() if k in accepted})


def algo_name(est) -> str:
    for name, cls in ALGORITHMS.items():
        if type(est) is cls:
            return name
    return type(est).__name__


@dataclass(frozen=True)
class Metrics:
    """Accuracy in percent; the rest in ``[0, 1]``.  ``auc`` is ``None`` when undefined."""

    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float | None
    tp: int | None = None
    fp: int | None = None
    tn: int | None = None
    fn: int | None = None

    def to_json(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None or k == "auc"}


def midranks(values) -> np.ndarray:
    """1-based ranks with tied values sharing their mean rank."""
    return _midranks(np.asarray(values, dtype=float))[0]


def roc_auc(truth, scores) -> float | None:
    """Rank-statistic AUC, ties counted half; ``None`` if a class is absent."""
    truth = np.asarray(truth).astype(bool)
    n_pos = int(truth.sum())
    n_neg = len(truth) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    r = midranks(scores)
    u = r[truth].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def evaluate(predictions: Iterable[tuple[int, int, float]]) -> Metrics:
    """Metrics from ``(truth, predicted_label, score)`` triples, positive = 1."""
    preds = list(predictions)
    if not preds:
        raise ValueError("no predictions to evaluate")
    truth, labels, scores = (np.asarray(c) for c in zip(*preds))
    truth = truth.astype(bool)
    labels = labels.astype(bool)
    tp = int(np.sum(truth & labels))
    fp = int(np.sum(~truth & labels))
    tn = int(np.sum(~truth & ~labels))
    fn = int(np.sum(truth & ~labels))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Metrics(
        accuracy=100.0 * (tp + tn) / len(preds),
        precision=precision,
        recall=recall,
        f1=f1,
        auc=roc_auc(truth, scores.astype(float)),
        tp=tp, fp=fp, tn=tn, fn=fn,
    )


def average_metrics(folds: Sequence[Metrics]) -> tuple[Metrics, int]:
    """Arithmetic mean per metric; AUC over defined folds only.

    Returns the averaged metrics and the number of folds with undefined AUC.
    """
    aucs = [m.auc for m in folds if m.auc is not None]
    avg = Metrics(
        accuracy=float(np.mean([m.accuracy for m in folds])),
        precision=float(np.mean([m.precision for m in folds])),
        recall=float(np.mean([m.recall for m in folds])),
        f1=float(np.mean([m.f1 for m in folds])),
        auc=float(np.mean(aucs)) if aucs else None,
    )
    return avg, len(folds) - len(aucs)


@dataclass(frozen=True)
class EvalReport:
    algo: str
    params: dict
    seed: int
    task: str
    positive: str
    folds: tuple[Metrics, ...]
    average: Metrics
    n_undefined_auc: int = 0
    fold_sizes: tuple[int, ...] = field(default=())

    @property
    def n_folds(self) -> int:
        return len(self.folds)

    def to_json(self) -> dict:
        return {
            "task": self.task,
            "algo": self.algo,
            "params": self.params,
            "seed": self.seed,
            "positive_class": self.positive,
            "n_folds": self.n_folds,
            "fold_sizes": list(self.fold_sizes),
            "folds": [m.to_json() for m in self.folds],
            "average": self.average.to_json(),
            "n_undefined_auc": self.n_undefined_auc,
        }


@dataclass(frozen=True)
class Fold:
    minority: tuple[str, ...]
    majority: tuple[str, ...]

    @property
    def ids(self) -> tuple[str, ...]:
        return self.minority + self.majority


def balanced_folds(minority_ids: Sequence[str], majority_ids: Sequence[str], seed: int) -> list[Fold]:
    """Under-sampling iteration: disjoint majority chunks, each paired with the minority.

    The majority set is shuffled and cut into chunks the size of the
    minority set.  Every full chunk is paired with the whole minority set;
    a trailing partial chunk of size ``r`` is paired with ``r`` minority ids
    drawn at random.
    """
    minority = list(minority_ids)
    majority = list(majority_ids)
    if not minority:
        raise ValueError("minority set is empty")
    if not majority:
        raise ValueError("majority set is empty")
    if set(minority) & set(majority):
        raise ValueError("minority and majority sets overlap")
    rng = np.random.default_rng(seed)
    shuffled = [majority[i] for i in rng.permutation(len(majority))]
    m = len(minority)
    folds = []
    for start in range(0, len(shuffled), m):
        chunk = tuple(shuffled[start:start + m])
        if len(chunk) == m:
            folds.append(Fold(tuple(minority), chunk))
        else:
            pick = np.sort(rng.choice(m, size=len(chunk), replace=False))
            folds.append(Fold(tuple(minority[i] for i in pick), chunk))
    return folds


def stratified_folds(y, k: int, seed: int) -> list[np.ndarray]:
    """Test-index arrays of ``k`` stratified folds."""
    y = np.asarray(y)
    if k < 2:
        raise ValueError("k must be >= 2")
    _, counts = np.unique(y, return_counts=True)
    if counts.min() < k:
        raise ValueError(f"smallest class has {counts.min()} rows, fewer than k={k}")
    skf = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed)
    return [test for _, test in skf.split(np.zeros(len(y)), y)]


def _as_estimator(algo):
    return make_algo(algo) if isinstance(algo, str) else algo


def _infer_positive(matrix: FeatureMatrix) -> str:
    present = set(matrix.labels)
    for lab in POSITIVE_LABELS:
        if lab in present:
            return lab
    raise ValueError(f"no positive class among labels {sorted(map(str, present))}")


def train(algo, matrix: FeatureMatrix, positive: str | None = None):
    """Fit a fresh copy of ``algo`` on a labeled matrix with a 0/1 target."""
    positive = positive or _infer_positive(matrix)
    est = clone(_as_estimator(algo))
    if len(matrix) < 2:
        raise ValueError("need at least 2 rows to train")
    return est.fit(matrix.X, matrix.target(positive))


def predict(model, fv) -> tuple[int, float]:
    """``(label, score)`` for one feature vector (or raw feature row)."""
    row = fv.as_array() if hasattr(fv, "as_array") else np.asarray(fv, dtype=float)
    proba = model.predict_proba(row.reshape(1, -1))[0]
    pos = list(model.classes_).index(1) if 1 in model.classes_ else -1
    score = float(proba[pos]) if pos >= 0 else 0.0
    return int(score >= 0.5), score


def _fold_metrics(est, X, y, test):
    train_mask = np.ones(len(y), dtype=bool)
    train_mask[test] = False
    model = clone(est).fit(X[train_mask], y[train_mask])
    proba = model.predict_proba(X[test])
    pos = list(model.classes_).index(1) if 1 in model.classes_ else None
    score = proba[:, pos] if pos is not None else np.zeros(len(test))
    return evaluate(zip(y[test], (score >= 0.5).astype(int), score))


def cross_validate(matrix: FeatureMatrix, algo, k: int = 10, seed: int = 0,
                   positive: str | None = None, workers: int = 1, task: str = "bot") -> EvalReport:
    """Stratified ``k``-fold cross-validation on the labeled rows of ``matrix``."""
    positive = positive or _infer_positive(matrix)
    est = _as_estimator(algo)
    y = matrix.target(positive)
    tests = stratified_folds(y, k, seed)
    job = lambda test: _fold_metrics(est, matrix.X, y, test)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            folds = list(pool.map(job, tests))
    else:
        folds = [job(t) for t in tests]
    avg, undefined = average_metrics(folds)
    return EvalReport(
        algo=algo_name(est), params=_jsonable(est.get_params()), seed=seed, task=task,
        positive=positive, folds=tuple(folds), average=avg, n_undefined_auc=undefined,
        fold_sizes=tuple(len(t) for t in tests),
    )


def run_credulous_task(matrix: FeatureMatrix, algo, seed: int = 0, k: int = 10,
                       positive: str = "credulous", negative: str = "not_credulous",
                       workers: int = 1) -> EvalReport:
    """Balanced-fold protocol: one averaged CV result per under-sampled fold.

    Inside a fold the number of CV splits is ``min(k, smallest class size)``.
    """
    pos_ids = matrix.ids_with_label(positive)
    neg_ids = matrix.ids_with_label(negative)
    if len(pos_ids) <= len(neg_ids):
        folds = balanced_folds(pos_ids, neg_ids, seed)
    else:
        folds = balanced_folds(neg_ids, pos_ids, seed)
    est = _as_estimator(algo)

    def one(fold):
        sub = matrix.take(matrix.index_of(fold.ids))
        inner_k = min(k, len(fold.minority), len(fold.majority))
        if inner_k < 2:
            raise ValueError(f"balanced fold of {len(fold.ids)} rows is too small for cross-validation")
        return cross_validate(sub, est, inner_k, seed, positive=positive, task="credulous").average

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            per_fold = list(pool.map(one, folds))
    else:
        per_fold = [one(f) for f in folds]
    avg, undefined = average_metrics(per_fold)
    return EvalReport(
        algo=algo_name(est), params=_jsonable(est.get_params()), seed=seed, task="credulous",
        positive=positive, folds=tuple(per_fold), average=avg, n_undefined_auc=undefined,
        fold_sizes=tuple(len(f.ids) for f in folds),
    )


def _jsonable(params: dict) -> dict:
    out = {}
    for k, v in sorted(params.items()):
        if k == "n_jobs":
            continue
        out[k] = v.item() if isinstance(v, np.generic) else v
    return out
