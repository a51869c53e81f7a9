from .estimators import KNN, OneR, OneRule, ZeroR, fit_one_rule
from .evaluation import (
    ALGORITHMS,
    EvalReport,
    Fold,
    Metrics,
    average_metrics,
    balanced_folds,
    cross_validate,
    evaluate,
    make_algo,
    midranks,
    predict,
    roc_auc,
    run_credulous_task,
    stratified_folds,
    train,
)
from .tree import InfoGainTree, RandomForest

__all__ = [
    "ALGORITHMS",
    "EvalReport",
    "Fold",
    "InfoGainTree",
    "KNN",
    "Metrics",
    "OneR",
    "OneRule",
    "RandomForest",
    "ZeroR",
    "average_metrics",
    "balanced_folds",
    "cross_validate",
    "evaluate",
    "fit_one_rule",
    "make_algo",
    "midranks",
    "predict",
    "roc_auc",
    "run_credulous_task",
    "stratified_folds",
    "train",
]
