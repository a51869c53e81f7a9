"""Corpus-level analyses built from the library pieces: bot oracles, byBot
behavior per class, and the hypothesis-test battery."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from . import behavior, stats
from .features import extract_matrix
from .ingest import BOT_LABELS, Corpus, IngestError
from .learn import train

CLASS_C = "credulous"
CLASS_NC = "not_credulous"
FEATURE_TEST_COLUMNS = ("F3", "F5", "F19")
T_MODES = ("pooled_independent", "paired")


# bot oracles --------------------------------------------------------------

def oracle_from_labels(corpus: Corpus) -> dict[str, str]:
    return dict(corpus.bot_labels)


def oracle_from_file(path) -> dict[str, str]:
    """``account_id,label`` CSV with bot/human labels."""
    out = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["account_id", "label"]:
            raise IngestError(f"{path}: header must be account_id,label")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 2 or row[1] not in BOT_LABELS:
                raise IngestError(f"{path}:{lineno}: expected account_id and one of {BOT_LABELS}")
            out[row[0]] = row[1]
    return out


def oracle_from_model(corpus: Corpus, algo, reference_date: date, **feature_kw) -> dict[str, str]:
    """Bot verdicts from a classifier trained on the bot-labeled accounts.

    Accounts that carry a bot label keep it; the model decides the rest.
    """
    matrix = extract_matrix(corpus, reference_date, labels=corpus.bot_labels, **feature_kw)
    labeled = matrix.labeled(BOT_LABELS)
    if len(set(labeled.labels)) < 2:
        raise ValueError("model oracle needs both bot and human labels to train on")
    model = train(algo, labeled, positive="bot")
    pred = model.predict(matrix.X)
    out = {aid: ("bot" if p == 1 else "human") for aid, p in zip(matrix.account_ids, pred)}
    out.update(corpus.bot_labels)
    return out


# behavior -----------------------------------------------------------------

@dataclass
class ActionAnalysis:
    action: str
    c: list
    nc: list
    nc_sample: list
    sample_distance: float
    coverage: list
    coverage_max: behavior.CoveragePoint | None
    deciles: dict

    def summaries(self) -> dict:
        return {
            "C": behavior.summary_stats(self.c),
            "NC": behavior.summary_stats(self.nc),
            "NC_sample": behavior.summary_stats(self.nc_sample),
        }


@dataclass
class BehaviorAnalysis:
    actions: dict[str, ActionAnalysis]
    activity: dict
    sample_seed: int


def class_members(corpus: Corpus, label: str) -> list[str]:
    return sorted(a for a, lab in corpus.credulous_labels.items() if lab == label and a in corpus)


def analyze_behavior(corpus: Corpus, oracle, seed: int = 0, n_candidates: int = 20) -> BehaviorAnalysis:
    """byBot metrics of C and NC users for every action.

    The NC comparison group for the tests is the most representative of
    ``n_candidates`` random NC samples with as many users as C.  Coverage
    uses every NC user; deciles are kept for C, the sample and all of NC.
    """
    c_ids = class_members(corpus, CLASS_C)
    nc_ids = class_members(corpus, CLASS_NC)
    if not c_ids or not nc_ids:
        raise ValueError("behavior analysis needs both credulous and not_credulous users")
    size = min(len(c_ids), len(nc_ids))
    actions = {}
    for action in behavior.ACTIONS:
        c = [behavior.bybot_percentage(corpus.timelines.get(a, ()), action, oracle, a) for a in c_ids]
        nc = [behavior.bybot_percentage(corpus.timelines.get(a, ()), action, oracle, a) for a in nc_ids]
        sample, dist = behavior.representative_sample(nc, size, n_candidates, seed)
        c_vals, nc_vals = behavior.values_of(c), behavior.values_of(nc)
        if len(c_vals) and len(nc_vals):
            curve, best = behavior.coverage_curve(c_vals, nc_vals)
        else:
            curve, best = [], None
        deciles = {"C": behavior.decile_groups(c), "NC_sample": behavior.decile_groups(sample),
                   "NC": behavior.decile_groups(nc)}
        actions[action] = ActionAnalysis(action, c, nc, sample, dist, curve, best, deciles)
    groups = {"C": c_ids, "NC": nc_ids}
    activity = {g: behavior.activity_summary(corpus.timelines.get(a, ()) for a in ids) for g, ids in groups.items()}
    return BehaviorAnalysis(actions, activity, seed)


# test battery -------------------------------------------------------------

@dataclass(frozen=True)
class BatteryRow:
    metric: str
    group: str
    result: stats.TestResult


def _safe(fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except stats.StatsError:
        return None


def compare_populations(metric: str, c_vals, nc_vals, alpha: float = stats.ALPHA, tail: str = "one",
                        seed: int = 0, workers: int = 1) -> list[BatteryRow]:
    """Normality per population, then pooled t, ANOVA, Mann-Whitney and Kruskal-Wallis.

    ``tail`` applies to Mann-Whitney only; the parametric tests are two-tailed.
    A test whose preconditions fail (too few values, zero variance) is skipped.
    """
    rows = []
    for group, vals in (("C", c_vals), ("NC", nc_vals)):
        if len(vals) >= 4:
            r = _safe(stats.ks_normality, vals, alpha=alpha, seed=seed, workers=workers)
            if r is not None:
                rows.append(BatteryRow(metric, group, r))
    pair = [
        _safe(stats.t_test, c_vals, nc_vals, mode="pooled_independent", alpha=alpha),
        _safe(stats.anova_oneway, [c_vals, nc_vals], alpha=alpha),
        _safe(stats.mann_whitney, c_vals, nc_vals, tail=tail, alpha=alpha) if len(c_vals) and len(nc_vals) else None,
        _safe(stats.kruskal_wallis, [c_vals, nc_vals], alpha=alpha) if len(c_vals) and len(nc_vals) else None,
    ]
    rows.extend(BatteryRow(metric, "C_vs_NC", r) for r in pair if r is not None)
    return rows


def behavior_battery(analysis: BehaviorAnalysis, alpha: float = stats.ALPHA, tail: str = "one",
                     seed: int = 0, workers: int = 1) -> list[BatteryRow]:
    rows = []
    for action, a in analysis.actions.items():
        rows += compare_populations(f"bybot_{action}", behavior.values_of(a.c), behavior.values_of(a.nc_sample),
                                    alpha, tail, seed, workers)
    return rows


def feature_battery(corpus: Corpus, reference_date: date, seed: int = 0, alpha: float = stats.ALPHA,
                    t_mode: str = "pooled_independent", columns=FEATURE_TEST_COLUMNS,
                    **feature_kw) -> list[BatteryRow]:
    """t-test and Pearson r per feature: all C users against an equal-size random NC sample.

    Pearson pairs the i-th C user with the i-th sampled NC user, both in id order.
    """
    if t_mode not in T_MODES:
        raise ValueError(f"t_mode must be one of {T_MODES}")
    c_ids = class_members(corpus, CLASS_C)
    nc_ids = class_members(corpus, CLASS_NC)
    size = min(len(c_ids), len(nc_ids))
    rng = np.random.default_rng(seed)
    nc_pick = [nc_ids[i] for i in np.sort(rng.choice(len(nc_ids), size=size, replace=False))]
    c_pick = c_ids[:size] if len(c_ids) > size else c_ids
    matrix = extract_matrix(corpus, reference_date, **feature_kw)
    c_rows = matrix.take(matrix.index_of(c_pick))
    nc_rows = matrix.take(matrix.index_of(nc_pick))
    rows = []
    for col in columns:
        x, y = c_rows.column(col), nc_rows.column(col)
        for r in (_safe(stats.t_test, x, y, mode=t_mode, alpha=alpha), _safe(stats.pearson_test, x, y, alpha=alpha)):
            if r is not None:
                rows.append(BatteryRow(col, "C_vs_NC", r))
    return rows


def read_values(path) -> np.ndarray:
    """Numbers from a text file, whitespace or comma separated; ``#`` starts a comment."""
    vals = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].replace(",", " ")
        for tok in line.split():
            try:
                vals.append(float(tok))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not a number: {tok!r}") from None
    return np.array(vals, dtype=float)
