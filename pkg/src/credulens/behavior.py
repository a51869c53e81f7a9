"""Timeline analytics: activity ratios, byBot percentages, sampling, coverage, deciles."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .ingest import TweetRecord

ACTIONS = ("retweet", "reply")
DECILE_BINS = tuple(f"[{hi},{hi - 10}[" for hi in range(100, 0, -10))
GROUP_ZERO = "0"
GROUP_OUTLIERS = "outliers"
HISTOGRAM_BINS = DECILE_BINS + (GROUP_ZERO, GROUP_OUTLIERS)


class OracleError(KeyError):
    """An origin author has no bot/human verdict."""


def classify_tweet_type(tweet: TweetRecord) -> str:
    """``pure``, ``retweet`` or ``reply``; quotes count as retweets."""
    return "retweet" if tweet.kind == "quote" else tweet.kind


@dataclass(frozen=True)
class ActivityRatios:
    pure_ratio: float
    retweet_ratio: float
    reply_ratio: float


def activity_ratios(timeline: Sequence[TweetRecord]) -> ActivityRatios | None:
    """Share of each action type in a timeline; ``None`` for an empty one."""
    if not timeline:
        return None
    n = len(timeline)
    kinds = [classify_tweet_type(t) for t in timeline]
    return ActivityRatios(kinds.count("pure") / n, kinds.count("retweet") / n, kinds.count("reply") / n)


@dataclass(frozen=True)
class ByBotMetric:
    account_id: str
    action: str
    total: int
    bybot: int

    @property
    def outlier(self) -> bool:
        return self.total == 0

    @property
    def percentage(self) -> float | None:
        return None if self.total == 0 else 100.0 * self.bybot / self.total


def _is_bot(verdict) -> bool:
    if isinstance(verdict, str):
        return verdict == "bot"
    return bool(verdict)


def bybot_percentage(timeline: Iterable[TweetRecord], action: str,
                     bot_oracle: Mapping[str, object], account_id: str | None = None) -> ByBotMetric:
    """Share of ``action`` items whose origin author the oracle calls a bot.

    ``bot_oracle`` maps author ids to ``"bot"``/``"human"`` (or booleans).
    """
    if action not in ACTIONS:
        raise ValueError(f"action must be one of {ACTIONS}")
    total = bybot = 0
    for t in timeline:
        account_id = account_id or t.author_id
        if classify_tweet_type(t) != action:
            continue
        try:
            verdict = bot_oracle[t.origin_author_id]
        except KeyError:
            raise OracleError(f"no bot verdict for origin author {t.origin_author_id}") from None
        total += 1
        bybot += _is_bot(verdict)
    return ByBotMetric(account_id or "", action, total, bybot)


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    std: float
    n: int
    n_outliers: int


def values_of(metrics: Iterable[ByBotMetric]) -> np.ndarray:
    """Percentages of the non-outlier metrics."""
    return np.array([m.percentage for m in metrics if not m.outlier], dtype=float)


def summary_stats(metrics: Sequence[ByBotMetric]) -> SummaryStats:
    """Mean and sample standard deviation over non-outliers."""
    vals = values_of(metrics)
    n_out = sum(1 for m in metrics if m.outlier)
    if len(vals) == 0:
        return SummaryStats(float("nan"), float("nan"), 0, n_out)
    std = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
    return SummaryStats(float(vals.mean()), std, len(vals), n_out)


def sample_candidates(n_population: int, size: int, n_candidates: int, seed: int) -> list[np.ndarray]:
    """Sorted index arrays of the candidate samples, each drawn without replacement."""
    if size > n_population:
        raise ValueError(f"sample size {size} exceeds population {n_population}")
    rng = np.random.default_rng(seed)
    return [np.sort(rng.choice(n_population, size=size, replace=False)) for _ in range(n_candidates)]


def sample_distance(sample: Sequence[ByBotMetric], reference: SummaryStats) -> float:
    s = summary_stats(sample)
    if s.n == 0:
        return float("inf")
    return float(np.hypot(s.mean - reference.mean, s.std - reference.std))


def representative_sample(population: Sequence[ByBotMetric], size: int, n_candidates: int = 20,
                          seed: int = 0) -> tuple[list[ByBotMetric], float]:
    """Candidate sample whose (mean, std) is closest to the population's.

    Returns the sample (in population order) and its Euclidean distance.
    """
    reference = summary_stats(population)
    best, best_d = None, float("inf")
    for idx in sample_candidates(len(population), size, n_candidates, seed):
        cand = [population[i] for i in idx]
        d = sample_distance(cand, reference)
        if best is None or d < best_d:
            best, best_d = cand, d
    return best, best_d


@dataclass(frozen=True)
class CoveragePoint:
    x: float
    pct_c_ge: float
    pct_nc_lt: float

    @property
    def combined(self) -> float:
        return self.pct_c_ge + self.pct_nc_lt


def coverage_curve(c_values, nc_values) -> tuple[list[CoveragePoint], CoveragePoint]:
    """Population coverage at every observed value.

    At threshold ``x``: percent of C users with value ``>= x`` and percent
    of NC users with value ``< x``.  The max point maximizes their sum, ties
    going to the smallest ``x``.
    """
    c = np.sort(np.asarray(c_values, dtype=float))
    nc = np.sort(np.asarray(nc_values, dtype=float))
    if len(c) == 0 or len(nc) == 0:
        raise ValueError("both populations must be non-empty")
    xs = np.unique(np.concatenate([c, nc]))
    c_ge = 100.0 * (len(c) - np.searchsorted(c, xs, side="left")) / len(c)
    nc_lt = 100.0 * np.searchsorted(nc, xs, side="left") / len(nc)
    points = [CoveragePoint(float(x), float(a), float(b)) for x, a, b in zip(xs, c_ge, nc_lt)]
    best = int(np.argmax(c_ge + nc_lt))
    return points, points[best]


def decile_label(value: float | None) -> str:
    """Group of a percentage: ``[hi,lo[`` holds ``lo < v <= hi``; 0 and outliers apart."""
    if value is None:
        return GROUP_OUTLIERS
    if value < 0 or value > 100:
        raise ValueError(f"percentage {value} outside [0, 100]")
    if value == 0:
        return GROUP_ZERO
    # tolerance absorbs values like 100*3/10 == 30.000000000000004
    hi = int(np.ceil(value / 10.0 - 1e-9)) * 10
    return f"[{hi},{hi - 10}["


@dataclass(frozen=True)
class Histogram:
    bins: tuple[str, ...]
    counts: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def percentages(self) -> tuple[float, ...]:
        t = self.total
        return tuple(100.0 * c / t if t else 0.0 for c in self.counts)

    def count(self, label: str) -> int:
        return self.counts[self.bins.index(label)]


def decile_groups(metrics: Iterable[ByBotMetric]) -> Histogram:
    counts = dict.fromkeys(HISTOGRAM_BINS, 0)
    for m in metrics:
        counts[decile_label(m.percentage)] += 1
    return Histogram(HISTOGRAM_BINS, tuple(counts.values()))


def activity_summary(timelines: Iterable[Sequence[TweetRecord]]) -> dict:
    """Mean and sample std of each ratio over users with a non-empty timeline."""
    rows = [r for r in (activity_ratios(t) for t in timelines) if r is not None]
    out = {"n": len(rows)}
    for name in ("pure_ratio", "retweet_ratio", "reply_ratio"):
        vals = np.array([getattr(r, name) for r in rows], dtype=float)
        out[name] = {
            "mean": float(vals.mean()) if len(vals) else None,
            "std": float(vals.std(ddof=1)) if len(vals) > 1 else (0.0 if len(vals) else None),
        }
    return out
