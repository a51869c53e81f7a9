"""Hypothesis tests used to compare credulous and not-credulous users.

Every test returns a :class:`TestResult`; ``passed`` means the null
hypothesis was rejected at ``alpha``.  Mann-Whitney defaults to a one-tailed
test of "x tends to be larger than y"; everything else is two-tailed.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import special

ALPHA = 0.05
LILLIEFORS_REPLICATES = 20_000
_MC_BLOCK = 1_000


class StatsError(ValueError):
    """Raised when a test's preconditions fail (too few values, zero variance...)."""


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # keep pytest from collecting this class

    test: str
    statistic_name: str
    statistic: float
    p_value: float
    tail: str
    alpha: float
    passed: bool
    df: float | tuple[float, float] | None = None
    n: tuple[int, ...] = ()
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = asdict(self)
        d["df"] = list(self.df) if isinstance(self.df, tuple) else self.df
        d["n"] = list(self.n)
        return d


def _result(test, name, stat, p, tail, alpha, df=None, n=()):
    p = float(min(1.0, max(0.0, p)))
    return TestResult(test, name, float(stat), p, tail, alpha, p < alpha, df, tuple(n))


# distribution functions -------------------------------------------------

def norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def norm_sf(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def p_from_z(z: float, tail: str = "one") -> float:
    """Normal-tail p-value: ``1 - Phi(|z|)`` one-tailed, doubled for two."""
    if not math.isfinite(z):
        raise StatsError("z must be finite")
    p = norm_sf(abs(z))
    if tail == "two":
        return min(1.0, 2.0 * p)
    if tail != "one":
        raise ValueError(f"tail must be 'one' or 'two', got {tail!r}")
    return p


def chi2_sf(x: float, df: float) -> float:
    if x <= 0:
        return 1.0
    if df == 1:
        return math.erfc(math.sqrt(x / 2.0))
    return float(special.gammaincc(df / 2.0, x / 2.0))


def t_sf_two(t: float, df: float) -> float:
    """Two-tailed p for Student's t via the regularized incomplete beta."""
    return float(special.betainc(df / 2.0, 0.5, df / (df + t * t)))


def f_sf(f: float, d1: float, d2: float) -> float:
    if f <= 0:
        return 1.0
    return float(special.betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f)))


# parametric tests -------------------------------------------------------

def _as_array(x, name="x") -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim != 1:
        raise StatsError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(a)):
        raise StatsError(f"{name} contains non-finite values")
    return a


def pearson(x, y) -> float:
    x, y = _as_array(x), _as_array(y, "y")
    if len(x) != len(y) or len(x) < 2:
        raise StatsError("pearson needs two equal-length samples of at least 2 values")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise StatsError("pearson undefined for zero variance")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def pearson_test(x, y, alpha: float = ALPHA) -> TestResult:
    """Correlation with the usual t-transform p-value (two-tailed, df = n - 2)."""
    r = pearson(x, y)
    n = len(x)
    df = n - 2
    if df <= 0 or abs(r) == 1.0:
        p = 0.0 if abs(r) == 1.0 and df > 0 else 1.0
    else:
        p = t_sf_two(r * math.sqrt(df / (1.0 - r * r)), df)
    return _result("pearson", "r", r, p, "two", alpha, df, (n,))


def _t_p(t, df, tail):
    p = t_sf_two(t, df)
    return p / 2.0 if tail == "one" else p


def t_test(x, y, mode: str = "pooled_independent", tail: str = "two", alpha: float = ALPHA) -> TestResult:
    """Student's t-test, ``paired`` or ``pooled_independent``."""
    x, y = _as_array(x), _as_array(y, "y")
    if mode == "paired":
        if len(x) != len(y) or len(x) < 2:
            raise StatsError("paired t-test needs two equal-length samples of at least 2 values")
        d = x - y
        df = len(d) - 1
        sd = d.std(ddof=1)
        if sd == 0:
            if d.mean() == 0:
                return _result("t_test_paired", "t", 0.0, 1.0, tail, alpha, df, (len(d),))
            raise StatsError("paired differences have zero variance")
        t = d.mean() / (sd / math.sqrt(len(d)))
        return _result("t_test_paired", "t", t, _t_p(t, df, tail), tail, alpha, df, (len(d),))
    if mode != "pooled_independent":
        raise ValueError(f"unknown t-test mode {mode!r}")
    n1, n2 = len(x), len(y)
    if n1 < 2 or n2 < 2:
        raise StatsError("pooled t-test needs at least 2 values per sample")
    df = n1 + n2 - 2
    sp2 = ((n1 - 1) * x.var(ddof=1) + (n2 - 1) * y.var(ddof=1)) / df
    if sp2 == 0:
        raise StatsError("pooled variance is zero")
    t = (x.mean() - y.mean()) / math.sqrt(sp2 * (1.0 / n1 + 1.0 / n2))
    return _result("t_test_pooled", "t", t, _t_p(t, df, tail), tail, alpha, df, (n1, n2))


def anova_oneway(groups: Sequence, alpha: float = ALPHA) -> TestResult:
    gs = [_as_array(g, "group") for g in groups]
    if len(gs) < 2 or any(len(g) < 2 for g in gs):
        raise StatsError("ANOVA needs at least 2 groups of at least 2 values")
    allv = np.concatenate(gs)
    grand = allv.mean()
    k, n = len(gs), len(allv)
    ssb = sum(len(g) * (g.mean() - grand) ** 2 for g in gs)
    ssw = sum(((g - g.mean()) ** 2).sum() for g in gs)
    if ssw == 0:
        raise StatsError("within-group variance is zero")
    d1, d2 = k - 1, n - k
    f = (ssb / d1) / (ssw / d2)
    return _result("anova_oneway", "F", f, f_sf(f, d1, d2), "two", alpha, (d1, d2),
                   tuple(len(g) for g in gs))


# rank tests -------------------------------------------------------------

def _midranks(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Midranks of ``a`` and the sizes of its tie groups."""
    order = np.argsort(a, kind="mergesort")
    s = a[order]
    group = np.cumsum(np.concatenate(([False], s[1:] != s[:-1])))
    counts = np.bincount(group)
    ends = np.cumsum(counts)
    ranks = np.empty(len(a))
    ranks[order] = ((2 * ends - counts + 1) / 2.0)[group]
    return ranks, counts


def mann_whitney_u(x, y) -> float:
    """U for ``x``: count of ``x_i > y_j`` plus half the ties, via midranks."""
    x, y = _as_array(x), _as_array(y, "y")
    ranks, _ = _midranks(np.concatenate([x, y]))
    n1 = len(x)
    return float(ranks[:n1].sum() - n1 * (n1 + 1) / 2.0)


def mann_whitney(x, y, tail: str = "one", alpha: float = ALPHA) -> TestResult:
    """Normal-approximation Mann-Whitney test, tie-corrected, no continuity correction.

    One-tailed tests the alternative that ``x`` is stochastically larger
    (``p = 1 - Phi(z)``); two-tailed uses ``2 (1 - Phi(|z|))``.
    """
    x, y = _as_array(x), _as_array(y, "y")
    n1, n2 = len(x), len(y)
    if n1 < 1 or n2 < 1:
        raise StatsError("Mann-Whitney needs non-empty samples")
    ranks, ties = _midranks(np.concatenate([x, y]))
    u = ranks[:n1].sum() - n1 * (n1 + 1) / 2.0
    n = n1 + n2
    tie_term = float((ties ** 3 - ties).sum())
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1))) if n > 1 else 0.0
    if var <= 0:
        raise StatsError("all values identical; Mann-Whitney variance is zero")
    z = (u - n1 * n2 / 2.0) / math.sqrt(var)
    if tail == "one":
        p = norm_sf(z)
    elif tail == "two":
        p = p_from_z(z, "two")
    else:
        raise ValueError(f"tail must be 'one' or 'two', got {tail!r}")
    res = _result("mann_whitney", "z", z, p, tail, alpha, None, (n1, n2))
    return replace(res, details={"U": float(u)})


def kruskal_wallis(groups: Sequence, alpha: float = ALPHA) -> TestResult:
    gs = [_as_array(g, "group") for g in groups]
    if len(gs) < 2 or any(len(g) == 0 for g in gs):
        raise StatsError("Kruskal-Wallis needs at least 2 non-empty groups")
    allv = np.concatenate(gs)
    n = len(allv)
    ranks, ties = _midranks(allv)
    correction = 1.0 - float((ties ** 3 - ties).sum()) / (n ** 3 - n) if n > 1 else 0.0
    if correction <= 0:
        raise StatsError("all values identical; Kruskal-Wallis undefined")
    h, start = 0.0, 0
    for g in gs:
        r = ranks[start:start + len(g)]
        h += r.sum() ** 2 / len(g)
        start += len(g)
    h = (12.0 / (n * (n + 1)) * h - 3.0 * (n + 1)) / correction
    h = max(h, 0.0)
    df = len(gs) - 1
    return _result("kruskal_wallis", "H", h, chi2_sf(h, df), "two", alpha, df,
                   tuple(len(g) for g in gs))


# Lilliefors ------------------------------------------------------------

def lilliefors_d(x) -> float:
    """KS distance between the sample and a normal with its own mean and sd."""
    x = np.sort(_as_array(x))
    sd = x.std(ddof=1)
    if sd == 0:
        raise StatsError("zero sample variance")
    return float(_d_rows(((x - x.mean()) / sd)[None, :])[0])


def _d_rows(z_sorted: np.ndarray) -> np.ndarray:
    n = z_sorted.shape[1]
    cdf = special.ndtr(z_sorted)
    i = np.arange(1, n + 1)
    d_plus = (i / n - cdf).max(axis=1)
    d_minus = (cdf - (i - 1) / n).max(axis=1)
    return np.maximum(d_plus, d_minus)


def _simulate_block(n, seed, block):
    rng = np.random.default_rng([seed, block])
    z = rng.standard_normal((_MC_BLOCK, n))
    z = (z - z.mean(axis=1, keepdims=True)) / z.std(axis=1, ddof=1, keepdims=True)
    z.sort(axis=1)
    return _d_rows(z)


_NULL_CACHE: dict[tuple[int, int, int], np.ndarray] = {}


def lilliefors_null(n: int, replicates: int = LILLIEFORS_REPLICATES, seed: int = 0,
                    workers: int = 1) -> np.ndarray:
    """Sorted simulated D statistics for samples of size ``n`` under normality.

    Replicates are generated in fixed blocks of 1,000 whose generator is
    ``default_rng([seed, block])``, so the result ignores ``workers``.
    """
    key = (n, replicates, seed)
    if key not in _NULL_CACHE:
        blocks = -(-replicates // _MC_BLOCK)
        job = lambda b: _simulate_block(n, seed, b)  # noqa: E731
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                parts = list(pool.map(job, range(blocks)))
        else:
            parts = [job(b) for b in range(blocks)]
        _NULL_CACHE[key] = np.sort(np.concatenate(parts)[:replicates])
    return _NULL_CACHE[key]


def ks_normality(x, alpha: float = ALPHA, replicates: int = LILLIEFORS_REPLICATES,
                 seed: int = 0, workers: int = 1) -> TestResult:
    """Lilliefors normality test with a Monte-Carlo p-value.

    ``passed`` is True when normality is rejected.
    """
    x = _as_array(x)
    if len(x) < 4:
        raise StatsError("normality test needs at least 4 values")
    d = lilliefors_d(x)
    null = lilliefors_null(len(x), replicates, seed, workers)
    exceed = len(null) - np.searchsorted(null, d, side="left")
    p = (exceed + 1) / (len(null) + 1)
    return _result("ks_normality", "D", d, p, "one", alpha, None, (len(x),))


def lilliefors_critical_value(n: int, alpha: float = ALPHA, replicates: int = LILLIEFORS_REPLICATES,
                              seed: int = 0) -> float:
    null = lilliefors_null(n, replicates, seed)
    return float(np.quantile(null, 1.0 - alpha))
