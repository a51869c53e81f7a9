"""Acceptance criteria 1-7.  Each test prints one PASS/FAIL line and asserts it.

Run alone with ``pytest tests/test_acceptance.py -v`` or as a script.
"""
import itertools
import math
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import norm

from credulens import analysis, behavior, rank, stats
from credulens.cli import main
from credulens.features import extract_matrix
from credulens.learn import run_credulous_task
from credulens.learn.evaluation import balanced_folds, roc_auc
from credulens.synth import SynthConfig, generate_corpus, write_corpus

from conftest import ACCEPTANCE_LINES


@contextmanager
def criterion(number, title, limit_s):
    """Time a criterion body; the body yields a list of (ok, detail) checks."""
    checks = []
    start = time.perf_counter()
    yield checks
    elapsed = time.perf_counter() - start
    timing_ok = limit_s is None or elapsed < limit_s
    ok = all(c for c, _ in checks) and timing_ok
    details = "; ".join(d for _, d in checks)
    limit = f" (limit {limit_s:g} s)" if limit_s is not None else ""
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} [{details}] {elapsed:.2f} s{limit}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_criterion_1_p_values():
    with criterion(1, "z and chi-square p-values", 1.0) as checks:
        for z, want in ((3.3, 0.00048), (3.37056, 0.00038)):
            got = stats.p_from_z(z, tail="one")
            checks.append((abs(got - want) <= 1e-5, f"p(z={z})={got:.6f}"))
        for h, want in ((10.89, 0.00097), (11.36, 0.00075)):
            got = stats.chi2_sf(h, 1)
            checks.append((abs(got - want) <= 1e-5, f"p(H={h})={got:.6f}"))


def test_criterion_2_cross_test_identities():
    rng = np.random.default_rng(2024)
    with criterion(2, "t^2 = F and MW z^2 = KW H", 5.0) as checks:
        worst = 0.0
        for _ in range(500):
            n1, n2 = rng.integers(2, 40, size=2)
            x = rng.normal(rng.normal(), rng.uniform(0.5, 3), n1)
            y = rng.normal(rng.normal(), rng.uniform(0.5, 3), n2)
            t = stats.t_test(x, y, mode="pooled_independent").statistic
            f = stats.anova_oneway([x, y]).statistic
            worst = max(worst, abs(t * t - f) / f)
        checks.append((worst <= 1e-9, f"t^2/F max rel err {worst:.1e} over 500"))
        worst = 0.0
        for _ in range(200):
            n1, n2 = rng.integers(1, 40, size=2)
            v = rng.permutation(n1 + n2).astype(float) + rng.uniform(0, 0.5)
            x, y = v[:n1], v[n1:]
            z = stats.mann_whitney(x, y, tail="two").statistic
            h = stats.kruskal_wallis([x, y]).statistic
            worst = max(worst, abs(z * z - h) / max(h, 1e-300))
        checks.append((worst <= 1e-9, f"z^2/H max rel err {worst:.1e} over 200"))


def _u_by_pairs(vals, n1):
    x, y = vals[:, :n1, None], vals[:, None, n1:]
    return (x > y).sum(axis=(1, 2)) + 0.5 * (x == y).sum(axis=(1, 2))


def _entropy_bits(counts):
    total = sum(counts)
    return -sum(c / total * math.log2(c / total) for c in counts if c)


def _ig_su_from_table(a, c):
    """Information gain and SU from a 2x2 contingency table of (attr, class)."""
    table = {(i, j): sum(1 for ai, ci in zip(a, c) if (ai, ci) == (i, j)) for i in (0, 1) for j in (0, 1)}
    h_c = _entropy_bits([table[0, j] + table[1, j] for j in (0, 1)])
    h_a = _entropy_bits([table[i, 0] + table[i, 1] for i in (0, 1)])
    h_joint = _entropy_bits(list(table.values()))
    ig = h_a + h_c - h_joint
    su = 0.0 if h_a + h_c == 0 else 2 * ig / (h_a + h_c)
    return ig, su


def test_criterion_3_oracle_equivalence():
    rng = np.random.default_rng(3)
    with criterion(3, "U, AUC and IG/SU against exhaustive oracles", 30.0) as checks:
        n_cases, bad = 0, 0
        for n in range(2, 9):
            vals = np.array(list(itertools.product(range(1, 5), repeat=n)), dtype=float)
            for n1 in range(1, n):
                want = _u_by_pairs(vals, n1)
                got = np.array([stats.mann_whitney_u(v[:n1], v[n1:]) for v in vals])
                bad += int((got != want).sum())
                n_cases += len(vals)
        checks.append((bad == 0, f"U mismatches {bad}/{n_cases}"))

        worst = 0.0
        for _ in range(200):
            n1, n2 = rng.integers(1, 30, size=2)
            pos, neg = rng.integers(0, 8, n1), rng.integers(0, 8, n2)
            truth = np.r_[np.ones(n1, int), np.zeros(n2, int)]
            perm = rng.permutation(n1 + n2)
            auc = roc_auc(truth[perm], np.r_[pos, neg][perm])
            worst = max(worst, abs(auc - stats.mann_whitney_u(pos, neg) / (n1 * n2)))
        checks.append((worst <= 1e-12, f"AUC vs U/(n1n2) max err {worst:.1e} over 200"))

        bad, count = 0, 0
        for a in itertools.product((0, 1), repeat=4):
            for c in itertools.product((0, 1), repeat=4):
                if len(set(c)) < 2:
                    continue
                ig_want, su_want = _ig_su_from_table(a, c)
                attr = np.array(a).astype(str)
                labels = np.array(c).astype(str)
                ig = rank.info_gain(attr, labels)
                su = rank.symmetric_uncertainty(attr, labels)
                bad += int(abs(ig - ig_want) > 1e-12 or abs(su - su_want) > 1e-12)
                count += 1
        checks.append((bad == 0, f"IG/SU mismatches {bad}/{count}"))


def test_criterion_4_fold_construction():
    minority = [f"c{i}" for i in range(316)]
    majority = [f"n{i}" for i in range(2522)]
    with criterion(4, "balanced folds for 316 vs 2522", 1.0) as checks:
        folds = balanced_folds(minority, majority, seed=0)
        sizes = [(len(f.minority), len(f.majority)) for f in folds]
        checks.append((sizes == [(316, 316)] * 7 + [(310, 310)], f"{len(folds)} folds, last {sizes[-1]}"))
        chunks = [set(f.majority) for f in folds]
        union = set().union(*chunks)
        partition = union == set(majority) and sum(map(len, chunks)) == len(majority)
        checks.append((partition, "majority partitioned" if partition else "majority not partitioned"))
        sub = set(folds[-1].minority) <= set(minority) and len(set(folds[-1].minority)) == 310
        checks.append((sub, "last minority is a 310-subset"))


def _pipeline_mw(cfg):
    corpus, _ = generate_corpus(cfg)
    ba = analysis.analyze_behavior(corpus, analysis.oracle_from_labels(corpus), seed=cfg.seed)
    a = ba.actions["retweet"]
    return ba, stats.mann_whitney(behavior.values_of(a.c), behavior.values_of(a.nc_sample))


def _credulous_matrix(cfg):
    corpus, _ = generate_corpus(cfg)
    return extract_matrix(corpus, cfg.reference_date,
                          labels=corpus.credulous_labels).labeled(["credulous", "not_credulous"])


def test_criterion_5_end_to_end(tmp_path):
    with criterion(5, "synthetic end-to-end pipeline", None) as checks:
        # the battery the pipeline runs reports the same Mann-Whitney as the direct call
        ba, direct = _pipeline_mw(SynthConfig(n_credulous=316, n_not_credulous=316, seed=0))
        row = next(r for r in analysis.behavior_battery(ba, seed=0)
                   if r.metric == "bybot_retweet" and r.result.test == "mann_whitney")
        checks.append((row.result == direct, "battery row matches"))

        power = np.mean([_pipeline_mw(SynthConfig(n_credulous=316, n_not_credulous=316, seed=s))[1].passed
                         for s in range(50)])
        checks.append((power >= 0.80, f"power {power:.2f} >= 0.80 over 50 seeds"))
        null = np.mean([_pipeline_mw(SynthConfig(n_credulous=316, n_not_credulous=316,
                                                 seed=s).without_separation())[1].passed
                        for s in range(100)])
        checks.append((null <= 0.12, f"type-I {null:.2f} <= 0.12 over 100 seeds"))

        m = _credulous_matrix(SynthConfig.strongly_separated(seed=3))
        acc = run_credulous_task(m, "one_r", seed=3).average.accuracy
        checks.append((acc >= 90.0, f"strong-separation accuracy {acc:.2f}% >= 90%"))
        perm = np.random.default_rng(0).permutation(len(m))
        shuffled = m.with_labels([m.labels[i] for i in perm])
        auc = run_credulous_task(shuffled, "one_r", seed=3).average.auc
        checks.append((0.4 <= auc <= 0.6, f"permuted AUC {auc:.3f} in [0.4, 0.6]"))

        cfg = SynthConfig(timeline_mean=53.0, seed=5)
        corpus, truth = generate_corpus(cfg)
        write_corpus(tmp_path / "corpus", corpus, truth, cfg)
        n_tweets = sum(len(t) for t in corpus.timelines.values())
        start = time.perf_counter()
        rc = main(["pipeline", "--accounts", str(tmp_path / "corpus/accounts.jsonl"),
                   "--tweets", str(tmp_path / "corpus/tweets.jsonl"),
                   "--labels", str(tmp_path / "corpus/labels.csv"),
                   "--seed", "5", "--out", str(tmp_path / "run")])
        elapsed = time.perf_counter() - start
        checks.append((rc == 0 and elapsed < 60,
                       f"pipeline on {len(corpus.accounts)} accounts / {n_tweets} tweets in {elapsed:.1f} s < 60 s"))


SUBCOMMANDS = ("validate", "features", "train", "cv", "credulous", "rank", "behavior", "stats", "pipeline")


def _snapshot(d: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_criterion_6_determinism(tmp_path):
    with criterion(6, "byte-identical reports at workers 1, 4, 8", None) as checks:
        synth = []
        for i in range(2):
            out = tmp_path / f"synth{i}"
            main(["synth", "--seed", "7", "--n-credulous", "316", "--n-not-credulous", "316",
                  "--n-bots", "100", "--out", str(out)])
            synth.append(_snapshot(out))
        checks.append((synth[0] == synth[1], "synth rerun identical"))
        corpus = tmp_path / "synth0"
        inputs = ["--accounts", str(corpus / "accounts.jsonl"), "--tweets", str(corpus / "tweets.jsonl"),
                  "--labels", str(corpus / "labels.csv"), "--seed", "7"]
        variants = {"default": [], "forest": ["--algo", "forest"]}
        for cmd in SUBCOMMANDS:
            for name, extra in variants.items():
                if name == "forest" and cmd not in ("train", "cv", "credulous"):
                    continue
                snaps = []
                for w in (1, 4, 8):
                    out = tmp_path / f"{cmd}-{name}-w{w}-{len(snaps)}"
                    assert main([cmd, *inputs, *extra, "--workers", str(w), "--out", str(out)]) == 0
                    snaps.append(_snapshot(out))
                same = all(s == snaps[0] for s in snaps[1:])
                checks.append((same, f"{cmd}{'/' + name if extra else ''} {'ok' if same else 'DIFFERS'}"))


def test_criterion_7_lilliefors_calibration():
    n = 1000
    normal = norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    uniform = np.linspace(0.0, 1.0, n)
    with criterion(7, "Lilliefors at n=1000 over 10 simulation seeds", None) as checks:
        kept, rejected = 0, 0
        for seed in range(10):
            kept += not stats.ks_normality(normal, seed=seed).passed
            rejected += stats.ks_normality(uniform, seed=seed).passed
        checks.append((kept == 10, f"normal quantiles not rejected {kept}/10"))
        checks.append((rejected == 10, f"uniform grid rejected {rejected}/10"))


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
