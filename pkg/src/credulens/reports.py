"""Report writers.  Every file carries provenance: tool version, seed and a
digest of the decision-bearing configuration.

JSON reports hold a ``provenance`` object; CSV reports start with one
``#`` comment line holding the same three values.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .analysis import BatteryRow, BehaviorAnalysis
from .features import FeatureMatrix, write_features_csv
from .learn import EvalReport, Metrics
from .rank import RankingReport

TOOL = "credulens"


def config_digest(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Provenance:
    seed: int
    config: dict = field(default_factory=dict)
    version: str = __version__

    @property
    def digest(self) -> str:
        return config_digest(self.config)

    def to_json(self) -> dict:
        return {"tool": TOOL, "version": self.version, "seed": self.seed,
                "config_digest": self.digest, "config": self.config}

    def comment(self) -> str:
        return f"# {TOOL} {self.version} seed={self.seed} config_digest={self.digest}\n"


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)


def _clean(v):
    """JSON-safe copy: NaN/inf become null, numpy scalars become Python ones."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def write_json(path, payload: dict, prov: Provenance) -> Path:
    path = Path(path)
    body = _clean({"provenance": prov.to_json(), **payload})
    path.write_text(json.dumps(body, indent=1, sort_keys=True, default=str) + "\n")
    return path


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], prov: Provenance) -> Path:
    path = Path(path)
    buf = io.StringIO()
    buf.write(prov.comment())
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    path.write_text(buf.getvalue())
    return path


def write_features(path, matrix: FeatureMatrix, prov: Provenance) -> Path:
    path = Path(path)
    buf = io.StringIO()
    buf.write(prov.comment())
    write_features_csv(buf, matrix)
    path.write_text(buf.getvalue())
    return path


METRIC_COLUMNS = ("accuracy", "precision", "recall", "f1", "auc")


def _metric_row(name, m: Metrics, size=None):
    return [name, size] + [getattr(m, c) for c in METRIC_COLUMNS] + [m.tp, m.fp, m.tn, m.fn]


def write_eval_report(out_dir, report: EvalReport, prov: Provenance, stem: str = "eval_report") -> list[Path]:
    """``<stem>.json`` plus a CSV twin: one row per fold and a final ``avg`` row."""
    out = Path(out_dir)
    paths = [write_json(out / f"{stem}.json", report.to_json(), prov)]
    sizes = list(report.fold_sizes) or [None] * report.n_folds
    rows = [_metric_row(str(i + 1), m, s) for i, (m, s) in enumerate(zip(report.folds, sizes))]
    avg = _metric_row("avg", report.average)
    avg[-4:] = [None] * 4  # averaged confusion counts are not integers
    rows.append(avg)
    header = ("fold", "size") + METRIC_COLUMNS + ("tp", "fp", "tn", "fn")
    paths.append(write_csv(out / f"{stem}.csv", header, rows, prov))
    return paths


def write_ranking(path, reports: Sequence[RankingReport], prov: Provenance) -> Path:
    rows = []
    for r in reports:
        for i, e in enumerate(r.entries, start=1):
            rows.append((r.evaluator, i, e.feature, e.raw, e.normalized))
    return write_csv(path, ("evaluator", "rank", "feature", "raw_score", "normalized_score"), rows, prov)


def write_behavior(out_dir, analysis: BehaviorAnalysis, prov: Provenance) -> list[Path]:
    """``behavior.csv``, ``coverage.csv``, ``deciles.csv`` and ``behavior_summary.json``."""
    out = Path(out_dir)
    rows = []
    for action, a in analysis.actions.items():
        sampled = {m.account_id for m in a.nc_sample}
        for cls, metrics in (("C", a.c), ("NC", a.nc)):
            for m in metrics:
                pct = "OUTLIER" if m.outlier else m.percentage
                in_sample = True if cls == "C" else m.account_id in sampled
                rows.append((m.account_id, cls, action, m.total, m.bybot, pct, in_sample))
    paths = [write_csv(out / "behavior.csv",
                       ("account_id", "class", "action", "total", "bybot", "percentage_or_OUTLIER", "in_sample"),
                       rows, prov)]

    cov = [(action, p.x, p.pct_c_ge, p.pct_nc_lt) for action, a in analysis.actions.items() for p in a.coverage]
    paths.append(write_csv(out / "coverage.csv", ("action", "x", "pct_C_ge", "pct_NC_lt"), cov, prov))

    dec = []
    for action, a in analysis.actions.items():
        for group, hist in a.deciles.items():
            for b, c, p in zip(hist.bins, hist.counts, hist.percentages):
                dec.append((action, group, b, c, p))
    paths.append(write_csv(out / "deciles.csv", ("action", "group", "bin", "count", "percentage"), dec, prov))

    summary = {"sample_seed": analysis.sample_seed, "activity": analysis.activity, "actions": {}}
    for action, a in analysis.actions.items():
        best = a.coverage_max
        summary["actions"][action] = {
            "summary": {k: vars(s) for k, s in a.summaries().items()},
            "sample_distance": a.sample_distance,
            "coverage_max": None if best is None else {
                "x": best.x, "pct_C_ge": best.pct_c_ge, "pct_NC_lt": best.pct_nc_lt, "combined": best.combined},
        }
    paths.append(write_json(out / "behavior_summary.json", summary, prov))
    return paths


TEST_COLUMNS = ("metric", "group", "test", "statistic_name", "statistic", "df", "p", "tail", "alpha", "passed", "n")


def _test_row(r: BatteryRow):
    t = r.result
    df = "/".join(fmt(float(d)) for d in t.df) if isinstance(t.df, tuple) else t.df
    return (r.metric, r.group, t.test, t.statistic_name, t.statistic, df, t.p_value, t.tail, t.alpha, t.passed,
            "/".join(str(n) for n in t.n))


def write_tests(out_dir, rows: Sequence[BatteryRow], prov: Provenance, extra: dict | None = None) -> list[Path]:
    out = Path(out_dir)
    payload = {"tests": [{"metric": r.metric, "group": r.group, **r.result.to_json()} for r in rows]}
    payload.update(extra or {})
    return [
        write_json(out / "tests.json", payload, prov),
        write_csv(out / "tests.csv", TEST_COLUMNS, [_test_row(r) for r in rows], prov),
    ]
