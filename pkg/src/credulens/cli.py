"""Command-line entry point: one subcommand per pipeline stage plus ``pipeline``."""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import traceback
from dataclasses import dataclass
from datetime import date
from pathlib import Path

from . import __version__, analysis, reports
from .features import F15_BAND, extract_matrix
from .ingest import BOT_LABELS, CREDULOUS_LABELS, IngestError, apply_friend_cap, load_corpus, validate_corpus
from .learn import cross_validate, evaluate, make_algo, run_credulous_task, train
from .rank import EVALUATORS, format_table, rank_features
from .stats import ALPHA
from .synth import SynthConfig, generate_corpus, write_corpus

log = logging.getLogger("credulens")

ALGO_CHOICES = ("zero_r", "one_r", "knn", "tree", "forest")
SYNTH_PRESETS = {
    "default": SynthConfig,
    "strong": SynthConfig.strongly_separated,
    "none": lambda **kw: SynthConfig(**kw).without_separation(),
    "squared_ratio": SynthConfig.squared_ratio_signal,
}
SUBCOMMANDS = ("synth", "validate", "features", "train", "cv", "credulous", "rank", "behavior", "stats", "pipeline")
_PIPELINE_STEPS = ("validate", "features", "train", "cv", "credulous", "rank", "behavior", "stats")


class CliError(Exception):
    """Bad invocation or unusable inputs."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error("usage", message, None)
        sys.exit(2)


def _emit_error(kind, message, subcommand, module=None, operation=None):
    err = {"error": {"type": kind, "message": message, "subcommand": subcommand,
                     "module": module, "operation": operation}}
    sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")


def _band(text):
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected LO:HI") from None
    if lo > hi:
        raise argparse.ArgumentTypeError("LO must not exceed HI")
    return lo, hi


def _iso_date(text):
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected YYYY-MM-DD") from None


def _default_seed():
    env = os.environ.get("CREDULENS_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise CliError(f"CREDULENS_SEED must be an integer, got {env!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("inputs")
    g.add_argument("--accounts", type=Path, help="accounts JSONL")
    g.add_argument("--tweets", type=Path, help="tweets JSONL")
    g.add_argument("--labels", type=Path, help="labels CSV (account_id,label)")
    g.add_argument("--synth-defaults", action="store_true",
                   help="use an in-memory synthetic corpus with default settings instead of input files")
    g.add_argument("--friend-cap", type=int, metavar="N",
                   help="drop human accounts following more than N accounts")
    g = common.add_argument_group("analysis")
    g.add_argument("--seed", type=int, help="random seed (fallback: $CREDULENS_SEED, then 0)")
    g.add_argument("--algo", choices=ALGO_CHOICES, default="one_r")
    g.add_argument("--k", type=int, default=1, help="neighbors for knn")
    g.add_argument("--folds", type=int, default=10, help="cross-validation folds")
    g.add_argument("--alpha", type=float, default=ALPHA)
    g.add_argument("--tail", choices=("one", "two"), default="one", help="Mann-Whitney tail")
    g.add_argument("--t-mode", choices=analysis.T_MODES, default="pooled_independent",
                   help="t-test mode for the feature tests")
    g.add_argument("--reference-date", type=_iso_date,
                   help="date for account ages (default: newest creation date in the corpus)")
    g.add_argument("--f15-band", type=_band, default=F15_BAND, metavar="LO:HI")
    g.add_argument("--bot-oracle", default="labels",
                   help="'labels', 'model', or a CSV of account_id,label with bot/human verdicts")
    g = common.add_argument_group("output")
    g.add_argument("--out", type=Path, required=True, metavar="DIR")
    g.add_argument("--force", action="store_true", help="write into a non-empty output directory")
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--plots", action="store_true", help="also write PNG figures (needs matplotlib)")

    parser = _Parser(prog="credulens", description="Credulous-user detection and bot-amplification analytics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "synth": "generate a synthetic corpus",
        "validate": "check inputs and report counts and rejects",
        "features": "write the profile feature matrix",
        "train": "fit the bot classifier and score every account",
        "cv": "cross-validate the bot classifier",
        "credulous": "balanced-fold credulous classification",
        "rank": "rank features for the credulous task",
        "behavior": "byBot percentages, coverage and deciles",
        "stats": "hypothesis-test battery",
        "pipeline": "run every analysis stage into one directory",
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, parents=[common], help=helps[name])
        if name == "synth":
            p.add_argument("--preset", choices=tuple(SYNTH_PRESETS), default="default")
            p.add_argument("--n-credulous", type=int)
            p.add_argument("--n-not-credulous", type=int)
            p.add_argument("--n-bots", type=int)
        if name == "stats":
            p.add_argument("--x", type=Path, help="values of the first group (skips the corpus battery)")
            p.add_argument("--y", type=Path, help="values of the second group")
    return parser


# run context --------------------------------------------------------------

def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class Context:
    args: argparse.Namespace
    seed: int
    corpus: object = None
    rejects: dict = None
    reference_date: date | None = None
    prov: reports.Provenance | None = None
    _behavior: object = None

    @property
    def out(self) -> Path:
        return self.args.out

    @property
    def feature_kw(self) -> dict:
        return {"f15_band": tuple(self.args.f15_band)}

    def algo(self):
        return make_algo(self.args.algo, k=self.args.k, seed=self.seed)

    def behavior(self):
        if self._behavior is None:
            oracle = self.oracle()
            self._behavior = analysis.analyze_behavior(self.corpus, oracle, self.seed)
        return self._behavior

    def oracle(self):
        kind = self.args.bot_oracle
        if kind == "labels":
            return analysis.oracle_from_labels(self.corpus)
        if kind == "model":
            return analysis.oracle_from_model(self.corpus, self.algo(), self.reference_date, **self.feature_kw)
        return analysis.oracle_from_file(kind)


def _load(ctx: Context) -> None:
    args = ctx.args
    if args.synth_defaults:
        if args.accounts or args.tweets or args.labels:
            raise CliError("--synth-defaults cannot be combined with input files")
        cfg = SynthConfig(seed=ctx.seed)
        corpus, _ = generate_corpus(cfg)
        rejects = {}
        inputs = {"synth": cfg.to_json()}
        ref = args.reference_date or cfg.reference_date
    else:
        if args.accounts is None:
            raise CliError("--accounts is required (or use --synth-defaults)")
        for p in (args.accounts, args.tweets, args.labels):
            if p is not None and not p.is_file():
                raise CliError(f"input file not found: {p}")
        corpus, rejects = load_corpus(args.accounts, args.tweets, args.labels)
        inputs = {name: _file_digest(p) for name, p in
                  (("accounts", args.accounts), ("tweets", args.tweets), ("labels", args.labels)) if p is not None}
        if not corpus.accounts:
            raise CliError("no valid account records")
        ref = args.reference_date or max(a.created_at for a in corpus.accounts)
        for name, rej in rejects.items():
            if rej:
                log.warning("%s: %d record(s) rejected", name, len(rej))
    if args.friend_cap is not None:
        corpus = apply_friend_cap(corpus, args.friend_cap)
    oracle = args.bot_oracle
    if oracle not in ("labels", "model"):
        if not Path(oracle).is_file():
            raise CliError(f"bot oracle file not found: {oracle}")
        oracle = {"file": _file_digest(Path(oracle))}
    config = {
        "inputs": inputs,
        "friend_cap": args.friend_cap,
        "reference_date": ref.isoformat(),
        "f15_band": list(args.f15_band),
        "algo": args.algo,
        "knn_k": args.k,
        "folds": args.folds,
        "alpha": args.alpha,
        "mann_whitney_tail": args.tail,
        "t_mode": args.t_mode,
        "bot_oracle": oracle,
    }
    ctx.corpus, ctx.rejects, ctx.reference_date = corpus, rejects, ref
    ctx.prov = reports.Provenance(ctx.seed, config)


def _prepare_out(out: Path, force: bool) -> None:
    if out.exists() and not out.is_dir():
        raise CliError(f"--out {out} exists and is not a directory")
    if out.exists() and any(out.iterdir()) and not force:
        raise CliError(f"--out {out} is not empty; pass --force to write into it")
    out.mkdir(parents=True, exist_ok=True)


# subcommands --------------------------------------------------------------

def cmd_synth(ctx: Context) -> list[Path]:
    args = ctx.args
    overrides = {"seed": ctx.seed}
    for name in ("n_credulous", "n_not_credulous", "n_bots"):
        if getattr(args, name) is not None:
            overrides[name] = getattr(args, name)
    cfg = SYNTH_PRESETS[args.preset](**overrides)
    corpus, truth = generate_corpus(cfg)
    paths = write_corpus(ctx.out, corpus, truth)
    prov = reports.Provenance(ctx.seed, {"preset": args.preset, "synth": cfg.to_json()})
    reports.write_json(paths["ground_truth"], {"config": cfg.to_json(), **truth.to_json()}, prov)
    print(f"synth: {len(corpus.accounts)} accounts, {sum(map(len, corpus.timelines.values()))} tweets")
    return list(paths.values())


def cmd_validate(ctx: Context) -> list[Path]:
    st = validate_corpus(ctx.corpus)
    rej = {name: [{"line": r.line, "reason": r.reason} for r in rs] for name, rs in (ctx.rejects or {}).items()}
    payload = {"stats": st.to_json(), "rejects": rej, "n_rejects": {k: len(v) for k, v in rej.items()}}
    print(f"validate: {st.n_accounts} accounts, {sum(len(v) for v in rej.values())} rejected records")
    return [reports.write_json(ctx.out / "validation.json", payload, ctx.prov)]


def cmd_features(ctx: Context) -> list[Path]:
    matrix = extract_matrix(ctx.corpus, ctx.reference_date, **ctx.feature_kw)
    print(f"features: {matrix.shape[0]} x {matrix.shape[1]}")
    return [reports.write_features(ctx.out / "features.csv", matrix, ctx.prov)]


def _bot_matrix(ctx: Context):
    matrix = extract_matrix(ctx.corpus, ctx.reference_date, labels=ctx.corpus.bot_labels, **ctx.feature_kw)
    labeled = matrix.labeled(BOT_LABELS)
    if len(set(labeled.labels)) < 2:
        raise CliError("bot task needs both bot and human labels")
    return matrix, labeled


def cmd_train(ctx: Context) -> list[Path]:
    matrix, labeled = _bot_matrix(ctx)
    model = train(ctx.algo(), labeled, positive="bot")
    proba = model.predict_proba(matrix.X)
    pos = list(model.classes_).index(1)
    scores = proba[:, pos]
    y = labeled.target("bot")
    fit_scores = model.predict_proba(labeled.X)[:, pos]
    fit = evaluate(zip(y, (fit_scores >= 0.5).astype(int), fit_scores))
    rows = [(aid, lab or "", "bot" if s >= 0.5 else "human", float(s))
            for aid, lab, s in zip(matrix.account_ids, matrix.labels, scores)]
    payload = {"algo": ctx.args.algo, "params": reports._clean(model.get_params()), "task": "bot",
               "n_train": len(labeled), "training_metrics": fit.to_json()}
    print(f"train: {ctx.args.algo} on {len(labeled)} accounts, training accuracy {fit.accuracy:.2f}%")
    return [
        reports.write_json(ctx.out / "train_report.json", payload, ctx.prov),
        reports.write_csv(ctx.out / "bot_predictions.csv", ("account_id", "label", "predicted", "score"), rows,
                          ctx.prov),
    ]


def cmd_cv(ctx: Context) -> list[Path]:
    _, labeled = _bot_matrix(ctx)
    rep = cross_validate(labeled, ctx.algo(), k=ctx.args.folds, seed=ctx.seed, positive="bot",
                         workers=ctx.args.workers, task="bot")
    print(f"cv: {rep.algo} accuracy {rep.average.accuracy:.2f}% over {rep.n_folds} folds")
    return reports.write_eval_report(ctx.out, rep, ctx.prov, stem="bot_eval_report")


def _credulous_matrix(ctx: Context):
    matrix = extract_matrix(ctx.corpus, ctx.reference_date, labels=ctx.corpus.credulous_labels, **ctx.feature_kw)
    labeled = matrix.labeled(CREDULOUS_LABELS)
    if len(set(labeled.labels)) < 2:
        raise CliError("credulous task needs both credulous and not_credulous labels")
    return labeled


def cmd_credulous(ctx: Context) -> list[Path]:
    rep = run_credulous_task(_credulous_matrix(ctx), ctx.algo(), seed=ctx.seed, k=ctx.args.folds,
                             workers=ctx.args.workers)
    auc = "n/a" if rep.average.auc is None else f"{rep.average.auc:.3f}"
    print(f"credulous: {rep.algo} accuracy {rep.average.accuracy:.2f}%, AUC {auc} over {rep.n_folds} folds")
    return reports.write_eval_report(ctx.out, rep, ctx.prov)


def cmd_rank(ctx: Context) -> list[Path]:
    labeled = _credulous_matrix(ctx)
    reps = [rank_features(labeled, ev) for ev in EVALUATORS]
    print(format_table(reps))
    return [reports.write_ranking(ctx.out / "ranking.csv", reps, ctx.prov)]


def cmd_behavior(ctx: Context) -> list[Path]:
    result = ctx.behavior()
    paths = reports.write_behavior(ctx.out, result, ctx.prov)
    if ctx.args.plots:
        from .plots import plot_behavior
        paths += plot_behavior(ctx.out, result)
    for action, a in result.actions.items():
        s = a.summaries()
        print(f"behavior: byBot {action} C mean {s['C'].mean:.2f}, NC sample mean {s['NC_sample'].mean:.2f}")
    return paths


def cmd_stats(ctx: Context) -> list[Path]:
    args = ctx.args
    common = dict(alpha=args.alpha, tail=args.tail, seed=ctx.seed, workers=args.workers)
    if getattr(args, "x", None) is not None or getattr(args, "y", None) is not None:
        if args.x is None or args.y is None:
            raise CliError("--x and --y must be given together")
        x, y = analysis.read_values(args.x), analysis.read_values(args.y)
        rows = analysis.compare_populations("values", x, y, **common)
        extra = {"inputs": {"x": str(args.x), "y": str(args.y)}}
    else:
        rows = analysis.behavior_battery(ctx.behavior(), **common)
        rows += analysis.feature_battery(ctx.corpus, ctx.reference_date, seed=ctx.seed, alpha=args.alpha,
                                         t_mode=args.t_mode, **ctx.feature_kw)
        extra = {"t_mode": args.t_mode}
    n_rej = sum(r.result.passed for r in rows)
    print(f"stats: {len(rows)} tests, null rejected in {n_rej}")
    return reports.write_tests(ctx.out, rows, ctx.prov, extra)


COMMANDS = {
    "synth": cmd_synth,
    "validate": cmd_validate,
    "features": cmd_features,
    "train": cmd_train,
    "cv": cmd_cv,
    "credulous": cmd_credulous,
    "rank": cmd_rank,
    "behavior": cmd_behavior,
    "stats": cmd_stats,
}


def run(args: argparse.Namespace) -> list[Path]:
    seed = args.seed if args.seed is not None else _default_seed()
    ctx = Context(args, seed)
    if args.command == "stats" and (args.x is not None or args.y is not None):
        # value-file mode needs no corpus
        ctx.prov = reports.Provenance(seed, {"alpha": args.alpha, "mann_whitney_tail": args.tail,
                                             "inputs": {k: _file_digest(p) for k, p in (("x", args.x), ("y", args.y))
                                                        if p is not None and p.is_file()}})
        for p in (args.x, args.y):
            if p is not None and not p.is_file():
                raise CliError(f"input file not found: {p}")
    elif args.command != "synth":
        _load(ctx)
    _prepare_out(args.out, args.force)
    if args.command == "pipeline":
        paths = []
        for step in _PIPELINE_STEPS:
            paths += COMMANDS[step](ctx)
        return paths
    return COMMANDS[args.command](ctx)


def _locate(exc: BaseException) -> tuple[str | None, str | None]:
    """Innermost package module and function in the traceback."""
    module = operation = None
    for frame in traceback.extract_tb(exc.__traceback__):
        parts = Path(frame.filename).parts
        if "credulens" in parts:
            module = Path(frame.filename).stem
            operation = frame.name
    return module, operation


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        run(args)
    except Exception as exc:  # report every failure in machine-readable form
        module, operation = _locate(exc)
        kind = "input" if isinstance(exc, (CliError, IngestError, OSError)) else type(exc).__name__
        _emit_error(kind, str(exc), args.command, module, operation)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
