import json

import numpy as np
import pytest

from credulens import __version__
from credulens.cli import main

PIPELINE_FILES = {"features.csv", "eval_report.json", "ranking.csv", "behavior.csv", "coverage.csv",
                  "deciles.csv", "tests.json"}


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    assert main(["synth", "--seed", "5", "--n-credulous", "60", "--n-not-credulous", "200",
                 "--n-bots", "40", "--out", str(d), "--force"]) == 0
    return d


def _inputs(d):
    return ["--accounts", str(d / "accounts.jsonl"), "--tweets", str(d / "tweets.jsonl"),
            "--labels", str(d / "labels.csv")]


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory, corpus_dir):
    out = tmp_path_factory.mktemp("run") / "p"
    assert main(["pipeline", *_inputs(corpus_dir), "--seed", "3", "--out", str(out)]) == 0
    return out


def test_synth_writes_corpus(corpus_dir):
    names = {p.name for p in corpus_dir.iterdir()}
    assert {"accounts.jsonl", "tweets.jsonl", "labels.csv", "ground_truth.json"} <= names
    gt = json.loads((corpus_dir / "ground_truth.json").read_text())
    assert gt["provenance"]["seed"] == 5


def test_pipeline_contract(pipeline_dir):
    names = {p.name for p in pipeline_dir.iterdir()}
    assert PIPELINE_FILES <= names


def test_every_report_has_provenance(pipeline_dir):
    digests = set()
    for p in pipeline_dir.iterdir():
        if p.suffix == ".json":
            prov = json.loads(p.read_text())["provenance"]
            assert prov["version"] == __version__ and prov["seed"] == 3
            digests.add(prov["config_digest"])
        elif p.suffix == ".csv":
            first = p.read_text().splitlines()[0]
            assert first.startswith(f"# credulens {__version__} seed=3 config_digest=")
            digests.add(first.rsplit("=", 1)[1])
    assert len(digests) == 1


def test_eval_report_layout(pipeline_dir):
    lines = (pipeline_dir / "eval_report.csv").read_text().splitlines()
    assert lines[1].startswith("fold,size,accuracy,precision,recall,f1,auc")
    assert lines[-1].startswith("avg,")
    rep = json.loads((pipeline_dir / "eval_report.json").read_text())
    assert rep["algo"] == "one_r" and rep["seed"] == 3
    assert len(rep["folds"]) == rep["n_folds"] == len(lines) - 3
    accs = [f["accuracy"] for f in rep["folds"]]
    assert rep["average"]["accuracy"] == pytest.approx(np.mean(accs))


def test_ranking_and_tests_layout(pipeline_dir):
    rank = (pipeline_dir / "ranking.csv").read_text().splitlines()
    assert rank[1] == "evaluator,rank,feature,raw_score,normalized_score"
    assert len(rank) == 2 + 3 * 18
    tests = json.loads((pipeline_dir / "tests.json").read_text())
    kinds = {(t["metric"], t["test"]) for t in tests["tests"]}
    for action in ("bybot_retweet", "bybot_reply"):
        for test in ("ks_normality", "t_test_pooled", "anova_oneway", "mann_whitney", "kruskal_wallis"):
            assert (action, test) in kinds
    for feat in ("F3", "F5", "F19"):
        assert (feat, "t_test_pooled") in kinds and (feat, "pearson") in kinds
    assert tests["t_mode"] == "pooled_independent"


def test_behavior_layout(pipeline_dir):
    rows = (pipeline_dir / "behavior.csv").read_text().splitlines()
    assert rows[1] == "account_id,class,action,total,bybot,percentage_or_OUTLIER,in_sample"
    assert len(rows) == 2 + 2 * 260
    dec = (pipeline_dir / "deciles.csv").read_text().splitlines()
    assert dec[1] == "action,group,bin,count,percentage"
    assert len(dec) == 2 + 2 * 3 * 12


@pytest.mark.parametrize("cmd,files", [
    ("features", ["features.csv"]),
    ("cv", ["bot_eval_report.json", "bot_eval_report.csv"]),
    ("credulous", ["eval_report.json", "eval_report.csv"]),
    ("rank", ["ranking.csv"]),
    ("behavior", ["behavior.csv", "coverage.csv", "deciles.csv"]),
    ("stats", ["tests.json", "tests.csv"]),
])
def test_subcommand_matches_pipeline(tmp_path, corpus_dir, pipeline_dir, cmd, files):
    out = tmp_path / cmd
    assert main([cmd, *_inputs(corpus_dir), "--seed", "3", "--out", str(out)]) == 0
    for f in files:
        assert (out / f).read_bytes() == (pipeline_dir / f).read_bytes(), f


def test_rerun_is_byte_identical_across_workers(tmp_path, corpus_dir):
    outs = []
    for w in (1, 3):
        out = tmp_path / f"w{w}"
        assert main(["stats", *_inputs(corpus_dir), "--seed", "9", "--workers", str(w), "--out", str(out)]) == 0
        outs.append(out)
    for f in ("tests.json", "tests.csv"):
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()


def test_refuses_non_empty_out(tmp_path, corpus_dir, capsys):
    out = tmp_path / "o"
    out.mkdir()
    (out / "keep.txt").write_text("x")
    assert main(["features", *_inputs(corpus_dir), "--out", str(out)]) != 0
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"]
    assert "--force" in err["message"] and err["subcommand"] == "features"
    assert main(["features", *_inputs(corpus_dir), "--out", str(out), "--force"]) == 0
    assert (out / "keep.txt").exists()


def test_missing_input_is_machine_readable(tmp_path, capsys):
    rc = main(["cv", "--accounts", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "o")])
    assert rc != 0
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"]
    assert err["type"] == "input" and err["module"] == "cli"


def test_precondition_failure_names_module(tmp_path, capsys):
    (tmp_path / "a.jsonl").write_text(json.dumps({
        "account_id": "a", "friends_count": 1, "followers_count": 1, "statuses_count": 1,
        "created_at": "2019-01-01"}) + "\n")
    rc = main(["features", "--accounts", str(tmp_path / "a.jsonl"), "--reference-date", "2010-01-01",
               "--out", str(tmp_path / "o")])
    assert rc != 0
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"]
    assert err["module"] == "features" and err["operation"] == "age_in_months"


def test_bad_flag_is_json(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["cv", "--algo", "svm", "--out", "x"])
    assert exc.value.code == 2
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"]["type"] == "usage"


def test_stats_on_identical_value_files(tmp_path):
    vals = "\n".join(f"{v:.6f}" for v in np.random.default_rng(0).normal(size=50))
    (tmp_path / "x.txt").write_text(vals)
    (tmp_path / "y.txt").write_text(vals)
    out = tmp_path / "s"
    assert main(["stats", "--x", str(tmp_path / "x.txt"), "--y", str(tmp_path / "y.txt"), "--out", str(out)]) == 0
    tests = json.loads((out / "tests.json").read_text())["tests"]
    assert len(tests) == 6
    assert all(t["passed"] is False for t in tests)


def test_seed_from_environment(tmp_path, corpus_dir, monkeypatch):
    monkeypatch.setenv("CREDULENS_SEED", "42")
    out = tmp_path / "e"
    assert main(["features", *_inputs(corpus_dir), "--out", str(out)]) == 0
    assert " seed=42 " in (out / "features.csv").read_text().splitlines()[0]


def test_flags_enter_digest(tmp_path, corpus_dir):
    heads = []
    for extra in ([], ["--f15-band", "40:160"], ["--alpha", "0.01"]):
        out = tmp_path / f"d{len(heads)}"
        assert main(["features", *_inputs(corpus_dir), "--out", str(out), *extra]) == 0
        heads.append((out / "features.csv").read_text().splitlines()[0])
    assert len(set(heads)) == 3


def test_train_and_model_oracle(tmp_path, corpus_dir):
    out = tmp_path / "t"
    assert main(["train", *_inputs(corpus_dir), "--algo", "tree", "--out", str(out)]) == 0
    rows = (out / "bot_predictions.csv").read_text().splitlines()
    assert rows[1] == "account_id,label,predicted,score" and len(rows) == 2 + 300
    out2 = tmp_path / "b"
    assert main(["behavior", *_inputs(corpus_dir), "--bot-oracle", "model", "--out", str(out2)]) == 0
    prov = json.loads((out2 / "behavior_summary.json").read_text())["provenance"]
    assert prov["config"]["bot_oracle"] == "model"


def test_oracle_file(tmp_path, corpus_dir):
    labels = (corpus_dir / "labels.csv").read_text().splitlines()
    oracle = ["account_id,label"] + [
        f"{r.split(',')[0]},{'bot' if r.endswith(',bot') else 'human'}" for r in labels[1:]]
    (tmp_path / "oracle.csv").write_text("\n".join(oracle) + "\n")
    ref, out = tmp_path / "ref", tmp_path / "file"
    assert main(["behavior", *_inputs(corpus_dir), "--out", str(ref)]) == 0
    assert main(["behavior", *_inputs(corpus_dir), "--bot-oracle", str(tmp_path / "oracle.csv"),
                 "--out", str(out)]) == 0
    body = lambda p: p.read_text().split("\n", 1)[1]  # noqa: E731
    assert body(out / "behavior.csv") == body(ref / "behavior.csv")


def test_synth_defaults_and_plots(tmp_path):
    pytest.importorskip("matplotlib")
    out = tmp_path / "p"
    assert main(["behavior", "--synth-defaults", "--seed", "1", "--plots", "--out", str(out)]) == 0
    pngs = sorted(p.name for p in out.glob("*.png"))
    assert pngs == sorted(f"{k}_{a}.png" for k in ("scatter", "coverage", "deciles") for a in ("retweet", "reply"))


def test_validate_reports_rejects(tmp_path, corpus_dir):
    bad = tmp_path / "acc.jsonl"
    bad.write_text((corpus_dir / "accounts.jsonl").read_text() + "{oops\n")
    out = tmp_path / "v"
    assert main(["validate", "--accounts", str(bad), "--out", str(out)]) == 0
    rep = json.loads((out / "validation.json").read_text())
    assert rep["n_rejects"]["accounts"] == 1
    assert rep["stats"]["n_accounts"] == 300


def test_friend_cap(tmp_path, corpus_dir):
    out = tmp_path / "c"
    assert main(["validate", *_inputs(corpus_dir), "--friend-cap", "400", "--out", str(out)]) == 0
    rep = json.loads((out / "validation.json").read_text())
    assert rep["stats"]["n_accounts"] < 300
    assert rep["provenance"]["config"]["friend_cap"] == 400
