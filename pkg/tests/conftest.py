from datetime import date

import pytest

from credulens.ingest import AccountRecord
from credulens.synth import SynthConfig, generate_corpus

REF = date(2020, 1, 1)


def make_account(aid="a", friends=100, followers=300, statuses=10, created=date(2018, 1, 1), **kw):
    return AccountRecord(aid, friends, followers, statuses, created, **kw)


@pytest.fixture(scope="session")
def small_corpus():
    cfg = SynthConfig(n_credulous=60, n_not_credulous=180, n_bots=40, timeline_mean=20, seed=11)
    corpus, truth = generate_corpus(cfg)
    return cfg, corpus, truth


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
