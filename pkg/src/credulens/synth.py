"""Synthetic labeled corpora with planted, tunable differences between classes.

Every random draw comes from a named substream of the config seed, so two
runs with the same config produce identical files and turning one knob
leaves unrelated draws untouched.
"""
from __future__ import annotations

import json
import zlib
from dataclasses import asdict, dataclass, field, replace
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .ingest import AccountRecord, Corpus, TweetRecord, build_corpus, write_accounts, write_labels, write_tweets

# log-space means of the NC population; C adds the shift knobs
_BASE_LOG = {"F3": np.log(2000.0), "F5": np.log(150.0), "F19": np.log(300.0)}
_LOG_SIGMA = {"F3": 1.0, "F5": 0.8, "F19": 0.8}


@dataclass(frozen=True)
class RateDist:
    """Mean and standard deviation of a per-user percentage in ``[0, 100]``."""

    mean: float
    std: float

    def beta_params(self) -> tuple[float, float]:
        m, s = self.mean / 100.0, self.std / 100.0
        if not 0 < m < 1:
            raise ValueError(f"rate mean {self.mean} must lie strictly inside (0, 100)")
        if s <= 0 or s * s >= m * (1 - m):
            raise ValueError(f"rate std {self.std} infeasible for mean {self.mean}")
        common = m * (1 - m) / (s * s) - 1
        return m * common, (1 - m) * common


@dataclass(frozen=True)
class SynthConfig:
    n_credulous: int = 316
    n_not_credulous: int = 2522
    n_bots: int = 162
    # log-space mean shift of C relative to NC per numeric feature
    shift_statuses: float = 0.4
    shift_friends: float = 0.6
    shift_followers: float = -0.6
    # correlation of log friends and log followers within a class
    friends_followers_corr: float = 0.5
    retweet_rate_c: RateDist = RateDist(16.45, 11.84)
    retweet_rate_nc: RateDist = RateDist(13.21, 12.1)
    reply_rate_c: RateDist = RateDist(13.77, 15.10)
    reply_rate_nc: RateDist = RateDist(10.81, 14.03)
    # pure / retweet / reply mix; a fraction of retweets are quotes
    activity_c: tuple[float, float, float] = (0.56, 0.29, 0.15)
    activity_nc: tuple[float, float, float] = (0.47, 0.33, 0.20)
    quote_fraction: float = 0.1
    timeline_mean: float = 50.0
    outlier_fraction: float = 0.03
    reference_date: date = date(2019, 6, 1)
    seed: int = 0

    def __post_init__(self):
        for name in ("n_credulous", "n_not_credulous", "n_bots"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not -1 < self.friends_followers_corr < 1:
            raise ValueError("friends_followers_corr must lie in (-1, 1)")
        if not 0 <= self.outlier_fraction < 1:
            raise ValueError("outlier_fraction must lie in [0, 1)")
        if not 0 <= self.quote_fraction <= 1:
            raise ValueError("quote_fraction must lie in [0, 1]")
        if self.timeline_mean < 0:
            raise ValueError("timeline_mean must be >= 0")
        for name in ("activity_c", "activity_nc"):
            mix = getattr(self, name)
            if len(mix) != 3 or min(mix) < 0 or sum(mix) <= 0:
                raise ValueError(f"{name} must be three non-negative weights")
        for name in ("retweet_rate_c", "retweet_rate_nc", "reply_rate_c", "reply_rate_nc"):
            getattr(self, name).beta_params()
        if self.n_bots == 0 and self.n_credulous + self.n_not_credulous > 0:
            raise ValueError("human timelines need at least one bot to attribute byBot content to")
        if self.n_credulous + self.n_not_credulous < 2:
            raise ValueError("need at least two human accounts to draw human origin authors")

    def without_separation(self) -> "SynthConfig":
        """Same config with every C/NC difference removed (NC parameters for both)."""
        return replace(
            self,
            shift_statuses=0.0, shift_friends=0.0, shift_followers=0.0,
            retweet_rate_c=self.retweet_rate_nc, reply_rate_c=self.reply_rate_nc,
            activity_c=self.activity_nc,
        )

    def to_json(self) -> dict:
        d = asdict(self)
        d["reference_date"] = self.reference_date.isoformat()
        return d

    @classmethod
    def strongly_separated(cls, **overrides) -> "SynthConfig":
        """Preset with large feature shifts, for checking that classifiers can learn."""
        params = dict(shift_statuses=2.0, shift_friends=2.0, shift_followers=-2.0)
        params.update(overrides)
        return cls(**params)

    @classmethod
    def squared_ratio_signal(cls, **overrides) -> "SynthConfig":
        """Preset where friends/followers**2 is the single best discriminator.

        Both counts drop for C, followers twice as much, and the strong
        within-class correlation cancels most noise in the squared ratio.
        """
        params = dict(shift_statuses=0.0, shift_friends=-1.0, shift_followers=-2.0,
                      friends_followers_corr=0.8)
        params.update(overrides)
        return cls(**params)


@dataclass(frozen=True)
class GroundTruth:
    classes: dict[str, str]
    retweet_rates: dict[str, float]
    reply_rates: dict[str, float]
    shifts: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


def _stream(seed: int, name: str, *index: int) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(name.encode()), *index])


def _human_account(aid, rng, cfg, credulous):
    shift = {
        "F3": cfg.shift_statuses if credulous else 0.0,
        "F5": cfg.shift_friends if credulous else 0.0,
        "F19": cfg.shift_followers if credulous else 0.0,
    }
    z = rng.standard_normal(3)
    rho = cfg.friends_followers_corr
    z[2] = rho * z[1] + np.sqrt(1 - rho * rho) * z[2]
    vals = {
        k: int(np.floor(np.exp(_BASE_LOG[k] + shift[k] + _LOG_SIGMA[k] * zk)))
        for k, zk in zip(("F3", "F5", "F19"), z)
    }
    age_days = int(rng.integers(90, 3650))
    has_bio = bool(rng.random() < 0.8)
    return AccountRecord(
        account_id=aid,
        friends_count=vals["F5"],
        followers_count=vals["F19"],
        statuses_count=vals["F3"],
        created_at=cfg.reference_date - timedelta(days=age_days),
        has_name=bool(rng.random() < 0.98),
        has_bio=has_bio,
        bio_text="just a person" if has_bio else None,
        has_url=bool(rng.random() < 0.4),
        has_location=bool(rng.random() < 0.6),
        has_profile_image=bool(rng.random() < 0.97),
        default_image_after_2m=bool(rng.random() < 0.05),
        listed_count=int(rng.poisson(3.0)),
    )


def _bot_account(aid, rng, cfg):
    followers = int(np.floor(np.exp(rng.normal(np.log(20.0), 1.0))))
    friends = int(np.floor(np.exp(rng.normal(np.log(1500.0), 0.7))))
    has_bio = bool(rng.random() < 0.4)
    declares = bool(rng.random() < 0.15)
    return AccountRecord(
        account_id=aid,
        friends_count=friends,
        followers_count=followers,
        statuses_count=int(np.floor(np.exp(rng.normal(np.log(8000.0), 1.2)))),
        created_at=cfg.reference_date - timedelta(days=int(rng.integers(30, 1500))),
        has_name=bool(rng.random() < 0.9),
        has_bio=has_bio or declares,
        bio_text=("automated bot account" if declares else "news and offers") if (has_bio or declares) else None,
        has_url=bool(rng.random() < 0.6),
        has_location=bool(rng.random() < 0.2),
        has_profile_image=bool(rng.random() < 0.7),
        default_image_after_2m=bool(rng.random() < 0.5),
        listed_count=int(rng.poisson(0.3)),
    )


def generate_corpus(config: SynthConfig) -> tuple[Corpus, GroundTruth]:
    cfg = config
    n_c, n_nc, n_b = cfg.n_credulous, cfg.n_not_credulous, cfg.n_bots
    humans = [f"h{i:05d}" for i in range(n_c + n_nc)]
    bots = [f"b{i:05d}" for i in range(n_b)]
    classes = {aid: ("credulous" if i < n_c else "not_credulous") for i, aid in enumerate(humans)}

    accounts = []
    for i, aid in enumerate(humans):
        accounts.append(_human_account(aid, _stream(cfg.seed, "accounts", i), cfg, classes[aid] == "credulous"))
    for i, aid in enumerate(bots):
        accounts.append(_bot_account(aid, _stream(cfg.seed, "bots", i), cfg))

    timelines: dict[str, list[TweetRecord]] = {}
    rt_rates, rp_rates = {}, {}
    counter = 0
    for i, aid in enumerate(humans):
        cred = classes[aid] == "credulous"
        rng = _stream(cfg.seed, "timelines", i)
        rt_dist = cfg.retweet_rate_c if cred else cfg.retweet_rate_nc
        rp_dist = cfg.reply_rate_c if cred else cfg.reply_rate_nc
        rt_rate = float(rng.beta(*rt_dist.beta_params()))
        rp_rate = float(rng.beta(*rp_dist.beta_params()))
        rt_rates[aid] = 100.0 * rt_rate
        rp_rates[aid] = 100.0 * rp_rate
        mix = np.asarray(cfg.activity_c if cred else cfg.activity_nc, dtype=float)
        length = int(rng.poisson(cfg.timeline_mean))
        kinds = list(rng.choice(3, size=length, p=mix / mix.sum()))
        # outlier users drop every action of a kind; others keep at least one
        for action_code in (1, 2):
            if rng.random() < cfg.outlier_fraction:
                kinds = [k if k != action_code else 0 for k in kinds]
            elif action_code not in kinds:
                kinds.append(action_code)
        tweets = []
        for code in kinds:
            counter += 1
            tid = f"t{counter:08d}"
            if code == 0:
                tweets.append(TweetRecord(tid, aid, "pure"))
                continue
            rate = rt_rate if code == 1 else rp_rate
            if rng.random() < rate:
                origin = bots[int(rng.integers(n_b))]
            else:
                j = int(rng.integers(len(humans) - 1))
                origin = humans[j if j < i else j + 1]
            if code == 1:
                kind = "quote" if rng.random() < cfg.quote_fraction else "retweet"
            else:
                kind = "reply"
            tweets.append(TweetRecord(tid, aid, kind, origin))
        if tweets:
            timelines[aid] = tweets

    bot_labels = {aid: "human" for aid in humans}
    bot_labels.update({aid: "bot" for aid in bots})
    corpus = build_corpus(accounts, timelines, bot_labels, classes)
    truth = GroundTruth(
        classes={**classes, **{b: "bot" for b in bots}},
        retweet_rates=rt_rates,
        reply_rates=rp_rates,
        shifts={"F3": cfg.shift_statuses, "F5": cfg.shift_friends, "F19": cfg.shift_followers},
    )
    return corpus, truth


def write_corpus(out_dir, corpus: Corpus, truth: GroundTruth | None = None, config: SynthConfig | None = None) -> dict:
    """Write ``accounts.jsonl``, ``tweets.jsonl``, ``labels.csv`` and the truth sidecar."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "accounts": out / "accounts.jsonl",
        "tweets": out / "tweets.jsonl",
        "labels": out / "labels.csv",
    }
    write_accounts(paths["accounts"], corpus.accounts)
    write_tweets(paths["tweets"], corpus.timelines)
    write_labels(paths["labels"], corpus.bot_labels, corpus.credulous_labels)
    if truth is not None:
        payload = truth.to_json()
        if config is not None:
            payload = {"config": config.to_json(), **payload}
        paths["ground_truth"] = out / "ground_truth.json"
        paths["ground_truth"].write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
    return paths
