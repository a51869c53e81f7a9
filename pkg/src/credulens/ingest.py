"""Loading and validation of account, timeline and label files.

Accounts and tweets are line-delimited JSON; labels are a two-column CSV.
Malformed lines never abort a load: they are collected as :class:`Reject`
entries carrying the 1-based line number and a reason.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, fields
from datetime import date, datetime
from pathlib import Path
from typing import Iterable, Mapping

TWEET_KINDS = ("pure", "retweet", "quote", "reply")
BOT_LABELS = ("bot", "human")
CREDULOUS_LABELS = ("credulous", "not_credulous")

_COUNT_FIELDS = ("friends_count", "followers_count", "statuses_count", "listed_count")
_BOOL_FIELDS = (
    "has_name",
    "has_bio",
    "has_url",
    "has_location",
    "has_profile_image",
    "default_image_after_2m",
)


class IngestError(Exception):
    """Raised for problems that make a whole file unusable."""


@dataclass(frozen=True)
class AccountRecord:
    account_id: str
    friends_count: int
    followers_count: int
    statuses_count: int
    created_at: date
    has_name: bool = False
    has_bio: bool = False
    bio_text: str | None = None
    has_url: bool = False
    has_location: bool = False
    has_profile_image: bool = True
    default_image_after_2m: bool = False
    listed_count: int = 0

    def to_json(self) -> dict:
        d = asdict(self)
        d["created_at"] = self.created_at.isoformat()
        return d

    @classmethod
    def from_json(cls, obj: Mapping) -> "AccountRecord":
        if not isinstance(obj, Mapping):
            raise ValueError("record is not an object")
        account_id = obj.get("account_id")
        if not isinstance(account_id, str) or not account_id:
            raise ValueError("account_id missing or empty")
        kwargs: dict = {"account_id": account_id}
        for name in _COUNT_FIELDS:
            if name not in obj:
                if name == "listed_count":
                    continue
                raise ValueError(f"{name} missing")
            value = obj[name]
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValueError(f"{name} is not an integer")
            if value < 0:
                raise ValueError(f"{name} is negative ({value})")
            kwargs[name] = value
        if "created_at" not in obj:
            raise ValueError("created_at missing")
        kwargs["created_at"] = _parse_date(obj["created_at"])
        for name in _BOOL_FIELDS:
            if name in obj:
                if not isinstance(obj[name], bool):
                    raise ValueError(f"{name} is not a boolean")
                kwargs[name] = obj[name]
        bio = obj.get("bio_text")
        if bio is not None and not isinstance(bio, str):
            raise ValueError("bio_text is not a string")
        kwargs["bio_text"] = bio
        return cls(**kwargs)


@dataclass(frozen=True)
class TweetRecord:
    tweet_id: str
    author_id: str
    kind: str
    origin_author_id: str | None = None

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: Mapping) -> "TweetRecord":
        if not isinstance(obj, Mapping):
            raise ValueError("record is not an object")
        for name in ("tweet_id", "author_id"):
            if not isinstance(obj.get(name), str) or not obj[name]:
                raise ValueError(f"{name} missing or empty")
        kind = obj.get("kind")
        if kind not in TWEET_KINDS:
            raise ValueError(f"unknown kind {kind!r}")
        origin = obj.get("origin_author_id")
        if origin is not None and (not isinstance(origin, str) or not origin):
            raise ValueError("origin_author_id is not a non-empty string")
        if kind != "pure" and origin is None:
            raise ValueError(f"kind={kind} requires origin_author_id")
        if kind == "pure" and origin is not None:
            raise ValueError("kind=pure must not carry origin_author_id")
        return cls(obj["tweet_id"], obj["author_id"], kind, origin)


@dataclass(frozen=True)
class Reject:
    line: int
    reason: str
    raw: str = ""


@dataclass(frozen=True)
class Corpus:
    accounts: tuple[AccountRecord, ...] = ()
    timelines: Mapping[str, tuple[TweetRecord, ...]] = field(default_factory=dict)
    bot_labels: Mapping[str, str] = field(default_factory=dict)
    credulous_labels: Mapping[str, str] = field(default_factory=dict)

    def account(self, account_id: str) -> AccountRecord:
        return self._index[account_id]

    @property
    def _index(self) -> dict[str, AccountRecord]:
        # cached lazily; the dataclass is frozen so bypass __setattr__
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {a.account_id: a for a in self.accounts}
            object.__setattr__(self, "_idx", idx)
        return idx

    def __contains__(self, account_id: str) -> bool:
        return account_id in self._index


@dataclass(frozen=True)
class CorpusStats:
    n_accounts: int
    n_bots: int
    n_humans: int
    n_credulous: int
    n_not_credulous: int
    n_timelines: int
    n_tweets: int
    timeline_coverage: float
    dangling_ids: tuple[str, ...]
    orphan_timeline_ids: tuple[str, ...]

    def to_json(self) -> dict:
        d = asdict(self)
        d["dangling_ids"] = list(self.dangling_ids)
        d["orphan_timeline_ids"] = list(self.orphan_timeline_ids)
        return d


def _parse_date(value) -> date:
    if not isinstance(value, str):
        raise ValueError("created_at is not a string")
    try:
        if len(value) == 10:
            return date.fromisoformat(value)
        return datetime.fromisoformat(value.replace("Z", "+00:00")).date()
    except ValueError:
        raise ValueError(f"created_at {value!r} is not ISO-8601") from None


def _read_lines(path) -> list[str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    return text.splitlines()


def _parse_lines(path, parse) -> tuple[list, list[Reject]]:
    out, rejects = [], []
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            rejects.append(Reject(lineno, "empty line"))
            continue
        try:
            out.append((lineno, line, parse(json.loads(line))))
        except (ValueError, TypeError) as exc:
            rejects.append(Reject(lineno, str(exc), line))
    return out, rejects


def load_accounts(path) -> tuple[list[AccountRecord], list[Reject]]:
    """Read ``accounts.jsonl``; returns records in file order plus rejects.

    A repeated ``account_id`` rejects the later line.
    """
    parsed, rejects = _parse_lines(path, AccountRecord.from_json)
    seen: set[str] = set()
    records = []
    for lineno, line, rec in parsed:
        if rec.account_id in seen:
            rejects.append(Reject(lineno, f"duplicate account_id {rec.account_id}", line))
            continue
        seen.add(rec.account_id)
        records.append(rec)
    rejects.sort(key=lambda r: r.line)
    return records, rejects


def load_tweets(path) -> tuple[dict[str, list[TweetRecord]], list[Reject]]:
    """Read ``tweets.jsonl`` grouped by author, preserving file order."""
    parsed, rejects = _parse_lines(path, TweetRecord.from_json)
    seen: set[str] = set()
    grouped: dict[str, list[TweetRecord]] = {}
    for lineno, line, tw in parsed:
        if tw.tweet_id in seen:
            rejects.append(Reject(lineno, f"duplicate tweet_id {tw.tweet_id}", line))
            continue
        seen.add(tw.tweet_id)
        grouped.setdefault(tw.author_id, []).append(tw)
    rejects.sort(key=lambda r: r.line)
    return grouped, rejects


def load_labels(path) -> tuple[dict[str, str], dict[str, str], list[Reject]]:
    """Read ``labels.csv`` into ``(bot_labels, credulous_labels, rejects)``.

    ``credulous`` and ``not_credulous`` rows also imply a ``human`` bot label,
    so one file can describe both tasks.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    bot: dict[str, str] = {}
    cred: dict[str, str] = {}
    rejects: list[Reject] = []
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["account_id", "label"]:
            raise IngestError(f"{path}: header must be 'account_id,label'")
        for row in reader:
            lineno = reader.line_num
            if len(row) < 2 or not row[0].strip():
                rejects.append(Reject(lineno, "expected account_id,label", ",".join(row)))
                continue
            aid, label = row[0].strip(), row[1].strip().lower()
            if label in BOT_LABELS:
                conflict = bot.get(aid, label) != label
            elif label in CREDULOUS_LABELS:
                conflict = bot.get(aid, "human") != "human" or cred.get(aid, label) != label
            else:
                rejects.append(Reject(lineno, f"unknown label {label!r}", ",".join(row)))
                continue
            if conflict:
                rejects.append(Reject(lineno, f"conflicting label for {aid}", ",".join(row)))
                continue
            if label in CREDULOUS_LABELS:
                cred[aid] = label
                label = "human"
            bot[aid] = label
    return bot, cred, rejects


def build_corpus(
    accounts: Iterable[AccountRecord],
    timelines: Mapping[str, Iterable[TweetRecord]] | None = None,
    bot_labels: Mapping[str, str] | None = None,
    credulous_labels: Mapping[str, str] | None = None,
) -> Corpus:
    return Corpus(
        accounts=tuple(accounts),
        timelines={k: tuple(v) for k, v in (timelines or {}).items()},
        bot_labels=dict(bot_labels or {}),
        credulous_labels=dict(credulous_labels or {}),
    )


def load_corpus(accounts_path, tweets_path=None, labels_path=None):
    """Load all three files; returns ``(corpus, rejects_by_file)``."""
    accounts, acc_rej = load_accounts(accounts_path)
    rejects = {"accounts": acc_rej}
    timelines: dict = {}
    if tweets_path is not None:
        timelines, rejects["tweets"] = load_tweets(tweets_path)
    bot = cred = None
    if labels_path is not None:
        bot, cred, rejects["labels"] = load_labels(labels_path)
    return build_corpus(accounts, timelines, bot, cred), rejects


def validate_corpus(corpus: Corpus) -> CorpusStats:
    ids = {a.account_id for a in corpus.accounts}
    labeled = set(corpus.bot_labels) | set(corpus.credulous_labels)
    dangling = tuple(sorted(labeled - ids))
    orphans = tuple(sorted(set(corpus.timelines) - ids))
    bot_vals = list(corpus.bot_labels.values())
    cred_vals = list(corpus.credulous_labels.values())
    covered = sum(1 for a in corpus.accounts if corpus.timelines.get(a.account_id))
    n = len(corpus.accounts)
    return CorpusStats(
        n_accounts=n,
        n_bots=bot_vals.count("bot"),
        n_humans=bot_vals.count("human"),
        n_credulous=cred_vals.count("credulous"),
        n_not_credulous=cred_vals.count("not_credulous"),
        n_timelines=len(corpus.timelines),
        n_tweets=sum(len(t) for t in corpus.timelines.values()),
        timeline_coverage=100.0 * covered / n if n else 0.0,
        dangling_ids=dangling,
        orphan_timeline_ids=orphans,
    )


def apply_friend_cap(corpus: Corpus, cap: int) -> Corpus:
    """Drop human accounts whose friend count exceeds ``cap``.

    Bots are kept: the cap only ever applied to the human population.
    """
    keep = [
        a
        for a in corpus.accounts
        if a.friends_count <= cap or corpus.bot_labels.get(a.account_id) == "bot"
    ]
    kept = {a.account_id for a in keep}
    return Corpus(
        accounts=tuple(keep),
        timelines={k: v for k, v in corpus.timelines.items() if k in kept},
        bot_labels=dict(corpus.bot_labels),
        credulous_labels={k: v for k, v in corpus.credulous_labels.items() if k in kept},
    )


def write_accounts(path, accounts: Iterable[AccountRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for a in accounts:
            fh.write(json.dumps(a.to_json(), ensure_ascii=False) + "\n")


def write_tweets(path, timelines: Mapping[str, Iterable[TweetRecord]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for tweets in timelines.values():
            for t in tweets:
                fh.write(json.dumps(t.to_json(), ensure_ascii=False) + "\n")


def write_labels(path, bot_labels: Mapping[str, str], credulous_labels: Mapping[str, str]) -> None:
    """Write one row per account; credulous labels take precedence over ``human``."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["account_id", "label"])
        for aid, label in bot_labels.items():
            w.writerow([aid, credulous_labels.get(aid, label) if label == "human" else label])
        for aid, label in credulous_labels.items():
            if aid not in bot_labels:
                w.writerow([aid, label])


def account_field_names() -> list[str]:
    return [f.name for f in fields(AccountRecord)]
