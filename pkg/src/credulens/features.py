"""Profile-only ("ClassA") account features.

Eighteen features keyed ``F1``..``F19``; ``F13`` (duplicate profile
pictures) is never computed.  Divisions by the follower count use
``max(followers, 1)`` so every feature stays finite.
"""
from __future__ import annotations

import math
import re
from dataclasses import astuple, dataclass, fields
from datetime import date
from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .ingest import AccountRecord, Corpus

FEATURE_NAMES = tuple(f"F{i}" for i in range(1, 20) if i != 13)
BOOLEAN_FEATURES = ("F4", "F6", "F8", "F9", "F10", "F11", "F12", "F14", "F15", "F16", "F17", "F18")

DAYS_PER_MONTH = 30.44
F11_RATIO = 50.0
F15_BAND = (50.0, 150.0)
F17_MIN_FRIENDS = 100

_BOT_TOKEN = re.compile(r"(?<![0-9a-z])bot(?![0-9a-z])")


@dataclass(frozen=True)
class FeatureVector:
    F1: float
    F2: int
    F3: int
    F4: bool
    F5: int
    F6: bool
    F7: float
    F8: bool
    F9: bool
    F10: bool
    F11: bool
    F12: bool
    F14: bool
    F15: bool
    F16: bool
    F17: bool
    F18: bool
    F19: int

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def declares_bot(bio: str | None, match: str = "token") -> bool:
    """True when the bio says "bot"; ``match`` is ``"token"`` or ``"substring"``."""
    if not bio:
        return False
    text = bio.lower()
    if match == "substring":
        return "bot" in text
    if match != "token":
        raise ValueError(f"unknown bot match mode {match!r}")
    return _BOT_TOKEN.search(text) is not None


def age_in_months(created_at: date, reference_date: date) -> int:
    days = (reference_date - created_at).days
    if days < 0:
        raise ValueError(f"reference date {reference_date} precedes creation date {created_at}")
    return int(math.floor(days / DAYS_PER_MONTH))


def extract_classA(
    account: AccountRecord,
    reference_date: date,
    f15_band: tuple[float, float] = F15_BAND,
    bot_match: str = "token",
) -> FeatureVector:
    friends = account.friends_count
    followers = account.followers_count
    denom = max(followers, 1)
    ratio = friends / denom
    total = friends + followers
    return FeatureVector(
        F1=friends / denom**2,
        F2=age_in_months(account.created_at, reference_date),
        F3=account.statuses_count,
        F4=account.has_name,
        F5=friends,
        F6=account.has_url,
        F7=friends / total if total else 0.0,
        F8=account.default_image_after_2m,
        F9=account.listed_count > 0,
        F10=account.has_profile_image,
        F11=ratio >= F11_RATIO,
        F12=declares_bot(account.bio_text, bot_match),
        F14=2 * followers >= friends,
        F15=f15_band[0] <= ratio <= f15_band[1],
        F16=account.has_location,
        F17=not account.has_bio and not account.has_location and friends >= F17_MIN_FRIENDS,
        F18=account.has_bio,
        F19=followers,
    )


class ClassAExtractor(BaseEstimator, TransformerMixin):
    """Stateless transformer from account records to an ``(n, 18)`` array."""

    def __init__(self, reference_date=None, f15_band=F15_BAND, bot_match="token"):
        self.reference_date = reference_date
        self.f15_band = f15_band
        self.bot_match = bot_match

    def fit(self, X, y=None):
        self.n_features_out_ = len(FEATURE_NAMES)
        return self

    def transform(self, X: Iterable[AccountRecord]) -> np.ndarray:
        if self.reference_date is None:
            raise ValueError("reference_date must be set")
        rows = [
            extract_classA(a, self.reference_date, tuple(self.f15_band), self.bot_match).as_array()
            for a in X
        ]
        if not rows:
            return np.empty((0, len(FEATURE_NAMES)))
        return np.vstack(rows)

    def get_feature_names_out(self, input_features=None):
        return np.array(FEATURE_NAMES, dtype=object)


@dataclass(frozen=True)
class FeatureMatrix:
    """Rows are accounts, columns are :data:`FEATURE_NAMES`; labels may be ``None``."""

    account_ids: tuple[str, ...]
    X: np.ndarray
    labels: tuple[str | None, ...]
    feature_names: tuple[str, ...] = FEATURE_NAMES

    def __len__(self) -> int:
        return len(self.account_ids)

    @property
    def shape(self) -> tuple[int, int]:
        return self.X.shape

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.feature_names.index(name)]

    def take(self, idx: Sequence[int]) -> "FeatureMatrix":
        idx = np.asarray(idx, dtype=int)
        return FeatureMatrix(
            tuple(self.account_ids[i] for i in idx),
            self.X[idx],
            tuple(self.labels[i] for i in idx),
            self.feature_names,
        )

    def labeled(self, allowed: Iterable[str] | None = None) -> "FeatureMatrix":
        allowed = set(allowed) if allowed is not None else None
        keep = [
            i for i, lab in enumerate(self.labels)
            if lab is not None and (allowed is None or lab in allowed)
        ]
        return self.take(keep)

    def target(self, positive: str) -> np.ndarray:
        """Binary target with 1 for ``positive``; unlabeled rows are an error."""
        if any(lab is None for lab in self.labels):
            raise ValueError("matrix has unlabeled rows; call labeled() first")
        return np.array([lab == positive for lab in self.labels], dtype=int)

    def with_labels(self, labels: Sequence[str | None]) -> "FeatureMatrix":
        if len(labels) != len(self):
            raise ValueError("label count does not match row count")
        return FeatureMatrix(self.account_ids, self.X, tuple(labels), self.feature_names)

    def ids_with_label(self, label: str) -> list[str]:
        return [a for a, lab in zip(self.account_ids, self.labels) if lab == label]

    def index_of(self, ids: Iterable[str]) -> list[int]:
        pos = {a: i for i, a in enumerate(self.account_ids)}
        return [pos[a] for a in ids]


def extract_matrix(
    corpus: Corpus,
    reference_date: date,
    labels: Mapping[str, str] | None = None,
    f15_band: tuple[float, float] = F15_BAND,
    bot_match: str = "token",
) -> FeatureMatrix:
    """Feature matrix for every account in corpus order.

    ``labels`` defaults to the credulous labels, falling back to the bot
    labels for accounts without one.
    """
    if labels is None:
        labels = {**corpus.bot_labels, **corpus.credulous_labels}
    ext = ClassAExtractor(reference_date, f15_band, bot_match).fit(None)
    X = ext.transform(corpus.accounts)
    ids = tuple(a.account_id for a in corpus.accounts)
    return FeatureMatrix(ids, X, tuple(labels.get(a) for a in ids))


def write_features_csv(fh, matrix: FeatureMatrix) -> None:
    fh.write(",".join(("account_id",) + matrix.feature_names + ("label",)) + "\n")
    for aid, row, lab in zip(matrix.account_ids, matrix.X, matrix.labels):
        vals = ",".join(f"{v:.6f}" for v in row)
        fh.write(f"{aid},{vals},{lab or ''}\n")
