"""Behavioral and text features for users and reviews.

User columns: MNR PR NR avgRD WRD BST RL ACS MCS.
Review columns (averaged per user in the matrix): Rank RD EXT DEV ETF ISR PCW PC L PP1 RES.

Several behavioral features are only named in the literature, not pinned down.
The definitions used here:

* WRD   rating deviation averaged with weights 1/Rank (earlier reviews weigh more)
* BST   max(0, 1 - active_span_days / burst_window_days)
* DEV   1 if |rating - product mean| / 4 > dev_threshold
* ETF   1 if the review falls in the first ``early_fraction`` of the product's date span
* Rank  1-based position among the product's reviews by (date, review_id)
"""

from __future__ import annotations

import csv
import math
import re
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .data import Dataset

USER_COLUMNS = ("MNR", "PR", "NR", "avgRD", "WRD", "BST", "RL", "ACS", "MCS")
REVIEW_COLUMNS = ("Rank", "RD", "EXT", "DEV", "ETF", "ISR", "PCW", "PC", "L", "PP1", "RES")
COLUMNS = USER_COLUMNS + REVIEW_COLUMNS

FIRST_PERSON = frozenset(
    {"i", "me", "my", "mine", "myself", "we", "us", "our", "ours", "ourselves"}
)

_WORD_RE = re.compile(r"[^\W_]+")
_SENTENCE_RE = re.compile(r"[^.!?]*[.!?]*")


@dataclass(frozen=True)
class FeatureConfig:
    burst_window_days: float = 28.0
    dev_threshold: float = 0.63
    early_fraction: float = 0.2


DEFAULT_CONFIG = FeatureConfig()


@dataclass(frozen=True)
class UserFeatures:
    MNR: float
    PR: float
    NR: float
    avgRD: float
    WRD: float
    BST: float
    RL: float
    ACS: float
    MCS: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, c) for c in USER_COLUMNS], dtype=float)


@dataclass(frozen=True)
class ReviewFeatures:
    Rank: float
    RD: float
    EXT: float
    DEV: float
    ETF: float
    ISR: float
    PCW: float
    PC: float
    L: float
    PP1: float
    RES: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, c) for c in REVIEW_COLUMNS], dtype=float)


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray
    user_ids: list[str]
    columns: tuple[str, ...] = COLUMNS

    @property
    def shape(self):
        return self.values.shape

    def row(self, user_id: str) -> np.ndarray:
        return self.values[self.user_ids.index(user_id)]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("user_id",) + tuple(self.columns))
            for uid, row in zip(self.user_ids, self.values):
                w.writerow([uid] + [repr(float(v)) for v in row])


# ---------------------------------------------------------------- text helpers

def words(text: str) -> list[str]:
    return _WORD_RE.findall(text)


def bigrams(text: str) -> Counter:
    toks = [w.lower() for w in words(text)]
    return Counter(zip(toks, toks[1:]))


def cosine(a: Counter, b: Counter) -> float:
    if not a or not b:
        return 0.0
    if len(a) > len(b):
        a, b = b, a
    dot = sum(v * b.get(k, 0) for k, v in a.items())
    na = math.sqrt(sum(v * v for v in a.values()))
    nb = math.sqrt(sum(v * v for v in b.values()))
    return min(1.0, dot / (na * nb))


def text_features(text: str) -> tuple[float, float, float, float, float]:
    """(PCW, PC, L, PP1, RES) for one review text."""
    ws = words(text)
    n = len(ws)
    if n:
        pcw = sum(1 for w in ws if w.isupper()) / n
        pp1 = sum(1 for w in ws if w.lower() in FIRST_PERSON) / n
    else:
        pcw = pp1 = 0.0
    letters = [c for c in text if c.isalpha()]
    pc = sum(1 for c in letters if c.isupper()) / len(letters) if letters else 0.0
    sentences = [s for s in _SENTENCE_RE.findall(text) if s.strip()]
    res = sum(1 for s in sentences if "!" in s) / len(sentences) if sentences else 0.0
    return pcw, pc, float(n), pp1, res


def _content_similarity(bags: list[Counter]) -> tuple[float, float]:
    if len(bags) < 2:
        return 0.0, 0.0
    sims = [cosine(bags[i], bags[j]) for i in range(len(bags)) for j in range(i + 1, len(bags))]
    mcs = float(max(sims))
    return min(float(np.mean(sims)), mcs), mcs


# ---------------------------------------------------------------- batch computation

class _Tables:
    """All per-review and per-user quantities computed once for a dataset."""

    def __init__(self, ds: Dataset, cfg: FeatureConfig):
        a = ds.arrays
        self.a = a
        n_rev = len(a.review_ids)
        n_users = len(a.user_ids)
        n_prod = len(a.product_ids)
        rating = a.rating.astype(float)

        prod_count = np.bincount(a.product, minlength=n_prod)
        prod_mean = np.bincount(a.product, weights=rating, minlength=n_prod) / np.maximum(prod_count, 1)
        rd = np.abs(rating - prod_mean[a.product])

        # rank within product by (date, review_id); arrays are already in review_id order
        order = np.lexsort((np.arange(n_rev), a.day, a.product))
        rank = np.empty(n_rev)
        starts = np.cumsum(prod_count) - prod_count
        pos = np.arange(n_rev) - np.repeat(starts, prod_count)
        rank[order] = pos + 1

        first = np.full(n_prod, np.iinfo(np.int64).max)
        last = np.full(n_prod, np.iinfo(np.int64).min)
        np.minimum.at(first, a.product, a.day)
        np.maximum.at(last, a.product, a.day)
        span = (last - first)[a.product]
        offset = a.day - first[a.product]
        with np.errstate(invalid="ignore", divide="ignore"):
            etf = np.where(span > 0, offset / np.where(span > 0, span, 1) <= cfg.early_fraction, True)

        user_count = np.bincount(a.user, minlength=n_users)
        self.review = np.zeros((n_rev, len(REVIEW_COLUMNS)))
        self.review[:, 0] = rank
        self.review[:, 1] = rd
        self.review[:, 2] = np.isin(a.rating, (1, 5))
        self.review[:, 3] = rd / 4.0 > cfg.dev_threshold
        self.review[:, 4] = etf
        self.review[:, 5] = user_count[a.user] == 1
        self.review[:, 6:11] = np.array([text_features(t) for t in a.texts]).reshape(n_rev, 5)

        # per-user aggregates
        self.user = np.zeros((n_users, len(USER_COLUMNS)))
        cnt = np.maximum(user_count, 1).astype(float)
        # MNR: max reviews on one day
        pairs, pair_counts = np.unique(np.stack([a.user, a.day]), axis=1, return_counts=True)
        mnr = np.zeros(n_users)
        np.maximum.at(mnr, pairs[0], pair_counts)
        self.user[:, 0] = mnr
        self.user[:, 1] = np.bincount(a.user, weights=(a.rating >= 4), minlength=n_users) / cnt
        self.user[:, 2] = np.bincount(a.user, weights=(a.rating <= 2), minlength=n_users) / cnt
        self.user[:, 3] = np.bincount(a.user, weights=rd, minlength=n_users) / cnt
        w = 1.0 / rank
        wsum = np.bincount(a.user, weights=w, minlength=n_users)
        self.user[:, 4] = np.bincount(a.user, weights=w * rd, minlength=n_users) / np.where(wsum > 0, wsum, 1)
        ufirst = np.full(n_users, np.iinfo(np.int64).max)
        ulast = np.full(n_users, np.iinfo(np.int64).min)
        np.minimum.at(ufirst, a.user, a.day)
        np.maximum.at(ulast, a.user, a.day)
        active = np.where(user_count > 0, ulast - ufirst, 0)
        self.user[:, 5] = np.maximum(0.0, 1.0 - active / cfg.burst_window_days)
        self.user[:, 6] = np.bincount(a.user, weights=self.review[:, 8], minlength=n_users) / cnt

        bags = [bigrams(t) for t in a.texts]
        per_user: list[list[Counter]] = [[] for _ in range(n_users)]
        for i, u in enumerate(a.user):
            per_user[u].append(bags[i])
        for u, ub in enumerate(per_user):
            self.user[u, 7], self.user[u, 8] = _content_similarity(ub)

        self.review_mean = np.zeros((n_users, len(REVIEW_COLUMNS)))
        for k in range(len(REVIEW_COLUMNS)):
            self.review_mean[:, k] = np.bincount(a.user, weights=self.review[:, k], minlength=n_users) / cnt
        self.user_index = {u: k for k, u in enumerate(a.user_ids)}
        self.review_pos = {r: k for k, r in enumerate(a.review_ids)}


_CACHE_ATTR = "_feature_tables"


def _tables(ds: Dataset, cfg: FeatureConfig) -> _Tables:
    cache = ds.__dict__.setdefault(_CACHE_ATTR, {})
    if cfg not in cache:
        cache[cfg] = _Tables(ds, cfg)
    return cache[cfg]


def user_features(ds: Dataset, user_id: str, cfg: FeatureConfig = DEFAULT_CONFIG) -> UserFeatures:
    if user_id not in ds.users:
        raise KeyError(f"unknown user {user_id!r}")
    t = _tables(ds, cfg)
    return UserFeatures(*map(float, t.user[t.user_index[user_id]]))


def review_features(ds: Dataset, review_id: str, cfg: FeatureConfig = DEFAULT_CONFIG) -> ReviewFeatures:
    if review_id not in ds.review_index:
        raise KeyError(f"unknown review {review_id!r}")
    t = _tables(ds, cfg)
    return ReviewFeatures(*map(float, t.review[t.review_pos[review_id]]))


def feature_matrix(ds: Dataset, cfg: FeatureConfig = DEFAULT_CONFIG) -> FeatureMatrix:
    t = _tables(ds, cfg)
    values = np.hstack([t.user, t.review_mean])
    if not np.all(np.isfinite(values)):
        raise FloatingPointError("non-finite feature value")
    return FeatureMatrix(values=values, user_ids=list(ds.arrays.user_ids))
