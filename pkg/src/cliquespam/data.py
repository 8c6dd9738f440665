"""Review dataset model, canonical TSV ingestion and user-level labels."""

from __future__ import annotations

import datetime as dt
import re
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

SPAMMER = 1
BENIGN = -1

MIN_DATE = dt.date(1990, 1, 1)
MAX_DATE = dt.date(2100, 1, 1)

TSV_HEADER = ("review_id", "user_id", "product_id", "rating", "date", "filtered", "text")


class DatasetFormatError(ValueError):
    """Malformed input file; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Review:
    review_id: str
    user_id: str
    product_id: str
    rating: int
    date: dt.date
    filtered: bool
    text: str = ""

    def __post_init__(self):
        if self.rating not in (1, 2, 3, 4, 5):
            raise ValueError(f"rating must be in 1..5, got {self.rating!r}")
        if not (MIN_DATE <= self.date <= MAX_DATE):
            raise ValueError(f"date {self.date} outside {MIN_DATE}..{MAX_DATE}")


@dataclass(frozen=True)
class ReviewArrays:
    """Column view of a dataset with reviews in review_id order."""

    review_ids: list[str]
    user_ids: list[str]      # sorted distinct users, row order of feature matrices
    product_ids: list[str]   # sorted distinct products
    user: np.ndarray         # user index per review
    product: np.ndarray      # product index per review
    rating: np.ndarray
    day: np.ndarray          # proleptic ordinal day
    filtered: np.ndarray
    texts: list[str]


@dataclass(frozen=True, eq=False)
class Dataset:
    reviews: tuple[Review, ...]
    users: dict[str, tuple[int, ...]] = field(repr=False)
    products: dict[str, tuple[int, ...]] = field(repr=False)
    user_labels: dict[str, int] = field(repr=False)

    @classmethod
    def from_reviews(cls, reviews) -> "Dataset":
        reviews = tuple(reviews)
        users: dict[str, list[int]] = defaultdict(list)
        products: dict[str, list[int]] = defaultdict(list)
        seen: set[str] = set()
        for i, r in enumerate(reviews):
            if r.review_id in seen:
                raise ValueError(f"duplicate review_id {r.review_id!r}")
            seen.add(r.review_id)
            users[r.user_id].append(i)
            products[r.product_id].append(i)
        labels = {
            u: SPAMMER if any(reviews[i].filtered for i in idx) else BENIGN
            for u, idx in users.items()
        }
        return cls(
            reviews=reviews,
            users={u: tuple(v) for u, v in users.items()},
            products={p: tuple(v) for p, v in products.items()},
            user_labels=labels,
        )

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.reviews == other.reviews

    def __hash__(self):
        return hash(self.reviews)

    def __len__(self):
        return len(self.reviews)

    @cached_property
    def review_index(self) -> dict[str, int]:
        return {r.review_id: i for i, r in enumerate(self.reviews)}

    @cached_property
    def arrays(self) -> ReviewArrays:
        order = sorted(range(len(self.reviews)), key=lambda i: self.reviews[i].review_id)
        revs = [self.reviews[i] for i in order]
        user_ids = sorted(self.users)
        product_ids = sorted(self.products)
        uix = {u: k for k, u in enumerate(user_ids)}
        pix = {p: k for k, p in enumerate(product_ids)}
        return ReviewArrays(
            review_ids=[r.review_id for r in revs],
            user_ids=user_ids,
            product_ids=product_ids,
            user=np.array([uix[r.user_id] for r in revs], dtype=np.int64),
            product=np.array([pix[r.product_id] for r in revs], dtype=np.int64),
            rating=np.array([r.rating for r in revs], dtype=np.int64),
            day=np.array([r.date.toordinal() for r in revs], dtype=np.int64),
            filtered=np.array([r.filtered for r in revs], dtype=bool),
            texts=[r.text for r in revs],
        )

    def label_vector(self) -> np.ndarray:
        """Labels (+1/-1) aligned with ``arrays.user_ids``."""
        return np.array([self.user_labels[u] for u in self.arrays.user_ids], dtype=np.int64)


def dataset_stats(ds: Dataset) -> dict:
    n_rev = len(ds.reviews)
    n_users = len(ds.users)
    n_fake = sum(r.filtered for r in ds.reviews)
    n_spam = sum(1 for v in ds.user_labels.values() if v == SPAMMER)
    return {
        "reviews": n_rev,
        "users": n_users,
        "products": len(ds.products),
        "fake_review_pct": 100.0 * n_fake / n_rev if n_rev else 0.0,
        "spammer_pct": 100.0 * n_spam / n_users if n_users else 0.0,
    }


_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_UNESCAPES = {v: k for k, v in _ESCAPES.items()}
_UNESCAPE_RE = re.compile(r"\\[\\tnr]")


def escape_text(text: str) -> str:
    return "".join(_ESCAPES.get(c, c) for c in text)


def unescape_text(text: str) -> str:
    return _UNESCAPE_RE.sub(lambda m: _UNESCAPES[m.group(0)], text)


def _parse_row(fields: list[str], lineno: int) -> Review:
    if len(fields) != 7:
        raise DatasetFormatError(f"expected 7 tab-separated fields, got {len(fields)}", lineno)
    rid, uid, pid, rating, date, filtered, text = fields
    if not rid or not uid or not pid:
        raise DatasetFormatError("empty id field", lineno)
    try:
        rating_i = int(rating)
    except ValueError:
        raise DatasetFormatError(f"bad rating {rating!r}", lineno) from None
    try:
        day = dt.date.fromisoformat(date)
    except ValueError:
        raise DatasetFormatError(f"bad date {date!r}", lineno) from None
    if filtered not in ("0", "1"):
        raise DatasetFormatError(f"filtered must be 0 or 1, got {filtered!r}", lineno)
    try:
        return Review(rid, uid, pid, rating_i, day, filtered == "1", unescape_text(text))
    except ValueError as exc:
        raise DatasetFormatError(str(exc), lineno) from None


def load_dataset(path, format: str = "canonical_tsv") -> Dataset:
    if format != "canonical_tsv":
        raise ValueError(f"unsupported format {format!r}")
    reviews = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8", newline="\n") as fh:
        header = fh.readline().rstrip("\r\n")
        if tuple(header.split("\t")) != TSV_HEADER:
            raise DatasetFormatError("missing or wrong header row", 1)
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\r\n")
            if not line:
                continue
            r = _parse_row(line.split("\t"), lineno)
            if r.review_id in seen:
                raise DatasetFormatError(
                    f"duplicate review_id {r.review_id!r} (first on line {seen[r.review_id]})", lineno
                )
            seen[r.review_id] = lineno
            reviews.append(r)
    return Dataset.from_reviews(reviews)


def write_dataset(ds: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(TSV_HEADER) + "\n")
        for r in ds.reviews:
            fh.write(
                f"{r.review_id}\t{r.user_id}\t{r.product_id}\t{r.rating}\t"
                f"{r.date.isoformat()}\t{int(r.filtered)}\t{escape_text(r.text)}\n"
            )


def load_yelp_raw(metadata_path, content_path=None) -> Dataset:
    """Read the raw Yelp layout (``metadata`` + optional ``reviewContent``).

    metadata rows: ``user_id  prod_id  rating  label  date`` where label -1 marks a
    filtered review. reviewContent rows: ``user_id  prod_id  date  text``.
    """
    texts: dict[tuple[str, str, str], str] = {}
    if content_path is not None:
        with open(content_path, encoding="utf-8", errors="replace") as fh:
            for line in fh:
                parts = line.rstrip("\r\n").split("\t", 3)
                if len(parts) == 4:
                    texts[(parts[0], parts[1], parts[2])] = parts[3]
    reviews = []
    with open(metadata_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 5:
                raise DatasetFormatError(f"expected 5 fields, got {len(parts)}", lineno)
            uid, pid, rating, label, date = parts
            try:
                r = Review(
                    review_id=f"r{lineno}",
                    user_id=uid,
                    product_id=pid,
                    rating=int(float(rating)),
                    date=dt.date.fromisoformat(date),
                    filtered=int(float(label)) == -1,
                    text=texts.get((uid, pid, date), ""),
                )
            except ValueError as exc:
                raise DatasetFormatError(str(exc), lineno) from None
            reviews.append(r)
    return Dataset.from_reviews(reviews)
