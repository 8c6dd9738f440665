"""Ranking metrics over spam scores: ROC AUC, AP, precision@k and NDCG@k."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _positive(labels) -> np.ndarray:
    return np.asarray(labels) > 0


@dataclass(frozen=True)
class RankedResult:
    users: list
    labels: np.ndarray   # bool, True = spammer
    scores: np.ndarray

    def __post_init__(self):
        if not (len(self.users) == len(self.labels) == len(self.scores)):
            raise ValueError("users, labels and scores must have equal length")
        if len(self.scores) > 1 and np.any(np.diff(self.scores) > 0):
            raise ValueError("scores must be non-increasing")

    def __len__(self):
        return len(self.users)

    @classmethod
    def from_scores(cls, scores, labels, users=None) -> "RankedResult":
        """Sort by score descending; ties broken by user id ascending."""
        scores = np.asarray(scores, dtype=float)
        pos = _positive(labels)
        if users is None:
            users = list(range(len(scores)))
        order = sorted(range(len(scores)), key=lambda k: (-scores[k], users[k]))
        return cls([users[k] for k in order], pos[order], scores[order])


def auc(scores, labels) -> float:
    """Mann-Whitney AUC: P[s(spammer) > s(benign)] + P[tie] / 2."""
    s = np.asarray(scores, dtype=float)
    pos = _positive(labels)
    n1 = int(pos.sum())
    n0 = len(pos) - n1
    if n1 == 0 or n0 == 0:
        raise ValueError("AUC needs both classes")
    order = np.argsort(s, kind="mergesort")
    ss = s[order]
    ranks = np.empty(len(s))
    starts = np.flatnonzero(np.r_[True, ss[1:] != ss[:-1]])
    ends = np.r_[starts[1:], len(ss)]
    avg = (starts + ends + 1) / 2.0   # mean of 1-based ranks starts+1 .. ends
    ranks[order] = np.repeat(avg, ends - starts)
    return float((ranks[pos].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def average_precision(scores, labels, users=None) -> float:
    """Step-wise AP: mean of precision@r over the ranks r of the positives."""
    ranked = RankedResult.from_scores(scores, labels, users)
    return average_precision_ranked(ranked.labels)


def average_precision_ranked(ranked_labels) -> float:
    lab = _positive(ranked_labels)
    n_pos = int(lab.sum())
    if n_pos == 0:
        raise ValueError("AP needs at least one positive")
    hits = np.cumsum(lab)
    r = np.flatnonzero(lab) + 1
    return float(np.sum(hits[lab] / r) / n_pos)


def _ranked_labels(ranked) -> np.ndarray:
    if isinstance(ranked, RankedResult):
        return ranked.labels
    return _positive(ranked)


def precision_at_k(ranked, k: int) -> float:
    lab = _ranked_labels(ranked)
    if not (1 <= k <= len(lab)):
        raise ValueError(f"k={k} out of range 1..{len(lab)}")
    return float(lab[:k].sum() / k)


def ndcg_at_k(ranked, k: int) -> float:
    """DCG@k with gains 2^l - 1, over the ideal DCG where all top-k are spammers."""
    lab = _ranked_labels(ranked)
    if not (1 <= k <= len(lab)):
        raise ValueError(f"k={k} out of range 1..{len(lab)}")
    if not lab.any():
        raise ValueError("NDCG needs at least one spammer")
    disc = 1.0 / np.log2(np.arange(2, k + 2))
    gains = np.power(2.0, lab[:k].astype(float)) - 1.0
    return float(np.sum(gains * disc) / np.sum(disc))


def ndcg_curve(ranked, k_max: int = 1000) -> np.ndarray:
    """NDCG@k for k = 1 .. min(k_max, len)."""
    lab = _ranked_labels(ranked)
    if not lab.any():
        raise ValueError("NDCG needs at least one spammer")
    k = min(k_max, len(lab))
    disc = 1.0 / np.log2(np.arange(2, k + 2))
    return np.cumsum(lab[:k] * disc) / np.cumsum(disc)


def precision_curve(ranked, ks=range(100, 1001, 100)) -> dict[int, float]:
    lab = _ranked_labels(ranked)
    return {k: precision_at_k(lab, k) for k in ks if k <= len(lab)}
