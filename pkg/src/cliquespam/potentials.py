"""Node potentials a_i and edge agreement probabilities p_ij."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .data import SPAMMER
from .features import FeatureMatrix
from .forest import Forest, ForestParams, train
from .graph import UserGraph

EPS = 0.001
MIN_GRAPH_PAIRS = 50


@dataclass(frozen=True)
class NodePotentials:
    """``a[i]`` is the prior spam probability of user index i."""

    a: np.ndarray
    clamped: dict[int, int] = field(default_factory=dict)

    def to_tsv(self, path, user_ids) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for uid, v in zip(user_ids, self.a):
                fh.write(f"{uid}\t{float(v)!r}\n")


def clip(p, eps: float = EPS) -> np.ndarray:
    return np.clip(np.asarray(p, dtype=float), eps, 1.0 - eps)


def _clamp(a: np.ndarray, labeled: dict[int, int], eps: float) -> NodePotentials:
    a = clip(a, eps)
    for i, lab in labeled.items():
        a[i] = 1.0 - eps if lab == SPAMMER else eps
    return NodePotentials(a=a, clamped=dict(labeled))


def ml_node_potentials(forest: Forest, fm: FeatureMatrix, labeled: dict[int, int],
                       eps: float = EPS) -> NodePotentials:
    """Forest spam probabilities for every user, labeled users clamped to eps / 1-eps."""
    return _clamp(np.atleast_1d(forest.predict_proba(fm.values)), labeled, eps)


def edge_features(f_i, f_j) -> np.ndarray:
    """Symmetric pair representation: |f_i - f_j| followed by (f_i + f_j) / 2.

    Works row-wise on 2-D input.
    """
    f_i = np.asarray(f_i, dtype=float)
    f_j = np.asarray(f_j, dtype=float)
    if f_i.shape != f_j.shape:
        raise ValueError(f"feature shapes differ: {f_i.shape} vs {f_j.shape}")
    return np.concatenate([np.abs(f_i - f_j), (f_i + f_j) / 2.0], axis=-1)


def edge_training_pairs(labeled: dict[int, int], graph: UserGraph) -> np.ndarray:
    """Labeled-labeled pairs used to fit the edge model, as an (n, 2) array.

    Graph edges between labeled users are used when there are at least
    MIN_GRAPH_PAIRS of them; otherwise every labeled pair is used.
    """
    nodes = sorted(labeled)
    is_lab = np.zeros(graph.n_nodes, dtype=bool)
    is_lab[nodes] = True
    both = is_lab[graph.edges[:, 0]] & is_lab[graph.edges[:, 1]] if graph.n_edges else np.zeros(0, bool)
    if both.sum() >= MIN_GRAPH_PAIRS:
        return graph.edges[both]
    return np.array(list(itertools.combinations(nodes, 2)), dtype=np.int64).reshape(-1, 2)


def train_edge_forest(fm: FeatureMatrix, labeled: dict[int, int], graph: UserGraph,
                      params: ForestParams = ForestParams()) -> Forest:
    """Forest predicting whether the two endpoints share a class."""
    if len(labeled) < 2:
        raise ValueError("need at least two labeled users")
    pairs = edge_training_pairs(labeled, graph)
    X = edge_features(fm.values[pairs[:, 0]], fm.values[pairs[:, 1]])
    y = np.array([labeled[int(i)] == labeled[int(j)] for i, j in pairs])
    return train(X, y, params)


def ml_edge_probs(edge_forest: Forest, fm: FeatureMatrix, graph: UserGraph,
                  labeled: dict[int, int] | None = None, eps: float = EPS) -> np.ndarray:
    """p_ij per graph edge; edges joining two labeled users get eps / 1-eps from the labels."""
    if graph.n_edges == 0:
        return np.zeros(0)
    X = edge_features(fm.values[graph.edges[:, 0]], fm.values[graph.edges[:, 1]])
    p = clip(edge_forest.predict_proba(X), eps)
    return _label_pairs(p, graph, labeled, eps)


def _label_pairs(p, graph, labeled, eps):
    if labeled:
        lab = np.zeros(graph.n_nodes, dtype=np.int64)
        for i, v in labeled.items():
            lab[i] = v
        li, lj = lab[graph.edges[:, 0]], lab[graph.edges[:, 1]]
        both = (li != 0) & (lj != 0)
        p = p.copy()
        p[both] = np.where(li[both] == lj[both], 1.0 - eps, eps)
    return p


def threshold_spam_scores(fm: FeatureMatrix | np.ndarray) -> np.ndarray:
    """Unsupervised score S_u = 1 - sqrt(mean_i Pr[F_i < f_ui]).

    Pr is the empirical fraction of users with a strictly smaller value.
    """
    F = fm.values if isinstance(fm, FeatureMatrix) else np.asarray(fm, dtype=float)
    n, r = F.shape
    if r < 1:
        raise ValueError("need at least one feature column")
    if n == 0:
        return np.zeros(0)
    cdf = np.empty_like(F)
    for k in range(r):
        col = np.sort(F[:, k])
        cdf[:, k] = np.searchsorted(col, F[:, k], side="left") / n
    return 1.0 - np.sqrt(cdf.mean(axis=1))


def threshold_node_potentials(scores, labeled: dict[int, int] | None = None,
                              eps: float = EPS) -> NodePotentials:
    return _clamp(np.array(scores, dtype=float), labeled or {}, eps)


def threshold_edge_probs(scores, graph: UserGraph, labeled: dict[int, int] | None = None,
                         eps: float = EPS) -> np.ndarray:
    """p_ij = 1 - |S_i - S_j|, clipped."""
    s = np.asarray(scores, dtype=float)
    if graph.n_edges == 0:
        return np.zeros(0)
    p = clip(1.0 - np.abs(s[graph.edges[:, 0]] - s[graph.edges[:, 1]]), eps)
    return _label_pairs(p, graph, labeled, eps)


def edge_probs_to_tsv(path, graph: UserGraph, p) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for (i, j), v in zip(graph.edges, p):
            fh.write(f"{graph.user_ids[i]}\t{graph.user_ids[j]}\t{float(v)!r}\n")
