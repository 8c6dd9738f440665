"""User-user co-review graph and its sparsifiers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .data import Dataset


@dataclass(frozen=True)
class SparsifyParams:
    k1: int = 5
    k2: int = 5
    lo: float = 0.05
    hi: float = 0.95
    T_days: float = 7

    def __post_init__(self):
        if not (0 <= self.lo < self.hi <= 1):
            raise ValueError(f"need 0 <= lo < hi <= 1, got lo={self.lo} hi={self.hi}")
        if self.k1 < 0 or self.k2 < 0:
            raise ValueError("k1 and k2 must be non-negative")


@dataclass(frozen=True, eq=False)
class UserGraph:
    """Undirected simple graph over dense user indices.

    ``edges`` is an (E, 2) int array with i < j, lexicographically sorted.
    Shared products of edge e are ``shared_idx[shared_ptr[e]:shared_ptr[e+1]]``
    (indices into ``product_ids``).
    """

    user_ids: list[str]
    edges: np.ndarray
    min_gap: np.ndarray
    shared_ptr: np.ndarray
    shared_idx: np.ndarray
    product_ids: list[str] = field(default_factory=list)
    edge_prob: np.ndarray | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.user_ids)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def shared_products(self, e: int) -> set[str]:
        idx = self.shared_idx[self.shared_ptr[e]:self.shared_ptr[e + 1]]
        return {self.product_ids[k] for k in idx}

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in self.edges}

    @cached_property
    def degree(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n_nodes)

    @cached_property
    def adjacency(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR (indptr, neighbors) with neighbors sorted per node."""
        src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        order = np.lexsort((dst, src))
        indptr = np.zeros(self.n_nodes + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=self.n_nodes), out=indptr[1:])
        return indptr, dst[order]

    def neighbors(self, i: int) -> np.ndarray:
        indptr, nbr = self.adjacency
        return nbr[indptr[i]:indptr[i + 1]]

    def select(self, keep: np.ndarray) -> "UserGraph":
        """Edge-induced subgraph on a boolean mask; all nodes are retained."""
        keep = np.asarray(keep, dtype=bool)
        counts = np.diff(self.shared_ptr)
        ptr = np.zeros(int(keep.sum()) + 1, dtype=np.int64)
        np.cumsum(counts[keep], out=ptr[1:])
        idx = self.shared_idx[np.repeat(keep, counts)]
        return replace(
            self,
            edges=self.edges[keep],
            min_gap=self.min_gap[keep],
            shared_ptr=ptr,
            shared_idx=idx,
            edge_prob=None if self.edge_prob is None else self.edge_prob[keep],
        )

    def with_edge_prob(self, p) -> "UserGraph":
        p = np.asarray(p, dtype=float)
        if p.shape != (self.n_edges,):
            raise ValueError(f"expected {self.n_edges} edge probabilities, got shape {p.shape}")
        if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
            raise ValueError("edge probabilities must lie in [0, 1]")
        return replace(self, edge_prob=p)

    def edge_index(self) -> dict[tuple[int, int], int]:
        return {(int(i), int(j)): e for e, (i, j) in enumerate(self.edges)}

    def components(self) -> np.ndarray:
        """Connected-component label per node (union-find)."""
        parent = np.arange(self.n_nodes)

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for i, j in self.edges:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
        return np.array([find(x) for x in range(self.n_nodes)])

    def to_tsv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for e, (i, j) in enumerate(self.edges):
                p = "" if self.edge_prob is None else repr(float(self.edge_prob[e]))
                fh.write(f"{i}\t{j}\t{p}\t{int(self.min_gap[e])}\n")


def _from_pairs(user_ids, product_ids, i, j, prod, gap) -> UserGraph:
    """Merge (i, j, product, gap) rows, i < j, into a simple graph."""
    if len(i) == 0:
        return UserGraph(
            user_ids=list(user_ids),
            edges=np.zeros((0, 2), dtype=np.int64),
            min_gap=np.zeros(0, dtype=np.int64),
            shared_ptr=np.zeros(1, dtype=np.int64),
            shared_idx=np.zeros(0, dtype=np.int64),
            product_ids=list(product_ids),
        )
    # collapse duplicate (i, j, prod) rows keeping the min gap
    order = np.lexsort((gap, prod, j, i))
    i, j, prod, gap = i[order], j[order], prod[order], gap[order]
    first = np.r_[True, (i[1:] != i[:-1]) | (j[1:] != j[:-1]) | (prod[1:] != prod[:-1])]
    i, j, prod, gap = i[first], j[first], prod[first], gap[first]
    new_edge = np.r_[True, (i[1:] != i[:-1]) | (j[1:] != j[:-1])]
    starts = np.flatnonzero(new_edge)
    edges = np.stack([i[starts], j[starts]], axis=1)
    min_gap = np.minimum.reduceat(gap, starts)
    ptr = np.r_[starts, len(i)].astype(np.int64)
    return UserGraph(
        user_ids=list(user_ids),
        edges=edges.astype(np.int64),
        min_gap=min_gap.astype(np.int64),
        shared_ptr=ptr,
        shared_idx=prod.astype(np.int64),
        product_ids=list(product_ids),
    )


def build_clique_graph(ds: Dataset) -> UserGraph:
    """Connect every pair of users who reviewed a common product.

    The min gap of an edge is the smallest |date_i - date_j| over all pairs of
    their reviews on shared products.
    """
    a = ds.arrays
    order = np.lexsort((a.day, a.user, a.product))
    prod_sorted = a.product[order]
    bounds = np.flatnonzero(np.r_[True, prod_sorted[1:] != prod_sorted[:-1], True])
    rows_i, rows_j, rows_p, rows_g = [], [], [], []
    for s, t in zip(bounds[:-1], bounds[1:]):
        if t - s < 2:
            continue
        idx = order[s:t]
        u = a.user[idx]
        d = a.day[idx]
        ii, jj = np.triu_indices(t - s, k=1)
        diff_user = u[ii] != u[jj]
        ii, jj = ii[diff_user], jj[diff_user]
        ui, uj = u[ii], u[jj]
        rows_i.append(np.minimum(ui, uj))
        rows_j.append(np.maximum(ui, uj))
        rows_p.append(np.full(len(ii), prod_sorted[s]))
        rows_g.append(np.abs(d[ii] - d[jj]))
    cat = (lambda xs: np.concatenate(xs) if xs else np.zeros(0, dtype=np.int64))
    return _from_pairs(a.user_ids, a.product_ids, cat(rows_i), cat(rows_j), cat(rows_p), cat(rows_g))


def bursty_filter(g: UserGraph, T_days: float | None) -> UserGraph:
    """Keep edges whose closest pair of co-reviews is at most ``T_days`` apart.

    ``None`` or ``inf`` disables the filter.
    """
    if T_days is None or math.isinf(T_days):
        return g
    if T_days < 0:
        raise ValueError("T_days must be non-negative")
    return g.select(g.min_gap <= T_days)


def trusted_sparsify(g: UserGraph, lo: float = 0.05, hi: float = 0.95) -> UserGraph:
    if g.edge_prob is None:
        raise ValueError("graph has no edge probabilities")
    if not (0 <= lo < hi <= 1):
        raise ValueError(f"need 0 <= lo < hi <= 1, got lo={lo} hi={hi}")
    p = g.edge_prob
    return g.select((p <= lo) | (p >= hi))


def _take_k_per_group(group: np.ndarray, keys: np.ndarray, k: int) -> np.ndarray:
    """Mask of the k smallest-key members of each group."""
    if k <= 0 or len(group) == 0:
        return np.zeros(len(group), dtype=bool)
    order = np.lexsort((keys, group))
    g = group[order]
    starts = np.flatnonzero(np.r_[True, g[1:] != g[:-1]])
    counts = np.diff(np.r_[starts, len(g)])
    pos = np.arange(len(g)) - np.repeat(starts, counts)
    mask = np.zeros(len(group), dtype=bool)
    mask[order[pos < k]] = True
    return mask


def oracle_sparsify(g: UserGraph, labels, k1: int, k2: int, rng_seed=None) -> UserGraph:
    """Each node keeps up to k1 random same-class and k2 random opposite-class edges.

    Sampling is without replacement per node; the result is the union of the
    edges picked by either endpoint.
    """
    labels = np.asarray(labels)
    if labels.shape != (g.n_nodes,):
        raise ValueError("labels must cover every node")
    if k1 < 0 or k2 < 0:
        raise ValueError("k1 and k2 must be non-negative")
    rng = np.random.default_rng(rng_seed)
    E = g.n_edges
    src = np.concatenate([g.edges[:, 0], g.edges[:, 1]])
    dst = np.concatenate([g.edges[:, 1], g.edges[:, 0]])
    same = labels[src] == labels[dst]
    keys = rng.random(2 * E)
    picked = np.zeros(2 * E, dtype=bool)
    picked[same] = _take_k_per_group(src[same], keys[same], k1)
    picked[~same] = _take_k_per_group(src[~same], keys[~same], k2)
    keep = picked[:E] | picked[E:]
    return g.select(keep)
