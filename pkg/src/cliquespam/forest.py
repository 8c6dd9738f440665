"""Random forest of Gini decision trees for binary class probabilities."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit

FORMAT_VERSION = 1


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 950
    max_depth: int = 16
    feature_fraction: float = 0.65
    min_leaf: int = 1
    bootstrap: bool = True
    seed: int = 0
    class_weight: str | None = None  # None or "balanced"

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not (0 < self.feature_fraction <= 1):
            raise ValueError("feature_fraction must be in (0, 1]")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.class_weight not in (None, "balanced"):
            raise ValueError(f"unknown class_weight {self.class_weight!r}")


@dataclass
class Tree:
    """Flat binary tree. ``feature[k] == -1`` marks a leaf.

    Samples with ``x[feature] <= threshold`` go left. ``counts[k]`` holds the
    (negative, positive) class weight reaching node k.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def value(self) -> np.ndarray:
        tot = self.counts.sum(axis=1)
        return np.where(tot > 0, self.counts[:, 1] / np.where(tot > 0, tot, 1), 0.0)

    def depth(self) -> int:
        d = np.zeros(self.n_nodes, dtype=int)
        for k in range(self.n_nodes):
            if self.feature[k] >= 0:
                d[self.left[k]] = d[self.right[k]] = d[k] + 1
        return int(d.max())

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            feature=np.array(d["feature"], dtype=np.int64),
            threshold=np.array(d["threshold"], dtype=float),
            left=np.array(d["left"], dtype=np.int64),
            right=np.array(d["right"], dtype=np.int64),
            counts=np.array(d["counts"], dtype=float).reshape(-1, 2),
        )

    @classmethod
    def leaf(cls, neg: float, pos: float) -> "Tree":
        return cls(
            feature=np.array([-1]),
            threshold=np.array([0.0]),
            left=np.array([-1]),
            right=np.array([-1]),
            counts=np.array([[neg, pos]], dtype=float),
        )


@dataclass
class Forest:
    trees: list[Tree]
    params: ForestParams
    n_features: int
    _packed: tuple | None = field(default=None, repr=False, compare=False)

    @classmethod
    def constant(cls, p: float, n_features: int, params: ForestParams | None = None) -> "Forest":
        return cls([Tree.leaf(1.0 - p, p)], params or ForestParams(n_trees=1), n_features)

    def _pack(self):
        if self._packed is None:
            offsets = np.cumsum([0] + [t.n_nodes for t in self.trees])
            feature = np.concatenate([t.feature for t in self.trees])
            threshold = np.concatenate([t.threshold for t in self.trees])
            left = np.concatenate([np.where(t.left >= 0, t.left + o, -1) for t, o in zip(self.trees, offsets)])
            right = np.concatenate([np.where(t.right >= 0, t.right + o, -1) for t, o in zip(self.trees, offsets)])
            value = np.concatenate([t.value for t in self.trees])
            self._packed = (offsets[:-1], feature, threshold, left, right, value)
        return self._packed

    def predict_proba(self, X) -> np.ndarray | float:
        """Mean positive-class leaf frequency over trees; scalar for a 1-D input."""
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X2 = X.reshape(1, -1) if single else X
        if X2.ndim != 2 or X2.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got shape {X.shape}")
        roots, feature, threshold, left, right, value = self._pack()
        out = _predict(np.ascontiguousarray(X2), roots, feature, threshold, left, right, value)
        return float(out[0]) if single else out

    def to_dict(self) -> dict:
        return {
            "format": "cliquespam-forest",
            "version": FORMAT_VERSION,
            "params": asdict(self.params),
            "n_features": self.n_features,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Forest":
        if d.get("format") != "cliquespam-forest" or d.get("version") != FORMAT_VERSION:
            raise ValueError("not a supported forest file")
        return cls(
            trees=[Tree.from_dict(t) for t in d["trees"]],
            params=ForestParams(**d["params"]),
            n_features=int(d["n_features"]),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "Forest":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@njit(cache=True)
def _scan_feature(X, perm, s, e, f, w1, w0, raw, min_leaf):
    """Best split of rows perm[s:e] on feature f: (score, threshold) or (-inf, 0)."""
    cnt = e - s
    vals = np.empty(cnt)
    for q in range(cnt):
        vals[q] = X[perm[s + q], f]
    order = np.argsort(vals)
    T1 = 0.0
    T0 = 0.0
    TR = 0.0
    for q in range(cnt):
        r = perm[s + q]
        T1 += w1[r]
        T0 += w0[r]
        TR += raw[r]
    L1 = 0.0
    L0 = 0.0
    LR = 0.0
    best = -np.inf
    best_thr = 0.0
    for q in range(cnt - 1):
        r = perm[s + order[q]]
        L1 += w1[r]
        L0 += w0[r]
        LR += raw[r]
        v, v_next = vals[order[q]], vals[order[q + 1]]
        if not v_next > v:
            continue
        if LR < min_leaf or TR - LR < min_leaf:
            continue
        nL = L1 + L0
        R1 = T1 - L1
        R0 = T0 - L0
        nR = R1 + R0
        if nL <= 0 or nR <= 0:
            continue
        score = (L1 * L1 + L0 * L0) / nL + (R1 * R1 + R0 * R0) / nR
        if score > best + 1e-12 * max(1.0, abs(best)) or best == -np.inf:
            best = score
            thr = (v + v_next) / 2.0
            # midpoint can round onto the right-hand value for adjacent floats
            best_thr = thr if thr < v_next else v
    return best, best_thr


@njit(cache=True)
def _grow(X, pos, mult, cw0, cw1, max_depth, min_leaf, m, keys):
    """Grow one tree; features tried at node k are the m smallest of keys[k].

    Features are scanned in ascending index order and a later candidate must
    beat the incumbent strictly, so ties go to the lowest feature index and
    then the lowest threshold.
    """
    n, d = X.shape
    max_nodes = keys.shape[0]
    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    counts = np.zeros((max_nodes, 2))
    seg_s = np.zeros(max_nodes, np.int64)
    seg_e = np.zeros(max_nodes, np.int64)
    depth = np.zeros(max_nodes, np.int64)

    raw = mult.astype(np.float64)
    w1 = np.zeros(n)
    w0 = np.zeros(n)
    for r in range(n):
        if pos[r]:
            w1[r] = raw[r] * cw1
        else:
            w0[r] = raw[r] * cw0
    perm = np.nonzero(mult > 0)[0]
    seg_e[0] = len(perm)
    for q in range(len(perm)):
        counts[0, 0] += w0[perm[q]]
        counts[0, 1] += w1[perm[q]]
    n_nodes = 1
    stack = np.zeros(max_nodes, np.int64)
    sp = 1
    in_subset = np.zeros(d, np.bool_)
    while sp > 0:
        sp -= 1
        k = stack[sp]
        s, e = seg_s[k], seg_e[k]
        if depth[k] >= max_depth or counts[k, 0] == 0 or counts[k, 1] == 0:
            continue
        tot_raw = 0.0
        for q in range(s, e):
            tot_raw += raw[perm[q]]
        if tot_raw < 2 * min_leaf:
            continue
        chosen = np.sort(np.argsort(keys[k])[:m])
        in_subset[:] = False
        best = -np.inf
        best_f = -1
        best_thr = 0.0
        for f in chosen:
            in_subset[f] = True
            sc, th = _scan_feature(X, perm, s, e, f, w1, w0, raw, min_leaf)
            if sc > best + 1e-12 * max(1.0, abs(best)) or (best == -np.inf and sc > -np.inf):
                best, best_f, best_thr = sc, f, th
        if best_f < 0 and m < d:
            for f in range(d):
                if in_subset[f]:
                    continue
                sc, th = _scan_feature(X, perm, s, e, f, w1, w0, raw, min_leaf)
                if sc > best + 1e-12 * max(1.0, abs(best)) or (best == -np.inf and sc > -np.inf):
                    best, best_f, best_thr = sc, f, th
        if best_f < 0:
            continue
        # stable in-place partition of perm[s:e]
        buf = perm[s:e].copy()
        lo = s
        for q in range(e - s):
            if X[buf[q], best_f] <= best_thr:
                perm[lo] = buf[q]
                lo += 1
        hi = lo
        for q in range(e - s):
            if not X[buf[q], best_f] <= best_thr:
                perm[hi] = buf[q]
                hi += 1
        feature[k] = best_f
        threshold[k] = best_thr
        for child, cs, ce in ((n_nodes, s, lo), (n_nodes + 1, lo, e)):
            seg_s[child] = cs
            seg_e[child] = ce
            depth[child] = depth[k] + 1
            for q in range(cs, ce):
                counts[child, 0] += w0[perm[q]]
                counts[child, 1] += w1[perm[q]]
        left[k] = n_nodes
        right[k] = n_nodes + 1
        stack[sp] = n_nodes + 1
        stack[sp + 1] = n_nodes
        sp += 2
        n_nodes += 2
    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes],
            right[:n_nodes], counts[:n_nodes])


@njit(cache=True)
def _predict(X, roots, feature, threshold, left, right, value):
    n = X.shape[0]
    n_trees = len(roots)
    out = np.empty(n)
    for i in range(n):
        acc = 0.0
        for t in range(n_trees):
            k = roots[t]
            while feature[k] >= 0:
                if X[i, feature[k]] <= threshold[k]:
                    k = left[k]
                else:
                    k = right[k]
            acc += value[k]
        out[i] = acc / n_trees
    return out


def train(X, y, params: ForestParams = ForestParams()) -> Forest:
    """Fit a forest; ``y`` is +1/-1 (or truthy/falsy), positive class = +1."""
    X = np.asarray(X, dtype=float)
    pos = np.asarray(y) > 0
    if X.ndim != 2 or len(X) != len(pos):
        raise ValueError(f"X {X.shape} and y {pos.shape} do not match")
    if len(X) < 2:
        raise ValueError("need at least two training rows")
    n, d = X.shape
    n_pos = int(pos.sum())
    if n_pos in (0, n):
        warnings.warn("single-class training set; returning a constant forest", RuntimeWarning, stacklevel=2)
        return Forest([Tree.leaf(float(n - n_pos), float(n_pos))], params, d)
    if params.class_weight == "balanced":
        class_w = (n / (2.0 * (n - n_pos)), n / (2.0 * n_pos))
    else:
        class_w = (1.0, 1.0)
    m = max(1, math.ceil(params.feature_fraction * d))
    seqs = np.random.SeedSequence(params.seed).spawn(params.n_trees)
    trees = []
    for ss in seqs:
        rng = np.random.default_rng(ss)
        if params.bootstrap:
            mult = np.bincount(rng.integers(0, n, n), minlength=n)
        else:
            mult = np.ones(n, dtype=np.int64)
        n_rows = int(np.count_nonzero(mult))
        keys = rng.random((max(1, 2 * n_rows - 1), d))
        arrays = _grow(X, pos, mult, class_w[0], class_w[1], params.max_depth, params.min_leaf, m, keys)
        trees.append(Tree(*arrays))
    return Forest(trees, params, d)


def predict_proba(forest: Forest, x) -> np.ndarray | float:
    return forest.predict_proba(x)
