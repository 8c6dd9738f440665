"""Sum-product loopy belief propagation on a binary pairwise MRF.

State 0 is "spammer" (v = +1), state 1 is "benign" (v = -1). The node
potential is (a_i, 1 - a_i) and the edge potential is p_ij on agreement,
1 - p_ij on disagreement.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import UserGraph

MAX_BRUTE_FORCE_NODES = 20


@dataclass(frozen=True)
class PMRF:
    edges: np.ndarray   # (E, 2), i < j
    a: np.ndarray       # (V,) spam prior
    p: np.ndarray       # (E,) agreement probability

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        a = np.asarray(self.a, dtype=float)
        p = np.asarray(self.p, dtype=float)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "p", p)
        if len(p) != len(edges):
            raise ValueError("need one edge probability per edge")
        if len(edges) and (edges.min() < 0 or edges.max() >= len(a)):
            raise ValueError("edge endpoint out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise ValueError("self-loops are not allowed")
        for name, v in (("a", a), ("p", p)):
            if np.any(~np.isfinite(v)) or np.any((v < 0) | (v > 1)):
                raise ValueError(f"{name} must lie in [0, 1]")

    @property
    def n_nodes(self) -> int:
        return len(self.a)

    @classmethod
    def from_graph(cls, g: UserGraph, a, p=None) -> "PMRF":
        if p is None:
            if g.edge_prob is None:
                raise ValueError("graph has no edge probabilities")
            p = g.edge_prob
        return cls(g.edges, a, p)


@dataclass(frozen=True)
class LBPParams:
    max_iters: int = 30
    damping: float = 0.1
    tol: float = 1e-4
    schedule: str = "synchronous"

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not (0 <= self.damping < 1):
            raise ValueError("damping must be in [0, 1)")
        if self.schedule != "synchronous":
            raise ValueError("only the synchronous schedule is implemented")


@dataclass
class LBPResult:
    """Beliefs (V, 2) as (b_spam, b_benign).

    ``messages`` is (2E, 2): row e < E is the message from edges[e, 0] to
    edges[e, 1], row E + e the reverse direction.
    """

    beliefs: np.ndarray
    iterations: int
    converged: bool
    messages: np.ndarray
    trace: list[tuple[int, float]] = field(default_factory=list)
    log_odds: np.ndarray | None = None

    @property
    def spam(self) -> np.ndarray:
        return self.beliefs[:, 0]

    @property
    def score(self) -> np.ndarray:
        """log(b_spam / b_benign); orders like b_spam but does not saturate at 0 or 1."""
        if self.log_odds is None:
            with np.errstate(divide="ignore"):
                return np.log(self.beliefs[:, 0]) - np.log(self.beliefs[:, 1])
        return self.log_odds

    def trace_to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("iteration,max_delta\n")
            for it, d in self.trace:
                fh.write(f"{it},{float(d)!r}\n")


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    return x / x.sum(axis=1, keepdims=True)


def _incoming_log(n, dst, log_m):
    out = np.zeros((n, 2))
    out[:, 0] = np.bincount(dst, weights=log_m[:, 0], minlength=n)
    out[:, 1] = np.bincount(dst, weights=log_m[:, 1], minlength=n)
    return out


def _log_beliefs(log_phi, incoming):
    lb = log_phi + incoming
    lb -= lb.max(axis=1, keepdims=True)
    return _normalize_rows(np.exp(lb)), lb[:, 0] - lb[:, 1]


def run_lbp(m: PMRF, params: LBPParams = LBPParams()) -> LBPResult:
    V = m.n_nodes
    E = len(m.edges)
    phi = np.stack([m.a, 1.0 - m.a], axis=1)
    with np.errstate(divide="ignore"):
        log_phi = np.log(phi)
    if E == 0:
        beliefs, log_odds = _log_beliefs(log_phi, np.zeros((V, 2)))
        return LBPResult(beliefs, 0, True, np.zeros((0, 2)), [], log_odds)

    src = np.concatenate([m.edges[:, 0], m.edges[:, 1]])
    dst = np.concatenate([m.edges[:, 1], m.edges[:, 0]])
    rev = np.concatenate([np.arange(E, 2 * E), np.arange(E)])
    p = np.concatenate([m.p, m.p])
    msgs = np.full((2 * E, 2), 0.5)
    trace = []
    converged = False
    it = 0
    for it in range(1, params.max_iters + 1):
        with np.errstate(divide="ignore"):
            log_m = np.log(msgs)
        incoming = _incoming_log(V, dst, log_m)
        # cavity: everything node src knows except what dst told it
        h = log_phi[src] + incoming[src] - log_m[rev]
        h -= h.max(axis=1, keepdims=True)
        eh = np.exp(h)
        new = np.empty_like(msgs)
        new[:, 0] = eh[:, 0] * p + eh[:, 1] * (1.0 - p)
        new[:, 1] = eh[:, 0] * (1.0 - p) + eh[:, 1] * p
        new = _normalize_rows(new)
        if params.damping > 0:
            new = _normalize_rows((1.0 - params.damping) * new + params.damping * msgs)
        delta = float(np.max(np.abs(new - msgs)))
        msgs = new
        trace.append((it, delta))
        if delta < params.tol:
            converged = True
            break
    with np.errstate(divide="ignore"):
        incoming = _incoming_log(V, dst, np.log(msgs))
    beliefs, log_odds = _log_beliefs(log_phi, incoming)
    return LBPResult(beliefs, it, converged, msgs, trace, log_odds)


def brute_force_marginals(m: PMRF) -> np.ndarray:
    """Exact (b_spam, b_benign) per node by enumerating all 2^V assignments."""
    V = m.n_nodes
    if V > MAX_BRUTE_FORCE_NODES:
        raise ValueError(f"brute force limited to {MAX_BRUTE_FORCE_NODES} nodes, got {V}")
    if V == 0:
        return np.zeros((0, 2))
    # bit k of the assignment index set => node k benign (state 1)
    states = (np.arange(2 ** V)[:, None] >> np.arange(V)) & 1
    with np.errstate(divide="ignore"):
        log_a = np.log(m.a)
        log_na = np.log1p(-m.a)
        logp = np.log(m.p)
        log_np = np.log1p(-m.p)
    logw = np.where(states == 0, log_a, log_na).sum(axis=1)
    if len(m.edges):
        agree = states[:, m.edges[:, 0]] == states[:, m.edges[:, 1]]
        logw = logw + np.where(agree, logp, log_np).sum(axis=1)
    w = np.exp(logw - logw.max())
    z = w.sum()
    spam = ((states == 0) * w[:, None]).sum(axis=0) / z
    return np.stack([spam, 1.0 - spam], axis=1)


def ranking(scores, user_ids) -> list[int]:
    """Indices ordered by score descending, ties by user id ascending."""
    scores = np.asarray(scores, dtype=float)
    return sorted(range(len(scores)), key=lambda k: (-scores[k], user_ids[k]))


def classify(beliefs, tau: float = 0.5, user_ids=None):
    """Labels (+1 iff b_spam > tau) and the ranking by b_spam."""
    if not (0 < tau < 1):
        raise ValueError("tau must be in (0, 1)")
    b = np.asarray(beliefs, dtype=float)
    spam = b[:, 0] if b.ndim == 2 else b
    if user_ids is None:
        user_ids = list(range(len(spam)))
    labels = np.where(spam > tau, 1, -1)
    return labels, ranking(spam, user_ids)

