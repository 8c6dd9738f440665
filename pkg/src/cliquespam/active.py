"""Label-budget samplers: uniform random and largest-clique-first."""

from __future__ import annotations

import math

import numpy as np

from .data import Dataset


def budget_size(fraction: float, n_users: int) -> int:
    """round(fraction * n_users), at least 2 and at most n_users."""
    if not (0 < fraction < 1):
        raise ValueError("budget fraction must be in (0, 1)")
    k = max(2, math.floor(fraction * n_users + 0.5))
    if k > n_users:
        raise ValueError(f"budget of {k} users exceeds the {n_users} available")
    return k


def sample_random(users, k: int, seed=None) -> list:
    users = list(users)
    if k > len(users):
        raise ValueError(f"cannot sample {k} of {len(users)} users")
    if k < 0:
        raise ValueError("k must be non-negative")
    rng = np.random.default_rng(seed)
    pick = rng.choice(len(users), size=k, replace=False)
    return [users[i] for i in pick]


def cliques_by_size(ds: Dataset) -> list[tuple[str, list[str]]]:
    """(product, distinct reviewers) sorted by reviewer count desc, then product id."""
    out = []
    for pid, idx in ds.products.items():
        reviewers = sorted({ds.reviews[i].user_id for i in idx})
        out.append((pid, reviewers))
    out.sort(key=lambda t: (-len(t[1]), t[0]))
    return out


def sample_largest_clique(ds: Dataset, k: int, seed=None) -> list:
    """Spend the budget on the biggest product cliques first.

    Within the clique that exhausts the budget the pick is uniform; users
    already taken from an earlier clique are skipped.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    rng = np.random.default_rng(seed)
    chosen: list[str] = []
    taken: set[str] = set()
    for _, reviewers in cliques_by_size(ds):
        if len(chosen) >= k:
            break
        fresh = [u for u in reviewers if u not in taken]
        need = k - len(chosen)
        if len(fresh) > need:
            fresh = [fresh[i] for i in sorted(rng.choice(len(fresh), size=need, replace=False))]
        chosen.extend(fresh)
        taken.update(fresh)
    if len(chosen) < k:
        raise ValueError(f"cannot sample {k} users; only {len(chosen)} reviewers exist")
    return chosen
