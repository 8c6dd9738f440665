import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cliquespam.active import budget_size, cliques_by_size, sample_largest_clique, sample_random

from conftest import make_ds


@pytest.fixture
def ab_ds():
    # A: 5 reviewers, B: 3 reviewers (one shared with A), C: 1
    rows = [(u, "A", 3, 0, False) for u in ("a1", "a2", "a3", "a4", "a5")]
    rows += [(u, "B", 3, 0, False) for u in ("b1", "b2", "a1")]
    rows += [("c1", "C", 3, 0, False)]
    return make_ds(rows)


def test_budget_size():
    assert budget_size(0.025, 1000) == 25
    assert budget_size(0.0025, 1000) == 3     # 2.5 rounds half up
    assert budget_size(0.001, 100) == 2       # minimum
    for bad in (0.0, 1.0):
        with pytest.raises(ValueError):
            budget_size(bad, 10)


def test_random_all_users():
    users = [f"u{i}" for i in range(7)]
    assert sorted(sample_random(users, 7, seed=1)) == users


def test_random_deterministic():
    users = [f"u{i}" for i in range(50)]
    assert sample_random(users, 10, seed=4) == sample_random(users, 10, seed=4)


def test_random_too_many():
    with pytest.raises(ValueError):
        sample_random(["a", "b"], 3, seed=0)


def test_random_is_uniform():
    users = list(range(10))
    rng = np.random.default_rng(0)
    counts = np.zeros(10, dtype=int)
    for _ in range(10_000):
        counts[sample_random(users, 1, seed=rng)[0]] += 1
    assert np.all(np.abs(counts - 1000) <= 100)


def test_clique_order(ab_ds):
    assert [p for p, _ in cliques_by_size(ab_ds)] == ["A", "B", "C"]


def test_clique_exact_fit(ab_ds):
    assert sorted(sample_largest_clique(ab_ds, 5, seed=0)) == ["a1", "a2", "a3", "a4", "a5"]


def test_clique_spills_to_second_largest(ab_ds):
    got = sample_largest_clique(ab_ds, 7, seed=0)
    assert len(set(got)) == 7
    assert set(got) == {"a1", "a2", "a3", "a4", "a5", "b1", "b2"}


def test_clique_remainder_is_random(ab_ds):
    extra = {frozenset(sample_largest_clique(ab_ds, 6, seed=s)) - {"a1", "a2", "a3", "a4", "a5"}
             for s in range(30)}
    assert extra == {frozenset({"b1"}), frozenset({"b2"})}


def test_clique_budget_too_large(ab_ds):
    with pytest.raises(ValueError):
        sample_largest_clique(ab_ds, 9, seed=0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("abcdefghij"), st.sampled_from("PQRST")), min_size=1, max_size=40),
       st.integers(0, 10), st.integers(0, 1000))
def test_clique_prefix_property(pairs, k, seed):
    ds = make_ds([(u, p, 3, 0, False) for u, p in pairs])
    k = min(k, len(ds.users))
    got = sample_largest_clique(ds, k, seed)
    assert len(got) == len(set(got)) == k
    assert set(got) <= set(ds.users)
    # every clique that fits entirely in the budget is taken whole
    chosen, covered = set(got), set()
    for _, reviewers in cliques_by_size(ds):
        new = set(reviewers) - covered
        if len(covered) + len(new) > k:
            break
        assert set(reviewers) <= chosen
        covered |= new
