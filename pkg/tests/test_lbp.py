import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cliquespam.lbp import PMRF, LBPParams, brute_force_marginals, classify, ranking, run_lbp

EXACT = LBPParams(max_iters=200, damping=0.0, tol=1e-14)


def random_tree(rng, n):
    parent = [int(rng.integers(0, k)) for k in range(1, n)]
    edges = np.array([(min(p, k), max(p, k)) for k, p in zip(range(1, n), parent)]).reshape(-1, 2)
    return PMRF(edges, rng.uniform(0.05, 0.95, n), rng.uniform(0.05, 0.95, len(edges)))


def test_isolated_node():
    r = run_lbp(PMRF(np.zeros((0, 2)), [0.7], []))
    np.testing.assert_allclose(r.beliefs, [[0.7, 0.3]])
    assert r.converged


def test_two_uniform_nodes_stay_half():
    r = run_lbp(PMRF([[0, 1]], [0.5, 0.5], [0.999]))
    np.testing.assert_allclose(r.beliefs, 0.5)


def test_path_with_clamped_end_is_exact():
    m = PMRF([[0, 1], [1, 2], [2, 3]], [0.999, 0.5, 0.5, 0.5], [0.9, 0.9, 0.9])
    r = run_lbp(m, EXACT)
    np.testing.assert_allclose(r.beliefs, brute_force_marginals(m), atol=1e-8)
    assert r.spam[1] > r.spam[2] > r.spam[3] > 0.5


def test_brute_force_two_nodes_by_hand():
    m = PMRF([[0, 1]], [0.9, 0.5], [0.8])
    # assignments (s,s) (s,b) (b,s) (b,b)
    w = np.array([0.9 * 0.5 * 0.8, 0.9 * 0.5 * 0.2, 0.1 * 0.5 * 0.2, 0.1 * 0.5 * 0.8])
    z = w.sum()
    np.testing.assert_allclose(brute_force_marginals(m)[:, 0], [(w[0] + w[1]) / z, (w[0] + w[2]) / z])
    np.testing.assert_allclose(brute_force_marginals(PMRF(np.zeros((0, 2)), [0.7], [])), [[0.7, 0.3]])


def test_brute_force_size_limit():
    with pytest.raises(ValueError):
        brute_force_marginals(PMRF(np.zeros((0, 2)), np.full(21, 0.5), []))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_trees_exact(n, seed):
    m = random_tree(np.random.default_rng(seed), n)
    r = run_lbp(m, EXACT)
    np.testing.assert_allclose(r.beliefs, brute_force_marginals(m), atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 12), st.floats(0.2, 0.9), st.integers(0, 2**32 - 1))
def test_normalized_and_class_swap(n, density, seed):
    rng = np.random.default_rng(seed)
    iu = np.array([(i, j) for i in range(n) for j in range(i + 1, n)])
    edges = iu[rng.random(len(iu)) < density].reshape(-1, 2)
    a = rng.uniform(0.05, 0.95, n)
    p = rng.uniform(0.05, 0.95, len(edges))
    r = run_lbp(PMRF(edges, a, p))
    np.testing.assert_allclose(r.beliefs.sum(axis=1), 1.0, atol=1e-9)
    np.testing.assert_allclose(r.messages.sum(axis=1), 1.0, atol=1e-9)
    assert np.all(r.beliefs >= 0)
    s = run_lbp(PMRF(edges, 1.0 - a, p))
    np.testing.assert_allclose(s.beliefs, r.beliefs[:, ::-1], atol=1e-12)


def test_star_single_round_by_hand():
    # centre 0, leaves 1..3; damping 0, one iteration from uniform messages
    a = np.array([0.6, 0.9, 0.2, 0.5])
    p = np.array([0.8, 0.7, 0.6])
    m = PMRF([[0, 1], [0, 2], [0, 3]], a, p)
    r = run_lbp(m, LBPParams(max_iters=1, damping=0.0))
    E = 3
    for e in range(E):
        leaf = e + 1
        # leaf -> centre uses only the leaf potential
        num = np.array([a[leaf] * p[e] + (1 - a[leaf]) * (1 - p[e]),
                        a[leaf] * (1 - p[e]) + (1 - a[leaf]) * p[e]])
        np.testing.assert_allclose(r.messages[E + e], num / num.sum(), atol=1e-12)
        # centre -> leaf: other incoming messages are still uniform
        num = np.array([a[0] * p[e] + (1 - a[0]) * (1 - p[e]), a[0] * (1 - p[e]) + (1 - a[0]) * p[e]])
        np.testing.assert_allclose(r.messages[e], num / num.sum(), atol=1e-12)


def test_monotone_influence():
    b = [run_lbp(PMRF([[0, 1]], [0.999, 0.5], [p])).spam[1] for p in np.linspace(0, 1, 11)]
    assert np.all(np.diff(b) >= -1e-12)


def test_damping_still_converges_to_tree_marginals():
    m = random_tree(np.random.default_rng(3), 9)
    r = run_lbp(m, LBPParams(max_iters=500, damping=0.5, tol=1e-13))
    assert r.converged
    np.testing.assert_allclose(r.beliefs, brute_force_marginals(m), atol=1e-8)


def test_score_is_log_odds():
    m = random_tree(np.random.default_rng(4), 6)
    r = run_lbp(m)
    np.testing.assert_allclose(r.score, np.log(r.spam / (1 - r.spam)), atol=1e-9)
    assert np.array_equal(np.argsort(-r.score, kind="stable"), np.argsort(-r.spam, kind="stable"))


def test_trace_and_flags(tmp_path):
    m = random_tree(np.random.default_rng(5), 8)
    r = run_lbp(m, LBPParams(max_iters=2, tol=0.0))
    assert not r.converged and r.iterations == 2 and len(r.trace) == 2
    r.trace_to_csv(tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "iteration,max_delta"


@pytest.mark.parametrize("kwargs", [dict(max_iters=0), dict(damping=1.0), dict(schedule="async")])
def test_params_validation(kwargs):
    with pytest.raises(ValueError):
        LBPParams(**kwargs)


@pytest.mark.parametrize("edges, a, p", [
    ([[0, 1]], [0.5, 0.5], []),
    ([[0, 2]], [0.5, 0.5], [0.5]),
    ([[1, 1]], [0.5, 0.5], [0.5]),
    ([[0, 1]], [1.5, 0.5], [0.5]),
])
def test_pmrf_validation(edges, a, p):
    with pytest.raises(ValueError):
        PMRF(edges, a, p)


def test_classify():
    labels, order = classify(np.array([0.9, 0.2, 0.6]), 0.5, ["u1", "u2", "u3"])
    assert list(labels) == [1, -1, 1]
    assert order == [0, 2, 1]
    labels, _ = classify(np.full((3, 2), 0.5))
    assert list(labels) == [-1, -1, -1]
    assert classify(np.array([0.8]), 0.5)[0][0] == 1
    with pytest.raises(ValueError):
        classify(np.array([0.5]), 1.0)


def test_ranking_ties_by_id():
    assert ranking([0.5, 0.9, 0.5], ["c", "a", "b"]) == [1, 2, 0]
