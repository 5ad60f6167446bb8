import math

import numpy as np
import pytest
from scipy import stats

from clustered_mallows.distances import d_oc, row_distances
from clustered_mallows.model import CmmParams, all_orders0, enumerated_distances, exact_log_psi
from clustered_mallows.rank_core import Allocation, Permutation
from clustered_mallows.sampler import (
    SamplerConfig,
    default_chain_len,
    draw_orders,
    metropolis_step,
    rcmm,
    sample_chain,
)


def _codes(orders0, n):
    return orders0 @ (n ** np.arange(n))


def _exact_probs(params):
    orders = all_orders0(params.n)
    d = enumerated_distances(params.z, params.kind)
    lp = -params.theta * d - exact_log_psi(params.theta, params.z, params.kind)
    return _codes(orders, params.n), np.exp(lp)


def _counts(orders0, codes):
    index = {c: i for i, c in enumerate(codes)}
    return np.bincount([index[c] for c in _codes(orders0, orders0.shape[1])], minlength=len(codes))


def test_default_chain_len():
    assert default_chain_len(1) == 1
    assert default_chain_len(6) == 20 * math.ceil(6 * math.log(6))
    with pytest.raises(ValueError):
        SamplerConfig(chain_len=0)


def test_metropolis_step_rules():
    z = Allocation((1, 1, 2, 2))
    pi = Permutation((1, 2, 3, 4))
    rng = np.random.default_rng(0)
    # at zero spread every proposal is accepted
    for _ in range(50):
        new = metropolis_step(pi, CmmParams(z, 0.0), rng)
        assert sum(a != b for a, b in zip(new.order, pi.order)) == 2
        pi = new
    # a move that does not increase the distance is always taken
    hot = CmmParams(z, 100.0, "kendall")
    start = Permutation((3, 4, 1, 2))
    for _ in range(50):
        new = metropolis_step(start, hot, rng)
        assert d_oc(new, z, "kendall") <= d_oc(start, z, "kendall")
    assert metropolis_step(Permutation((1,)), CmmParams(Allocation((1,)), 1.0)) == Permutation((1,))


@pytest.mark.parametrize("kind", ["hamming", "kendall"])
def test_independent_chains_match_model(kind):
    params = CmmParams(Allocation((2, 1, 1, 2)), 1.0, kind)
    codes, p = _exact_probs(params)
    orders, dist = draw_orders(params, 40_000, rng=1)
    counts = _counts(orders, codes)
    assert stats.chisquare(counts, p * counts.sum()).pvalue > 0.01
    np.testing.assert_array_equal(dist, row_distances(orders, params.z, params.kind))


@pytest.mark.slow
@pytest.mark.parametrize("kind", ["hamming", "kendall"])
def test_long_chain_stationary(kind):
    params = CmmParams(Allocation((1, 2, 2, 3)), 0.8, kind)
    codes, p = _exact_probs(params)
    # 10^6 steps, thinned to near-independent states
    states = sample_chain(params, 50_000, thin=20, rng=2)
    counts = _counts(states, codes)
    assert stats.chisquare(counts, p * counts.sum()).pvalue > 0.01


def test_uniform_at_zero_spread():
    n, q = 6, 20_000
    orders, _ = draw_orders(CmmParams(Allocation((1, 1, 2, 2, 3, 3)), 0.0), q, rng=3)
    ranks = np.argsort(orders, axis=1)
    se = math.sqrt(0.25 / q)
    for i in range(n):
        for j in range(i + 1, n):
            assert abs(np.mean(ranks[:, i] < ranks[:, j]) - 0.5) <= 3 * se


def test_large_spread_concentrates():
    params = CmmParams(Allocation((2, 1, 3, 1, 2)), 50.0, "kendall")
    _, dist = draw_orders(params, 200, rng=4)
    assert np.all(dist == 0)
    _, dist = draw_orders(CmmParams(params.z, 50.0, "hamming"), 200, rng=4)
    assert np.all(dist == 0)


def test_reproducible():
    params = CmmParams(Allocation((1, 2, 2, 3, 1)), 0.7)
    a = rcmm(params, q=30, rng=9)
    b = rcmm(params, SamplerConfig(n_chains=30, seed=9))
    np.testing.assert_array_equal(a.orders0, b.orders0)
    c = rcmm(params, q=30, rng=10)
    assert not np.array_equal(a.orders0, c.orders0)
    np.testing.assert_array_equal(sample_chain(params, 20, 3, rng=1), sample_chain(params, 20, 3, rng=1))


def test_single_item():
    params = CmmParams(Allocation((1,)), 1.0)
    data = rcmm(params, q=5, rng=0)
    assert data.q == 5 and data.n == 1
    np.testing.assert_array_equal(sample_chain(params, 3, rng=0), np.zeros((3, 1)))


def test_rows_are_permutations():
    data = rcmm(CmmParams(Allocation((1, 2) * 6), 0.5), q=50, chain_len=30, rng=5)
    assert np.all(np.sort(data.orders0, axis=1) == np.arange(12))
