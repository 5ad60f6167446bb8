import math

import numpy as np
import pytest

import oracles
from clustered_mallows.errors import TooLargeForEnumeration
from clustered_mallows.model import (
    CmmParams,
    all_orders0,
    enumerated_distances,
    exact_distance_distribution,
    exact_log_psi,
    log_likelihood,
    log_prob,
    rank_item_probabilities_exact,
    rc_probabilities_exact,
    rc_probabilities_mc,
)
from clustered_mallows.rank_core import Allocation, ClusteringTable, Permutation, RankingDataset

Z4 = Allocation((1, 1, 2, 2))
PI = Permutation((1, 3, 2, 4))


def test_log_psi_table_one():
    assert exact_log_psi(0.5, Z4, "hamming") == pytest.approx(2.344438, abs=1e-6)
    assert exact_log_psi(0.5, Z4, "kendall") == pytest.approx(2.093273, abs=1e-6)


def test_log_prob_table_one():
    h = CmmParams(Z4, 0.5, "hamming")
    k = CmmParams(Z4, 0.5, "kendall")
    assert log_prob(PI, h, exact_log_psi(0.5, Z4, "hamming")) == pytest.approx(-3.344, abs=1e-3)
    assert log_prob(PI, k, exact_log_psi(0.5, Z4, "kendall")) == pytest.approx(-3.593, abs=1e-3)


@pytest.mark.parametrize("kind", ["hamming", "kendall"])
@pytest.mark.parametrize("labels", [(1, 1, 2, 2), (2, 1, 3, 1, 2), (1, 2, 3, 4), (1, 1, 1, 2, 3, 3)])
@pytest.mark.parametrize("theta", [0.3, 1.7])
def test_log_psi_matches_oracle(kind, labels, theta):
    z = Allocation(labels)
    assert exact_log_psi(theta, z, kind) == pytest.approx(math.log(oracles.psi(theta, labels, kind)),
                                                          rel=1e-12)


def test_trivial_psi_values():
    for z in [Z4, Allocation((1, 2, 3)), Allocation((1, 1, 1, 1, 1))]:
        for kind in ("hamming", "kendall"):
            assert exact_log_psi(0.0, z, kind) == pytest.approx(math.lgamma(z.n + 1))
    assert exact_log_psi(3.0, Allocation((1,) * 6), "kendall") == pytest.approx(math.log(720))


@pytest.mark.parametrize("kind", ["hamming", "kendall"])
@pytest.mark.parametrize("sizes", [(2, 2, 2), (1, 4, 1), (3, 3), (1, 2, 3), (1,) * 6, (2, 1, 2)])
def test_normalisation_and_ct_invariance(kind, sizes):
    ct = ClusteringTable(sizes)
    zs = [Allocation(a) for a in oracles.allocations(sizes)]
    rng = np.random.default_rng(0)
    picks = [zs[i] for i in rng.choice(len(zs), size=min(6, len(zs)), replace=False)]
    for theta in (0.25, 1.0):
        ref = exact_log_psi(theta, ct.canonical_allocation(), kind)
        for z in picks:
            lp = exact_log_psi(theta, z, kind)
            assert abs(lp - ref) < 1e-12
            params = CmmParams(z, theta, kind)
            total = sum(math.exp(log_prob(Permutation(tuple(o + 1)), params, lp))
                        for o in all_orders0(ct.n))
            assert total == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("kind", ["hamming", "kendall"])
def test_log_psi_decreasing_in_theta(kind):
    z = Allocation((1, 2, 2, 3, 3))
    vals = [exact_log_psi(t, z, kind) for t in np.linspace(0, 4, 17)]
    assert np.all(np.diff(vals) < 0)


def test_enumeration_cap():
    with pytest.raises(TooLargeForEnumeration):
        exact_log_psi(1.0, Allocation((1,) * 10), "kendall")
    with pytest.raises(TooLargeForEnumeration):
        rc_probabilities_exact(CmmParams(Allocation((1, 2) * 5), 1.0))
    with pytest.raises(TooLargeForEnumeration):
        exact_log_psi(1.0, Allocation((1, 2, 3)), "kendall", cap=2)


def test_theta_zero_uniform():
    params = CmmParams(Z4, 0.0, "kendall")
    assert log_prob(PI, params, exact_log_psi(0.0, Z4, "kendall")) == pytest.approx(-math.log(24))
    with pytest.raises(ValueError):
        CmmParams(Z4, -1.0)


def test_log_likelihood_sums_rows():
    data = RankingDataset.from_rows([PI, Permutation((1, 2, 3, 4)), Permutation((4, 3, 2, 1))])
    params = CmmParams(Z4, 0.5, "hamming")
    lp = exact_log_psi(0.5, Z4, "hamming")
    assert log_likelihood(data, params, lp) == pytest.approx(
        sum(log_prob(r, params, lp) for r in data.rows))


def test_distance_distribution_matches_counts():
    z = Allocation((1, 1, 2, 2, 3, 3))
    counts = np.bincount([oracles.kendall(o, z.labels) for o in oracles.orders(6)])
    np.testing.assert_allclose(exact_distance_distribution(z, "kendall"), counts / 720)
    assert enumerated_distances(z, "kendall").max() == len(counts) - 1


def test_rc_uniform_limit():
    z = Allocation((1, 1, 2, 2, 2, 3))
    rc = rc_probabilities_exact(CmmParams(z, 0.0, "kendall"))
    np.testing.assert_allclose(rc, np.tile([2 / 6, 3 / 6, 1 / 6], (6, 1)))


@pytest.mark.parametrize("kind", ["hamming", "kendall"])
def test_rc_rank_exchangeability(kind):
    z = Allocation((1, 1, 2, 2, 3, 3))
    rc = rc_probabilities_exact(CmmParams(z, 1.0, kind))
    np.testing.assert_allclose(rc.sum(axis=1), 1.0)
    for a, b in [(0, 1), (2, 3), (4, 5)]:
        np.testing.assert_allclose(rc[a], rc[b], atol=1e-12)
    assert not np.allclose(rc[0], rc[2])
    # item level: items sharing a label share their rank distribution
    P = rank_item_probabilities_exact(CmmParams(z, 1.0, kind))
    for a, b in [(0, 1), (2, 3), (4, 5)]:
        np.testing.assert_allclose(P[:, a], P[:, b], atol=1e-12)


@pytest.mark.parametrize("kind", ["hamming", "kendall"])
def test_rc_sharpens_with_theta(kind):
    z = Allocation((1, 1, 2, 2, 3, 3))
    lo = rc_probabilities_exact(CmmParams(z, 0.5, kind))
    hi = rc_probabilities_exact(CmmParams(z, 1.0, kind))
    assert hi[0, 0] > lo[0, 0]


def test_rc_monte_carlo():
    z = Allocation((1, 1, 2, 2, 3, 3))
    params = CmmParams(z, 1.0, "kendall")
    n_samples = 20_000
    mc = rc_probabilities_mc(params, n_samples, rng=4)
    exact = rc_probabilities_exact(params)
    se = np.sqrt(exact * (1 - exact) / n_samples)
    assert np.all(np.abs(mc - exact) <= 3 * se + 1e-12)
    np.testing.assert_allclose(mc.sum(axis=1), 1.0)

    uni = rc_probabilities_mc(CmmParams(z, 0.0, "kendall"), n_samples, rng=5)
    se0 = np.sqrt((1 / 3) * (2 / 3) / n_samples)
    assert np.all(np.abs(uni - 1 / 3) <= 3 * se0)

    one = rc_probabilities_mc(CmmParams(Allocation((1,) * 4), 2.0), 100, rng=6)
    np.testing.assert_array_equal(one, np.ones((4, 1)))
