import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from clustered_mallows import _kernels as K
from clustered_mallows.distances import (
    DistanceKind,
    DistanceStats,
    d_oc,
    d_oc_hamming,
    d_oc_kendall,
    row_distances,
    sum_distance,
)
from clustered_mallows.errors import DimensionMismatch
from clustered_mallows.rank_core import Allocation, Permutation, RankingDataset


@st.composite
def cases(draw, max_n=9):
    n = draw(st.integers(1, max_n))
    order = draw(st.permutations(list(range(1, n + 1))))
    raw = draw(st.lists(st.integers(1, n), min_size=n, max_size=n))
    uniq = sorted(set(raw))
    z = tuple(uniq.index(x) + 1 for x in raw)
    return tuple(order), z


def test_worked_example():
    pi = Permutation((2, 1, 3, 4, 5))
    z = Allocation((2, 1, 1, 2, 3))
    assert d_oc_hamming(pi, z) == 2
    assert d_oc_kendall(pi, z) == 3


def test_table_one_example():
    pi = Permutation((1, 3, 2, 4))
    z = Allocation((1, 1, 2, 2))
    assert d_oc(pi, z, "hamming") == 2
    assert d_oc(pi, z, DistanceKind.KENDALL) == 3


@given(cases())
def test_matches_oracle(case):
    order, z = case
    pi, al = Permutation(order), Allocation(z)
    assert d_oc_hamming(pi, al) == oracles.hamming(order, z)
    assert d_oc_kendall(pi, al) == oracles.kendall(order, z)


@given(cases())
def test_zero_iff_consistent(case):
    # distance zero exactly when every block of pi holds the matching cluster
    order, z = case
    pi, al = Permutation(order), Allocation(z)
    consistent = [z[i - 1] for i in order] == sorted(z)
    assert (d_oc_hamming(pi, al) == 0) == consistent
    assert (d_oc_kendall(pi, al) == 0) == consistent


def test_single_cluster_distance_zero():
    z = Allocation((1,) * 5)
    for order in itertools.permutations(range(1, 6)):
        assert d_oc_hamming(Permutation(order), z) == 0
        assert d_oc_kendall(Permutation(order), z) == 0


def test_singletons_reduce_to_classic_distances():
    # with all-singleton clusters: Kendall counts discordant pairs,
    # Hamming counts misplaced items relative to the identity consensus
    z = Allocation((1, 2, 3, 4, 5))
    for order in itertools.permutations(range(1, 6)):
        inv = sum(order[a] > order[b] for a in range(5) for b in range(a + 1, 5))
        mis = sum(order[p] != p + 1 for p in range(5))
        assert d_oc_kendall(Permutation(order), z) == inv
        assert d_oc_hamming(Permutation(order), z) == mis


def test_kendall_does_not_dominate_hamming():
    # the Kendall variant can be smaller than the Hamming one
    pi, z = Permutation((2, 1)), Allocation((1, 2))
    assert d_oc_kendall(pi, z) == 1
    assert d_oc_hamming(pi, z) == 2


@given(cases(max_n=8))
def test_hamming_at_most_twice_kendall(case):
    order, z = case
    pi, al = Permutation(order), Allocation(z)
    assert d_oc_hamming(pi, al) <= 2 * d_oc_kendall(pi, al)


def test_invariant_under_relabelling_items():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = rng.integers(2, 9)
        z = Allocation(tuple(int(x) for x in rng.permutation([1, 1] + list(range(1, n - 1)))))
        pi = Permutation(tuple(int(x) + 1 for x in rng.permutation(n)))
        sigma = rng.permutation(n)  # rename item i+1 to sigma[i]+1
        pi2 = Permutation(tuple(int(sigma[i - 1]) + 1 for i in pi.order))
        z2 = [0] * n
        for i in range(n):
            z2[sigma[i]] = z.labels[i]
        for kind in DistanceKind:
            assert d_oc(pi, z, kind) == d_oc(pi2, Allocation(tuple(z2)), kind)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        d_oc(Permutation((1, 2, 3)), Allocation((1, 2)), "hamming")
    with pytest.raises(ValueError):
        DistanceKind.parse("spearman")


@settings(max_examples=30)
@given(cases(max_n=7), st.integers(0, 2 ** 31))
def test_swap_delta_matches_recomputation(case, seed):
    order, z = case
    n = len(order)
    if n < 2:
        return
    al = Allocation(z)
    o0 = np.asarray(order) - 1
    labels, blk = al.labels0, np.sort(al.labels0)
    rng = np.random.default_rng(seed)
    a, b = rng.choice(n, 2, replace=False)
    swapped = o0.copy()
    swapped[[a, b]] = swapped[[b, a]]
    for kind in (K.HAMMING, K.KENDALL):
        before = K.distance(o0, labels, blk, al.L, kind)
        after = K.distance(swapped, labels, blk, al.L, kind)
        assert K.swap_delta(o0, labels, blk, kind, a, b) == after - before


@pytest.mark.parametrize("kind", list(DistanceKind))
def test_sufficient_statistics_give_total(kind):
    rng = np.random.default_rng(11)
    n, q = 7, 40
    data = RankingDataset.from_orders0(np.array([rng.permutation(n) for _ in range(q)]))
    for sizes in [(2, 3, 2), (1, 1, 3, 1, 1), (7,), (1,) * 7]:
        base = np.repeat(np.arange(len(sizes)), sizes)
        stats = DistanceStats(data.orders0, base, kind)
        for _ in range(10):
            z = Allocation.from_labels0(rng.permutation(base))
            assert stats.total(z.labels0) == sum_distance(data, z, kind)
            assert K.objective(stats.table, z.labels0, kind.code, q * n) == stats.total(z.labels0)


@pytest.mark.parametrize("kind", list(DistanceKind))
def test_label_swap_delta(kind):
    rng = np.random.default_rng(5)
    n, q = 8, 25
    data = RankingDataset.from_orders0(np.array([rng.permutation(n) for _ in range(q)]))
    base = np.repeat(np.arange(3), (3, 2, 3))
    stats = DistanceStats(data.orders0, base, kind)
    labels = rng.permutation(base)
    for a, b in itertools.combinations(range(n), 2):
        swapped = labels.copy()
        swapped[[a, b]] = swapped[[b, a]]
        expect = stats.total(swapped) - stats.total(labels)
        assert K.label_swap_delta(stats.table, labels, kind.code, a, b) == expect


def test_row_distances_and_sum():
    z = Allocation((1, 1, 2, 2))
    orders0 = np.array([[0, 2, 1, 3], [0, 1, 2, 3]])
    np.testing.assert_array_equal(row_distances(orders0, z, DistanceKind.KENDALL), [3, 0])
    data = RankingDataset.from_orders0(orders0)
    assert sum_distance(data, z, "hamming") == 2
