"""Ordered-cluster distances between a ranking and a clustered consensus.

Both distances compare the ordering ``pi`` cut into blocks of the consensus
cluster sizes with the ordered clusters of the allocation ``z``:

* Hamming: number of rank positions whose item carries a different cluster
  label than the one expected at that position.
* Kendall: over every pair of items placed in two different blocks, count
  those where the later item has a cluster label smaller than *or equal to*
  the earlier one.

Both are integers, and spreads fitted under one are not comparable with
spreads fitted under the other.
"""
from __future__ import annotations

import enum

import numpy as np

from . import _kernels as K
from .errors import DimensionMismatch
from .rank_core import (
    Allocation,
    Permutation,
    RankingDataset,
    clustering_table,
    require_complete,
)


class DistanceKind(enum.Enum):
    HAMMING = "hamming"
    KENDALL = "kendall"

    @property
    def code(self) -> int:
        return K.HAMMING if self is DistanceKind.HAMMING else K.KENDALL

    @classmethod
    def parse(cls, value: "str | DistanceKind") -> "DistanceKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown distance {value!r}; use 'hamming' or 'kendall'") from None


def _arrays(z: Allocation):
    return z.labels0, clustering_table(z).blocks0


def _check(pi: Permutation, z: Allocation):
    if pi.n != z.n:
        raise DimensionMismatch(f"ranking has {pi.n} items, allocation {z.n}")


def d_oc_hamming(pi: Permutation, z: Allocation) -> int:
    _check(pi, z)
    labels, blk = _arrays(z)
    return int(K.hamming(pi.order0, labels, blk))


def d_oc_kendall(pi: Permutation, z: Allocation) -> int:
    _check(pi, z)
    labels, blk = _arrays(z)
    return int(K.kendall(pi.order0, labels, blk, z.L))


def d_oc(pi: Permutation, z: Allocation, kind: DistanceKind | str) -> int:
    kind = DistanceKind.parse(kind)
    return d_oc_hamming(pi, z) if kind is DistanceKind.HAMMING else d_oc_kendall(pi, z)


def row_distances(orders0: np.ndarray, z: Allocation, kind: DistanceKind) -> np.ndarray:
    """Distances of each row of a complete 0-based ``(q, n)`` order array."""
    labels, blk = _arrays(z)
    orders0 = np.ascontiguousarray(orders0, dtype=np.int64)
    if orders0.shape[1] != z.n:
        raise DimensionMismatch(f"rankings have {orders0.shape[1]} items, allocation {z.n}")
    return K.distances(orders0, labels, blk, z.L, kind.code)


def sum_distance(data: RankingDataset, z: Allocation, kind: DistanceKind | str) -> int:
    """Total distance of the rows of ``data`` to ``z``."""
    require_complete(data, "sum_distance")
    kind = DistanceKind.parse(kind)
    if data.q == 0:
        return 0
    return int(row_distances(data.orders0, z, kind).sum(dtype=np.int64))


# Sufficient statistics ------------------------------------------------------
#
# For a fixed clustering table, the total distance of a dataset to any
# allocation is a linear function of small count tables, which makes
# allocation searches independent of q.

class DistanceStats:
    """Sufficient statistics of complete rankings for a given table.

    Hamming uses ``B[u, l]``, the number of rows placing item ``u`` inside
    block ``l``; Kendall uses ``W[u, v]``, the number of rows placing ``u``
    in an earlier block than ``v``.
    """

    def __init__(self, orders0: np.ndarray, blocks0: np.ndarray, kind: DistanceKind):
        self.kind = kind
        self.blocks0 = blocks0
        self.L = int(blocks0.max()) + 1
        self.update(orders0)

    def update(self, orders0: np.ndarray) -> None:
        q, n = orders0.shape
        self.q, self.n = q, n
        # block of each item in each row
        item_block = np.empty((q, n), dtype=np.int64)
        rows = np.repeat(np.arange(q), n)
        item_block[rows, orders0.ravel()] = np.tile(self.blocks0, q)
        if self.kind is DistanceKind.HAMMING:
            B = np.zeros((n, self.L), dtype=np.int64)
            np.add.at(B, (np.tile(np.arange(n), q), item_block.ravel()), 1)
            self.B = B
        else:
            onehot = np.zeros((q, n, self.L), dtype=np.int64)
            onehot[np.repeat(np.arange(q), n), np.tile(np.arange(n), q), item_block.ravel()] = 1
            # below[r, v, l] = 1 if item v sits in a block strictly before l
            below = np.cumsum(onehot, axis=2) - onehot
            self.W = np.einsum("rvl,rul->uv", onehot, below)

    @property
    def table(self) -> np.ndarray:
        return self.B if self.kind is DistanceKind.HAMMING else self.W

    def total(self, labels0: np.ndarray) -> int:
        if self.kind is DistanceKind.HAMMING:
            return int(self.q * self.n - self.B[np.arange(self.n), labels0].sum())
        le = labels0[None, :] <= labels0[:, None]  # z(v) <= z(u)
        np.fill_diagonal(le, False)
        return int(self.W[le].sum())
