"""Permutations, allocations, clustering tables and ranking datasets.

Conventions
-----------
Items, ranks and cluster labels are 1-based in every public object, as in the
usual ranking notation: ``Permutation((3, 1, 2)).order[0] == 3`` means item 3
is ranked first.  Numerical kernels work on 0-based ``numpy`` arrays obtained
from the ``*0`` properties (``orders0``, ``labels0``, ``blocks0``), where a
missing slot is ``-1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateLabel,
    EmptyInput,
    OutOfRangeLabel,
    SizeMismatch,
)

MISSING = None


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Permutation:
    """A strict ordering of the items ``1..n``.

    ``order[i]`` is the item ranked ``i + 1``-th (the ordering view, pi);
    ``ranks[k]`` is the rank of item ``k + 1`` (the ranks view, pi^-1).
    """

    order: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(int(x) for x in self.order))
        _check_bijection(self.order)

    @property
    def n(self) -> int:
        return len(self.order)

    @property
    def ranks(self) -> tuple[int, ...]:
        r = [0] * self.n
        for pos, item in enumerate(self.order, start=1):
            r[item - 1] = pos
        return tuple(r)

    def item_at(self, rank: int) -> int:
        return self.order[rank - 1]

    def rank_of(self, item: int) -> int:
        return self.order.index(item) + 1

    @property
    def order0(self) -> np.ndarray:
        return np.asarray(self.order, dtype=np.int64) - 1

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def from_ranks(cls, ranks: Sequence[int]) -> "Permutation":
        return inverse(cls(tuple(ranks)))

    def __len__(self):
        return self.n

    def __iter__(self):
        return iter(self.order)


def _check_bijection(seq: Sequence[int]) -> None:
    n = len(seq)
    if n == 0:
        raise EmptyInput("a permutation needs at least one item")
    seen = set()
    for x in seq:
        if not 1 <= x <= n:
            raise OutOfRangeLabel(f"label {x} outside 1..{n}")
        if x in seen:
            raise DuplicateLabel(f"label {x} repeated")
        seen.add(x)


def validate_permutation(seq: Iterable[int]) -> Permutation:
    """Return ``seq`` as a :class:`Permutation` or raise a :class:`DataError`."""
    return Permutation(tuple(seq))


def inverse(pi: Permutation) -> Permutation:
    return Permutation(pi.ranks)


@dataclass(frozen=True)
class PartialRanking:
    """Ordering with unobserved positions; ``None`` marks a missing slot.

    A top-k observation of ``n`` items is ``slots = (a, b, ..., None, None)``.
    Observed items may sit in any positions, not only at the top.
    """

    slots: tuple[int | None, ...]

    def __post_init__(self):
        slots = tuple(None if s is None else int(s) for s in self.slots)
        object.__setattr__(self, "slots", slots)
        n = len(slots)
        if n == 0:
            raise EmptyInput("empty ranking")
        seen = set()
        for s in slots:
            if s is None:
                continue
            if not 1 <= s <= n:
                raise OutOfRangeLabel(f"label {s} outside 1..{n}")
            if s in seen:
                raise DuplicateLabel(f"label {s} repeated")
            seen.add(s)
        if not seen:
            raise EmptyInput("partial ranking with no observed slot")

    @property
    def n(self) -> int:
        return len(self.slots)

    @property
    def observed_items(self) -> frozenset[int]:
        return frozenset(s for s in self.slots if s is not None)

    @property
    def missing_positions(self) -> tuple[int, ...]:
        return tuple(i + 1 for i, s in enumerate(self.slots) if s is None)

    @property
    def missing_items(self) -> tuple[int, ...]:
        obs = self.observed_items
        return tuple(i for i in range(1, self.n + 1) if i not in obs)

    @property
    def is_complete(self) -> bool:
        return None not in self.slots

    def to_permutation(self) -> Permutation:
        return Permutation(self.slots)  # raises if incomplete

    def is_consistent_with(self, pi: Permutation) -> bool:
        return pi.n == self.n and all(
            s is None or s == p for s, p in zip(self.slots, pi.order)
        )


@dataclass(frozen=True)
class Allocation:
    """Item -> ordered-cluster label map ``z``; label 1 is the most preferred.

    Every label in ``1..L`` must be used.
    """

    labels: tuple[int, ...]

    def __post_init__(self):
        labels = tuple(int(x) for x in self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise EmptyInput("empty allocation")
        L = max(labels)
        if min(labels) < 1:
            raise OutOfRangeLabel("cluster labels start at 1")
        missing = set(range(1, L + 1)) - set(labels)
        if missing:
            raise OutOfRangeLabel(f"empty clusters {sorted(missing)}")

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def L(self) -> int:
        return max(self.labels)

    @property
    def labels0(self) -> np.ndarray:
        return np.asarray(self.labels, dtype=np.int64) - 1

    @property
    def ct(self) -> "ClusteringTable":
        return clustering_table(self)

    @classmethod
    def from_blocks(cls, blocks: Sequence[Iterable[int]]) -> "Allocation":
        """Inverse of :func:`brack`: ``[{2, 3}, {1, 4}, {5}] -> (2, 1, 1, 2, 3)``."""
        blocks = [list(b) for b in blocks]
        n = sum(len(b) for b in blocks)
        labels = [0] * n
        for l, b in enumerate(blocks, start=1):
            for item in b:
                if not 1 <= item <= n:
                    raise OutOfRangeLabel(f"item {item} outside 1..{n}")
                if labels[item - 1]:
                    raise DuplicateLabel(f"item {item} in two clusters")
                labels[item - 1] = l
        return cls(tuple(labels))

    @classmethod
    def from_labels0(cls, labels0) -> "Allocation":
        return cls(tuple(int(x) + 1 for x in labels0))

    def __len__(self):
        return self.n


@dataclass(frozen=True)
class ClusteringTable:
    """Cluster sizes ``(n_1, ..., n_L)``."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if not sizes:
            raise EmptyInput("a clustering table needs at least one cluster")
        if min(sizes) < 1:
            raise SizeMismatch(f"cluster sizes must be positive, got {sizes}")

    @property
    def n(self) -> int:
        return sum(self.sizes)

    @property
    def L(self) -> int:
        return len(self.sizes)

    @property
    def blocks0(self) -> np.ndarray:
        """Block index of each rank position; equals the sorted labels minus one."""
        return np.repeat(np.arange(self.L, dtype=np.int64), self.sizes)

    def canonical_allocation(self) -> Allocation:
        """The allocation putting items ``1..n_1`` in cluster 1, and so on."""
        return Allocation(tuple(int(b) + 1 for b in self.blocks0))

    @classmethod
    def parse(cls, text: str) -> "ClusteringTable":
        try:
            return cls(tuple(int(t) for t in text.replace(" ", "").split(",") if t))
        except ValueError as exc:
            raise SizeMismatch(f"cannot parse clustering table {text!r}") from exc

    def __str__(self):
        return "(" + ",".join(map(str, self.sizes)) + ")"

    def __iter__(self):
        return iter(self.sizes)

    def __len__(self):
        return self.L


def clustering_table(z: Allocation) -> ClusteringTable:
    counts = np.bincount(z.labels0, minlength=z.L)
    return ClusteringTable(tuple(int(c) for c in counts))


def brack(z: Allocation) -> tuple[frozenset[int], ...]:
    """Ordered clusters of ``z``, by increasing label."""
    blocks: list[set[int]] = [set() for _ in range(z.L)]
    for item, l in enumerate(z.labels, start=1):
        blocks[l - 1].add(item)
    return tuple(frozenset(b) for b in blocks)


def split_by_ct(pi: Permutation, ct: ClusteringTable) -> tuple[frozenset[int], ...]:
    """Cut the ordering ``pi`` into consecutive blocks of sizes ``ct``."""
    if ct.n != pi.n:
        raise SizeMismatch(f"table sums to {ct.n} but the ranking has {pi.n} items")
    out, start = [], 0
    for size in ct.sizes:
        out.append(frozenset(pi.order[start:start + size]))
        start += size
    return tuple(out)


def sorted_labels(z: Allocation) -> tuple[int, ...]:
    return tuple(sorted(z.labels))


# datasets ---------------------------------------------------------------------

Row = Permutation | PartialRanking


@dataclass(frozen=True, eq=False)
class RankingDataset:
    """``q`` rankings of the same ``n`` items.

    ``orders`` is a ``(q, n)`` integer array in the ordering orientation
    (row ``j`` lists items by rank position); ``0`` marks a missing slot.
    ``item_names`` maps label ``k`` to ``item_names[k - 1]`` when given.
    """

    orders: np.ndarray
    item_names: tuple[str, ...] | None = None
    _complete: bool = field(init=False, repr=False)

    def __post_init__(self):
        a = np.array(self.orders, dtype=np.int64, copy=True)
        if a.ndim != 2:
            raise DimensionMismatch("orders must be a (q, n) array")
        q, n = a.shape
        if n == 0:
            raise EmptyInput("rankings need at least one item")
        for row in a:
            obs = row[row != 0]
            if obs.size == 0:
                raise EmptyInput("a row has no observed slot")
            if obs.min() < 1 or obs.max() > n:
                raise OutOfRangeLabel(f"labels must lie in 1..{n}")
            if np.unique(obs).size != obs.size:
                raise DuplicateLabel(f"repeated label in row {row.tolist()}")
        object.__setattr__(self, "orders", _frozen(a))
        object.__setattr__(self, "_complete", bool((a != 0).all()))
        if self.item_names is not None:
            names = tuple(str(s) for s in self.item_names)
            if len(names) != n:
                raise DimensionMismatch(f"{len(names)} item names for {n} items")
            object.__setattr__(self, "item_names", names)

    @classmethod
    def from_rows(cls, rows: Iterable[Row | Sequence[int | None]],
                  item_names: Sequence[str] | None = None) -> "RankingDataset":
        arr = []
        for r in rows:
            if isinstance(r, Permutation):
                arr.append(list(r.order))
            elif isinstance(r, PartialRanking):
                arr.append([0 if s is None else s for s in r.slots])
            else:
                arr.append([0 if s is None else int(s) for s in r])
        if not arr:
            raise EmptyInput("no rows; use RankingDataset.empty(n) for a dataset without rows")
        widths = {len(r) for r in arr}
        if len(widths) != 1:
            raise DimensionMismatch(f"rows of different widths {sorted(widths)}")
        return cls(np.asarray(arr), item_names=None if item_names is None else tuple(item_names))

    @classmethod
    def from_orders0(cls, orders0: np.ndarray, item_names=None) -> "RankingDataset":
        o = np.asarray(orders0, dtype=np.int64)
        return cls(np.where(o < 0, 0, o + 1), item_names=item_names)

    @classmethod
    def empty(cls, n: int) -> "RankingDataset":
        """A dataset with no rows (prior-only posterior runs)."""
        return cls(np.zeros((0, n), dtype=np.int64))

    @property
    def q(self) -> int:
        return self.orders.shape[0]

    @property
    def n(self) -> int:
        return self.orders.shape[1]

    @property
    def is_complete(self) -> bool:
        return self._complete

    @property
    def orders0(self) -> np.ndarray:
        return self.orders - 1

    @property
    def observed_mask(self) -> np.ndarray:
        return self.orders != 0

    @property
    def rows(self) -> list[Row]:
        out: list[Row] = []
        for r in self.orders:
            if (r != 0).all():
                out.append(Permutation(tuple(r)))
            else:
                out.append(PartialRanking(tuple(None if x == 0 else int(x) for x in r)))
        return out

    def ranks0(self) -> np.ndarray:
        """``(q, n)`` array of 0-based rank positions per item, ``-1`` if unobserved."""
        r = np.full((self.q, self.n), -1, dtype=np.int64)
        rows, pos = np.nonzero(self.orders)
        r[rows, self.orders[rows, pos] - 1] = pos
        return r

    def name(self, item: int) -> str:
        return self.item_names[item - 1] if self.item_names else str(item)

    def __len__(self):
        return self.q

    def __getitem__(self, idx):
        sub = self.orders[idx]
        if sub.ndim == 1:
            return self.rows[idx]
        return RankingDataset(sub, self.item_names)


def require_complete(data: RankingDataset, what: str = "this operation") -> None:
    from .errors import PartialDataNotAllowed

    if not data.is_complete:
        raise PartialDataNotAllowed(
            f"{what} needs complete rankings; augment partial rows first"
        )


# pairwise preferences -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PreferenceMatrix:
    """Empirical proportions ``p[i, k]`` of rows ranking item ``i+1`` above ``k+1``.

    Pairs never observed together get ``p = 0.5`` and ``counts = 0``; the
    diagonal is ``nan``.  ``mean_rank`` holds each item's average observed
    rank (``nan`` when the item is never observed).
    """

    p: np.ndarray
    counts: np.ndarray
    wins: np.ndarray
    mean_rank: np.ndarray
    q: int

    @property
    def n(self) -> int:
        return self.p.shape[0]

    @property
    def no_comparisons(self) -> list[tuple[int, int]]:
        """1-based item pairs ``(i, k)``, ``i < k``, never compared."""
        i, k = np.nonzero(np.triu(self.counts == 0, 1))
        return [(int(a) + 1, int(b) + 1) for a, b in zip(i, k)]


def preference_matrix(data: RankingDataset) -> PreferenceMatrix:
    """Pairwise preference proportions over rows where both items are observed."""
    r = data.ranks0()
    obs = r >= 0
    both = obs[:, :, None] & obs[:, None, :]
    before = both & (r[:, :, None] < r[:, None, :])
    wins = before.sum(axis=0)
    counts = both.sum(axis=0)
    np.fill_diagonal(counts, 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(counts > 0, wins / np.maximum(counts, 1), 0.5)
    p = p.astype(float)
    np.fill_diagonal(p, np.nan)
    with np.errstate(invalid="ignore"):
        mean_rank = np.where(obs.any(axis=0),
                             (np.where(obs, r + 1, 0)).sum(axis=0) / np.maximum(obs.sum(axis=0), 1),
                             np.nan)
    return PreferenceMatrix(_frozen(p), _frozen(counts), _frozen(wins),
                            _frozen(mean_rank.astype(float)), data.q)
