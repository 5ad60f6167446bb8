"""Maximum-likelihood fitting of a clustered Mallows model with a fixed table.

For any positive spread the likelihood is maximised over allocations by the
``z`` minimising the total distance to the data, which is found by simulated
annealing.  Given ``z``, the spread solves the moment equation
``E_theta[d] = mean observed distance``, iterated with Monte Carlo estimates
of the expectation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .distances import DistanceKind, DistanceStats, sum_distance
from .errors import NonConvergence, ZeroMeanDistance
from .model import CmmParams
from .rank_core import (
    Allocation,
    ClusteringTable,
    RankingDataset,
    preference_matrix,
    require_complete,
)
from .sampler import default_chain_len, draw_orders


@dataclass(frozen=True)
class AnnealingSchedule:
    """Increasing powers ``alpha_0 < ... < alpha_T`` applied to the target.

    Build a geometric schedule ``alpha_t = beta0 * beta**t`` with
    :meth:`geometric`.  ``patience`` stops the search after that many
    consecutive levels without an accepted move; ``moves_per_level`` defaults
    to the number of items.
    """

    powers: tuple[float, ...]
    patience: int = 20
    moves_per_level: int | None = None

    def __post_init__(self):
        p = tuple(float(a) for a in self.powers)
        object.__setattr__(self, "powers", p)
        if not p or min(p) <= 0:
            raise ValueError("annealing powers must be positive")
        if any(b <= a for a, b in zip(p, p[1:])):
            raise ValueError("annealing powers must be strictly increasing")

    @classmethod
    def geometric(cls, beta0: float = 0.05, beta: float = 1.1, T: int = 150,
                  **kw) -> "AnnealingSchedule":
        if beta <= 1:
            raise ValueError("beta must exceed 1")
        return cls(tuple(beta0 * beta ** t for t in range(T + 1)), **kw)


def _default_schedule() -> AnnealingSchedule:
    return AnnealingSchedule.geometric()


def switch(z: Allocation, m: int = 2, rng=None) -> Allocation:
    """Rotate the labels of ``m`` distinct random items (a swap when ``m=2``)."""
    rng = np.random.default_rng(rng)
    if not 2 <= m <= z.n:
        raise ValueError(f"m must lie in 2..{z.n}")
    idx = rng.choice(z.n, size=m, replace=False)
    labels = np.array(z.labels)
    labels[idx] = np.roll(labels[idx], -1)
    return Allocation(tuple(int(x) for x in labels))


def mean_rank_allocation(data: RankingDataset, ct: ClusteringTable) -> Allocation:
    """Fill the clusters of ``ct`` with items in order of their average rank."""
    mr = preference_matrix(data).mean_rank
    mr = np.where(np.isnan(mr), np.inf, mr)
    order = np.argsort(mr, kind="stable")
    labels = np.empty(data.n, dtype=np.int64)
    labels[order] = ct.blocks0
    return Allocation.from_labels0(labels)


def _check_ct(data: RankingDataset, ct: ClusteringTable) -> None:
    from .errors import SizeMismatch

    if ct.n != data.n:
        raise SizeMismatch(f"table {ct} sums to {ct.n} but the data has {data.n} items")


def anneal_z(data: RankingDataset, ct: ClusteringTable, kind: DistanceKind | str = "kendall",
             schedule: AnnealingSchedule | None = None, m: int = 2, rng=None,
             start: Allocation | None = None, polish: bool = True) -> Allocation:
    """Allocation with table ``ct`` minimising the total distance to ``data``.

    Starts from the mean-rank allocation unless ``start`` is given, keeps the
    best state visited and, with ``polish``, finishes with pairwise label
    swaps until no swap improves the fit.
    """
    require_complete(data, "anneal_z")
    _check_ct(data, ct)
    kind = DistanceKind.parse(kind)
    schedule = schedule or _default_schedule()
    rng = np.random.default_rng(rng)
    z0 = start if start is not None else mean_rank_allocation(data, ct)
    if z0.ct != ct:
        raise ValueError(f"start allocation has table {z0.ct}, expected {ct}")
    labels = z0.labels0.copy()
    n = data.n
    if ct.L == 1 or n < 2 or data.q == 0:
        return Allocation.from_labels0(labels)
    stats = DistanceStats(data.orders0, ct.blocks0, kind)
    per = schedule.moves_per_level or n
    alphas = np.asarray(schedule.powers)
    P = per * alphas.shape[0]
    m = min(m, n)
    picks = np.argsort(rng.random((P, n)), axis=1)[:, :m].astype(np.int64)
    us = rng.random(P)
    K.anneal(stats.table, kind.code, stats.q * n, labels, alphas, picks, us, schedule.patience)
    if polish:
        K.polish(stats.table, kind.code, stats.q * n, labels)
    return Allocation.from_labels0(labels)


def fit_theta(data: RankingDataset, z: Allocation, kind: DistanceKind | str = "kendall",
              eps: float = 0.01, N: int | None = None, rng=None, theta0: float = 1.0,
              max_iter: int = 200) -> float:
    """Moment estimate of the spread given the allocation ``z``.

    Each iteration draws ``ceil(1/eps)`` rankings at the current value and
    rescales it by the ratio of simulated to observed mean distance, with
    the factor clipped to ``[0.5, 2]`` and raised to a power that halves
    whenever the direction of the update reverses.  Stops when successive
    values differ by less than ``eps``.

    Raises
    ------
    ZeroMeanDistance
        Every row agrees with ``z``; the estimate is unbounded.
    NonConvergence
        ``max_iter`` iterations without meeting the tolerance.
    """
    require_complete(data, "fit_theta")
    if eps <= 0:
        raise ValueError("eps must be positive")
    kind = DistanceKind.parse(kind)
    rng = np.random.default_rng(rng)
    if data.q == 0:
        raise ZeroMeanDistance("no rows to fit")
    d_bar = sum_distance(data, z, kind) / data.q
    if d_bar == 0:
        raise ZeroMeanDistance("all rankings agree with the allocation; theta diverges")
    N = default_chain_len(z.n) if N is None else N
    draws = math.ceil(1 / eps)
    theta = float(theta0)
    gamma, last = 1.0, 0.0
    for _ in range(max_iter):
        _, dist = draw_orders(CmmParams(z, theta, kind), draws, N, rng)
        step = math.log(min(2.0, max(0.5, dist.mean() / d_bar)))
        # the plain ratio map overshoots where E[d] is steep in theta;
        # halve the step exponent each time the direction reverses
        if step * last < 0:
            gamma *= 0.5
        last = step
        new = theta * math.exp(gamma * step)
        if abs(new - theta) < eps:
            return new
        theta = new
    raise NonConvergence(f"theta did not settle within {max_iter} iterations", theta)


@dataclass(frozen=True)
class MleConfig:
    schedule: AnnealingSchedule = field(default_factory=_default_schedule)
    m: int = 2
    eps: float = 0.01
    N: int | None = None
    theta0: float = 1.0
    max_iter: int = 200


def opt_cmm(data: RankingDataset, ct: ClusteringTable, kind: DistanceKind | str = "kendall",
            config: MleConfig | None = None, rng=None) -> tuple[Allocation, float]:
    """Annealed allocation followed by the moment estimate of the spread."""
    config = config or MleConfig()
    rng = np.random.default_rng(rng)
    z = anneal_z(data, ct, kind, config.schedule, config.m, rng)
    theta = fit_theta(data, z, kind, config.eps, config.N, rng, config.theta0, config.max_iter)
    return z, theta


def bootstrap_refit(data: RankingDataset, ct: ClusteringTable, kind: DistanceKind | str = "kendall",
                    B: int = 100, config: MleConfig | None = None, rng=None):
    """Refit on ``B`` row resamples; returns the list of ``(z, theta)`` pairs.

    Resamples where every row agrees with the fitted allocation give
    ``theta = inf``.
    """
    rng = np.random.default_rng(rng)
    out = []
    for _ in range(B):
        idx = rng.integers(0, data.q, size=data.q)
        boot = RankingDataset(data.orders[idx], data.item_names)
        try:
            out.append(opt_cmm(boot, ct, kind, config, rng))
        except ZeroMeanDistance:
            out.append((anneal_z(boot, ct, kind, rng=rng), math.inf))
    return out
