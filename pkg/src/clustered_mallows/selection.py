"""Choosing the clustering table.

Candidate tables are scored either by a penalised likelihood, whose
normaliser is estimated by importance sampling, or by the share of
between-cluster preference relations that the data respect.  The search
starts from a table built by merging nearly indifferent items and moves
greedily between tables that differ by one item shifted to an adjacent
cluster.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .distances import DistanceKind, sum_distance
from .errors import SingleCluster, ZeroMeanDistance
from .mle import MleConfig, anneal_z, fit_theta
from .model import ENUMERATION_CAP, exact_log_psi
from .pseudo import is_log_psi
from .rank_core import (
    Allocation,
    ClusteringTable,
    PreferenceMatrix,
    RankingDataset,
    require_complete,
)


class CriterionKind(enum.Enum):
    INFO = "info"
    DATA = "data"

    @classmethod
    def parse(cls, value) -> "CriterionKind":
        return value if isinstance(value, cls) else cls(str(value).lower())


def log_ct_prior(z: Allocation | ClusteringTable) -> float:
    """``-log(n! / prod n_l!)``, the log of a uniform prior over allocations with this table."""
    sizes = np.asarray((z.ct if isinstance(z, Allocation) else z).sizes)
    return float(gammaln(sizes + 1).sum() - gammaln(sizes.sum() + 1))


def info_criterion(data: RankingDataset, z: Allocation, theta: float,
                   kind: DistanceKind | str = "kendall", M: int = 100_000, rng=None,
                   exact: bool = False) -> tuple[float, float]:
    """Penalised log-likelihood and its Monte Carlo standard error.

    ``log f(data | z, theta) + log_ct_prior(z)`` with ``log Psi`` estimated
    from ``M`` importance draws (or enumerated when ``exact``).  A single
    cluster and ``theta = inf`` have closed forms and zero error.
    """
    require_complete(data, "info_criterion")
    kind = DistanceKind.parse(kind)
    q, prior = data.q, log_ct_prior(z)
    if z.L == 1 or theta == 0:
        return -q * math.lgamma(z.n + 1) + prior, 0.0
    S = sum_distance(data, z, kind)
    if math.isinf(theta):
        # only orderings at distance zero keep mass
        if S > 0:
            return -math.inf, 0.0
        return -q * float(gammaln(np.asarray(z.ct.sizes) + 1).sum()) + prior, 0.0
    if exact:
        return -theta * S - q * exact_log_psi(theta, z, kind, ENUMERATION_CAP) + prior, 0.0
    est = is_log_psi(theta, z, kind, M, rng)
    return -theta * S - q * est.log_psi + prior, q * est.se


def data_criterion(data: RankingDataset, z: Allocation) -> float:
    """Fraction of between-cluster item pairs ranked in the order ``z`` prefers."""
    require_complete(data, "data_criterion")
    if z.L < 2:
        raise SingleCluster("no between-cluster pairs with a single cluster")
    r = data.ranks0()
    lab = z.labels0
    u, v = np.nonzero(lab[:, None] < lab[None, :])
    agree = (r[:, u] < r[:, v]).sum()
    sizes = np.asarray(z.ct.sizes)
    pairs = math.comb(z.n, 2) - int((sizes * (sizes - 1) // 2).sum())
    return float(agree / (data.q * pairs))


def default_tol(q: int) -> float:
    return math.sqrt(0.5 / q)


def initial_ct(pref: PreferenceMatrix, tol: float | None = None
               ) -> tuple[ClusteringTable, Allocation]:
    """Merge nearly indifferent items into groups and order the groups by mean rank.

    Repeatedly merges the two groups whose pooled preference proportion is
    closest to one half, as long as it lies within ``tol`` of it.
    """
    tol = default_tol(pref.q) if tol is None else tol
    if not 0 < tol < 0.5:
        raise ValueError("tol must lie in (0, 0.5)")
    wins = pref.wins.astype(float)
    counts = pref.counts.astype(float)
    groups = [[i] for i in range(pref.n)]
    while len(groups) > 1:
        G = len(groups)
        # pooled wins/comparisons between current groups
        member = np.zeros((G, pref.n))
        for g, items in enumerate(groups):
            member[g, items] = 1
        gw = member @ wins @ member.T
        gc = member @ counts @ member.T
        with np.errstate(invalid="ignore", divide="ignore"):
            p = np.where(gc > 0, gw / np.where(gc > 0, gc, 1), 0.5)
        gap = np.abs(p - 0.5)
        gap[np.tril_indices(G)] = np.inf
        a, b = np.unravel_index(np.argmin(gap), gap.shape)
        if not gap[a, b] < tol:
            break
        groups[a] = groups[a] + groups[b]
        del groups[b]
    mr = np.where(np.isnan(pref.mean_rank), np.inf, pref.mean_rank)
    groups.sort(key=lambda items: (float(np.mean(mr[items])), min(items)))
    labels = np.empty(pref.n, dtype=np.int64)
    for l, items in enumerate(groups):
        labels[items] = l
    z = Allocation.from_labels0(labels)
    return z.ct, z


def neighbors(ct: ClusteringTable) -> list[ClusteringTable]:
    """Tables reached by shifting one item into an adjacent cluster.

    A cluster that empties is dropped, and the last cluster may also shed an
    item into a new trailing cluster.
    """
    sizes = list(ct.sizes)
    L = len(sizes)
    out: list[ClusteringTable] = []
    seen = {tuple(sizes)}

    def add(new):
        t = tuple(s for s in new if s > 0)
        if t not in seen:
            seen.add(t)
            out.append(ClusteringTable(t))

    for l in range(L):
        for target in (l - 1, l + 1):
            if not 0 <= target <= L:
                continue
            if target == L and l != L - 1:
                continue
            new = sizes + [0] if target == L else sizes.copy()
            new[l] -= 1
            new[target] += 1
            add(new)
    return out


@dataclass(frozen=True)
class CtCandidate:
    ct: ClusteringTable
    z: Allocation
    theta: float
    value: float
    se: float
    criterion: CriterionKind


@dataclass(frozen=True)
class SearchConfig:
    """Knobs of :func:`greedy_search`.

    ``max_neighbors`` subsamples the neighbourhood uniformly; ``neighbor_filter``
    drops tables for which it returns False (for example to fix ``L``).
    """

    mle: MleConfig = field(default_factory=MleConfig)
    M: int = 100_000
    exact_psi: bool = False
    max_neighbors: int | None = None
    neighbor_filter: Callable[[ClusteringTable], bool] | None = None
    threads: int = 1
    max_steps: int = 100


@dataclass
class SearchResult:
    best: CtCandidate
    visited: list[CtCandidate]
    path: list[ClusteringTable]
    decisive: bool

    @property
    def ranking(self) -> list[CtCandidate]:
        return sorted(self.visited, key=lambda c: -c.value)


def fit_candidate(data: RankingDataset, ct: ClusteringTable, kind: DistanceKind,
                  criterion: CriterionKind, config: SearchConfig, rng) -> CtCandidate:
    """Fit ``(z, theta)`` for one table and score it."""
    rng = np.random.default_rng(rng)
    mle = config.mle
    z = anneal_z(data, ct, kind, mle.schedule, mle.m, rng)
    if ct.L == 1:
        theta = 0.0
    else:
        try:
            theta = fit_theta(data, z, kind, mle.eps, mle.N, rng, mle.theta0, mle.max_iter)
        except ZeroMeanDistance:
            theta = math.inf
    if criterion is CriterionKind.DATA:
        value = data_criterion(data, z) if ct.L > 1 else 0.0
        se = 0.0
    else:
        exact = config.exact_psi and ct.n <= ENUMERATION_CAP
        value, se = info_criterion(data, z, theta, kind, config.M, rng, exact=exact)
    return CtCandidate(ct, z, theta, value, se, criterion)


def _ct_seed(master: int, ct: ClusteringTable) -> np.random.SeedSequence:
    # a table's fit depends only on the master seed and the table itself
    return np.random.SeedSequence(master, spawn_key=ct.sizes)


def greedy_search(data: RankingDataset, initial: ClusteringTable,
                  kind: DistanceKind | str = "kendall",
                  criterion: CriterionKind | str = CriterionKind.INFO,
                  config: SearchConfig | None = None, rng=None) -> SearchResult:
    """Hill-climb over tables, fitting each table at most once.

    Moves to the best-scoring neighbour while it strictly improves on the
    current table.  ``decisive`` is False when the winner's margin over the
    runner-up is within two combined standard errors.
    """
    require_complete(data, "greedy_search")
    kind = DistanceKind.parse(kind)
    criterion = CriterionKind.parse(criterion)
    config = config or SearchConfig()
    rng = np.random.default_rng(rng)
    master = int(rng.integers(2 ** 63))
    cache: dict[tuple[int, ...], CtCandidate] = {}

    def fit(ct):
        return fit_candidate(data, ct, kind, criterion, config, _ct_seed(master, ct))

    def fit_many(cts):
        todo = [ct for ct in cts if ct.sizes not in cache]
        if config.threads > 1 and len(todo) > 1:
            with ThreadPoolExecutor(config.threads) as ex:
                results = list(ex.map(fit, todo))
        else:
            results = [fit(ct) for ct in todo]
        for ct, res in zip(todo, results):
            cache[ct.sizes] = res
        return [cache[ct.sizes] for ct in cts]

    current = fit_many([initial])[0]
    path = [initial]
    for _ in range(config.max_steps):
        cands = neighbors(current.ct)
        if config.neighbor_filter is not None:
            cands = [c for c in cands if config.neighbor_filter(c)]
        if config.max_neighbors is not None and len(cands) > config.max_neighbors:
            idx = rng.choice(len(cands), size=config.max_neighbors, replace=False)
            cands = [cands[i] for i in sorted(idx)]
        if not cands:
            break
        scored = fit_many(cands)
        best = max(scored, key=lambda c: c.value)
        if not best.value > current.value:
            break
        current = best
        path.append(best.ct)

    visited = list(cache.values())
    decisive = True
    others = [c for c in visited if c.ct != current.ct]
    if others:
        runner = max(others, key=lambda c: c.value)
        gap = current.value - runner.value
        decisive = bool(gap > 2 * math.hypot(current.se, runner.se))
    return SearchResult(current, visited, path, decisive)
