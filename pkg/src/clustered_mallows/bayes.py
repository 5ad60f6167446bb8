"""Posterior sampling of ``(z, theta)`` for a fixed clustering table.

Metropolis-within-Gibbs: the allocation moves by label switches, whose
acceptance ratio only involves total distances, and the spread moves by the
approximate exchange algorithm.  That update draws an auxiliary dataset at
the proposed spread so that the normalising constants cancel; the normaliser
is never evaluated here.  Partial rankings are completed by data
augmentation, refreshing the arrangement of the unranked items each sweep.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from . import _kernels as K
from .distances import DistanceKind
from .errors import DimensionMismatch
from .model import CmmParams
from .rank_core import (
    Allocation,
    ClusteringTable,
    PartialRanking,
    Permutation,
    RankingDataset,
)
from .sampler import draw_orders


@dataclass(frozen=True)
class Priors:
    """Gamma(shape, rate) on ``theta``; uniform on allocations unless ``z_log_prior`` is set."""

    shape: float = 2.0
    rate: float = 2.0
    z_log_prior: Callable[[Allocation], float] | None = None

    def __post_init__(self):
        if self.shape <= 0 or self.rate <= 0:
            raise ValueError("Gamma prior needs positive shape and rate")

    def log_theta(self, theta: float) -> float:
        if theta <= 0:
            return -np.inf
        return (self.shape - 1) * np.log(theta) - self.rate * theta

    def log_z(self, z: Allocation) -> float:
        return 0.0 if self.z_log_prior is None else float(self.z_log_prior(z))

    @property
    def distribution(self):
        return stats.gamma(self.shape, scale=1 / self.rate)


@dataclass(frozen=True)
class PosteriorConfig:
    """Tuning of :func:`run_posterior`.

    ``N`` is the chain length of each auxiliary draw, ``m`` the number of
    labels rotated per allocation proposal, ``sigma`` the initial log-scale
    step of the spread proposal, adapted during burn-in towards
    ``target_accept`` and frozen afterwards.
    """

    N: int = 200
    m: int = 2
    sigma: float = 0.5
    target_accept: float = 0.44
    theta0: float = 1.0
    z0: Allocation | None = None


# single updates -----------------------------------------------------------------

def _sum_dist(orders0, labels0, blk, L, code) -> int:
    if orders0.shape[0] == 0:
        return 0
    return int(K.distances(orders0, labels0, blk, L, code).sum())


def z_update(z: Allocation, completed0: np.ndarray, theta: float, kind: DistanceKind | str,
             m: int = 2, priors: Priors | None = None, rng=None) -> tuple[Allocation, bool]:
    """One Metropolis step for the allocation given complete 0-based rankings.

    Returns the next allocation and whether the proposal was accepted.
    """
    from .mle import switch

    rng = np.random.default_rng(rng)
    kind = DistanceKind.parse(kind)
    priors = priors or Priors()
    ct = z.ct
    if ct.L == 1:
        return z, True
    zp = switch(z, m, rng)
    args = (ct.blocks0, ct.L, kind.code)
    delta = _sum_dist(completed0, zp.labels0, *args) - _sum_dist(completed0, z.labels0, *args)
    log_a = -theta * delta + priors.log_z(zp) - priors.log_z(z)
    if log_a >= 0 or rng.random() < np.exp(log_a):
        return zp, True
    return z, False


def aea_log_ratio(theta: float, theta_new: float, S: float, S_aux: float, priors: Priors) -> float:
    """Log acceptance ratio of an exchange move under a log-normal random walk.

    ``S`` is the observed total distance and ``S_aux`` the total distance of
    the auxiliary data drawn at ``theta_new``.
    """
    return (priors.log_theta(theta_new) - priors.log_theta(theta)
            - (theta_new - theta) * (S - S_aux) + np.log(theta_new / theta))


def theta_update_aea(theta: float, z: Allocation, completed0: np.ndarray,
                     kind: DistanceKind | str, sigma: float, N: int = 200,
                     priors: Priors | None = None, rng=None) -> tuple[float, bool]:
    """One approximate exchange step for the spread."""
    rng = np.random.default_rng(rng)
    kind = DistanceKind.parse(kind)
    priors = priors or Priors()
    ct = z.ct
    S = _sum_dist(completed0, z.labels0, ct.blocks0, ct.L, kind.code)
    theta_new = theta * np.exp(sigma * rng.standard_normal())
    q = completed0.shape[0]
    S_aux = 0
    if q:
        _, d = draw_orders(CmmParams(z, theta_new, kind), q, N, rng)
        S_aux = int(d.sum())
    log_a = aea_log_ratio(theta, theta_new, S, S_aux, priors)
    if log_a >= 0 or rng.random() < np.exp(log_a):
        return float(theta_new), True
    return float(theta), False


def uniform_completion(data: RankingDataset, rng=None) -> np.ndarray:
    """0-based complete orders with the unranked items of each row shuffled into its gaps."""
    rng = np.random.default_rng(rng)
    out = data.orders0.copy()
    n = data.n
    for r in np.flatnonzero(~data.observed_mask.all(axis=1)):
        row = data.orders[r]
        missing = np.setdiff1d(np.arange(1, n + 1), row[row != 0]) - 1
        out[r, row == 0] = rng.permutation(missing)
    return out


def augment_partial(current: Permutation, partial_row: PartialRanking, params: CmmParams,
                    rng=None) -> Permutation:
    """Refresh the unranked part of ``current`` by an independence Metropolis move.

    The proposal shuffles the items occupying the missing slots uniformly at
    random.  A complete row is returned unchanged.
    """
    rng = np.random.default_rng(rng)
    if current.n != partial_row.n or current.n != params.n:
        raise DimensionMismatch("row, completion and model sizes differ")
    if not partial_row.is_consistent_with(current):
        raise ValueError("completion disagrees with the observed slots")
    ct = params.z.ct
    completed = current.order0[None, :].copy()
    observed = np.array([[s is not None for s in partial_row.slots]])
    K.augment_rows(completed, observed, params.z.labels0, ct.blocks0, ct.L, params.kind.code,
                   params.theta, rng.random((1, params.n)), rng.random(1))
    return Permutation(tuple(int(x) + 1 for x in completed[0]))


# chain --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PosteriorTrace:
    """Per-iteration records of a posterior run.

    ``z`` holds 1-based labels, one row per iteration; ``log_target`` the
    log posterior up to the normaliser terms, ``-theta S + log p(theta) +
    log p(z)`` with ``S`` the total distance of the (augmented) data, which
    is stored in ``dist_sum``.
    """

    z: np.ndarray
    theta: np.ndarray
    log_target: np.ndarray
    accept_z: np.ndarray
    accept_theta: np.ndarray
    dist_sum: np.ndarray
    burn_in: int
    sigma: float

    def __len__(self):
        return self.theta.shape[0]

    @property
    def kept(self) -> slice:
        return slice(self.burn_in, None)

    def theta_samples(self) -> np.ndarray:
        return self.theta[self.kept]

    def theta_mean(self) -> float:
        return float(self.theta_samples().mean())

    def credible_interval(self, level: float = 0.95) -> tuple[float, float]:
        a = (1 - level) / 2
        lo, hi = np.quantile(self.theta_samples(), [a, 1 - a])
        return float(lo), float(hi)

    def theta_map(self) -> float:
        """Mode of a histogram of the kept draws with Freedman-Diaconis bins."""
        s = self.theta_samples()
        if np.ptp(s) == 0:
            return float(s[0])
        counts, edges = np.histogram(s, bins="fd")
        k = int(np.argmax(counts))
        return float((edges[k] + edges[k + 1]) / 2)

    def z_frequencies(self) -> Counter:
        return Counter(tuple(int(x) for x in row) for row in self.z[self.kept])

    def map_z(self) -> Allocation:
        """Most visited allocation; ties go to the higher mean log target."""
        zs = self.z[self.kept]
        lt = self.log_target[self.kept]
        keys = [tuple(int(x) for x in row) for row in zs]
        freq = Counter(keys)
        top = max(freq.values())
        best, best_lt = None, -np.inf
        for key, c in freq.items():
            if c != top:
                continue
            mean_lt = float(np.mean([t for k, t in zip(keys, lt) if k == key]))
            if best is None or mean_lt > best_lt:
                best, best_lt = key, mean_lt
        return Allocation(best)

    def acceptance_rates(self) -> tuple[float, float]:
        k = self.kept
        return float(self.accept_z[k].mean()), float(self.accept_theta[k].mean())


def _initial_z(data: RankingDataset, ct: ClusteringTable) -> Allocation:
    from .mle import mean_rank_allocation

    if data.q == 0:
        return ct.canonical_allocation()
    return mean_rank_allocation(data, ct)


def run_posterior(data: RankingDataset, ct: ClusteringTable, kind: DistanceKind | str = "kendall",
                  priors: Priors | None = None, iters: int = 11_000, burn_in: int = 1_000,
                  config: PosteriorConfig | None = None, rng=None) -> PosteriorTrace:
    """Metropolis-within-Gibbs chain: augment partial rows, update ``z``, update ``theta``.

    Partial rows start from a uniform completion of their unranked items.
    """
    from .errors import SizeMismatch
    from .mle import switch

    if iters <= burn_in:
        raise ValueError("iters must exceed burn_in")
    if ct.n != data.n:
        raise SizeMismatch(f"table {ct} sums to {ct.n} but the data has {data.n} items")
    kind = DistanceKind.parse(kind)
    priors = priors or Priors()
    config = config or PosteriorConfig()
    rng = np.random.default_rng(rng)
    n, q, L, code = data.n, data.q, ct.L, kind.code
    blk = ct.blocks0

    completed = uniform_completion(data, rng)
    observed = data.observed_mask
    has_partial = not data.is_complete

    z = config.z0 if config.z0 is not None else _initial_z(data, ct)
    if z.ct != ct:
        raise ValueError(f"initial allocation has table {z.ct}, expected {ct}")
    theta = float(config.theta0)
    log_sigma = np.log(config.sigma)
    m = min(config.m, n)

    out_z = np.empty((iters, n), dtype=np.int64)
    out_theta = np.empty(iters)
    out_lt = np.empty(iters)
    acc_z = np.zeros(iters, dtype=bool)
    acc_t = np.zeros(iters, dtype=bool)
    out_S = np.empty(iters, dtype=np.int64)

    labels = z.labels0.copy()
    lpz = priors.log_z(z)
    for t in range(iters):
        if has_partial:
            K.augment_rows(completed, observed, labels, blk, L, code, theta,
                           rng.random((q, n)), rng.random(q))
        S = _sum_dist(completed, labels, blk, L, code)

        # allocation
        if L > 1 and n >= 2:
            zp = switch(Allocation.from_labels0(labels), m, rng)
            lpz_p = priors.log_z(zp)
            Sp = _sum_dist(completed, zp.labels0, blk, L, code)
            log_a = -theta * (Sp - S) + lpz_p - lpz
            if log_a >= 0 or rng.random() < np.exp(log_a):
                labels = zp.labels0.copy()
                S, lpz = Sp, lpz_p
                acc_z[t] = True

        # spread
        sigma = np.exp(log_sigma)
        theta_new = theta * np.exp(sigma * rng.standard_normal())
        S_aux = 0
        if q:
            params = CmmParams(Allocation.from_labels0(labels), theta_new, kind)
            S_aux = int(draw_orders(params, q, config.N, rng)[1].sum())
        log_a = aea_log_ratio(theta, theta_new, S, S_aux, priors)
        a = min(1.0, float(np.exp(min(log_a, 0.0))))
        if log_a >= 0 or rng.random() < a:
            theta = float(theta_new)
            acc_t[t] = True
        if t < burn_in:
            log_sigma += (a - config.target_accept) / np.sqrt(t + 1)

        out_z[t] = labels + 1
        out_theta[t] = theta
        out_S[t] = S
        out_lt[t] = -theta * S + priors.log_theta(theta) + lpz
    return PosteriorTrace(out_z, out_theta, out_lt, acc_z, acc_t, out_S, burn_in,
                          float(np.exp(log_sigma)))
