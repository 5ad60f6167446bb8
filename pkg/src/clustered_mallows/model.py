"""Exact probabilities of the clustered Mallows model by enumeration.

The model puts mass ``exp(-theta * d(pi, z)) / Psi(theta)`` on every ordering
``pi`` of ``n`` items.  The normaliser ``Psi`` has no closed form, so this
module sums over all ``n!`` orderings and is limited to small ``n``; larger
problems use :func:`clustered_mallows.pseudo.is_log_psi`.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .distances import DistanceKind, row_distances
from .errors import DimensionMismatch, TooLargeForEnumeration
from .rank_core import Allocation, Permutation, RankingDataset

ENUMERATION_CAP = 9


@dataclass(frozen=True)
class CmmParams:
    z: Allocation
    theta: float
    kind: DistanceKind = DistanceKind.KENDALL

    def __post_init__(self):
        object.__setattr__(self, "kind", DistanceKind.parse(self.kind))
        theta = float(self.theta)
        if not np.isfinite(theta) or theta < 0:
            raise ValueError(f"theta must be a finite non-negative number, got {self.theta}")
        object.__setattr__(self, "theta", theta)

    @property
    def n(self) -> int:
        return self.z.n


@lru_cache(maxsize=None)
def all_orders0(n: int) -> np.ndarray:
    """Every ordering of ``n`` items as an ``(n!, n)`` 0-based array."""
    a = np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(-1, n)
    a.setflags(write=False)
    return a


def _check_cap(n: int, cap: int) -> None:
    if n > cap:
        raise TooLargeForEnumeration(
            f"n={n} needs {math.factorial(n)} terms; enumeration is capped at "
            f"n={cap}, use the importance-sampling estimate"
        )


@lru_cache(maxsize=256)
def _distance_table(labels: tuple[int, ...], kind: DistanceKind) -> np.ndarray:
    z = Allocation(labels)
    d = row_distances(all_orders0(z.n), z, kind)
    d.setflags(write=False)
    return d


def enumerated_distances(z: Allocation, kind: DistanceKind | str,
                         cap: int = ENUMERATION_CAP) -> np.ndarray:
    """Distance of each ordering in :func:`all_orders0` order."""
    _check_cap(z.n, cap)
    return _distance_table(z.labels, DistanceKind.parse(kind))


def exact_distance_distribution(z: Allocation, kind: DistanceKind | str, theta: float = 0.0,
                                cap: int = ENUMERATION_CAP) -> np.ndarray:
    """``P(d(pi, z) = k)`` for ``k = 0..max`` under the model at ``theta``."""
    d = enumerated_distances(z, kind, cap)
    logw = -theta * d
    w = np.exp(logw - logsumexp(logw))
    return np.bincount(d, weights=w)


def exact_log_psi(theta: float, ref_z: Allocation, kind: DistanceKind | str,
                  cap: int = ENUMERATION_CAP) -> float:
    """``log sum_pi exp(-theta d(pi, z))`` over all orderings."""
    d = enumerated_distances(ref_z, kind, cap)
    return float(logsumexp(-float(theta) * d))


def log_prob(pi: Permutation, params: CmmParams, log_psi: float) -> float:
    from .distances import d_oc

    if pi.n != params.n:
        raise DimensionMismatch(f"ranking has {pi.n} items, model {params.n}")
    return -params.theta * d_oc(pi, params.z, params.kind) - log_psi


def log_likelihood(data: RankingDataset, params: CmmParams, log_psi: float) -> float:
    """``-theta * sum_j d(pi_j, z) - q log Psi`` for complete rows."""
    from .distances import sum_distance

    return -params.theta * sum_distance(data, params.z, params.kind) - data.q * log_psi


def rc_probabilities_exact(params: CmmParams, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """``RC[i, l]``: probability that the item at rank ``i+1`` is in cluster ``l+1``."""
    z = params.z
    _check_cap(z.n, cap)
    orders = all_orders0(z.n)
    d = enumerated_distances(z, params.kind, cap)
    logw = -params.theta * d
    w = np.exp(logw - logsumexp(logw))
    clusters = z.labels0[orders]  # (n!, n)
    rc = np.zeros((z.n, z.L))
    for i in range(z.n):
        rc[i] = np.bincount(clusters[:, i], weights=w, minlength=z.L)
    return rc


def rank_item_probabilities_exact(params: CmmParams, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """``P[i, u]``: probability that item ``u+1`` is placed at rank ``i+1``."""
    z = params.z
    _check_cap(z.n, cap)
    orders = all_orders0(z.n)
    d = enumerated_distances(z, params.kind, cap)
    logw = -params.theta * d
    w = np.exp(logw - logsumexp(logw))
    out = np.zeros((z.n, z.n))
    for i in range(z.n):
        out[i] = np.bincount(orders[:, i], weights=w, minlength=z.n)
    return out


def rc_probabilities_mc(params: CmmParams, n_samples: int, chain_len: int | None = None,
                        rng=None) -> np.ndarray:
    """Monte Carlo estimate of the rank-cluster matrix from sampler draws."""
    from .sampler import draw_orders

    orders, _ = draw_orders(params, n_samples, chain_len, rng)
    clusters = params.z.labels0[orders]
    rc = np.zeros((params.n, params.z.L))
    for i in range(params.n):
        rc[i] = np.bincount(clusters[:, i], minlength=params.z.L)
    return rc / n_samples
