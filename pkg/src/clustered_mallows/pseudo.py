"""Forward-ranking pseudo-likelihood and importance sampling of ``Psi``.

The approximation builds an ordering one rank at a time.  At each stage a
cluster is picked among those with unranked items, with weight
``exp(-theta * D)`` where ``D`` is zero for the most preferred nonempty
cluster and the number of its remaining items otherwise; an item is then
drawn uniformly from the chosen cluster.  The last item is forced.

Because this density is cheap to evaluate and sample, it serves as the
proposal of an importance-sampling estimate of the normaliser.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import _kernels as K
from .distances import DistanceKind
from .errors import DegenerateWeights, DimensionMismatch, EmptyStage
from .model import CmmParams
from .rank_core import Allocation, Permutation, RankingDataset, clustering_table, require_complete


def _remaining(ct_i) -> np.ndarray:
    rem = np.asarray(ct_i, dtype=np.int64)
    if rem.ndim != 1 or (rem < 0).any():
        raise ValueError("remaining counts must be a vector of non-negative integers")
    if not (rem > 0).any():
        raise EmptyStage("no unranked items left")
    return rem


def d_term(l: int, ct_i) -> int:
    """Stage disagreement ``D(l)`` for the 1-based cluster label ``l``.

    Examples
    --------
    >>> d_term(1, (2, 2)), d_term(2, (2, 2)), d_term(2, (0, 3))
    (0, 2, 0)
    """
    rem = _remaining(ct_i)
    smallest = int(np.flatnonzero(rem)[0]) + 1
    return 0 if l == smallest else int(rem[l - 1])


def rc_tilde(ct_i, theta: float) -> np.ndarray:
    """Cluster-choice probabilities at a stage with remaining counts ``ct_i``.

    Empty clusters get probability zero.
    """
    rem = _remaining(ct_i)
    probs = np.empty(rem.shape[0])
    K._stage_probs(rem, float(theta), probs)
    return probs


def _arrays(params: CmmParams):
    ct = clustering_table(params.z)
    return params.z.labels0, np.asarray(ct.sizes, dtype=np.int64), ct.blocks0


def pseudo_log_prob(pi: Permutation, params: CmmParams) -> float:
    if pi.n != params.n:
        raise DimensionMismatch(f"ranking has {pi.n} items, model {params.n}")
    labels, sizes, _ = _arrays(params)
    return float(K.pseudo_logpdf(pi.order0, labels, sizes, params.theta))


def pseudo_log_probs(orders0: np.ndarray, params: CmmParams) -> np.ndarray:
    """Vectorised :func:`pseudo_log_prob` over the rows of a 0-based order array."""
    labels, sizes, _ = _arrays(params)
    orders0 = np.ascontiguousarray(orders0, dtype=np.int64)
    return np.array([K.pseudo_logpdf(o, labels, sizes, params.theta) for o in orders0])


def pseudo_log_likelihood(data: RankingDataset, params: CmmParams) -> float:
    """Composite log-likelihood: ``f~`` used in place of the exact density."""
    require_complete(data, "pseudo_log_likelihood")
    if data.n != params.n:
        raise DimensionMismatch(f"rankings have {data.n} items, model {params.n}")
    return float(pseudo_log_probs(data.orders0, params).sum())


def _draw(params: CmmParams, M: int, rng):
    n = params.n
    labels, sizes, blk = _arrays(params)
    stages = max(n - 1, 0)
    uc = rng.random((M, stages))
    ui = rng.random((M, stages))
    orders = np.empty((M, n), dtype=np.int64)
    logf = np.empty(M)
    dist = np.empty(M, dtype=np.int64)
    K.pseudo_draws(labels, sizes, blk, params.kind.code, params.theta, uc, ui, orders, logf, dist)
    return orders, logf, dist


def pseudo_sample(params: CmmParams, rng=None, size: int | None = None):
    """One draw from ``f~`` as a :class:`Permutation`, or ``size`` draws as a 0-based array."""
    rng = np.random.default_rng(rng)
    orders, _, _ = _draw(params, 1 if size is None else size, rng)
    if size is None:
        return Permutation(tuple(int(x) + 1 for x in orders[0]))
    return orders


@dataclass(frozen=True)
class ISEstimate:
    """Importance-sampling estimate of ``log Psi(theta)``.

    ``se`` is the delta-method standard error of the log estimate and ``ess``
    the effective sample size of the normalised weights.
    """

    log_psi: float
    se: float
    ess: float
    M: int

    @property
    def psi(self) -> float:
        return float(np.exp(self.log_psi))

    @property
    def psi_se(self) -> float:
        return self.psi * self.se


# draws per kernel call; keeps the uniform buffers small for huge M
_CHUNK = 200_000


def is_log_psi(theta: float, z: Allocation, kind: DistanceKind | str, M: int,
               rng=None) -> ISEstimate:
    """Estimate ``log sum_pi exp(-theta d(pi, z))`` with ``M`` draws from ``f~``.

    Weights are ``exp(-theta d) / f~``; the estimate is combined on the log
    scale so that large ``theta`` does not underflow.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    rng = np.random.default_rng(rng)
    params = CmmParams(z, theta, kind)
    logw = np.empty(M)
    for start in range(0, M, _CHUNK):
        m = min(_CHUNK, M - start)
        _, logf, dist = _draw(params, m, rng)
        logw[start:start + m] = -params.theta * dist - logf
    if not np.isfinite(logw).any():
        raise DegenerateWeights("every importance weight is zero")
    log_psi = float(logsumexp(logw) - np.log(M))
    w = np.exp(logw - logw.max())
    mean = w.mean()
    se = float(w.std(ddof=1) / (np.sqrt(M) * mean)) if M > 1 else float("inf")
    ess = float(w.sum() ** 2 / (w ** 2).sum())
    return ISEstimate(log_psi, se, ess, M)
