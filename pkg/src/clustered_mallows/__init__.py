"""Clustered Mallows model: rankings whose consensus is an ordered partition.

Exact small-n probabilities, a Metropolis sampler, a forward-ranking
pseudo-likelihood with importance sampling of the normaliser, maximum
likelihood and Bayesian fitting, and clustering-table search.
"""
from .bayes import PosteriorConfig, PosteriorTrace, Priors, run_posterior
from .distances import DistanceKind, d_oc, d_oc_hamming, d_oc_kendall, sum_distance
from .errors import CMMError, DataError, NumericError
from .mle import AnnealingSchedule, MleConfig, anneal_z, fit_theta, opt_cmm
from .model import CmmParams, exact_log_psi, log_likelihood, log_prob, rc_probabilities_exact
from .pseudo import is_log_psi, pseudo_log_prob, pseudo_sample
from .rank_core import (
    Allocation,
    ClusteringTable,
    PartialRanking,
    Permutation,
    RankingDataset,
    preference_matrix,
)
from .sampler import SamplerConfig, rcmm
from .selection import (
    data_criterion,
    greedy_search,
    info_criterion,
    initial_ct,
    log_ct_prior,
    neighbors,
)

__version__ = "0.1.0"
