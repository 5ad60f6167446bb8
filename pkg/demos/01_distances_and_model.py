"""
Ordered-cluster distances and the clustered Mallows model
=========================================================

A consensus with ties is an allocation ``z``: item ``i`` sits in cluster
``z[i]``, clusters are ordered and items inside a cluster are interchangeable.
A ranking is penalised for every place where it disagrees with that ordering.
"""

import numpy as np

from clustered_mallows import (
    Allocation,
    CmmParams,
    Permutation,
    d_oc,
    exact_log_psi,
    log_prob,
    pseudo_log_prob,
    rc_probabilities_exact,
)
from clustered_mallows.io import render_clusters

# Items 2 and 3 are tied at the top, then 1 and 4, then 5.
z = Allocation((2, 1, 1, 2, 3))
print("consensus:", render_clusters(z))

# Hamming counts positions holding an item from the wrong cluster; Kendall
# counts position pairs whose clusters come out in the wrong order.
pi = Permutation((2, 1, 3, 4, 5))
print("hamming", d_oc(pi, z, "hamming"), "kendall", d_oc(pi, z, "kendall"))

# The normaliser depends on the cluster sizes only, so it is enumerated once
# per table for small n.
z4 = Allocation((1, 1, 2, 2))
pi4 = Permutation((1, 3, 2, 4))
for kind in ("hamming", "kendall"):
    lpsi = exact_log_psi(0.5, z4, kind)
    lp = log_prob(pi4, CmmParams(z4, 0.5, kind), lpsi)
    print(f"{kind:8s} log Psi = {lpsi:.6f}   log f(pi) = {lp:.3f}")

# The forward-ranking approximation picks items stage by stage and needs no
# normaliser at all.
print("pseudo log f(pi) =", round(pseudo_log_prob(pi4, CmmParams(z4, 0.5)), 3))

# Rank-cluster probabilities: chance that rank i is filled from cluster l.
# Ranks expecting the same cluster share a row.
rc = rc_probabilities_exact(CmmParams(Allocation((1, 1, 2, 2, 3)), 1.0, "kendall"))
np.set_printoptions(precision=3, suppress=True)
print(rc)
