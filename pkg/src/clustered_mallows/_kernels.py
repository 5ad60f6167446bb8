"""Compiled inner loops.

All arrays are 0-based: ``order[p]`` is the item at rank position ``p``,
``labels[u]`` the cluster index of item ``u`` and ``blk[p]`` the block index
of position ``p`` (the sorted labels).  Random numbers are drawn by the
caller and passed in, so every kernel is a deterministic function of its
arguments.
"""
import numpy as np
from numba import njit

HAMMING = 0
KENDALL = 1


@njit(cache=True, nogil=True)
def hamming(order, labels, blk):
    d = 0
    for p in range(order.shape[0]):
        if labels[order[p]] != blk[p]:
            d += 1
    return d


@njit(cache=True, nogil=True)
def kendall(order, labels, blk, L):
    cnt = np.zeros((L, L), dtype=np.int64)
    for p in range(order.shape[0]):
        cnt[blk[p], labels[order[p]]] += 1
    # acc[j]: items in blocks after the current one with cluster j
    acc = np.zeros(L, dtype=np.int64)
    d = 0
    for i in range(L - 1, -1, -1):
        run = 0
        for j in range(L):
            run += acc[j]
            d += cnt[i, j] * run
        for j in range(L):
            acc[j] += cnt[i, j]
    return d


@njit(cache=True, nogil=True)
def distance(order, labels, blk, L, kind):
    if kind == HAMMING:
        return hamming(order, labels, blk)
    return kendall(order, labels, blk, L)


@njit(cache=True, nogil=True)
def distances(orders, labels, blk, L, kind):
    out = np.empty(orders.shape[0], dtype=np.int64)
    for r in range(orders.shape[0]):
        out[r] = distance(orders[r], labels, blk, L, kind)
    return out


@njit(cache=True, nogil=True)
def _kendall_term(cr, blk, r, p, cp):
    # pair of positions (r, p): r holds cluster cr, p holds cluster cp
    if blk[r] < blk[p]:
        return 1 if cp <= cr else 0
    if blk[r] > blk[p]:
        return 1 if cr <= cp else 0
    return 0


@njit(cache=True, nogil=True)
def _swap_delta_cl(cl, blk, kind, a, b):
    # cl[p] is the cluster of the item at position p
    if blk[a] == blk[b]:
        return 0
    ca = cl[a]
    cb = cl[b]
    if ca == cb:
        return 0
    if kind == HAMMING:
        old = (ca != blk[a]) + (cb != blk[b])
        new = (cb != blk[a]) + (ca != blk[b])
        return new - old
    if blk[a] > blk[b]:
        a, b = b, a
        ca, cb = cb, ca
    # now blk[a] < blk[b]; the pair (a, b) itself goes from [cb <= ca] to [ca <= cb]
    d = (1 if ca <= cb else 0) - (1 if cb <= ca else 0)
    for r in range(cl.shape[0]):
        if r == a or r == b:
            continue
        cr = cl[r]
        d += _kendall_term(cr, blk, r, a, cb) - _kendall_term(cr, blk, r, a, ca)
        d += _kendall_term(cr, blk, r, b, ca) - _kendall_term(cr, blk, r, b, cb)
    return d


@njit(cache=True, nogil=True)
def swap_delta(order, labels, blk, kind, a, b):
    """Change in distance when the items at positions ``a`` and ``b`` swap."""
    cl = np.empty(order.shape[0], dtype=np.int64)
    for p in range(order.shape[0]):
        cl[p] = labels[order[p]]
    return _swap_delta_cl(cl, blk, kind, a, b)


@njit(cache=True, nogil=True)
def _decode_pair(x, n):
    j = x // (n - 1)
    k = x % (n - 1)
    if k >= j:
        k += 1
    return j, k


@njit(cache=True, nogil=True)
def _accept_table(theta, n):
    # exp(-theta * delta) for every possible positive delta
    top = n * (n - 1) // 2 + n + 1
    t = np.empty(top + 1)
    for k in range(top + 1):
        t[k] = np.exp(-theta * k)
    return t


@njit(cache=True, nogil=True)
def _run_chain(order, cl, labels, blk, kind, pairs, us, table, start, steps):
    n = order.shape[0]
    acc = 0
    d_change = 0
    for t in range(start, start + steps):
        a, b = _decode_pair(pairs[t], n)
        delta = _swap_delta_cl(cl, blk, kind, a, b)
        if delta <= 0 or us[t] < table[delta]:
            tmp = order[a]
            order[a] = order[b]
            order[b] = tmp
            tmp = cl[a]
            cl[a] = cl[b]
            cl[b] = tmp
            d_change += delta
            acc += 1
    return d_change, acc


@njit(cache=True, nogil=True)
def metropolis_chains(orders, labels, blk, L, kind, theta, pairs, us):
    """Run one transposition chain per row of ``orders`` (updated in place).

    ``pairs[r, t]`` encodes the two positions swapped at step ``t`` of chain
    ``r`` and ``us[r, t]`` the acceptance uniform.  Returns final distances
    and per-chain acceptance counts.
    """
    q, n = orders.shape
    N = pairs.shape[1]
    dist = np.empty(q, dtype=np.int64)
    acc = np.zeros(q, dtype=np.int64)
    table = _accept_table(theta, n)
    cl = np.empty(n, dtype=np.int64)
    for r in range(q):
        order = orders[r]
        d = distance(order, labels, blk, L, kind)
        if n > 1:
            for p in range(n):
                cl[p] = labels[order[p]]
            dd, acc[r] = _run_chain(order, cl, labels, blk, kind, pairs[r], us[r], table, 0, N)
            d += dd
        dist[r] = d
    return dist, acc


@njit(cache=True, nogil=True)
def metropolis_thinned(order, labels, blk, L, kind, theta, pairs, us, thin, out):
    """Single chain; stores the state every ``thin`` steps into ``out``."""
    n = order.shape[0]
    d = distance(order, labels, blk, L, kind)
    table = _accept_table(theta, n)
    cl = np.empty(n, dtype=np.int64)
    for p in range(n):
        cl[p] = labels[order[p]]
    for s in range(out.shape[0]):
        dd, _ = _run_chain(order, cl, labels, blk, kind, pairs, us, table, s * thin, thin)
        d += dd
        out[s, :] = order
    return d


# forward-ranking pseudo-likelihood -------------------------------------------

@njit(cache=True, nogil=True)
def _stage_probs(rem, theta, probs):
    L = rem.shape[0]
    smallest = -1
    for l in range(L):
        if rem[l] > 0:
            smallest = l
            break
    total = 0.0
    for l in range(L):
        if rem[l] > 0:
            dl = 0 if l == smallest else rem[l]
            probs[l] = np.exp(-theta * dl)
            total += probs[l]
        else:
            probs[l] = 0.0
    for l in range(L):
        probs[l] /= total


@njit(cache=True, nogil=True)
def pseudo_logpdf(order, labels, sizes, theta):
    L = sizes.shape[0]
    rem = sizes.copy()
    probs = np.empty(L)
    lp = 0.0
    for i in range(order.shape[0] - 1):
        _stage_probs(rem, theta, probs)
        l = labels[order[i]]
        lp += np.log(probs[l]) - np.log(rem[l])
        rem[l] -= 1
    return lp


@njit(cache=True, nogil=True)
def pseudo_draws(labels, sizes, blk, kind, theta, u_cluster, u_item, out_orders, out_logf, out_dist):
    """Draw ``len(u_cluster)`` orderings from the forward-ranking model.

    Fills the orderings, their log pseudo-probabilities and their distances.
    """
    n = labels.shape[0]
    L = sizes.shape[0]
    # members[l, :sizes[l]] are the items of cluster l
    members0 = np.full((L, n), -1, dtype=np.int64)
    fill = np.zeros(L, dtype=np.int64)
    for u in range(n):
        l = labels[u]
        members0[l, fill[l]] = u
        fill[l] += 1
    members = np.empty_like(members0)
    rem = np.empty(L, dtype=np.int64)
    probs = np.empty(L)
    for m in range(u_cluster.shape[0]):
        members[:, :] = members0
        rem[:] = sizes
        lp = 0.0
        for i in range(n - 1):
            _stage_probs(rem, theta, probs)
            x = u_cluster[m, i]
            l = -1
            cum = 0.0
            for k in range(L):
                if rem[k] > 0:
                    l = k
                    cum += probs[k]
                    if x < cum:
                        break
            j = int(u_item[m, i] * rem[l])
            if j >= rem[l]:
                j = rem[l] - 1
            lp += np.log(probs[l]) - np.log(rem[l])
            out_orders[m, i] = members[l, j]
            members[l, j] = members[l, rem[l] - 1]
            rem[l] -= 1
        for k in range(L):
            if rem[k] > 0:
                out_orders[m, n - 1] = members[k, 0]
        out_logf[m] = lp
        out_dist[m] = distance(out_orders[m], labels, blk, L, kind)


# data augmentation ------------------------------------------------------------

@njit(cache=True, nogil=True)
def augment_rows(completed, observed, labels, blk, L, kind, theta, keys, us):
    """Independence Metropolis refresh of the missing slots of each row.

    The proposal reshuffles the items currently filling a row's missing
    positions according to ``keys[r]``.  Returns the acceptance flags.
    """
    q, n = completed.shape
    acc = np.zeros(q, dtype=np.bool_)
    prop = np.empty(n, dtype=np.int64)
    for r in range(q):
        nmiss = 0
        for p in range(n):
            if not observed[r, p]:
                nmiss += 1
        if nmiss == 0:
            continue
        pos = np.empty(nmiss, dtype=np.int64)
        vals = np.empty(nmiss, dtype=np.int64)
        kk = np.empty(nmiss)
        j = 0
        for p in range(n):
            prop[p] = completed[r, p]
            if not observed[r, p]:
                pos[j] = p
                vals[j] = completed[r, p]
                kk[j] = keys[r, p]
                j += 1
        perm = np.argsort(kk)
        for j in range(nmiss):
            prop[pos[j]] = vals[perm[j]]
        d_old = distance(completed[r], labels, blk, L, kind)
        d_new = distance(prop, labels, blk, L, kind)
        delta = d_new - d_old
        if delta <= 0 or us[r] < np.exp(-theta * delta):
            completed[r, :] = prop
            acc[r] = True
    return acc


# allocation search on sufficient statistics -----------------------------------
#
# ``stat`` is B (n x L, item-in-block counts) for Hamming and W (n x n, item u
# in an earlier block than v) for Kendall; ``qn`` is q * n.

@njit(cache=True, nogil=True)
def objective(stat, labels, kind, qn):
    n = labels.shape[0]
    if kind == HAMMING:
        s = 0
        for u in range(n):
            s += stat[u, labels[u]]
        return qn - s
    s = 0
    for u in range(n):
        for v in range(n):
            if u != v and labels[v] <= labels[u]:
                s += stat[u, v]
    return s


@njit(cache=True, nogil=True)
def _kendall_pair(stat, u, v, lu, lv):
    # contribution of the unordered pair {u, v} with labels lu, lv
    s = 0
    if lv <= lu:
        s += stat[u, v]
    if lu <= lv:
        s += stat[v, u]
    return s


@njit(cache=True, nogil=True)
def label_swap_delta(stat, labels, kind, a, b):
    """Objective change when items ``a`` and ``b`` exchange cluster labels."""
    la = labels[a]
    lb = labels[b]
    if la == lb:
        return 0
    if kind == HAMMING:
        return stat[a, la] + stat[b, lb] - stat[a, lb] - stat[b, la]
    d = _kendall_pair(stat, a, b, lb, la) - _kendall_pair(stat, a, b, la, lb)
    for r in range(labels.shape[0]):
        if r == a or r == b:
            continue
        lr = labels[r]
        d += _kendall_pair(stat, a, r, lb, lr) - _kendall_pair(stat, a, r, la, lr)
        d += _kendall_pair(stat, b, r, la, lr) - _kendall_pair(stat, b, r, lb, lr)
    return d


@njit(cache=True, nogil=True)
def anneal(stat, kind, qn, labels, alphas, picks, us, patience):
    """Simulated annealing over allocations with a fixed table.

    ``picks[t]`` lists the items whose labels rotate at proposal ``t``
    (``picks.shape[1]`` is the number of switched elements); proposals are
    split evenly over the levels of ``alphas``.  ``labels`` is updated in
    place to the best allocation visited.  Returns ``(best, levels_run)``.
    """
    T = alphas.shape[0]
    per = picks.shape[0] // T
    m = picks.shape[1]
    cur = objective(stat, labels, kind, qn)
    best = cur
    best_labels = labels.copy()
    prop = labels.copy()
    idle = 0
    t = 0
    level = 0
    while level < T:
        alpha = alphas[level]
        moved = False
        for _ in range(per):
            if m == 2:
                delta = label_swap_delta(stat, labels, kind, picks[t, 0], picks[t, 1])
            else:
                prop[:] = labels
                first = labels[picks[t, 0]]
                for i in range(m - 1):
                    prop[picks[t, i]] = labels[picks[t, i + 1]]
                prop[picks[t, m - 1]] = first
                delta = objective(stat, prop, kind, qn) - cur
            if delta <= 0 or us[t] < np.exp(-alpha * delta):
                if m == 2:
                    tmp = labels[picks[t, 0]]
                    labels[picks[t, 0]] = labels[picks[t, 1]]
                    labels[picks[t, 1]] = tmp
                else:
                    labels[:] = prop
                if delta != 0:
                    moved = True
                cur += delta
                if cur < best:
                    best = cur
                    best_labels[:] = labels
            t += 1
        level += 1
        idle = 0 if moved else idle + 1
        if idle >= patience:
            break
    labels[:] = best_labels
    return best, level


@njit(cache=True, nogil=True)
def polish(stat, kind, qn, labels):
    """Best-improvement pairwise label swaps until none lowers the objective."""
    n = labels.shape[0]
    cur = objective(stat, labels, kind, qn)
    while True:
        best_d = 0
        ba = -1
        bb = -1
        for a in range(n):
            for b in range(a + 1, n):
                d = label_swap_delta(stat, labels, kind, a, b)
                if d < best_d:
                    best_d = d
                    ba = a
                    bb = b
        if ba < 0:
            return cur
        tmp = labels[ba]
        labels[ba] = labels[bb]
        labels[bb] = tmp
        cur += best_d
