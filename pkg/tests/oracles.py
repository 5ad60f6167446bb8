"""Brute-force reference implementations written directly from the definitions.

Pure Python on tuples, sharing no code with the package, so that agreement
with the compiled paths is meaningful.
"""
import itertools
import math


def hamming(order, z):
    """``order`` 1-based ordering, ``z`` 1-based labels per item."""
    expected = sorted(z)
    return sum(z[item - 1] != expected[p] for p, item in enumerate(order))


def kendall(order, z):
    expected = sorted(z)
    n = len(order)
    d = 0
    for a in range(n):
        for b in range(a + 1, n):
            if expected[a] < expected[b] and z[order[b] - 1] <= z[order[a] - 1]:
                d += 1
    return d


def distance(order, z, kind):
    return hamming(order, z) if kind == "hamming" else kendall(order, z)


def orders(n):
    return list(itertools.permutations(range(1, n + 1)))


def psi(theta, z, kind):
    return sum(math.exp(-theta * distance(o, z, kind)) for o in orders(len(z)))


def pseudo_prob(order, z, theta):
    """Forward-ranking probability by explicit stage products."""
    L = max(z)
    rem = [sum(1 for x in z if x == l) for l in range(1, L + 1)]
    p = 1.0
    for item in order[:-1]:
        nonempty = [l for l in range(L) if rem[l] > 0]
        smallest = nonempty[0]
        w = {l: math.exp(-theta * (0 if l == smallest else rem[l])) for l in nonempty}
        tot = sum(w.values())
        l = z[item - 1] - 1
        p *= w[l] / tot / rem[l]
        rem[l] -= 1
    return p


def allocations(sizes):
    """Every allocation with the given cluster sizes, as label tuples."""
    base = [l for l, s in enumerate(sizes, start=1) for _ in range(s)]
    return sorted(set(itertools.permutations(base)))
