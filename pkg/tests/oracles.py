"""Slow reference implementations used only by the tests."""

import itertools
import math


def tau_b_pairs(x, y):
    """Kendall tau-b by enumerating every pair in plain Python."""
    x, y = [float(v) for v in x], [float(v) for v in y]
    n = len(x)
    c = d = tx = ty = 0
    for i in range(n):
        for j in range(i + 1, n):
            sx = (x[j] > x[i]) - (x[j] < x[i])
            sy = (y[j] > y[i]) - (y[j] < y[i])
            if sx == 0:
                tx += 1
            if sy == 0:
                ty += 1
            if sx * sy > 0:
                c += 1
            elif sx * sy < 0:
                d += 1
    n0 = n * (n - 1) // 2
    return (c - d) / math.sqrt((n0 - tx) * (n0 - ty))


def exact_s_distribution(n):
    """Counts of S = C - D over all permutations of 1..n."""
    dist = {}
    base = list(range(n))
    for perm in itertools.permutations(base):
        s = 0
        for i in range(n):
            for j in range(i + 1, n):
                s += 1 if perm[j] > perm[i] else -1
        dist[s] = dist.get(s, 0) + 1
    return dist
