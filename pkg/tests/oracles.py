"""Independent reference implementations used only by the tests."""
from fractions import Fraction

import numpy as np


def exact_stationary(rows):
    """Solve pi P = pi, sum(pi) = 1 in rationals by Gauss-Jordan elimination.

    ``rows`` is a square list of lists of Fractions.
    """
    size = len(rows)
    # (P^T - I) pi = 0 with the last equation replaced by normalisation
    a = [[rows[j][i] - (1 if i == j else 0) for j in range(size)] for i in range(size)]
    a[-1] = [Fraction(1)] * size
    b = [Fraction(0)] * (size - 1) + [Fraction(1)]
    for col in range(size):
        piv = next(r for r in range(col, size) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        b[col], b[piv] = b[piv], b[col]
        for r in range(size):
            if r != col and a[r][col] != 0:
                f = a[r][col] / a[col][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
                b[r] -= f * b[col]
    return [b[i] / a[i][i] for i in range(size)]


def dense_stationary(p):
    """Direct least-squares solve of the stationary equations."""
    size = p.shape[0]
    a = np.vstack([p.T - np.eye(size), np.ones(size)])
    rhs = np.zeros(size + 1)
    rhs[-1] = 1.0
    return np.linalg.lstsq(a, rhs, rcond=None)[0]


def brute_ranked_rows(p):
    """Per video row: recommendation probabilities sorted descending, ties by id."""
    out = {}
    for i in range(1, p.shape[0]):
        entries = [(p[i, j], j) for j in range(1, p.shape[0]) if p[i, j] > 0]
        entries.sort(key=lambda e: (-e[0], e[1]))
        out[i] = entries
    return out


def brute_ctr(p, pi):
    """CTR(r) = sum_i pi_i * (r-th largest recommendation probability of i)."""
    rows = brute_ranked_rows(p)
    depth = max((len(e) for e in rows.values()), default=0)
    ctr = []
    for r in range(depth):
        total = 0.0
        for i in sorted(rows):
            if len(rows[i]) > r:
                total += pi[i] * rows[i][r][0]
        ctr.append(total)
    return ctr


def brute_lru(trace, capacity):
    """Hit/miss list for an LRU cache, scanning timestamps on every eviction."""
    last_use = {}
    out = []
    for t, v in enumerate(trace):
        if v in last_use:
            out.append(True)
        else:
            out.append(False)
            if len(last_use) == capacity:
                victim = min(last_use, key=last_use.get)
                del last_use[victim]
        last_use[v] = t
    return out
