"""Compiled inner loop of the extremal-count recursion."""

import numpy as np
from numba import njit


@njit(cache=True)
def best_compositions(n, m, idx, mul, nterms, rec, dom_ptr, dom_idx, binom, table, ties):
    """Maximise blowup count + sum of table[n_j] over recursive j, over compositions of n.

    Only compositions with comp[j] <= comp[d] for every dominator d of j are
    visited (one or more per symmetry orbit).  A composition that puts all n
    vertices into one recursive part is skipped.  Every maximiser seen is
    written to ``ties``; returns (best value or -1, number of maximisers),
    where a count above ``len(ties)`` means the buffer overflowed.
    """
    comp = np.zeros(m, np.int64)
    rests = np.zeros(m + 1, np.int64)
    rests[0] = n
    comp[0] = -1
    best = -1
    count = 0
    cap = ties.shape[0]
    p = 0
    while p >= 0:
        ub = rests[p]
        for t in range(dom_ptr[p], dom_ptr[p + 1]):
            d = comp[dom_idx[t]]
            if d < ub:
                ub = d
        if p == m - 1:
            c = rests[p]
            if c <= ub:
                comp[p] = c
                ok = True
                if n > 0:
                    for j in range(m):
                        if rec[j] and comp[j] == n:
                            ok = False
                            break
                if ok:
                    val = 0
                    for k in range(idx.shape[0]):
                        term = 1
                        for s in range(nterms[k]):
                            term *= binom[comp[idx[k, s]], mul[k, s]]
                            if term == 0:
                                break
                        val += term
                    for j in range(m):
                        if rec[j]:
                            val += table[comp[j]]
                    if val > best:
                        best = val
                        count = 0
                    if val == best:
                        if count < cap:
                            for j in range(m):
                                ties[count, j] = comp[j]
                        count += 1
            p -= 1
            continue
        comp[p] += 1
        if comp[p] > ub:
            comp[p] = -1
            p -= 1
            continue
        rests[p + 1] = rests[p] - comp[p]
        p += 1
        if p < m - 1:
            comp[p] = -1
    return best, count
