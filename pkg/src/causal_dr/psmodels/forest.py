"""Random forest of Gini classification trees, compiled with numba.

Trees are grown on bootstrap resamples; at each node ``mtry`` features are
drawn without replacement and the best Gini split among them is taken. A
node holding ``min_node_size`` rows or fewer, or a pure node, becomes a
leaf voting its majority class. The forest probability for a row is the
share of trees voting for treatment. Propensity fits use out-of-bag votes
(only trees whose bootstrap sample missed the row); in-sample votes nearly
reproduce the training labels and are available with ``oob=False``.

Randomness comes from a splitmix64 stream seeded per fit, so a fit is a pure
function of its inputs and the seed.
"""

from __future__ import annotations

import numpy as np
from numba import njit
from numpy.typing import NDArray

from ..errors import ParameterError

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)


@njit(cache=True)
def _next_u64(state):
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit(cache=True)
def _randint(state, k):
    return np.int64(_next_u64(state) % np.uint64(k))


@njit(cache=True)
def _grow_tree(F, y, rows, mtry, min_node, state, feat, thr, left, right, leaf):
    """Grow one tree over ``rows`` (bootstrap indices); returns the node count."""
    n = rows.shape[0]
    q = F.shape[1]
    perm = np.arange(q)
    vals = np.empty(n)
    labs = np.empty(n)
    stack_node = np.empty(2 * n + 1, np.int64)
    stack_lo = np.empty(2 * n + 1, np.int64)
    stack_hi = np.empty(2 * n + 1, np.int64)
    top = 0
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n
    top = 1
    n_nodes = 1
    while top > 0:
        top -= 1
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        size = hi - lo
        ones = 0.0
        for k in range(lo, hi):
            ones += y[rows[k]]
        feat[node] = -1
        if ones > size - ones:
            leaf[node] = 1
        elif ones < size - ones:
            leaf[node] = 0
        else:
            leaf[node] = _randint(state, 2)
        if ones == 0.0 or ones == size or size <= min_node:
            continue
        parent = 2.0 * ones * (size - ones) / size
        best_imp = parent
        best_f = -1
        best_t = 0.0
        # partial Fisher-Yates: first mtry entries of perm are the candidates
        for k in range(mtry):
            r = k + _randint(state, q - k)
            tmp = perm[k]
            perm[k] = perm[r]
            perm[r] = tmp
        for k in range(mtry):
            f = perm[k]
            for m in range(size):
                vals[m] = F[rows[lo + m], f]
                labs[m] = y[rows[lo + m]]
            order = np.argsort(vals[:size], kind="mergesort")
            left_ones = 0.0
            for m in range(size - 1):
                left_ones += labs[order[m]]
                a = vals[order[m]]
                b = vals[order[m + 1]]
                if a >= b:
                    continue
                nl = m + 1.0
                nr = size - nl
                right_ones = ones - left_ones
                imp = 2.0 * left_ones * (nl - left_ones) / nl + 2.0 * right_ones * (nr - right_ones) / nr
                if imp < best_imp - 1e-12:
                    best_imp = imp
                    best_f = f
                    best_t = 0.5 * (a + b)
        if best_f < 0:
            continue
        # partition rows[lo:hi] on the chosen split
        i = lo
        j = hi - 1
        while i <= j:
            if F[rows[i], best_f] <= best_t:
                i += 1
            else:
                tmp = rows[i]
                rows[i] = rows[j]
                rows[j] = tmp
                j -= 1
        feat[node] = best_f
        thr[node] = best_t
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack_node[top] = n_nodes
        stack_lo[top] = lo
        stack_hi[top] = i
        top += 1
        stack_node[top] = n_nodes + 1
        stack_lo[top] = i
        stack_hi[top] = hi
        top += 1
        n_nodes += 2
    return n_nodes


@njit(cache=True)
def _forest_votes(F, y, Fpred, n_trees, mtry, min_node, seed, oob):
    n = F.shape[0]
    state = np.empty(1, np.uint64)
    state[0] = np.uint64(seed)
    cap = 2 * n + 1
    feat = np.empty(cap, np.int64)
    thr = np.empty(cap)
    left = np.empty(cap, np.int64)
    right = np.empty(cap, np.int64)
    leaf = np.empty(cap, np.int64)
    rows = np.empty(n, np.int64)
    votes = np.zeros(Fpred.shape[0])
    counts = np.zeros(Fpred.shape[0])
    inbag = np.zeros(n, np.bool_)
    for _ in range(n_trees):
        inbag[:] = False
        for k in range(n):
            rows[k] = _randint(state, n)
            inbag[rows[k]] = True
        _grow_tree(F, y, rows, mtry, min_node, state, feat, thr, left, right, leaf)
        for k in range(Fpred.shape[0]):
            if oob and inbag[k]:
                continue
            counts[k] += 1.0
            node = 0
            while feat[node] >= 0:
                if Fpred[k, feat[node]] <= thr[node]:
                    node = left[node]
                else:
                    node = right[node]
            votes[k] += leaf[node]
    return votes, counts


def forest_probabilities(
    F: NDArray,
    A: NDArray,
    seed: int,
    n_trees: int = 500,
    mtry: int | None = None,
    min_node_size: int = 5,
    F_new: NDArray | None = None,
    oob: bool = False,
) -> NDArray:
    """Share of trees voting treatment, for ``F_new`` (default: the training rows).

    With ``oob=True`` a training row only counts votes from trees whose
    bootstrap sample left it out; a row never left out gets the prior.
    """
    A = np.asarray(A, dtype=float)
    F = np.ascontiguousarray(np.asarray(F, dtype=float).reshape(len(A), -1))
    q = F.shape[1]
    if n_trees < 1:
        raise ParameterError(f"n_trees must be >= 1, got {n_trees}")
    if min_node_size < 1:
        raise ParameterError(f"min_node_size must be >= 1, got {min_node_size}")
    if len(A) == 0 or A.min() == A.max():
        raise ParameterError("random forest needs both treatment arms")
    if q == 0:
        target = len(A) if F_new is None else len(F_new)
        return np.full(target, A.mean())
    if mtry is None:
        mtry = max(1, int(np.floor(np.sqrt(q))))
    if not 1 <= mtry <= q:
        raise ParameterError(f"mtry must be in [1, {q}], got {mtry}")
    if oob and F_new is not None:
        raise ParameterError("out-of-bag votes are only defined for the training rows")
    Fp = F if F_new is None else np.ascontiguousarray(np.asarray(F_new, dtype=float))
    votes, counts = _forest_votes(
        F, A, Fp, int(n_trees), int(mtry), int(min_node_size), np.uint64(seed), bool(oob)
    )
    with np.errstate(invalid="ignore"):
        probs = votes / counts
    return np.where(counts > 0, probs, A.mean())
