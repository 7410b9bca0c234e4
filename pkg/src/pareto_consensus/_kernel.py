"""Compiled inner loop for the synchronous round update.

All reductions run in a fixed index order, single-threaded, so results are
bitwise reproducible regardless of thread settings.
"""
import numpy as np
from numba import njit

OK = 0
NON_FINITE = 1
STEP_CAP = 2

# indices into the running audit vector
ROW_SUM_DEV = 0
OFF_PATTERN_MAX = 1
MIN_IN_PATTERN = 2
FLOOR_MARGIN = 3  # min over rounds of min W(k+1) - min W(k); negative means the floor dropped
GRAD_NORM_MAX = 4
STEP_NORM_MAX = 5
CLIP_COUNT = 6
N_STATS = 7


def new_stats():
    s = np.zeros(N_STATS)
    s[MIN_IN_PATTERN] = np.inf
    s[FLOOR_MARGIN] = np.inf
    return s


@njit(cache=True)
def advance(k0, n_steps, nbr, deg, c, W, Z, Ht, X, S, quad, lin, exp_ptr, exp_coord, exp_coef, exp_rate,
            alpha, l1_cap, l1_error, from_updated, track_phi, Phi, stats, info):
    """Run rounds ``k0 .. k0 + n_steps - 1`` in place.

    Mutates ``W``, ``X``, ``S``, ``Phi``, ``stats``. Returns a status code; on
    failure ``info`` holds (agent, coordinate, round, value) with 0-based
    agent/coordinate.
    """
    n, m = X.shape
    W_next = np.empty_like(W)
    A = np.empty_like(W)
    X_next = np.empty_like(X)
    D = np.empty_like(X)
    scale = np.empty(n)
    Phi_next = np.empty_like(Phi)
    for k in range(k0, k0 + n_steps):
        # priorities: W(k+1) = P W(k), as w^i + c sum_j (w^j - w^i)
        for i in range(n):
            for j in range(n):
                acc = 0.0
                for t in range(deg[i]):
                    acc += W[nbr[i, t], j] - W[i, j]
                W_next[i, j] = W[i, j] + c * acc
        Wsrc = W_next if from_updated else W
        # mixing weights
        for i in range(n):
            folded = 0.0
            for j in range(n):
                A[i, j] = Z[i, j] * Wsrc[i, j]
                folded += Wsrc[i, j] * Ht[i, j]
            A[i, i] += folded
        # audit of A(k)
        for i in range(n):
            rs = 0.0
            for j in range(n):
                a = A[i, j]
                rs += a
                if Z[i, j] > 0.0:
                    if a < stats[MIN_IN_PATTERN]:
                        stats[MIN_IN_PATTERN] = a
                elif abs(a) > stats[OFF_PATTERN_MAX]:
                    stats[OFF_PATTERN_MAX] = abs(a)
            dev = abs(rs - 1.0)
            if dev > stats[ROW_SUM_DEV]:
                stats[ROW_SUM_DEV] = dev
        mn_old = W[0, 0]
        mn_new = W_next[0, 0]
        for i in range(n):
            for j in range(n):
                if W[i, j] < mn_old:
                    mn_old = W[i, j]
                if W_next[i, j] < mn_new:
                    mn_new = W_next[i, j]
        if mn_new - mn_old < stats[FLOOR_MARGIN]:
            stats[FLOOR_MARGIN] = mn_new - mn_old
        # local gradients at x^i(k)
        for i in range(n):
            for p in range(m):
                acc = lin[i, p]
                for q in range(m):
                    acc += 2.0 * quad[i, p, q] * X[i, q]
                D[i, p] = acc
            for t in range(exp_ptr[i], exp_ptr[i + 1]):
                p = exp_coord[t]
                D[i, p] += exp_coef[t] * exp_rate[t] * np.exp(exp_rate[t] * X[i, p])
            nrm = 0.0
            for p in range(m):
                nrm += D[i, p] * D[i, p]
            nrm = np.sqrt(nrm)
            if nrm > stats[GRAD_NORM_MAX]:
                stats[GRAD_NORM_MAX] = nrm
            step_norm = alpha * nrm
            scale[i] = 1.0
            if l1_cap > 0.0 and step_norm > l1_cap:
                if l1_error:
                    info[0] = i
                    info[1] = -1
                    info[2] = k
                    info[3] = step_norm
                    return STEP_CAP
                scale[i] = l1_cap / step_norm
                step_norm = l1_cap
                stats[CLIP_COUNT] += 1.0
            if step_norm > stats[STEP_NORM_MAX]:
                stats[STEP_NORM_MAX] = step_norm
        # x^i(k+1) = sum_j a_ij x^j(k) - alpha d^i(k)
        for i in range(n):
            for p in range(m):
                acc = 0.0
                for j in range(n):
                    acc += A[i, j] * X[j, p]
                v = acc - alpha * scale[i] * D[i, p]
                if not np.isfinite(v):
                    info[0] = i
                    info[1] = p
                    info[2] = k
                    info[3] = v
                    return NON_FINITE
                X_next[i, p] = v
        if track_phi:
            for i in range(n):
                for j in range(n):
                    acc = 0.0
                    for l in range(n):
                        acc += A[i, l] * Phi[l, j]
                    Phi_next[i, j] = acc
            Phi[:, :] = Phi_next
        X[:, :] = X_next
        W[:, :] = W_next
        for i in range(n):
            for p in range(m):
                S[i, p] += X[i, p]
    return OK
