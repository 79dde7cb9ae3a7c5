"""Numeric inner loops, compiled with numba when available.

Every kernel has a pure-numpy twin. The numba path is used unless numba is
missing or the environment variable ``BIRKHOFF_MF_DISABLE_NUMBA`` is set to
a truthy value ("1", "true", "yes"). Both paths are importable directly as
``<name>_numpy`` / ``<name>_numba`` so they can be compared in tests and in
``benchmarks/bench_kernels.py``.
"""
from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

_DISABLE = os.environ.get("BIRKHOFF_MF_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")
HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not _DISABLE


def _njit(fn):
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, fastmath=False)(fn)


# --------------------------------------------------------------------------
# weighted moments of (log r, f) under w_e = exp(t log r_e + q f_e)


def weighted_moments_numpy(log_r, f, t, q):
    """Return ``(log Z, E[log r], E[f], Var log r, Cov, Var f)``.

    Z is the sum of the weights; expectations are taken under the normalised
    weights. Computed with a max shift so large |t|, |q| never overflow.
    """
    lw = t * log_r + q * f
    m = lw.max()
    w = np.exp(lw - m)
    z = w.sum()
    p = w / z
    mr = p @ log_r
    mf = p @ f
    dr = log_r - mr
    df = f - mf
    return (m + math.log(z), mr, mf, p @ (dr * dr), p @ (dr * df), p @ (df * df))


def _weighted_moments_loop(log_r, f, t, q):
    n = log_r.shape[0]
    m = -np.inf
    for i in range(n):
        v = t * log_r[i] + q * f[i]
        if v > m:
            m = v
    z = 0.0
    sr = 0.0
    sf = 0.0
    for i in range(n):
        w = math.exp(t * log_r[i] + q * f[i] - m)
        z += w
        sr += w * log_r[i]
        sf += w * f[i]
    mr = sr / z
    mf = sf / z
    vrr = 0.0
    vrf = 0.0
    vff = 0.0
    for i in range(n):
        w = math.exp(t * log_r[i] + q * f[i] - m)
        dr = log_r[i] - mr
        df = f[i] - mf
        vrr += w * dr * dr
        vrf += w * dr * df
        vff += w * df * df
    return (m + math.log(z), mr, mf, vrr / z, vrf / z, vff / z)


weighted_moments_numba = _njit(_weighted_moments_loop)


# --------------------------------------------------------------------------
# Perron root and vector of a nonnegative irreducible matrix


def perron_numpy(m, tol, max_iter):
    """Power iteration on ``m + I``; returns ``(rho, v, iterations)``.

    The unit shift makes irreducible periodic matrices primitive without
    moving the Perron vector. ``iterations == -1`` signals non-convergence.
    """
    n = m.shape[0]
    b = m + np.eye(n)
    v = np.full(n, 1.0 / n)
    lam = 0.0
    for it in range(1, max_iter + 1):
        w = b @ v
        new_lam = w.sum() / v.sum()
        w /= w.sum()
        # componentwise relative test: tiny Perron entries must converge too
        if abs(new_lam - lam) <= tol * new_lam and np.all(np.abs(w - v) <= 1e3 * tol * w):
            return new_lam - 1.0, w, it
        v = w
        lam = new_lam
    return lam - 1.0, v, -1


def _perron_loop(m, tol, max_iter):
    n = m.shape[0]
    v = np.full(n, 1.0 / n)
    w = np.empty(n)
    lam = 0.0
    for it in range(1, max_iter + 1):
        s = 0.0
        for i in range(n):
            acc = v[i]
            for j in range(n):
                acc += m[i, j] * v[j]
            w[i] = acc
            s += acc
        new_lam = s  # v sums to one
        diff = 0.0
        for i in range(n):
            w[i] /= s
            d = abs(w[i] - v[i]) - 1e3 * tol * w[i]
            if d > diff:
                diff = d
        if abs(new_lam - lam) <= tol * new_lam and diff <= 0.0:
            return new_lam - 1.0, w.copy(), it
        for i in range(n):
            v[i] = w[i]
        lam = new_lam
    return lam - 1.0, v.copy(), -1


perron_numba = _njit(_perron_loop)


# --------------------------------------------------------------------------
# Karp minimum mean cycle, node weights on the source node of each edge


def min_mean_cycle_numpy(adj, weight):
    """Minimum cycle mean of the graph ``adj`` where edge a->b costs weight[a].

    Karp's recurrence with a virtual source joined to every node. Returns
    ``inf`` for an acyclic graph.
    """
    n = adj.shape[0]
    mask = adj > 0
    d = np.full((n + 1, n), np.inf)
    d[0] = 0.0
    for k in range(1, n + 1):
        cand = np.where(mask, (d[k - 1] + weight)[:, None], np.inf)
        d[k] = cand.min(axis=0)
    best = np.inf
    dn = d[n]
    for v in range(n):
        if not np.isfinite(dn[v]):
            continue
        ks = np.arange(n)
        dk = d[:n, v]
        ok = np.isfinite(dk)
        worst = np.max((dn[v] - dk[ok]) / (n - ks[ok]))
        best = min(best, worst)
    return float(best)


def _min_mean_cycle_loop(adj, weight):
    n = adj.shape[0]
    d = np.full((n + 1, n), np.inf)
    for v in range(n):
        d[0, v] = 0.0
    for k in range(1, n + 1):
        for a in range(n):
            da = d[k - 1, a]
            if da == np.inf:
                continue
            c = da + weight[a]
            for b in range(n):
                if adj[a, b] > 0 and c < d[k, b]:
                    d[k, b] = c
    best = np.inf
    for v in range(n):
        if d[n, v] == np.inf:
            continue
        worst = -np.inf
        for k in range(n):
            if d[k, v] == np.inf:
                continue
            val = (d[n, v] - d[k, v]) / (n - k)
            if val > worst:
                worst = val
        if worst < best:
            best = worst
    return best


min_mean_cycle_numba = _njit(_min_mean_cycle_loop)


# --------------------------------------------------------------------------
# exhaustive cylinder enumeration for the Gibbs inequality


def gibbs_ratio_bounds_numpy(adj, log_w, log_pi, log_t, pressure, max_len):
    """Min and max of ``log mu[w] - (S_n - n P)`` over admissible words.

    ``log_w[a]`` is the one-step potential, ``log_pi`` the stationary vector
    and ``log_t`` the log transition matrix (``-inf`` off the support).
    Words of every length ``1..max_len`` are enumerated level by level.
    """
    n = adj.shape[0]
    last = np.arange(n)
    gap = log_pi - (log_w - pressure)
    lo = gap.min()
    hi = gap.max()
    for _ in range(1, max_len):
        rows = np.repeat(last, n)
        cols = np.tile(np.arange(n), last.size)
        keep = adj[rows, cols] > 0
        rows, cols = rows[keep], cols[keep]
        gap = np.repeat(gap, n)[keep] + log_t[rows, cols] - (log_w[cols] - pressure)
        last = cols
        lo = min(lo, gap.min())
        hi = max(hi, gap.max())
    return lo, hi


def _gibbs_ratio_bounds_loop(adj, log_w, log_pi, log_t, pressure, max_len):
    n = adj.shape[0]
    lo = np.inf
    hi = -np.inf
    stack_sym = np.empty(max_len, dtype=np.int64)
    stack_gap = np.empty(max_len)
    stack_next = np.empty(max_len, dtype=np.int64)
    for a in range(n):
        g = log_pi[a] - (log_w[a] - pressure)
        if g < lo:
            lo = g
        if g > hi:
            hi = g
        depth = 0
        stack_sym[0] = a
        stack_gap[0] = g
        stack_next[0] = 0
        while depth >= 0:
            if depth + 1 >= max_len or stack_next[depth] >= n:
                depth -= 1
                continue
            b = stack_next[depth]
            stack_next[depth] += 1
            prev = stack_sym[depth]
            if adj[prev, b] == 0:
                continue
            g = stack_gap[depth] + log_t[prev, b] - (log_w[b] - pressure)
            if g < lo:
                lo = g
            if g > hi:
                hi = g
            depth += 1
            stack_sym[depth] = b
            stack_gap[depth] = g
            stack_next[depth] = 0
    return lo, hi


gibbs_ratio_bounds_numba = _njit(_gibbs_ratio_bounds_loop)


# --------------------------------------------------------------------------
# dispatch

if USE_NUMBA:
    weighted_moments = weighted_moments_numba
    perron = perron_numba
    min_mean_cycle = min_mean_cycle_numba
    gibbs_ratio_bounds = gibbs_ratio_bounds_numba
else:
    weighted_moments = weighted_moments_numpy
    perron = perron_numpy
    min_mean_cycle = min_mean_cycle_numpy
    gibbs_ratio_bounds = gibbs_ratio_bounds_numpy


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
