"""Hot loops: diamond marching, the Duhamel recursion and leapfrog stepping.

Each kernel exists twice, a compiled loop (``*_nb``) and a row-vectorised numpy
version (``*_np``).  The public wrappers pick one from :mod:`dampwave._accel`.
Both versions perform the same floating point operations row by row, so they
agree to rounding.

Status codes returned by the marching kernels:
0 completed, 1 blew up (sup |u| reached the threshold), 2 non-finite values.
"""

import math

import numpy as np

from ._accel import backend, njit

COMPLETED, BLEW_UP, NONFINITE = 0, 1, 2


@njit
def _powabs(u, p):
    # |u|^p through exp/log, continuous extension 0 at u = 0
    if u == 0.0:
        return 0.0
    return math.exp(p * math.log(abs(u)))


def _powabs_np(u, p):
    a = np.abs(u)
    out = np.zeros_like(a)
    nz = a > 0
    out[nz] = np.exp(p * np.log(a[nz]))
    return out


# --------------------------------------------------------------------------
# diamond marching of u(x,t+h) = u(x+h,t) + u(x-h,t) - u(x,t-h) + h^2 G(x,t)
# --------------------------------------------------------------------------


@njit
def _march_nb(row0, row1, h, p, src, c, K, n_end, threshold, store, stride, sup, F, S):
    ncols = row0.shape[0]
    prev = row0.copy()
    cur = row1.copy()
    nxt = np.zeros(ncols)
    nstore = store.shape[0]
    for m in range(2):
        r = row0 if m == 0 else row1
        s_abs = 0.0
        s_sum = 0.0
        s_pow = 0.0
        for i in range(ncols):
            a = abs(r[i])
            if a > s_abs:
                s_abs = a
            s_sum += r[i]
            s_pow += _powabs(r[i], p)
        sup[m] = s_abs
        F[m] = h * s_sum
        S[m] = h * s_pow
        if m % stride == 0 and m // stride < nstore:
            store[m // stride, :] = r
        if not (s_abs < np.inf) or s_sum != s_sum:
            return NONFINITE, m
        if s_abs >= threshold:
            return BLEW_UP, m
    h2 = h * h
    for n in range(1, n_end):
        t = n * h
        wt = src * math.exp(-(p - 1.0) * math.log1p(t))
        lo = c - (n + 1 + K)
        hi = c + (n + 1 + K)
        if lo < 1:
            lo = 1
        if hi > ncols - 2:
            hi = ncols - 2
        s_abs = 0.0
        s_sum = 0.0
        s_pow = 0.0
        for i in range(lo, hi + 1):
            v = cur[i + 1] + cur[i - 1] - prev[i] + h2 * wt * _powabs(cur[i], p)
            nxt[i] = v
            a = abs(v)
            if a > s_abs:
                s_abs = a
            s_sum += v
            s_pow += _powabs(v, p)
        m = n + 1
        sup[m] = s_abs
        F[m] = h * s_sum
        S[m] = h * s_pow
        if m % stride == 0 and m // stride < nstore:
            store[m // stride, :] = nxt
        if not (s_abs < np.inf) or s_sum != s_sum:  # NaN skips the max
            return NONFINITE, m
        if s_abs >= threshold:
            return BLEW_UP, m
        tmp = prev
        prev = cur
        cur = nxt
        nxt = tmp
    return COMPLETED, n_end


def _march_np(row0, row1, h, p, src, c, K, n_end, threshold, store, stride, sup, F, S):
    ncols = row0.shape[0]
    prev = row0.copy()
    cur = row1.copy()
    nxt = np.zeros(ncols)
    nstore = store.shape[0]
    with np.errstate(over="ignore", invalid="ignore"):
        for m, r in enumerate((row0, row1)):
            sup[m] = np.max(np.abs(r))
            F[m] = h * np.sum(r)
            S[m] = h * np.sum(_powabs_np(r, p))
            if m % stride == 0 and m // stride < nstore:
                store[m // stride, :] = r
            if not np.isfinite(sup[m]):
                return NONFINITE, m
            if sup[m] >= threshold:
                return BLEW_UP, m
        h2 = h * h
        for n in range(1, n_end):
            t = n * h
            wt = src * math.exp(-(p - 1.0) * math.log1p(t))
            lo = max(c - (n + 1 + K), 1)
            hi = min(c + (n + 1 + K), ncols - 2)
            sl = slice(lo, hi + 1)
            v = cur[lo + 1 : hi + 2] + cur[lo - 1 : hi] - prev[sl] + h2 * wt * _powabs_np(cur[sl], p)
            nxt[sl] = v
            m = n + 1
            sup[m] = np.max(np.abs(v))
            F[m] = h * np.sum(v)
            S[m] = h * np.sum(_powabs_np(v, p))
            if m % stride == 0 and m // stride < nstore:
                store[m // stride, :] = nxt
            if not np.isfinite(sup[m]):
                return NONFINITE, m
            if sup[m] >= threshold:
                return BLEW_UP, m
            prev, cur, nxt = cur, nxt, prev
    return COMPLETED, n_end


def march(row0, row1, h, p, src, c, K, n_end, threshold, store, stride):
    """Run the diamond march from rows 0 and 1 up to row ``n_end``.

    Returns ``(status, last_row, sup, F, S)`` where the per-row diagnostics are
    ``sup |u|``, ``h sum u`` and ``h sum |u|^p``.
    """
    sup = np.full(n_end + 1, np.nan)
    F = np.full(n_end + 1, np.nan)
    S = np.full(n_end + 1, np.nan)
    fn = _march_nb if backend() == "numba" else _march_np
    status, last = fn(
        np.ascontiguousarray(row0, dtype=float),
        np.ascontiguousarray(row1, dtype=float),
        float(h),
        float(p),
        float(src),
        int(c),
        int(K),
        int(n_end),
        float(threshold),
        store,
        int(stride),
        sup,
        F,
        S,
    )
    return int(status), int(last), sup, F, S


# --------------------------------------------------------------------------
# Duhamel recursion for L(F) on the lattice; G is F already multiplied by the
# time weight (1+s)^{-(p-1)}.
# --------------------------------------------------------------------------


@njit
def _duhamel_nb(G, h):
    nr, nc = G.shape
    L = np.zeros((nr, nc))
    if nr < 2:
        return L
    h2 = h * h
    for i in range(1, nc - 1):
        L[1, i] = h2 / 6.0 * (G[0, i - 1] + G[0, i + 1] + G[1, i])
    for n in range(1, nr - 1):
        for i in range(1, nc - 1):
            L[n + 1, i] = L[n, i + 1] + L[n, i - 1] - L[n - 1, i] + h2 * G[n, i]
    return L


def _duhamel_np(G, h):
    nr, nc = G.shape
    L = np.zeros((nr, nc))
    if nr < 2:
        return L
    h2 = h * h
    L[1, 1:-1] = h2 / 6.0 * (G[0, :-2] + G[0, 2:] + G[1, 1:-1])
    for n in range(1, nr - 1):
        L[n + 1, 1:-1] = L[n, 2:] + L[n, :-2] - L[n - 1, 1:-1] + h2 * G[n, 1:-1]
    return L


def duhamel(G, h):
    G = np.ascontiguousarray(G, dtype=float)
    if backend() == "numba":
        return _duhamel_nb(G, float(h))
    return _duhamel_np(G, float(h))


# --------------------------------------------------------------------------
# leapfrog: (1+a_n) v^{n+1} = 2 v^n - (1-a_n) v^{n-1}
#                             + dt^2 (D2 v^n - m_n v^n + s_n |v^n|^p)
# --------------------------------------------------------------------------


@njit
def _leapfrog_nb(v0, v1, dx, dt, p, a, mass, s, n_end, threshold, store, stride, sup, F, S):
    nc = v0.shape[0]
    prev = v0.copy()
    cur = v1.copy()
    nxt = np.zeros(nc)
    nstore = store.shape[0]
    lam = (dt / dx) ** 2
    dt2 = dt * dt
    for m in range(2):
        r = v0 if m == 0 else v1
        s_abs = 0.0
        s_sum = 0.0
        s_pow = 0.0
        for i in range(nc):
            x = abs(r[i])
            if x > s_abs:
                s_abs = x
            s_sum += r[i]
            s_pow += _powabs(r[i], p)
        sup[m] = s_abs
        F[m] = dx * s_sum
        S[m] = dx * s_pow
        if m % stride == 0 and m // stride < nstore:
            store[m // stride, :] = r
        if not (s_abs < np.inf) or s_sum != s_sum:
            return NONFINITE, m
        if s_abs >= threshold:
            return BLEW_UP, m
    for n in range(1, n_end):
        inv = 1.0 / (1.0 + a[n])
        cm = 1.0 - a[n]
        s_abs = 0.0
        s_sum = 0.0
        s_pow = 0.0
        for i in range(1, nc - 1):
            u = cur[i]
            rhs = 2.0 * u - cm * prev[i] + lam * (cur[i + 1] - 2.0 * u + cur[i - 1]) + dt2 * (s[n] * _powabs(u, p) - mass[n] * u)
            v = rhs * inv
            nxt[i] = v
            x = abs(v)
            if x > s_abs:
                s_abs = x
            s_sum += v
            s_pow += _powabs(v, p)
        m = n + 1
        sup[m] = s_abs
        F[m] = dx * s_sum
        S[m] = dx * s_pow
        if m % stride == 0 and m // stride < nstore:
            store[m // stride, :] = nxt
        if not (s_abs < np.inf) or s_sum != s_sum:  # NaN skips the max
            return NONFINITE, m
        if s_abs >= threshold:
            return BLEW_UP, m
        tmp = prev
        prev = cur
        cur = nxt
        nxt = tmp
    return COMPLETED, n_end


def _leapfrog_np(v0, v1, dx, dt, p, a, mass, s, n_end, threshold, store, stride, sup, F, S):
    nc = v0.shape[0]
    prev = v0.copy()
    cur = v1.copy()
    nxt = np.zeros(nc)
    nstore = store.shape[0]
    lam = (dt / dx) ** 2
    dt2 = dt * dt
    with np.errstate(over="ignore", invalid="ignore"):
        for m, r in enumerate((v0, v1)):
            sup[m] = np.max(np.abs(r))
            F[m] = dx * np.sum(r)
            S[m] = dx * np.sum(_powabs_np(r, p))
            if m % stride == 0 and m // stride < nstore:
                store[m // stride, :] = r
            if not np.isfinite(sup[m]):
                return NONFINITE, m
            if sup[m] >= threshold:
                return BLEW_UP, m
        for n in range(1, n_end):
            u = cur[1:-1]
            rhs = 2.0 * u - (1.0 - a[n]) * prev[1:-1] + lam * (cur[2:] - 2.0 * u + cur[:-2]) + dt2 * (s[n] * _powabs_np(u, p) - mass[n] * u)
            v = rhs * (1.0 / (1.0 + a[n]))
            nxt[1:-1] = v
            m = n + 1
            sup[m] = np.max(np.abs(v))
            F[m] = dx * np.sum(v)
            S[m] = dx * np.sum(_powabs_np(v, p))
            if m % stride == 0 and m // stride < nstore:
                store[m // stride, :] = nxt
            if not np.isfinite(sup[m]):
                return NONFINITE, m
            if sup[m] >= threshold:
                return BLEW_UP, m
            prev, cur, nxt = cur, nxt, prev
    return COMPLETED, n_end


def leapfrog(v0, v1, dx, dt, p, a, mass, s, n_end, threshold, store, stride):
    """Leapfrog march with per-step damping ``a``, mass and source coefficients."""
    sup = np.full(n_end + 1, np.nan)
    F = np.full(n_end + 1, np.nan)
    S = np.full(n_end + 1, np.nan)
    fn = _leapfrog_nb if backend() == "numba" else _leapfrog_np
    status, last = fn(
        np.ascontiguousarray(v0, dtype=float),
        np.ascontiguousarray(v1, dtype=float),
        float(dx),
        float(dt),
        float(p),
        np.ascontiguousarray(a, dtype=float),
        np.ascontiguousarray(mass, dtype=float),
        np.ascontiguousarray(s, dtype=float),
        int(n_end),
        float(threshold),
        store,
        int(stride),
        sup,
        F,
        S,
    )
    return int(status), int(last), sup, F, S
