"""Hot inner loops, each in two flavours.

Every kernel exists as a loop version (compiled by numba when available) and a
vectorised numpy version. The module-level names dispatch to one of them
according to :data:`stabcert._accel.USE_NUMBA`; :data:`KERNELS` exposes both so
tests and the benchmark can compare them directly.

Conventions shared by the state-vector kernels: qubit 0 is the most significant
bit of a basis index, so ``index = sum(bit_q << (n - 1 - q))``.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import USE_NUMBA, njit

# ---------------------------------------------------------------------------
# simplex pivot


def _pivot_loops(T, r, c):
    m, w = T.shape
    piv = T[r, c]
    for j in range(w):
        T[r, j] = T[r, j] / piv
    for i in range(m):
        if i == r:
            continue
        f = T[i, c]
        if f != 0.0:
            for j in range(w):
                T[i, j] = T[i, j] - f * T[r, j]
        T[i, c] = 0.0
    T[r, c] = 1.0


def _pivot_numpy(T, r, c):
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    T[:, c] = 0.0
    T[r, c] = 1.0


# ---------------------------------------------------------------------------
# GF(2) rank of bit-packed rows


def _gf2_rank_loops(rows, ncols):
    R = rows.copy()
    m, W = R.shape
    rank = 0
    one = np.uint64(1)
    zero = np.uint64(0)
    for col in range(ncols):
        if rank == m:
            break
        w = col // 64
        b = one << np.uint64(col % 64)
        piv = -1
        for i in range(rank, m):
            if (R[i, w] & b) != zero:
                piv = i
                break
        if piv < 0:
            continue
        if piv != rank:
            for k in range(W):
                tmp = R[piv, k]
                R[piv, k] = R[rank, k]
                R[rank, k] = tmp
        for i in range(m):
            if i != rank and (R[i, w] & b) != zero:
                for k in range(W):
                    R[i, k] = R[i, k] ^ R[rank, k]
        rank += 1
    return rank


def _gf2_rank_numpy(rows, ncols):
    R = rows.copy()
    m = R.shape[0]
    rank = 0
    for col in range(ncols):
        if rank == m:
            break
        w, b = col // 64, np.uint64(1) << np.uint64(col % 64)
        hits = np.nonzero(R[rank:, w] & b)[0]
        if hits.size == 0:
            continue
        piv = rank + hits[0]
        if piv != rank:
            R[[rank, piv]] = R[[piv, rank]]
        mask = (R[:, w] & b) != 0
        mask[rank] = False
        R[mask] ^= R[rank]
        rank += 1
    return rank


# ---------------------------------------------------------------------------
# state-vector gate application


def _apply_1q_loops(state, U, q, n):
    out = state.copy()
    shift = n - 1 - q
    stride = 1 << shift
    u00, u01, u10, u11 = U[0, 0], U[0, 1], U[1, 0], U[1, 1]
    for i in range(state.shape[0]):
        if (i >> shift) & 1 == 0:
            j = i | stride
            a = state[i]
            b = state[j]
            out[i] = u00 * a + u01 * b
            out[j] = u10 * a + u11 * b
    return out


def _apply_1q_numpy(state, U, q, n):
    psi = np.moveaxis(state.reshape((2,) * n), q, 0)
    psi = np.tensordot(U, psi, axes=([1], [0]))
    return np.ascontiguousarray(np.moveaxis(psi, 0, q)).reshape(-1)


def _apply_2q_loops(state, U, q0, q1, n):
    out = state.copy()
    s0 = n - 1 - q0
    s1 = n - 1 - q1
    st0 = 1 << s0
    st1 = 1 << s1
    idx = np.empty(4, dtype=np.int64)
    v = np.empty(4, dtype=np.complex128)
    for i in range(state.shape[0]):
        if (i >> s0) & 1 == 0 and (i >> s1) & 1 == 0:
            idx[0] = i
            idx[1] = i | st1
            idx[2] = i | st0
            idx[3] = i | st0 | st1
            for r in range(4):
                v[r] = state[idx[r]]
            for r in range(4):
                acc = 0j
                for c in range(4):
                    acc += U[r, c] * v[c]
                out[idx[r]] = acc
    return out


def _apply_2q_numpy(state, U, q0, q1, n):
    psi = np.moveaxis(state.reshape((2,) * n), (q0, q1), (0, 1))
    shape = psi.shape
    psi = (U @ psi.reshape(4, -1)).reshape(shape)
    return np.ascontiguousarray(np.moveaxis(psi, (0, 1), (q0, q1))).reshape(-1)


# ---------------------------------------------------------------------------
# classical readout flips on sampled outcomes


def _flip_bits_loops(outcomes, uniforms, p_flip0, p_flip1, n):
    out = outcomes.copy()
    for s in range(outcomes.shape[0]):
        v = outcomes[s]
        for q in range(n):
            shift = n - 1 - q
            if (v >> shift) & 1:
                p = p_flip1[q]
            else:
                p = p_flip0[q]
            if uniforms[s, q] < p:
                out[s] = out[s] ^ (1 << shift)
    return out


def _flip_bits_numpy(outcomes, uniforms, p_flip0, p_flip1, n):
    shifts = (n - 1 - np.arange(n)).astype(np.int64)
    bits = (outcomes[:, None] >> shifts) & 1
    p = np.where(bits == 1, p_flip1, p_flip0)
    flips = (uniforms < p).astype(np.int64) << shifts
    return outcomes ^ flips.sum(axis=1)


# ---------------------------------------------------------------------------
# empirical-Bernstein stopping scan
#
# Checkpoints t_0, t_{k+1} = ceil(num * t_k / den), k = 1, 2, ...; budget at
# checkpoint k is delta * c / k**p. Returns (t, mean, var, radius, stopped).


def _ebstop_scan_loops(x, eps, delta, t0, num, den, p, c, R):
    N = x.shape[0]
    s = 0.0
    s2 = 0.0
    t = 0
    k = 1
    tk = t0
    while tk <= N:
        while t < tk:
            s += x[t]
            s2 += x[t] * x[t]
            t += 1
        mean = s / t
        var = max(s2 / t - mean * mean, 0.0)
        log_term = math.log(3.0 / (delta * c / k**p))
        rad = math.sqrt(var) * math.sqrt(2.0 * log_term / t) + 3.0 * R * log_term / t
        if rad <= eps:
            return t, mean, var, rad, True
        tk = (num * tk + den - 1) // den
        k += 1
    while t < N:
        s += x[t]
        s2 += x[t] * x[t]
        t += 1
    if t == 0:
        return 0, 0.0, 0.0, math.inf, False
    mean = s / t
    var = max(s2 / t - mean * mean, 0.0)
    log_term = math.log(3.0 / (delta * c / k**p))
    rad = math.sqrt(var) * math.sqrt(2.0 * log_term / t) + 3.0 * R * log_term / t
    return t, mean, var, rad, False


def checkpoints(t0: int, num: int, den: int, limit: int) -> np.ndarray:
    """Checkpoint times ``<= limit`` of the geometric schedule."""
    out = []
    t = t0
    while t <= limit:
        out.append(t)
        t = (num * t + den - 1) // den
    return np.asarray(out, dtype=np.int64)


def _ebstop_scan_numpy(x, eps, delta, t0, num, den, p, c, R):
    N = x.shape[0]
    ts = checkpoints(t0, num, den, N)
    if ts.size:
        cs = np.cumsum(x)[ts - 1]
        cs2 = np.cumsum(x * x)[ts - 1]
        mean = cs / ts
        var = np.maximum(cs2 / ts - mean * mean, 0.0)
        ks = np.arange(1, ts.size + 1, dtype=np.float64)
        log_term = np.log(3.0 / (delta * c / ks**p))
        rad = np.sqrt(var) * np.sqrt(2.0 * log_term / ts) + 3.0 * R * log_term / ts
        hit = np.nonzero(rad <= eps)[0]
        if hit.size:
            i = hit[0]
            return int(ts[i]), float(mean[i]), float(var[i]), float(rad[i]), True
    if N == 0:
        return 0, 0.0, 0.0, math.inf, False
    k = ts.size + 1
    mean = float(np.cumsum(x)[-1] / N)
    var = max(float(np.cumsum(x * x)[-1] / N) - mean * mean, 0.0)
    log_term = math.log(3.0 / (delta * c / k**p))
    rad = math.sqrt(var) * math.sqrt(2.0 * log_term / N) + 3.0 * R * log_term / N
    return N, mean, var, rad, False


# ---------------------------------------------------------------------------
# registry and dispatch

_LOOPS = {
    "pivot": _pivot_loops,
    "gf2_rank": _gf2_rank_loops,
    "apply_1q": _apply_1q_loops,
    "apply_2q": _apply_2q_loops,
    "flip_bits": _flip_bits_loops,
    "ebstop_scan": _ebstop_scan_loops,
}
_NUMPY = {
    "pivot": _pivot_numpy,
    "gf2_rank": _gf2_rank_numpy,
    "apply_1q": _apply_1q_numpy,
    "apply_2q": _apply_2q_numpy,
    "flip_bits": _flip_bits_numpy,
    "ebstop_scan": _ebstop_scan_numpy,
}

#: name -> (compiled loop kernel or None, numpy kernel)
KERNELS = {name: (njit(_LOOPS[name]), _NUMPY[name]) for name in _LOOPS}


def _select(name):
    compiled, fallback = KERNELS[name]
    return compiled if USE_NUMBA and compiled is not None else fallback


pivot = _select("pivot")
gf2_rank_packed = _select("gf2_rank")
apply_1q = _select("apply_1q")
apply_2q = _select("apply_2q")
flip_bits = _select("flip_bits")
ebstop_scan = _select("ebstop_scan")
