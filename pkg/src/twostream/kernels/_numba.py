"""numba-compiled kernels, same signatures as the numpy fallback."""
import math

import numpy as np
from numba import config, njit, prange

# the bundled TBB is too old for numba and only produces a warning
config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_STEP_KEY = np.uint64(0xD1B54A32D192ED03)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_INV53 = 1.0 / 9007199254740992.0


_BLOCK = 8


@njit(parallel=True, cache=True)
def sink_sweep(p, y, m, r, out):
    n0, ny = p.shape
    s = y[m]
    # per-node outflow divisor and inflow weights from the upstream neighbour
    den = np.empty(ny)
    inflow = np.zeros(ny)
    up = np.zeros(ny)
    for k in range(ny):
        den[k] = 1.0 / (1.0 + r * abs(s - y[k]))
    for k in range(1, m + 1):
        inflow[k] = r * (s - y[k - 1])
    for k in range(m, ny - 1):
        up[k] = r * (y[k + 1] - s)
    nblocks = (n0 + _BLOCK - 1) // _BLOCK
    # columns are swept in interleaved blocks so the recurrences overlap
    for blk in prange(nblocks):
        i0 = blk * _BLOCK
        nb = min(_BLOCK, n0 - i0)
        carry = np.zeros(_BLOCK)
        for k in range(m):
            for b in range(nb):
                v = (p[i0 + b, k] + inflow[k] * carry[b]) * den[k]
                carry[b] = v
                out[i0 + b, k] = v
        carry[:] = 0.0
        for k in range(ny - 1, m, -1):
            for b in range(nb):
                v = (p[i0 + b, k] + up[k] * carry[b]) * den[k]
                carry[b] = v
                out[i0 + b, k] = v
        for b in range(nb):
            i = i0 + b
            acc = p[i, m]
            if m > 0:
                acc += inflow[m] * out[i, m - 1]
            if m < ny - 1:
                acc += up[m] * out[i, m + 1]
            out[i, m] = acc


@njit(inline="always")
def _row_sources(qp, qm, a_lo, a_hi, shift, i, P, M):
    """Write the uncoupled stream updates of row ``i`` into ``P`` and ``M``."""
    n0, ny = qp.shape
    for k in range(ny):
        P[i, k] = qp[i, k] - a_lo[k] * qm[i, k]
        M[i, k] = qm[i, k] - a_hi[k] * qp[i, k]
    lo = max(0, shift)
    hi = min(ny, ny + shift)
    if i > 0:
        for k in range(lo, hi):
            P[i, k] += a_lo[k] * qp[i - 1, k - shift]
    if i < n0 - 1:
        for k in range(ny - hi, ny - lo):
            M[i, k] += a_hi[k] * qm[i + 1, k + shift]


@njit(parallel=True, cache=True)
def coupled_implicit(qp, qm, a_lo, a_hi, shift, c, P, M):
    n0, ny = qp.shape
    alpha = (1.0 + c) / (1.0 + 2.0 * c)
    beta = c / (1.0 + 2.0 * c)
    for i in prange(n0):
        _row_sources(qp, qm, a_lo, a_hi, shift, i, P, M)
        if i == n0 - 1:
            for k in range(ny):
                M[i, k] = P[i, k]
        elif i == 0:
            for k in range(ny):
                P[i, k] = M[i, k]
        else:
            for k in range(ny):
                rp = P[i, k]
                rm = M[i, k]
                P[i, k] = alpha * rp + beta * rm
                M[i, k] = beta * rp + alpha * rm


@njit(parallel=True, cache=True)
def coupled_explicit(qp, qm, a_lo, a_hi, l, P, M):
    n0, ny = qp.shape
    for i in prange(n0):
        _row_sources(qp, qm, a_lo, a_hi, 0, i, P, M)
        for k in range(ny):
            d = l * (qp[i, k] - qm[i, k])
            P[i, k] -= d
            M[i, k] += d
        if i == n0 - 1:
            for k in range(ny):
                M[i, k] = P[i, k]
        elif i == 0:
            for k in range(ny):
                P[i, k] = M[i, k]


@njit(inline="always")
def _mix(z):
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit(cache=True)
def _step_key(seed, step):
    return _mix(np.uint64(seed) ^ (np.uint64(step) * _STEP_KEY))


@njit(inline="always")
def _uniform(key, j):
    z = _mix(key + (np.uint64(j) + _ONE) * _GOLDEN)
    return np.float64(z >> _S11) * _INV53


@njit(parallel=True, cache=True)
def mc_advance(x, v, y, nsteps, step0, dt, tau, G, lam0, chi, seed):
    n = x.shape[0]
    keys = np.empty(nsteps, dtype=np.uint64)
    for s in range(nsteps):
        keys[s] = _step_key(seed, step0 + s)
    p_max = 0.5 * lam0 * (1.0 + abs(chi) * math.pi / 2) * dt
    half_rate = 0.5 * lam0 * dt
    inv = 1.0 / (tau + dt)
    for j in prange(n):
        xj = x[j]
        vj = v[j]
        yj = y[j]
        for s in range(nsteps):
            xj += vj * dt
            yj = (tau * yj + dt * G * vj) * inv
            if xj < 0.0:
                xj = -xj
                vj = -vj
            elif xj > 1.0:
                xj = 2.0 - xj
                vj = -vj
            u = _uniform(keys[s], j)
            if u < p_max and u < half_rate * (1.0 - chi * math.atan(yj)):
                vj = -vj
        x[j] = xj
        v[j] = vj
        y[j] = yj


def uniform_stream(seed, step, idx):
    idx = np.asarray(idx, dtype=np.uint64)
    # the key comes back as a Python int; int64 + uint64 would promote to float
    return _uniform_many(np.uint64(_step_key(seed, step)), idx)


@njit(cache=True)
def _uniform_many(key, idx):
    out = np.empty(idx.shape[0])
    for j in range(idx.shape[0]):
        out[j] = _uniform(key, idx[j])
    return out
