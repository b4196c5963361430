"""Vectorized numpy kernels. Loops run over the short axis only."""
import numpy as np

_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_STEP_KEY = np.uint64(0xD1B54A32D192ED03)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


def sink_sweep(p, y, m, r, out):
    ny = p.shape[1]
    s = y[m]
    if m > 0:
        out[:, 0] = p[:, 0] / (1.0 + r * (s - y[0]))
        for k in range(1, m):
            out[:, k] = (p[:, k] + r * (s - y[k - 1]) * out[:, k - 1]) / (1.0 + r * (s - y[k]))
    if m < ny - 1:
        out[:, ny - 1] = p[:, ny - 1] / (1.0 + r * (y[ny - 1] - s))
        for k in range(ny - 2, m, -1):
            out[:, k] = (p[:, k] + r * (y[k + 1] - s) * out[:, k + 1]) / (1.0 + r * (y[k] - s))
    acc = p[:, m].copy()
    if m > 0:
        acc += r * (s - y[m - 1]) * out[:, m - 1]
    if m < ny - 1:
        acc += r * (y[m + 1] - s) * out[:, m + 1]
    out[:, m] = acc


def _shifted(q, di, dk):
    """``q[i - di, k - dk]`` with zeros outside the array."""
    out = np.zeros_like(q)
    n0, n1 = q.shape
    src0 = slice(max(0, -di), n0 - max(0, di))
    dst0 = slice(max(0, di), n0 - max(0, -di))
    src1 = slice(max(0, -dk), n1 - max(0, dk))
    dst1 = slice(max(0, dk), n1 - max(0, -dk))
    out[dst0, dst1] = q[src0, src1]
    return out


def _stream_sources(qp, qm, a_lo, a_hi, shift):
    rp = qp + a_lo * (_shifted(qp, 1, shift) - qm)
    rm = qm + a_hi * (_shifted(qm, -1, -shift) - qp)
    return rp, rm


def coupled_implicit(qp, qm, a_lo, a_hi, shift, c, P, M):
    rp, rm = _stream_sources(qp, qm, a_lo, a_hi, shift)
    alpha = (1.0 + c) / (1.0 + 2.0 * c)
    beta = c / (1.0 + 2.0 * c)
    P[:] = alpha * rp + beta * rm
    M[:] = beta * rp + alpha * rm
    P[-1] = rp[-1]
    M[-1] = rp[-1]
    M[0] = rm[0]
    P[0] = rm[0]


def coupled_explicit(qp, qm, a_lo, a_hi, l, P, M):
    rp, rm = _stream_sources(qp, qm, a_lo, a_hi, 0)
    d = l * (qp - qm)
    P[:] = rp - d
    M[:] = rm + d
    M[-1] = P[-1]
    P[0] = M[0]


def _mix(z):
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


def uniform_stream(seed, step, idx):
    """Counter-based uniforms in [0, 1) keyed by (seed, step, particle)."""
    with np.errstate(over="ignore"):
        key = _mix(np.uint64(seed) ^ (np.uint64(step) * _STEP_KEY))
        z = _mix(key + (np.asarray(idx, dtype=np.uint64) + np.uint64(1)) * _GOLDEN)
    return (z >> _S11).astype(np.float64) * _INV53


def mc_advance(x, v, y, nsteps, step0, dt, tau, G, lam0, chi, seed):
    idx = np.arange(x.shape[0], dtype=np.uint64)
    p_max = 0.5 * lam0 * (1.0 + abs(chi) * np.pi / 2) * dt
    for n in range(nsteps):
        x += v * dt
        y[:] = (tau * y + dt * G * v) / (tau + dt)
        lo = x < 0.0
        x[lo] = -x[lo]
        v[lo] = -v[lo]
        hi = x > 1.0
        x[hi] = 2.0 - x[hi]
        v[hi] = -v[hi]
        u = uniform_stream(seed, step0 + n, idx)
        cand = np.flatnonzero(u < p_max)
        prob = 0.5 * lam0 * (1.0 - chi * np.arctan(y[cand])) * dt
        flip = cand[u[cand] < prob]
        v[flip] = -v[flip]
