import os
import subprocess
import sys

import numpy as np
import pytest

from twostream.kernels import _numpy as npk

nbk = pytest.importorskip("twostream.kernels._numba")


def pair(rng, shape):
    return rng.random(shape), rng.random(shape)


@pytest.mark.parametrize("m", [0, 4, 8])
def test_sink_sweep(rng, m):
    p = rng.random((7, 9))
    y = np.linspace(-1, 1, 9)
    a, b = np.empty_like(p), np.empty_like(p)
    npk.sink_sweep(p, y, m, 3.7, a)
    nbk.sink_sweep(p, y, m, 3.7, b)
    assert np.allclose(a, b, rtol=1e-14, atol=1e-15)


@pytest.mark.parametrize("shift", [-1, 0, 1])
def test_coupled_implicit(rng, shift):
    qp, qm = pair(rng, (6, 5))
    a_lo, a_hi = rng.random(5), rng.random(5)
    out = [np.empty_like(qp) for _ in range(4)]
    npk.coupled_implicit(qp, qm, a_lo, a_hi, shift, 12.5, out[0], out[1])
    nbk.coupled_implicit(qp, qm, a_lo, a_hi, shift, 12.5, out[2], out[3])
    assert np.allclose(out[0], out[2], rtol=1e-14, atol=1e-15)
    assert np.allclose(out[1], out[3], rtol=1e-14, atol=1e-15)


def test_coupled_explicit(rng):
    qp, qm = pair(rng, (6, 5))
    w = rng.random(5)
    out = [np.empty_like(qp) for _ in range(4)]
    npk.coupled_explicit(qp, qm, w, w, 0.8, out[0], out[1])
    nbk.coupled_explicit(qp, qm, w, w, 0.8, out[2], out[3])
    assert np.allclose(out[0], out[2], rtol=1e-14, atol=1e-15)
    assert np.allclose(out[1], out[3], rtol=1e-14, atol=1e-15)


def test_random_streams_identical():
    idx = np.arange(1000)
    assert np.array_equal(npk.uniform_stream(42, 7, idx), nbk.uniform_stream(42, 7, idx))


def test_monte_carlo_identical(rng):
    n = 20_000
    x0 = rng.random(n)
    v0 = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    y0 = rng.uniform(-0.5, 0.5, n)
    states = [(x0.copy(), v0.copy(), y0.copy()) for _ in range(2)]
    args = (50, 3, 1e-3, 0.1, 1.0, 100.0, 0.5, np.uint64(99))
    npk.mc_advance(*states[0], *args)
    nbk.mc_advance(*states[1], *args)
    # both use the same draws; only the last ulp of x/y may differ
    assert np.array_equal(states[0][1], states[1][1])
    assert np.allclose(states[0][0], states[1][0], rtol=0, atol=1e-12)
    assert np.allclose(states[0][2], states[1][2], rtol=0, atol=1e-12)


def test_environment_flag_selects_numpy():
    env = dict(os.environ, TWOSTREAM_BACKEND="numpy")
    out = subprocess.run([sys.executable, "-c", "import twostream; print(twostream.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
