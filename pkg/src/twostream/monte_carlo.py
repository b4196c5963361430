"""Particle simulation of the two-stream model.

Each step advects, relaxes the internal state, reflects at the walls and
then tumbles with probability ``lambda0 * Lambda(y) * dt / 2``. Uniform
draws come from a counter-based generator keyed on (seed, step, particle),
so results do not depend on how particles are split across threads.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ParameterError
from .model import MacroDensity

DEFAULT_DT = 1e-4
DEFAULT_PARTICLES = 1_200_000


def default_dt(lambda0):
    """``1e-4``, or ``1e-5`` once ``lambda0`` reaches ``1e4``."""
    return 1e-5 if lambda0 >= 1e4 else DEFAULT_DT


@dataclass
class ParticleEnsemble:
    x: np.ndarray
    v: np.ndarray
    y: np.ndarray
    rng_seed: int = 0
    steps: int = 0
    time: float = 0.0

    def __post_init__(self):
        self.x = np.ascontiguousarray(self.x, dtype=np.float64)
        self.v = np.ascontiguousarray(self.v, dtype=np.float64)
        self.y = np.ascontiguousarray(self.y, dtype=np.float64)
        if not (self.x.shape == self.v.shape == self.y.shape) or self.x.ndim != 1:
            raise ValueError("x, v and y must be 1-D arrays of equal length")

    @property
    def n_particles(self):
        return self.x.shape[0]

    N_p = n_particles

    def copy(self):
        return ParticleEnsemble(self.x.copy(), self.v.copy(), self.y.copy(),
                                self.rng_seed, self.steps, self.time)


def init_particles(n, params=None, seed=0):
    """Uniform positions, balanced velocities, ``y`` uniform on ``[-|G|/2, |G|/2]``."""
    if n < 0:
        raise ValueError(f"particle count must be nonnegative, got {n}")
    G = abs(params.G) if params is not None else 1.0
    rng = np.random.default_rng(seed)
    x = rng.random(n)
    v = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    y = rng.uniform(-G / 2, G / 2, n)
    # the tumbling stream gets its own key so it never overlaps the draws above
    key = int(np.random.SeedSequence(seed).generate_state(1, dtype=np.uint64)[0])
    return ParticleEnsemble(x, v, y, rng_seed=key)


def tumble_probability_max(params, dt):
    return 0.5 * params.lambda0 * (1.0 + abs(params.chi) * math.pi / 2) * dt


def check_step(params, dt):
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    if dt >= 1.0:
        raise ParameterError(f"dt = {dt} allows more than one wall crossing per step")
    p = tumble_probability_max(params, dt)
    if p > 1.0:
        raise ParameterError(
            f"tumbling probability lambda0*Lambda_max*dt/2 = {p:.4g} exceeds 1; "
            f"use dt <= {dt / p:.4g}"
        )


def mc_advance(ens, params, dt, nsteps):
    """Advance ``ens`` in place by ``nsteps`` steps and return it."""
    check_step(params, dt)
    if nsteps > 0 and ens.n_particles:
        kernels.mc_advance(
            ens.x, ens.v, ens.y, int(nsteps), int(ens.steps), float(dt),
            float(params.tau), float(params.G), float(params.lambda0),
            float(params.chi), np.uint64(ens.rng_seed),
        )
    ens.steps += int(nsteps)
    ens.time += nsteps * dt
    return ens


def mc_step(ens, params, dt):
    """One step on a copy of ``ens``."""
    return mc_advance(ens.copy(), params, dt, 1)


def run_to(ens, params, dt, t_end):
    n = int(round((t_end - ens.time) / dt))
    if n < 0:
        raise ValueError(f"ensemble is already at t = {ens.time}, past {t_end}")
    return mc_advance(ens, params, dt, n)


def density_histogram(ens, I):
    """Density on ``I`` bins of width ``1/I``, scaled so that ``sum(rho)*dx == 1``.

    The returned profile lives at the bin centres and uses plain (not
    trapezoid) weights.
    """
    dx = 1.0 / I
    counts = np.bincount(np.minimum((ens.x * I).astype(np.int64), I - 1), minlength=I)
    n = max(ens.n_particles, 1)
    rho = counts / (n * dx)
    return MacroDensity(x=(np.arange(I) + 0.5) * dx, rho=rho, weights=np.ones(I))


def node_density(ens, I):
    """Histogram sampled on the scheme nodes ``x_i = i/I`` by linear interpolation."""
    h = density_histogram(ens, I)
    xn = np.arange(I + 1) / I
    return MacroDensity(x=xn, rho=np.interp(xn, h.x, h.rho))


@dataclass
class YProfile:
    edges: np.ndarray
    p_plus: np.ndarray
    p_minus: np.ndarray
    count: int

    @property
    def centers(self):
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def y_histogram(ens, x_window, K_bins, y_range=None, per_velocity=True):
    """Histograms of ``y`` for particles with ``x`` in ``x_window``.

    Each returned profile is a probability density in y. With
    ``per_velocity=False`` both entries hold the pooled histogram.
    """
    lo, hi = x_window
    sel = (ens.x >= lo) & (ens.x <= hi)
    y, v = ens.y[sel], ens.v[sel]
    if y_range is None:
        m = float(np.max(np.abs(y))) if y.size else 1.0
        y_range = (-m, m) if m > 0 else (-1.0, 1.0)
    edges = np.linspace(y_range[0], y_range[1], K_bins + 1)

    def dens(vals):
        h, _ = np.histogram(vals, bins=edges, density=False)
        total = h.sum()
        width = edges[1] - edges[0]
        return h / (total * width) if total else h.astype(np.float64)

    if per_velocity:
        return YProfile(edges, dens(y[v > 0]), dens(y[v < 0]), int(sel.sum()))
    pooled = dens(y)
    return YProfile(edges, pooled, pooled.copy(), int(sel.sum()))


def y_spread(ens, x_window=(0.0, 1.0)):
    """Standard deviation of ``y`` over the particles inside ``x_window``."""
    sel = (ens.x >= x_window[0]) & (ens.x <= x_window[1])
    return float(np.std(ens.y[sel]))

