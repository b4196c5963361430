"""Asymptotic-preserving scheme at hyperbolic scaling.

Each step relaxes ``p+`` toward ``y = G`` and ``p-`` toward ``y = -G`` with an
implicit upwind scheme, then applies an explicit well-balanced update in x
for every y-slice independently.
"""
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import kernels
from .ap_diff import coupled_matrix, sink_matrix
from .errors import CFLError, MeshError, ParameterError
from .stepping import Stepper
from .model import GridSpec, ModelParams, Scaling, TwoStreamField, make_grid, tumbling_response


@dataclass(frozen=True)
class ApHypConfig:
    params: ModelParams
    grid: GridSpec
    check_cfl: bool = True
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.params.scaling is not Scaling.HYPERBOLIC:
            raise ParameterError("the AP-hyp scheme needs hyperbolic scaling")
        g = self.grid
        if not math.isclose(g.dy, g.dx, rel_tol=1e-9):
            raise MeshError(f"AP-hyp needs dy = dx, got dy = {g.dy}, dx = {g.dx}")
        if not math.isclose(g.y_halfwidth, abs(self.params.G), rel_tol=1e-9):
            raise MeshError(f"AP-hyp needs the y-domain [-|G|, |G|], got half-width {g.y_halfwidth}")
        if self.check_cfl and g.dt > g.dx * (1 + 1e-12):
            raise CFLError(f"dt = {g.dt:.6g} exceeds the bound dt <= dx = {g.dx:.6g}", dt_max=g.dx)
        chi = -self.params.chi if self.flip else self.params.chi
        lam = self.params.lambda0 * tumbling_response(g.y, chi)
        object.__setattr__(self, "weights", 1.0 / (1.0 + 0.5 * lam * g.dx))

    @property
    def flip(self):
        return self.params.G < 0

    @property
    def relax_ratio(self):
        return self.grid.dt / (self.params.tau * self.grid.dy)

    @property
    def courant(self):
        return self.grid.dt / self.grid.dx


def make_config(params, I, dt=None, check_cfl=True):
    """AP-hyp setup on ``[0, 1]`` with ``dy = dx`` and ``dt = dx`` by default."""
    if params.scaling is not Scaling.HYPERBOLIC:
        params = ModelParams(params.G, params.chi, params.lambda0, params.tau, Scaling.HYPERBOLIC)
    dx = 1.0 / I
    grid = make_grid(I, 1.0, abs(params.G), dx if dt is None else dt)
    return ApHypConfig(params, grid, check_cfl)


def _orient(f, cfg):
    return f.flipped() if cfg.flip else f


def _relax_into(pp, pm, cfg, out_p, out_m):
    y, r = cfg.grid.y, cfg.relax_ratio
    kernels.sink_sweep(pp, y, len(y) - 1, r, out_p)
    kernels.sink_sweep(pm, y, 0, r, out_m)


def _transport_into(qp, qm, cfg, out_p, out_m):
    a = cfg.courant * cfg.weights
    kernels.coupled_explicit(qp, qm, a, a, cfg.courant, out_p, out_m)


class ApHypStepper(Stepper):
    def __init__(self, field, cfg):
        self.flip = cfg.flip
        super().__init__(field, cfg)

    def _step(self, pp, pm, out_p, out_m):
        _relax_into(pp, pm, self.cfg, self._hp, self._hm)
        _transport_into(self._hp, self._hm, self.cfg, out_p, out_m)


def _apply(fn, field, cfg):
    f = _orient(field, cfg)
    out = TwoStreamField.zeros_like(f)
    fn(f.p_plus, f.p_minus, cfg, out.p_plus, out.p_minus)
    return _orient(out, cfg)


def relax_step(field, cfg):
    """Implicit upwind relaxation of ``p+`` toward ``y = G`` and ``p-`` toward ``y = -G``."""
    return _apply(_relax_into, field, cfg)


def wb_transport_step(field_half, cfg):
    """Explicit well-balanced update; positive and conservative for ``dt <= dx``."""
    return _apply(_transport_into, field_half, cfg)


def ap_hyp_step(field, cfg):
    return ApHypStepper(field, cfg).advance(1).field


def advance(field, cfg, nsteps):
    return ApHypStepper(field, cfg).advance(nsteps).field


def step_matrices(cfg):
    """``(A, B)`` for one step in the oriented frame, as in :func:`ap_diff.step_matrices`."""
    g = cfg.grid
    nx = g.I + 1
    top = 2 * g.K
    Ap = sp.kron(sp.eye(nx), sink_matrix(g.y, top, cfg.relax_ratio), format="csr")
    Am = sp.kron(sp.eye(nx), sink_matrix(g.y, 0, cfg.relax_ratio), format="csr")
    A = sp.block_diag([Ap, Am], format="csr")
    a = cfg.courant * cfg.weights
    B = coupled_matrix(nx, a, a, 0, l=cfg.courant)
    return A, B
