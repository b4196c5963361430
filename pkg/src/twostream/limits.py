"""Limiting schemes and the inconsistent splitting scheme.

The macroscopic schemes are written in flux form
``rho_i += F_{i-1/2} - F_{i+1/2}``. At the walls the trapezoid closure
``rho_0 -= 2 F_{1/2}`` and ``rho_I += 2 F_{I-1/2}`` keeps the discrete mass
``(rho_0 + rho_I)/2 + sum rho_i`` exactly constant.
"""
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import kernels
from .ap_diff import coupled_matrix, sink_matrix
from .errors import CFLError, MeshError, ParameterError
from .model import (
    ModelParams,
    Scaling,
    TwoStreamField,
    cell_integral,
    make_grid,
    trapezoid_weights,
    tumbling_response,
)
from .stepping import Stepper


@dataclass
class MacroState:
    rho: np.ndarray = None
    p_bar_plus: np.ndarray = None
    p_bar_minus: np.ndarray = None

    def __post_init__(self):
        if self.rho is None:
            if self.p_bar_plus is None or self.p_bar_minus is None:
                raise ValueError("give rho or both stream densities")
            self.p_bar_plus = np.asarray(self.p_bar_plus, dtype=np.float64)
            self.p_bar_minus = np.asarray(self.p_bar_minus, dtype=np.float64)
            self.rho = self.p_bar_plus + self.p_bar_minus
        else:
            self.rho = np.asarray(self.rho, dtype=np.float64)

    @classmethod
    def from_field(cls, field):
        return cls(p_bar_plus=field.p_plus.sum(axis=1), p_bar_minus=field.p_minus.sum(axis=1))

    def mass(self):
        return float(np.dot(trapezoid_weights(len(self.rho)), self.rho))


@dataclass(frozen=True)
class MacroConfig:
    """Mesh and parameters for the macroscopic schemes on ``[0, 1]``."""

    params: ModelParams
    I: int
    dt: float
    check_cfl: bool = True

    def __post_init__(self):
        if self.I < 2:
            raise MeshError("need at least two cells")

    @property
    def dx(self):
        return 1.0 / self.I

    @property
    def dy(self):
        return abs(self.params.G) * self.dx

    @property
    def diffusive_dt_max(self):
        G = abs(self.params.G)
        lam_min = min(tumbling_response(G, self.params.chi), tumbling_response(-G, self.params.chi))
        return 0.5 * float(lam_min) * self.dx ** 2

    def require_diffusive_cfl(self):
        if self.check_cfl and self.dt > self.diffusive_dt_max * (1 + 1e-12):
            raise CFLError(
                f"dt = {self.dt:.6g} exceeds the stability bound "
                f"Lambda_min*dx^2/2 = {self.diffusive_dt_max:.6g}",
                dt_max=self.diffusive_dt_max,
            )

    def require_transport_cfl(self):
        if self.check_cfl and self.dt > self.dx * (1 + 1e-12):
            raise CFLError(f"dt = {self.dt:.6g} exceeds dx = {self.dx:.6g}", dt_max=self.dx)


def macro_config(params, I, dt=None, check_cfl=True):
    dx = 1.0 / I
    if dt is None:
        dt = 0.1 * dx * dx if params.scaling is Scaling.DIFFUSIVE else dx
    return MacroConfig(params, I, dt, check_cfl)


def _flux_update(rho, F):
    """Apply interface fluxes ``F[j] = F_{j+1/2}`` with the trapezoid wall closure."""
    out = rho.copy()
    out[1:-1] += F[:-1] - F[1:]
    out[0] -= 2.0 * F[0]
    out[-1] += 2.0 * F[-1]
    return out


def ks_interface_integrals(cfg):
    """``(Lambda_bar_{1/2}, Lambda_bar_{-1/2})`` seen by a G > 0 frame."""
    chi = cfg.params.chi if cfg.params.G > 0 else -cfg.params.chi
    dy = cfg.dy
    return float(cell_integral(0.0, dy, chi)), float(cell_integral(-dy, 0.0, chi))


def ks_limit_step(state, cfg):
    """Limit of the AP-diff scheme as epsilon -> 0, in flux form."""
    cfg.require_diffusive_cfl()
    rho = state.rho
    lp, lm = ks_interface_integrals(cfg)
    c = cfg.dt * abs(cfg.params.G) / cfg.dx
    F = c * (rho[:-1] / lp - rho[1:] / lm)
    return MacroState(rho=_flux_update(rho, F))


def ks_centered_step(state, cfg):
    """Centered finite-difference step of the Keller-Segel equation."""
    cfg.require_diffusive_cfl()
    rho = state.rho
    lam0 = float(tumbling_response(0.0, cfg.params.chi))
    dlam0 = -cfg.params.chi
    dt, dx, G = cfg.dt, cfg.dx, cfg.params.G
    F = -(dt / (dx * dx * lam0)) * (rho[1:] - rho[:-1]) - (
        dt * G * dlam0 / (dx * lam0 * lam0)
    ) * 0.5 * (rho[:-1] + rho[1:])
    return MacroState(rho=_flux_update(rho, F))


def kinetic_limit_step(state, cfg):
    """Two-stream update obtained from the AP-hyp scheme as tau -> 0.

    Stream ``+`` carries the rate ``lambda0*Lambda(G)`` and stream ``-``
    carries ``lambda0*Lambda(-G)``.
    """
    cfg.require_transport_cfl()
    if state.p_bar_plus is None:
        raise ValueError("the kinetic limit needs the two stream densities")
    P, M = state.p_bar_plus, state.p_bar_minus
    params = cfg.params
    l = cfg.dt / cfg.dx
    w_plus = 1.0 / (1.0 + 0.5 * params.lambda0 * tumbling_response(params.G, params.chi) * cfg.dx)
    w_minus = 1.0 / (1.0 + 0.5 * params.lambda0 * tumbling_response(-params.G, params.chi) * cfg.dx)
    d = l * (P - M)
    newP = P - d
    newM = M + d
    newP[1:] += l * w_plus * P[:-1]
    newP -= l * w_minus * M
    newM[:-1] += l * w_minus * M[1:]
    newM -= l * w_plus * P
    newM[-1] = newP[-1]
    newP[0] = newM[0]
    return MacroState(p_bar_plus=newP, p_bar_minus=newM)


def naive_limit_step(state, cfg):
    """Limit of the naive splitting scheme; consistent with the wrong equation.

    Written for streams already in balance, ``p+ = p- = rho/2``.
    """
    cfg.require_diffusive_cfl()
    rho = state.rho
    params = cfg.params
    a = cfg.dt / (cfg.dx ** 2 * tumbling_response(params.G, params.chi))
    b = cfg.dt / (cfg.dx ** 2 * tumbling_response(-params.G, params.chi))
    F = a * rho[:-1] - b * rho[1:]
    return MacroState(rho=_flux_update(rho, F))


def naive_limit_ratio(params):
    """Per-cell growth ratio of the naive limit's steady state, ``Lambda(-G)/Lambda(G)``."""
    return float(tumbling_response(-params.G, params.chi) / tumbling_response(params.G, params.chi))


# --- naive splitting scheme at diffusive scaling --------------------------

@dataclass(frozen=True)
class NaiveSplitConfig:
    """Hyperbolic-style relaxation followed by an epsilon-scaled well-balanced step.

    The y-mesh is ``dy = dx`` on ``[-|G|, |G|]``.
    """

    params: ModelParams
    grid: object
    check_cfl: bool = True
    d: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.params.scaling is not Scaling.DIFFUSIVE:
            raise ParameterError("the naive splitting scheme is defined at diffusive scaling")
        g = self.grid
        if not math.isclose(g.dy, g.dx, rel_tol=1e-9):
            raise MeshError("the naive splitting scheme uses dy = dx")
        lam_min = min(tumbling_response(g.y_halfwidth, self.params.chi),
                      tumbling_response(-g.y_halfwidth, self.params.chi))
        dt_max = 0.5 * float(lam_min) * g.dx ** 2
        if self.check_cfl and g.dt > dt_max * (1 + 1e-12):
            raise CFLError(f"dt = {g.dt:.6g} exceeds Lambda_min*dx^2/2 = {dt_max:.6g}", dt_max=dt_max)
        chi = -self.params.chi if self.flip else self.params.chi
        eps = self.params.epsilon
        lam = tumbling_response(g.y, chi)
        object.__setattr__(self, "d", g.dt / (g.dx * (eps + 0.5 * lam * g.dx)))

    @property
    def flip(self):
        return self.params.G < 0

    @property
    def relax_ratio(self):
        return self.grid.dt / (self.params.epsilon * self.grid.dy)

    @property
    def relaxation_ratio(self):
        return self.grid.dt / (self.params.epsilon * self.grid.dx)


def make_naive_config(params, I, dt=None, check_cfl=True):
    if params.scaling is not Scaling.DIFFUSIVE:
        params = ModelParams(params.G, params.chi, params.lambda0, params.tau, Scaling.DIFFUSIVE)
    dx = 1.0 / I
    grid = make_grid(I, 1.0, abs(params.G), 0.1 * dx * dx if dt is None else dt)
    return NaiveSplitConfig(params, grid, check_cfl)


def _naive_relax_into(pp, pm, cfg, out_p, out_m):
    y, r = cfg.grid.y, cfg.relax_ratio
    kernels.sink_sweep(pp, y, len(y) - 1, r, out_p)
    kernels.sink_sweep(pm, y, 0, r, out_m)


def _naive_transport_into(qp, qm, cfg, out_p, out_m):
    kernels.coupled_implicit(qp, qm, cfg.d, cfg.d, 0, cfg.relaxation_ratio, out_p, out_m)


class NaiveSplitStepper(Stepper):
    def __init__(self, field, cfg):
        self.flip = cfg.flip
        super().__init__(field, cfg)

    def _step(self, pp, pm, out_p, out_m):
        _naive_relax_into(pp, pm, self.cfg, self._hp, self._hm)
        _naive_transport_into(self._hp, self._hm, self.cfg, out_p, out_m)


def _oriented_apply(fn, field, cfg):
    f = field.flipped() if cfg.flip else field
    out = TwoStreamField.zeros_like(f)
    fn(f.p_plus, f.p_minus, cfg, out.p_plus, out.p_minus)
    return out.flipped() if cfg.flip else out


def naive_relax_step(field, cfg):
    return _oriented_apply(_naive_relax_into, field, cfg)


def naive_transport_step(field_half, cfg):
    """Implicit two-stream update of the naive scheme, solved in closed form."""
    return _oriented_apply(_naive_transport_into, field_half, cfg)


def naive_split_step(field, cfg):
    return NaiveSplitStepper(field, cfg).advance(1).field


def naive_step_matrices(cfg):
    g = cfg.grid
    nx = g.I + 1
    Ap = sp.kron(sp.eye(nx), sink_matrix(g.y, 2 * g.K, cfg.relax_ratio), format="csr")
    Am = sp.kron(sp.eye(nx), sink_matrix(g.y, 0, cfg.relax_ratio), format="csr")
    A = sp.block_diag([Ap, Am], format="csr")
    B = coupled_matrix(nx, cfg.d, cfg.d, 0, c=cfg.relaxation_ratio)
    return A, B


# --- marching drivers for the macroscopic schemes -------------------------

MACRO_STEPS = {
    "ks_limit": ks_limit_step,
    "ks_centered": ks_centered_step,
    "kinetic_limit": kinetic_limit_step,
    "naive_limit": naive_limit_step,
}


def macro_initial_state(scheme, cfg):
    n = cfg.I + 1
    if scheme == "kinetic_limit":
        return MacroState(p_bar_plus=np.ones(n), p_bar_minus=np.ones(n))
    return MacroState(rho=2.0 * np.ones(n))


def advance_macro(scheme, state, cfg, nsteps):
    step = MACRO_STEPS[scheme]
    for _ in range(nsteps):
        state = step(state, cfg)
    return state
