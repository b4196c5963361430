"""Asymptotic-preserving scheme at diffusive scaling.

One step is an implicit upwind projection of each y-column onto ``y = 0``
followed by the well-balanced transport/relaxation update along the
characteristic direction ``(dx, dy)``. The second step couples the streams
through a 2x2 system per node which is solved in closed form.

Negative gradients are handled by the mirror symmetry ``y -> -y``,
``chi -> -chi`` so the kernels only ever see ``G > 0``.
"""
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import CFLError, MeshError, ParameterError
from .stepping import Stepper
from .model import (
    GridSpec,
    ModelParams,
    Scaling,
    TwoStreamField,
    interface_lambda_bar,
    make_grid,
    tumbling_response,
)

# y-domain widening used by the modified variant for small adaptation times;
# without it mass leaks through y = +-Y once the y-profile piles up near +-G
DEFAULT_Y_EXTENSION = {0.1: 2.0, 0.02: 3.0, 0.01: 4.0}


def default_y_extension(tau):
    for key, ext in DEFAULT_Y_EXTENSION.items():
        if math.isclose(tau, key, rel_tol=1e-9):
            return ext
    return 1.0


@dataclass(frozen=True)
class ApDiffConfig:
    params: ModelParams
    grid: GridSpec
    modified_tau: bool = False
    y_extension: float = 1.0
    check_cfl: bool = True
    lambda_rule: str = "exact"
    # derived coefficients, filled in __post_init__
    a_half: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.params.scaling is not Scaling.DIFFUSIVE:
            raise ParameterError("the AP-diff scheme needs diffusive scaling")
        G = abs(self.params.G)
        expected_dy = G / self.tau_eff * self.grid.dx
        if not math.isclose(self.grid.dy, expected_dy, rel_tol=1e-9):
            raise MeshError(
                f"AP-diff needs dy = (|G|/tau_eff)*dx = {expected_dy}, got dy = {self.grid.dy}"
            )
        if not math.isclose(self.grid.y_halfwidth, self.y_extension * G, rel_tol=1e-9):
            raise MeshError(
                f"y half-width {self.grid.y_halfwidth} differs from extension*|G| = {self.y_extension * G}"
            )
        if self.check_cfl and self.grid.dt > cfl_dt_diff(self) * (1 + 1e-12):
            raise CFLError(
                f"dt = {self.grid.dt:.6g} exceeds the positivity bound "
                f"dt <= Lambda_min*dx^2/2 = {cfl_dt_diff(self):.6g}",
                dt_max=cfl_dt_diff(self),
            )
        lam_bar = interface_lambda_bar(self.grid, self._oriented_params, self.lambda_rule)
        eps, Ge, dt, dx = self.params.epsilon, self.G_eff, self.grid.dt, self.grid.dx
        a = 2.0 * dt * Ge / (dx * (2.0 * eps * Ge + lam_bar))
        object.__setattr__(self, "a_half", a)

    @property
    def tau_eff(self):
        return self.params.tau if self.modified_tau else 1.0

    @property
    def G_eff(self):
        return abs(self.params.G) / self.tau_eff

    @property
    def flip(self):
        return self.params.G < 0

    @property
    def _oriented_params(self):
        if not self.flip:
            return self.params
        return ModelParams(
            G=-self.params.G, chi=-self.params.chi, lambda0=self.params.lambda0,
            tau=self.params.tau, scaling=self.params.scaling,
        )

    @property
    def projection_ratio(self):
        """``dt / (eps * tau_eff * dy)``, the implicit upwind coefficient."""
        return self.grid.dt / (self.params.epsilon * self.tau_eff * self.grid.dy)

    @property
    def relaxation_ratio(self):
        """``dt / (eps * dx)``, the stiff coupling between the streams."""
        return self.grid.dt / (self.params.epsilon * self.grid.dx)


def make_config(params, I, dt=None, modified_tau=False, y_extension=None, check_cfl=True,
                lambda_rule="exact"):
    """Standard AP-diff setup on ``[0, 1]`` with ``I`` cells.

    ``dt`` defaults to ``0.1*dx**2``. With ``modified_tau`` the y-mesh is
    ``dy = (|G|/tau)*dx`` and the y-domain is widened by ``y_extension``
    (2 for tau = 0.1, 3 for tau = 0.02, 4 for tau = 0.01, 1 otherwise
    unless given).
    """
    if params.scaling is not Scaling.DIFFUSIVE:
        params = ModelParams(params.G, params.chi, params.lambda0, params.tau, Scaling.DIFFUSIVE)
    tau_eff = params.tau if modified_tau else 1.0
    if y_extension is None:
        y_extension = default_y_extension(params.tau) if modified_tau else 1.0
    dx = 1.0 / I
    if dt is None:
        dt = 0.1 * dx * dx
    G = abs(params.G)
    grid = make_grid(I, G / tau_eff, y_extension * G, dt)
    return ApDiffConfig(params, grid, modified_tau, y_extension, check_cfl, lambda_rule)


def cfl_dt_diff(cfg):
    """Largest positivity-preserving step ``Lambda_min * dx**2 / 2``.

    ``Lambda_min`` is the minimum of the rate over the y-domain of ``cfg``.
    """
    Y = cfg.grid.y_halfwidth
    lam_min = min(
        tumbling_response(Y, cfg.params.chi), tumbling_response(-Y, cfg.params.chi)
    )
    return 0.5 * float(lam_min) * cfg.grid.dx ** 2


def _orient(field, cfg):
    return field.flipped() if cfg.flip else field


def _project_into(pp, pm, cfg, out_p, out_m):
    y, r, K = cfg.grid.y, cfg.projection_ratio, cfg.grid.K
    kernels.sink_sweep(pp, y, K, r, out_p)
    kernels.sink_sweep(pm, y, K, r, out_m)


def _transport_into(qp, qm, cfg, out_p, out_m):
    a = cfg.a_half
    kernels.coupled_implicit(qp, qm, a[:-1], a[1:], 1, cfg.relaxation_ratio, out_p, out_m)


class ApDiffStepper(Stepper):
    def __init__(self, field, cfg):
        self.flip = cfg.flip
        super().__init__(field, cfg)

    def _step(self, pp, pm, out_p, out_m):
        _project_into(pp, pm, self.cfg, self._hp, self._hm)
        _transport_into(self._hp, self._hm, self.cfg, out_p, out_m)


def projection_step(field, cfg):
    """Implicit upwind step toward ``y = 0``; column sums are preserved."""
    # symmetric under y -> -y, so no orientation is needed
    out = TwoStreamField.zeros_like(field)
    _project_into(field.p_plus, field.p_minus, cfg, out.p_plus, out.p_minus)
    return out


def transport_relax_step(field_half, cfg):
    """Coupled transport/relaxation step with mirror walls."""
    f = _orient(field_half, cfg)
    out = TwoStreamField.zeros_like(f)
    _transport_into(f.p_plus, f.p_minus, cfg, out.p_plus, out.p_minus)
    return _orient(out, cfg)


def ap_diff_step(field, cfg):
    return ApDiffStepper(field, cfg).advance(1).field


def advance(field, cfg, nsteps):
    return ApDiffStepper(field, cfg).advance(nsteps).field


def support_leak(field):
    """Mass sitting in the cells that break the conservation hypothesis.

    Conservation needs ``p+`` to vanish at ``k = K`` and ``p-`` at ``k = -K``.
    """
    return float(np.abs(field.p_plus[:, -1]).sum() + np.abs(field.p_minus[:, 0]).sum())


# --- sparse matrices of one step, used by the steady-state solver ---------

def sink_matrix(y, m, r):
    """Matrix ``A`` of the implicit sweep, so that ``A @ out = p`` per column."""
    s = y[m]
    v = s - y
    n = len(y)
    diag = 1.0 + r * np.abs(v)
    rows, cols, vals = [np.arange(n)], [np.arange(n)], [diag]
    below = np.arange(1, m + 1)  # row k takes inflow from k-1 < m
    rows.append(below)
    cols.append(below - 1)
    vals.append(-r * v[below - 1])
    above = np.arange(m, n - 1)  # row k takes inflow from k+1 > m
    rows.append(above)
    cols.append(above + 1)
    vals.append(r * v[above + 1])
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )


def _shift_x(n, d):
    """``(S q)[i] = q[i - d]`` with zero fill."""
    return sp.eye(n, k=-d, format="csr")


def coupled_matrix(nx, a_lo, a_hi, shift, c=None, l=None):
    """Sparse matrix of the two-stream update acting on ``[q+; q-]``.

    Exactly one of ``c`` (implicit coupling) or ``l`` (explicit coupling)
    must be given. Rows follow the same wall closures as the kernels.
    """
    ny = len(a_lo)
    Iy = sp.eye(ny, format="csr")
    Id = sp.eye(nx * ny, format="csr")
    Dlo = sp.diags(np.tile(a_lo, nx))
    Dhi = sp.diags(np.tile(a_hi, nx))
    up = sp.kron(_shift_x(nx, 1), sp.eye(ny, k=-shift), format="csr")
    dn = sp.kron(_shift_x(nx, -1), sp.eye(ny, k=shift), format="csr")
    Rp = sp.hstack([Id + Dlo @ up, -Dlo])
    Rm = sp.hstack([-Dhi, Id + Dhi @ dn])
    first = np.zeros(nx)
    first[0] = 1.0
    last = np.zeros(nx)
    last[-1] = 1.0
    inner = 1.0 - first - last

    def rowdiag(w):
        return sp.kron(sp.diags(w), Iy)

    if c is not None:
        alpha = (1.0 + c) / (1.0 + 2.0 * c)
        beta = c / (1.0 + 2.0 * c)
        P = rowdiag(alpha * inner + last) @ Rp + rowdiag(beta * inner + first) @ Rm
        M = rowdiag(beta * inner + last) @ Rp + rowdiag(alpha * inner + first) @ Rm
    else:
        D = l * sp.hstack([Id, -Id])
        P = rowdiag(inner + last) @ (Rp - D) + rowdiag(first) @ (Rm + D)
        M = rowdiag(inner + first) @ (Rm + D) + rowdiag(last) @ (Rp - D)
    return sp.vstack([P, M], format="csr")


def step_matrices(cfg):
    """``(A, B)`` with ``A @ half = p`` (projection) and ``p_next = B @ half``.

    Vectors are ``[p+.ravel(); p-.ravel()]`` in the oriented frame (y
    flipped when G < 0).
    """
    g = cfg.grid
    nx = g.I + 1
    Ay = sink_matrix(g.y, g.K, cfg.projection_ratio)
    A1 = sp.kron(sp.eye(nx), Ay, format="csr")
    A = sp.block_diag([A1, A1], format="csr")
    a = cfg.a_half
    B = coupled_matrix(nx, a[:-1], a[1:], 1, c=cfg.relaxation_ratio)
    return A, B
