"""Analytic steady states, error norms and mesh-convergence tables."""
import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import ap_diff, ap_hyp, limits
from .errors import MeshError
from .model import (
    MacroDensity,
    ModelParams,
    Scaling,
    TwoStreamField,
    discrete_mass,
    initial_condition,
    tumbling_response,
)

STEADY_TOL = 1e-10
STEADY_T_MAX = 20.0
# above this many unknowns the sparse LU gets too large and we march instead
DIRECT_MAX_UNKNOWNS = 300_000


def _exp_profile(x, a, M, L):
    """Density ``c*exp(a*x)`` on ``[0, L]`` with total mass ``M``, overflow safe."""
    x = np.asarray(x, dtype=np.float64)
    if abs(a * L) < 1e-12:
        return np.full_like(x, M / L)
    if a > 0:
        return a * M * np.exp(a * (x - L)) / -math.expm1(-a * L)
    return a * M * np.exp(a * x) / math.expm1(a * L)


def steady_ks(x, params, M=1.0, L=1.0):
    """Steady density of the Keller-Segel limit with no-flux walls."""
    lam0 = float(tumbling_response(0.0, params.chi))
    dlam0 = -params.chi
    return _exp_profile(x, -params.G * dlam0 / lam0, M, L)


def steady_hyp(x, params, M=1.0, L=1.0):
    """Steady stream density ``f = p+ = p-`` of the hyperbolic limit.

    ``f`` integrates to ``M``; the macroscopic density is ``2 f``.
    """
    jump = params.lambda0 * float(
        tumbling_response(-params.G, params.chi) - tumbling_response(params.G, params.chi)
    )
    return _exp_profile(x, 0.5 * jump, M, L)


def normalized(rho):
    """Scale a nodal profile on ``[0, 1]`` to unit trapezoid mass."""
    rho = np.asarray(rho, dtype=np.float64)
    return MacroDensity(np.linspace(0.0, 1.0, len(rho)), rho).normalized().rho


def _as_array(r):
    return r.rho if isinstance(r, MacroDensity) else np.asarray(r, dtype=np.float64)


def linf_rel_error(rho_coarse, rho_fine):
    """``max |rho_c - rho_f| / rho_f`` over the coarse nodes, after unit normalization."""
    c, f = _as_array(rho_coarse), _as_array(rho_fine)
    I, If = len(c) - 1, len(f) - 1
    if I < 1 or If % I:
        raise MeshError(f"fine mesh I'={If} is not a multiple of coarse mesh I={I}")
    c = normalized(c)
    f = normalized(f)[:: If // I]
    return float(np.max(np.abs(c - f) / f))


# --- steady states -----------------------------------------------------------

@dataclass
class SteadyResult:
    rho: np.ndarray
    field: TwoStreamField = None
    time: float = math.nan
    steps: int = 0
    converged: bool = True
    method: str = "march"


def _steady_reached(r_new, r_old, dt, tol):
    return np.max(np.abs(r_new - r_old)) / dt <= tol * np.max(np.abs(r_old))


def run_to_steady_state(stepper, tol=STEADY_TOL, t_max=STEADY_T_MAX, check_every=1):
    """March ``stepper`` until ``|rho^{n+1} - rho^n|_inf / dt <= tol*|rho^n|_inf``.

    The test is applied to one step out of every ``check_every``. Stops at
    ``t_max`` and reports ``converged=False`` in that case.
    """
    dt = stepper.cfg.grid.dt
    n_max = int(math.ceil(t_max / dt - 1e-9))
    check_every = max(1, int(check_every))
    converged = False
    while stepper.steps < n_max:
        chunk = min(check_every - 1, n_max - stepper.steps - 1)
        if chunk > 0:
            stepper.advance(chunk)
        r_old = stepper.rho
        stepper.advance(1)
        if _steady_reached(stepper.rho, r_old, dt, tol):
            converged = True
            break
    return SteadyResult(stepper.rho, stepper.field, stepper.time, stepper.steps, converged, "march")


def march_macro_to_steady(scheme, cfg, tol=STEADY_TOL, t_max=STEADY_T_MAX, state=None):
    """Same stopping rule for the macroscopic schemes of :mod:`limits`."""
    step = limits.MACRO_STEPS[scheme]
    if state is None:
        state = limits.macro_initial_state(scheme, cfg)
    n_max = int(math.ceil(t_max / cfg.dt - 1e-9))
    for n in range(1, n_max + 1):
        new = step(state, cfg)
        done = _steady_reached(new.rho, state.rho, cfg.dt, tol)
        state = new
        if done:
            return SteadyResult(state.rho, time=n * cfg.dt, steps=n, converged=True), state
    return SteadyResult(state.rho, time=n_max * cfg.dt, steps=n_max, converged=False), state


def fixed_point(A, B, p0, iterations=4, shift=1e-9):
    """Invariant vector of the step ``p -> B A^{-1} p`` scaled to the mass of ``p0``.

    Shifted inverse iteration on the pencil ``B q = mu A q`` around ``mu = 1``;
    the conserved mass makes 1 a simple, dominant eigenvalue.
    """
    lu = spla.splu(sp.csc_matrix(B - (1.0 + shift) * A))
    q = spla.spsolve(sp.csc_matrix(A), p0)
    for _ in range(iterations):
        q = lu.solve(A @ q)
        q /= np.max(np.abs(q))
    p = A @ q
    return p * (np.sum(p0) / np.sum(p))


def _field_from_vector(p, shape, flip):
    n = shape[0] * shape[1]
    f = TwoStreamField(p[:n].reshape(shape), p[n:].reshape(shape))
    return f.flipped() if flip else f


def _oriented_vector(field, flip):
    f = field.flipped() if flip else field
    return np.concatenate([f.p_plus.ravel(), f.p_minus.ravel()])


def steady_direct(cfg, matrices):
    """Steady state of a kinetic scheme from its one-step matrices."""
    g = cfg.grid
    f0 = initial_condition(g, cfg.params)
    p0 = _oriented_vector(f0, cfg.flip)
    A, B = matrices(cfg)
    p = fixed_point(A, B, p0)
    f = _field_from_vector(p, g.shape, cfg.flip)
    scale = discrete_mass(f0) / discrete_mass(f)
    f = TwoStreamField(f.p_plus * scale, f.p_minus * scale)
    return SteadyResult(f.rho, f, method="direct")


_MATRICES = {
    "ap_diff": ap_diff.step_matrices,
    "ap_diff_modified": ap_diff.step_matrices,
    "ap_hyp": ap_hyp.step_matrices,
    "naive_split": limits.naive_step_matrices,
}

_STEPPERS = {
    "ap_diff": ap_diff.ApDiffStepper,
    "ap_diff_modified": ap_diff.ApDiffStepper,
    "ap_hyp": ap_hyp.ApHypStepper,
    "naive_split": limits.NaiveSplitStepper,
}


def kinetic_config(scheme, params, I, dt=None, **kw):
    if scheme == "ap_diff":
        return ap_diff.make_config(params, I, dt=dt, **kw)
    if scheme == "ap_diff_modified":
        return ap_diff.make_config(params, I, dt=dt, modified_tau=True, **kw)
    if scheme == "ap_hyp":
        return ap_hyp.make_config(params, I, dt=dt, **kw)
    if scheme == "naive_split":
        return limits.make_naive_config(params, I, dt=dt, **kw)
    raise ValueError(f"unknown kinetic scheme {scheme!r}")


def steady_state(scheme, cfg, method="auto", tol=STEADY_TOL, t_max=STEADY_T_MAX, check_every=1):
    """Steady state of a kinetic scheme, by direct solve or by marching.

    ``method="auto"`` solves directly when the system is small enough.
    """
    n = 2 * cfg.grid.shape[0] * cfg.grid.shape[1]
    if method == "auto":
        method = "direct" if n <= DIRECT_MAX_UNKNOWNS else "march"
    if method == "direct":
        return steady_direct(cfg, _MATRICES[scheme])
    if method != "march":
        raise ValueError(f"unknown steady-state method {method!r}")
    st = _STEPPERS[scheme](initial_condition(cfg.grid, cfg.params), cfg)
    return run_to_steady_state(st, tol, t_max, check_every)


# --- convergence tables ----------------------------------------------------

CSV_HEADER = ("scheme", "param_name", "param_value", "I", "I_prime", "linf_rel_err")


@dataclass
class ConvergenceReport:
    scheme: str
    param_name: str
    rows: list = field(default_factory=list)

    def add(self, value, I, I_prime, err):
        if I_prime % I:
            raise MeshError(f"fine mesh I'={I_prime} is not a multiple of coarse mesh I={I}")
        self.rows.append((float(value), int(I), int(I_prime), float(err)))

    def error(self, value, I, I_prime):
        for v, a, b, e in self.rows:
            if math.isclose(v, value, rel_tol=1e-12) and a == I and b == I_prime:
                return e
        raise KeyError((value, I, I_prime))

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for v, a, b, e in self.rows:
            w.writerow([self.scheme, self.param_name, repr(v), a, b, repr(e)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, text):
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != CSV_HEADER:
            raise ValueError("not a convergence table")
        body = rows[1:]
        if not body:
            raise ValueError("empty convergence table")
        rep = cls(body[0][0], body[0][1])
        for r in body:
            rep.add(float(r[2]), int(r[3]), int(r[4]), float(r[5]))
        return rep


def convergence_table(scheme, param_name, values, mesh_pairs, base_params=None,
                      method="auto", config_kw=None, profiles=None, **steady_kw):
    """Mesh-pair errors of steady profiles for each parameter value.

    ``profiles`` is an optional dict used as a cache keyed on ``(value, I)``.
    """
    base = base_params or ModelParams()
    if scheme == "ap_hyp" and base.scaling is not Scaling.HYPERBOLIC:
        base = ModelParams(base.G, base.chi, base.lambda0, base.tau, Scaling.HYPERBOLIC)
    cache = {} if profiles is None else profiles
    rep = ConvergenceReport(scheme, param_name)
    for value in values:
        params = ModelParams(**{**_params_dict(base), param_name: value})
        for I, I_prime in mesh_pairs:
            for n in (I, I_prime):
                if (value, n) not in cache:
                    cfg = kinetic_config(scheme, params, n, **(config_kw or {}))
                    cache[(value, n)] = steady_state(scheme, cfg, method, **steady_kw).rho
            rep.add(value, I, I_prime, linf_rel_error(cache[(value, I)], cache[(value, I_prime)]))
    return rep


def _params_dict(p):
    return dict(G=p.G, chi=p.chi, lambda0=p.lambda0, tau=p.tau, scaling=p.scaling)


def mass_defect(field, reference_mass):
    return discrete_mass(field) - reference_mass

