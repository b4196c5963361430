"""Run configured experiments and write their CSV outputs.

Files written into the output directory:

``rho_t<T>.csv``      ``x,rho`` at each snapshot time ``T``
``rho_steady.csv``    ``x,rho`` at steady state, when requested
``ydist_x<X>.csv``    ``y,p_plus,p_minus`` at the probe ``X`` for the final state
``mass.csv``          ``t,mass,mass_defect``
``table.csv``         convergence table, for ``table`` runs
``run.yaml``          the resolved configuration
``run_info.yaml``     backend, timings and steady-state status
``FAILED``            only if the run raised
"""
import os
import time
import traceback
import warnings
from pathlib import Path

import numpy as np
import yaml

from . import diagnostics, kernels, limits
from . import monte_carlo as mc
from .config import KINETIC, MACRO, dump_config
from .errors import MassDefectWarning, MeshError
from .model import initial_condition

OUT_ENV = "TWOSTREAM_OUT"
MASS_TOL = 1e-10


def _fmt(v):
    return f"{v:g}"


def write_csv(path, header, columns):
    data = np.column_stack([np.asarray(c, dtype=np.float64) for c in columns])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=",".join(header), comments="")


def read_csv(path):
    """Return ``(header, data)`` with ``data`` as a 2-D array."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def resolve_output(cfg, out=None, name="run"):
    if out is not None:
        return Path(out)
    if cfg.output is not None:
        return Path(cfg.output)
    return Path(os.environ.get(OUT_ENV, "runs")) / name


class _Run:
    def __init__(self, cfg, out):
        self.cfg = cfg
        self.out = out
        self.mass_rows = []
        self.info = {"scheme": cfg.scheme, "backend": kernels.BACKEND}

    def rho_file(self, label, x, rho):
        write_csv(self.out / f"rho_{label}.csv", ("x", "rho"), (x, rho))

    def record_mass(self, t, mass, ref):
        defect = mass - ref
        self.mass_rows.append((t, mass, defect))
        if abs(defect) > MASS_TOL * abs(ref):
            warnings.warn(
                f"{self.cfg.scheme}: mass changed by {defect:.3e} (relative {defect / ref:.3e}) at t = {t:g}",
                MassDefectWarning, stacklevel=3,
            )

    def finish(self):
        if self.mass_rows:
            write_csv(self.out / "mass.csv", ("t", "mass", "mass_defect"), np.array(self.mass_rows).T)


def _run_kinetic(run):
    cfg = run.cfg
    scfg = cfg.scheme_config()
    g = scfg.grid
    field0 = initial_condition(g, scfg.params)
    st = diagnostics._STEPPERS[cfg.scheme](field0, scfg)
    ref = diagnostics.discrete_mass(field0)
    run.record_mass(0.0, ref, ref)
    for t in cfg.snapshots:
        n = int(round(cfg.native_time(t) / g.dt))
        st.advance(max(0, n - st.steps))
        f = st.field
        run.rho_file(f"t{_fmt(t)}", g.x, f.rho)
        run.record_mass(t, diagnostics.discrete_mass(f), ref)
    final = st.field
    if cfg.steady:
        res = diagnostics.steady_state(cfg.scheme, scfg, t_max=cfg.t_max)
        run.rho_file("steady", g.x, res.rho)
        run.info["steady"] = {"method": res.method, "converged": bool(res.converged),
                              "time": None if res.method == "direct" else float(res.time)}
        final = res.field
    for X in cfg.probes:
        i = int(round(X * g.I))
        write_csv(run.out / f"ydist_x{_fmt(X)}.csv", ("y", "p_plus", "p_minus"),
                  (g.y, final.p_plus[i], final.p_minus[i]))


def _run_macro(run):
    cfg = run.cfg
    mcfg = cfg.scheme_config()
    x = np.arange(cfg.I + 1) * mcfg.dx
    state = limits.macro_initial_state(cfg.scheme, mcfg)
    ref = state.mass()
    run.record_mass(0.0, ref, ref)
    steps = 0
    for t in cfg.snapshots:
        n = int(round(cfg.native_time(t) / mcfg.dt))
        state = limits.advance_macro(cfg.scheme, state, mcfg, max(0, n - steps))
        steps = max(steps, n)
        run.rho_file(f"t{_fmt(t)}", x, state.rho)
        run.record_mass(t, state.mass(), ref)
    if cfg.steady:
        res, _ = diagnostics.march_macro_to_steady(cfg.scheme, mcfg, t_max=cfg.t_max)
        run.rho_file("steady", x, res.rho)
        run.info["steady"] = {"method": "march", "converged": bool(res.converged),
                              "time": float(res.time)}


def _run_monte_carlo(run):
    cfg = run.cfg
    p = cfg.params
    dt = cfg.dt or mc.default_dt(cfg.lambda0)
    ens = mc.init_particles(cfg.particles, p, seed=cfg.seed)
    run.record_mass(0.0, 1.0, 1.0)
    for t in cfg.snapshots:
        mc.run_to(ens, p, dt, t)
        h = mc.node_density(ens, cfg.I)
        run.rho_file(f"t{_fmt(t)}", h.x, h.rho)
        run.record_mass(t, 1.0, 1.0)
    half = 0.5 / cfg.I
    G = abs(cfg.G)
    for X in cfg.probes:
        prof = mc.y_histogram(ens, (X - half, X + half), cfg.y_bins, y_range=(-G, G))
        write_csv(run.out / f"ydist_x{_fmt(X)}.csv", ("y", "p_plus", "p_minus"),
                  (prof.centers, prof.p_plus, prof.p_minus))
    run.info["particles"] = cfg.particles
    run.info["dt"] = dt


def _execute(cfg, out, body):
    out.mkdir(parents=True, exist_ok=True)
    failed = out / "FAILED"
    if failed.exists():
        failed.unlink()
    (out / "run.yaml").write_text(dump_config(cfg))
    run = _Run(cfg, out)
    t0 = time.perf_counter()
    try:
        body(run)
    except BaseException:
        run.finish()
        failed.write_text(traceback.format_exc())
        raise
    run.finish()
    run.info["elapsed_s"] = round(time.perf_counter() - t0, 3)
    (out / "run_info.yaml").write_text(yaml.safe_dump(run.info, sort_keys=False))
    return out


def run_experiment(cfg, out=None):
    """Run the snapshots and steady state described by ``cfg``; returns the output path."""
    out = resolve_output(cfg, out, cfg.scheme)
    if cfg.scheme in KINETIC:
        body = _run_kinetic
    elif cfg.scheme in MACRO:
        body = _run_macro
    else:
        body = _run_monte_carlo
    return _execute(cfg, out, body)


def run_table(cfg, out=None):
    """Compute the convergence table in ``cfg.table`` and write ``table.csv``."""
    if cfg.table is None:
        raise ValueError("configuration has no table section")
    out = resolve_output(cfg, out, f"{cfg.scheme}_table")

    def body(run):
        t = cfg.table
        kw = {}
        if cfg.scheme in ("ap_diff", "ap_diff_modified"):
            kw = {"y_extension": cfg.y_extension, "lambda_rule": cfg.lambda_rule}
        rep = diagnostics.convergence_table(
            cfg.scheme, t.param_name, t.values, t.mesh_pairs, base_params=cfg.params,
            method=t.method, config_kw=dict(dt=cfg.dt, **kw), t_max=cfg.t_max,
        )
        rep.to_csv(run.out / "table.csv")

    return _execute(cfg, out, body)


def compare_runs(run_a, run_b, out=None):
    """Compare the ``rho_*.csv`` files present in both runs.

    Profiles are unit-normalized; the coarser one is compared against the
    finer one on the coarse nodes. Writes ``compare.csv`` into ``out``
    (default ``run_a``) and returns the rows.
    """
    a, b = Path(run_a), Path(run_b)
    names = sorted({p.name for p in a.glob("rho_*.csv")} & {p.name for p in b.glob("rho_*.csv")})
    if not names:
        raise MeshError(f"no common rho_*.csv files in {a} and {b}")
    rows = []
    for name in names:
        ra = read_csv(a / name)[1][:, 1]
        rb = read_csv(b / name)[1][:, 1]
        coarse, fine = (ra, rb) if len(ra) <= len(rb) else (rb, ra)
        err = diagnostics.linf_rel_error(coarse, fine)
        rows.append((name[len("rho_"):-len(".csv")], len(ra) - 1, len(rb) - 1, err))
    target = Path(out) if out is not None else a
    target.mkdir(parents=True, exist_ok=True)
    with open(target / "compare.csv", "w") as fh:
        fh.write("profile,I_a,I_b,linf_rel_err\n")
        for label, ia, ib, err in rows:
            fh.write(f"{label},{ia},{ib},{err:.17g}\n")
    return rows
