import numpy as np
import pytest
import scipy.sparse.linalg as spla

import oracles
from twostream import ap_hyp, limits
from twostream.errors import CFLError
from twostream.limits import (
    MacroState,
    advance_macro,
    kinetic_limit_step,
    ks_centered_step,
    ks_limit_step,
    macro_config,
    make_naive_config,
    naive_limit_ratio,
    naive_limit_step,
    naive_split_step,
    naive_step_matrices,
    naive_transport_step,
)
from twostream.model import ModelParams, TwoStreamField, apply_mirror_bc


@pytest.mark.parametrize("G", [1.0, -1.0])
def test_naive_split_matches_naive_limit(rng, G):
    p = ModelParams(G=G, lambda0=1e8)
    cfg = make_naive_config(p, 20)
    g = cfg.grid
    rho = rng.uniform(0.5, 1.5, g.I + 1)
    # balanced streams already sitting on their sinks
    f = TwoStreamField.zeros(g)
    kp, km = (-1, 0) if G > 0 else (0, -1)
    f.p_plus[:, kp] = rho / 2
    f.p_minus[:, km] = rho / 2
    out = naive_split_step(f, cfg)
    ref = naive_limit_step(MacroState(rho=rho), macro_config(p, 20, dt=g.dt))
    assert np.max(np.abs(out.rho - ref.rho)) / rho.max() < 1e-6


@pytest.mark.parametrize("G", [1.0, -1.0])
def test_naive_transport_matches_dense_oracle(rng, G):
    p = ModelParams(G=G, lambda0=50.0)
    cfg = make_naive_config(p, 8)
    g = cfg.grid
    for _ in range(5):
        f = TwoStreamField(rng.random(g.shape), rng.random(g.shape))
        out = naive_transport_step(f, cfg)
        P, M = oracles.naive_transport(f.p_plus, f.p_minus, g.y, p.chi, p.epsilon, g.dt, g.dx)
        assert np.max(np.abs(out.p_plus - P)) < 1e-12
        assert np.max(np.abs(out.p_minus - M)) < 1e-12


@pytest.mark.parametrize("G", [1.0, -1.0])
def test_naive_step_matrices_reproduce_step(rng, G):
    cfg = make_naive_config(ModelParams(G=G, lambda0=20.0), 6)
    g = cfg.grid
    A, B = naive_step_matrices(cfg)
    f = TwoStreamField(rng.random(g.shape), rng.random(g.shape))
    fo = f.flipped() if cfg.flip else f
    out = B @ spla.spsolve(A.tocsc(), np.concatenate([fo.p_plus.ravel(), fo.p_minus.ravel()]))
    ref = naive_split_step(f, cfg)
    ref = ref.flipped() if cfg.flip else ref
    assert np.max(np.abs(out - np.concatenate([ref.p_plus.ravel(), ref.p_minus.ravel()]))) < 1e-12


@pytest.mark.parametrize("G", [1.0, -1.0])
def test_kinetic_limit_matches_ap_hyp(rng, G):
    p = ModelParams(G=G, lambda0=10.0, tau=1e-10, scaling="hyperbolic")
    cfg = ap_hyp.make_config(p, 20)
    g = cfg.grid
    f = TwoStreamField.zeros(g)
    kp, km = (-1, 0) if G > 0 else (0, -1)
    f.p_plus[:, kp] = rng.uniform(0.5, 1.5, g.I + 1)
    f.p_minus[:, km] = rng.uniform(0.5, 1.5, g.I + 1)
    f = apply_mirror_bc(f)
    out = ap_hyp.ap_hyp_step(f, cfg)
    ref = kinetic_limit_step(MacroState.from_field(f), macro_config(p, 20, dt=g.dt))
    assert np.max(np.abs(out.p_plus.sum(1) - ref.p_bar_plus)) < 1e-8
    assert np.max(np.abs(out.p_minus.sum(1) - ref.p_bar_minus)) < 1e-8


def test_naive_limit_steady_ratio_ignores_the_mesh():
    p = ModelParams(lambda0=1e8)
    ratio = naive_limit_ratio(p)
    assert ratio == pytest.approx((1 + 0.5 * np.arctan(1)) / (1 - 0.5 * np.arctan(1)))
    for I in (8, 16):
        cfg = macro_config(p, I)
        s = advance_macro("naive_limit", MacroState(rho=np.ones(I + 1)), cfg, int(30 / cfg.dt))
        assert np.allclose(s.rho[1:] / s.rho[:-1], ratio, rtol=1e-8)


def test_ks_centered_steady_state_has_closed_form():
    p = ModelParams(G=1.0, chi=0.5, lambda0=1e8)
    I = 10
    cfg = macro_config(p, I)
    s = advance_macro("ks_centered", MacroState(rho=np.ones(I + 1)), cfg, int(8 / cfg.dt))
    h = p.G * p.chi / I
    assert np.allclose(s.rho[1:] / s.rho[:-1], (1 + h / 2) / (1 - h / 2), rtol=1e-9)


@pytest.mark.parametrize("scheme", ["ks_limit", "ks_centered", "naive_limit", "kinetic_limit"])
def test_macro_schemes_conserve_mass(rng, scheme):
    hyperbolic = scheme == "kinetic_limit"
    p = ModelParams(G=-1.0, lambda0=10.0, scaling="hyperbolic" if hyperbolic else "diffusive")
    cfg = macro_config(p, 30)
    if hyperbolic:
        s = MacroState(p_bar_plus=rng.random(31), p_bar_minus=rng.random(31))
        s.p_bar_plus[0] = s.p_bar_minus[0]
        s.p_bar_minus[-1] = s.p_bar_plus[-1]
        s = MacroState(p_bar_plus=s.p_bar_plus, p_bar_minus=s.p_bar_minus)
    else:
        s = MacroState(rho=rng.random(31))
    m0 = s.mass()
    s = advance_macro(scheme, s, cfg, 100)
    assert abs(s.mass() - m0) < 1e-12 * m0
    assert s.rho.min() >= 0


def test_macro_cfl_checks():
    p = ModelParams()
    cfg = macro_config(p, 10, dt=1.0)
    for step in (ks_limit_step, ks_centered_step, naive_limit_step):
        with pytest.raises(CFLError):
            step(MacroState(rho=np.ones(11)), cfg)
    with pytest.raises(CFLError):
        kinetic_limit_step(MacroState(p_bar_plus=np.ones(11), p_bar_minus=np.ones(11)),
                           macro_config(ModelParams(scaling="hyperbolic"), 10, dt=0.2))
    with pytest.raises(ValueError):
        kinetic_limit_step(MacroState(rho=np.ones(11)), macro_config(ModelParams(), 10, dt=0.1))
    with pytest.raises(ValueError):
        MacroState()
    assert limits.macro_initial_state("kinetic_limit", cfg).p_bar_plus.shape == (11,)
