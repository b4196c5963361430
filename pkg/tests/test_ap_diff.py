import numpy as np
import pytest

import oracles
from twostream import ap_diff
from twostream.ap_diff import (
    ApDiffStepper,
    ap_diff_step,
    cfl_dt_diff,
    make_config,
    projection_step,
    step_matrices,
    support_leak,
    transport_relax_step,
)
from twostream.errors import CFLError, MeshError, ParameterError
from twostream.limits import MacroState, ks_limit_step, macro_config
from twostream.model import (
    ModelParams,
    TwoStreamField,
    apply_mirror_bc,
    discrete_mass,
    initial_condition,
    make_grid,
    tumbling_response,
)


def random_field(rng, shape):
    return TwoStreamField(rng.random(shape), rng.random(shape))


@pytest.mark.parametrize("G", [1.0, -1.0, 0.5])
@pytest.mark.parametrize("modified", [False, True])
def test_projection_matches_dense_oracle(rng, G, modified):
    p = ModelParams(G=G, lambda0=3.0, tau=0.5 if modified else 1.0)
    cfg = make_config(p, 4, modified_tau=modified, y_extension=2.0 if modified else None)
    g = cfg.grid
    tau_eff = cfg.tau_eff
    r = g.dt / (p.epsilon * tau_eff * g.dy)
    for _ in range(5):
        f = random_field(rng, g.shape)
        out = projection_step(f, cfg)
        assert np.max(np.abs(out.p_plus - oracles.upwind_step(f.p_plus, g.y, 0.0, r))) < 1e-12
        assert np.max(np.abs(out.p_minus - oracles.upwind_step(f.p_minus, g.y, 0.0, r))) < 1e-12


@pytest.mark.parametrize("G", [1.0, -1.0])
@pytest.mark.parametrize("lambda0", [1.0, 100.0])
def test_transport_matches_dense_oracle(rng, G, lambda0):
    p = ModelParams(G=G, chi=0.5, lambda0=lambda0)
    cfg = make_config(p, 6)
    g = cfg.grid
    for _ in range(3):
        f = random_field(rng, g.shape)
        out = transport_relax_step(f, cfg)
        P, M = oracles.ap_diff_transport(f.p_plus, f.p_minus, g.y, g.dy, p.chi, G, 1.0,
                                         p.epsilon, g.dt, g.dx)
        assert np.max(np.abs(out.p_plus - P)) < 1e-12
        assert np.max(np.abs(out.p_minus - M)) < 1e-12


def test_modified_transport_matches_dense_oracle(rng):
    p = ModelParams(G=1.0, lambda0=10.0, tau=0.25)
    cfg = make_config(p, 8, modified_tau=True, y_extension=2.0)
    g = cfg.grid
    assert g.dy == pytest.approx(4 * g.dx)
    f = random_field(rng, g.shape)
    out = transport_relax_step(f, cfg)
    P, M = oracles.ap_diff_transport(f.p_plus, f.p_minus, g.y, g.dy, p.chi, p.G, p.tau,
                                     p.epsilon, g.dt, g.dx)
    assert np.max(np.abs(out.p_plus - P)) < 1e-12
    assert np.max(np.abs(out.p_minus - M)) < 1e-12


@pytest.mark.parametrize("G", [1.0, -1.0])
def test_step_matrices_reproduce_step(rng, G):
    cfg = make_config(ModelParams(G=G, lambda0=5.0), 5)
    g = cfg.grid
    A, B = step_matrices(cfg)
    f = random_field(rng, g.shape)
    fo = f.flipped() if cfg.flip else f
    v = np.concatenate([fo.p_plus.ravel(), fo.p_minus.ravel()])
    half = np.linalg.solve(A.toarray(), v)
    out = B @ half
    ref = ap_diff_step(f, cfg)
    ref = ref.flipped() if cfg.flip else ref
    assert np.max(np.abs(out - np.concatenate([ref.p_plus.ravel(), ref.p_minus.ravel()]))) < 1e-12


def test_projection_keeps_column_sums(rng):
    cfg = make_config(ModelParams(lambda0=1e4), 20)
    f = random_field(rng, cfg.grid.shape)
    out = projection_step(f, cfg)
    assert np.max(np.abs(out.p_plus.sum(1) - f.p_plus.sum(1))) < 1e-13 * f.p_plus.sum(1).max()
    assert np.max(np.abs(out.p_minus.sum(1) - f.p_minus.sum(1))) < 1e-13 * f.p_minus.sum(1).max()


def test_projection_concentrates_at_zero(rng):
    cfg = make_config(ModelParams(lambda0=1e12), 10)
    f = random_field(rng, cfg.grid.shape)
    out = projection_step(f, cfg)
    K = cfg.grid.K
    off = out.rho.sum() - out.p_plus[:, K].sum() - out.p_minus[:, K].sum()
    assert off / out.rho.sum() < 1e-8


def test_cfl_bound_and_rejection():
    p = ModelParams(lambda0=10.0)
    cfg = make_config(p, 20)
    dt_max = cfl_dt_diff(cfg)
    assert dt_max == pytest.approx(0.5 * tumbling_response(1.0, 0.5) / 400)
    with pytest.raises(CFLError) as exc:
        make_config(p, 20, dt=1.01 * dt_max)
    assert exc.value.dt_max == pytest.approx(dt_max)
    make_config(p, 20, dt=dt_max)


def test_config_checks():
    p = ModelParams(lambda0=10.0)
    with pytest.raises(ParameterError):
        make_config(ModelParams(lambda0=1.0, scaling="hyperbolic"), 10).__class__(
            ModelParams(scaling="hyperbolic"), make_grid(10, 1.0, 1.0, 1e-4))
    with pytest.raises(MeshError):
        ap_diff.ApDiffConfig(p, make_grid(10, 0.5, 1.0, 1e-4))
    assert ap_diff.default_y_extension(0.02) == 3.0
    assert ap_diff.default_y_extension(0.01) == 4.0
    assert ap_diff.default_y_extension(0.1) == 2.0
    assert ap_diff.default_y_extension(0.5) == 1.0


@pytest.mark.parametrize("G", [1.0, -1.0])
def test_positivity_at_cfl_limit(rng, G):
    p = ModelParams(G=G, lambda0=10.0)
    cfg0 = make_config(p, 12)
    cfg = make_config(p, 12, dt=cfl_dt_diff(cfg0))
    for _ in range(20):
        # admissible states satisfy the wall conditions
        f = apply_mirror_bc(TwoStreamField(rng.random(cfg.grid.shape) ** 4,
                                           rng.random(cfg.grid.shape) ** 4))
        out = ap_diff_step(f, cfg)
        assert out.p_plus.min() >= 0 and out.p_minus.min() >= 0


def test_mass_conserved_while_support_condition_holds(rng):
    cfg = make_config(ModelParams(lambda0=1e3), 16)
    g = cfg.grid
    f = random_field(rng, g.shape)
    # keep the outermost y-cells empty
    f.p_plus[:, -3:] = 0
    f.p_minus[:, :3] = 0
    f = apply_mirror_bc(f)
    m0 = discrete_mass(f)
    st = ApDiffStepper(f, cfg)
    for _ in range(50):
        m = discrete_mass(st.field)
        leak = support_leak(st.field)
        st.advance(1)
        if leak < 1e-14 * m0:
            assert abs(discrete_mass(st.field) - m) <= 1e-12 * m0


def test_ap_step_matches_ks_limit(rng):
    p = ModelParams(lambda0=1e8)
    cfg = make_config(p, 20)
    g = cfg.grid
    rho = rng.uniform(0.5, 1.5, g.I + 1)
    f = TwoStreamField.zeros(g)
    f.p_plus[:, g.K] = f.p_minus[:, g.K] = rho / 2
    out = ap_diff_step(f, cfg)
    ref = ks_limit_step(MacroState(rho=rho), macro_config(p, g.I, dt=g.dt))
    assert np.max(np.abs(out.rho - ref.rho)) / rho.max() < 1e-6


def test_stepper_matches_single_steps():
    cfg = make_config(ModelParams(lambda0=10.0), 10)
    f = initial_condition(cfg.grid, cfg.params)
    a = ap_diff.advance(f, cfg, 3)
    b = f
    for _ in range(3):
        b = ap_diff_step(b, cfg)
    assert np.allclose(a.p_plus, b.p_plus, rtol=0, atol=1e-14)
    assert np.allclose(a.p_minus, b.p_minus, rtol=0, atol=1e-14)
