"""Normalization, functionals, initial bodies, and both evolution drivers."""
import math

import numpy as np
import pytest

import cmflow as cm
from cmflow.errors import ConfigError, ConvexityError, FlowAbort
from cmflow.oracles import stationary_radius

PSI_ONE = cm.PsiSpec("constant", {"value": 1.0})


def psi_one(grid):
    return cm.eval_psi(PSI_ONE, grid)


def test_eta_round_literals(grid_full32):
    # u = 1 on S^2, k = 1: sigma_1 = 2, eta = mean sigma_1^2 = 4
    u = cm.constant_field(grid_full32, 1.0)
    assert cm.eta(u, psi_one(grid_full32), 1, 1.0) == pytest.approx(4.0, rel=1e-12)
    # u = 1/sqrt(2): sigma_1 = sqrt(2), eta = 2 (the stationary value)
    r = stationary_radius(2, 1)
    u = cm.constant_field(grid_full32, r)
    assert cm.eta(u, psi_one(grid_full32), 1, 1.0) == pytest.approx(2.0, rel=1e-12)


def test_j_functional_round_literals(grid_full32):
    one = psi_one(grid_full32)
    u = cm.constant_field(grid_full32, 1.0)
    assert cm.j_functional(u, one, 1.0) == pytest.approx(12.566370614359172,
                                                         rel=1e-12)
    r = stationary_radius(2, 1)
    u = cm.constant_field(grid_full32, r)
    # r^2 |S^2| = 2 pi
    assert cm.j_functional(u, one, 1.0) == pytest.approx(6.283185307179586,
                                                         rel=1e-12)
    with pytest.raises(ConvexityError):
        cm.j_functional(cm.constant_field(grid_full32, -1.0), one, 1.0)


def test_normalized_rhs_vanishes_at_stationary_round(grid_axi48):
    r = stationary_radius(3, 2)
    u = cm.constant_field(grid_axi48, r)
    rhs = cm.normalized_rhs(u, psi_one(grid_axi48), 2, 1.0)
    assert np.max(np.abs(rhs.values)) < 1e-9


@pytest.mark.parametrize("c", [0.3, 1.0, 5.0])
def test_renormalize_constant_lands_on_stationary_radius(grid_axi48, c):
    u = cm.renormalize(cm.constant_field(grid_axi48, c), 2)
    assert np.max(np.abs(u.values - stationary_radius(3, 2))) < 1e-12


def test_renormalize_sets_volume_exactly(grid_full32):
    vals = 1.0 + 0.1 * np.cos(grid_full32.theta)[:, None] ** 2 \
        + 0.0 * grid_full32.phi[None, :]
    u = cm.symmetrize_even(cm.SupportField(grid_full32, vals))
    out = cm.renormalize(u, 1)
    assert cm.mixed_volume_k1(out, 1) == pytest.approx(grid_full32.area,
                                                       rel=1e-13)


def test_initial_spec_validation():
    with pytest.raises(ConfigError):
        cm.InitialSpec(terms=((3, 0, 0.1),))    # odd degree
    with pytest.raises(ConfigError):
        cm.InitialSpec(terms=((2, 3, 0.1),))    # order above degree
    cm.InitialSpec(terms=((4, 2, 0.05),))        # fine


def test_build_initial_order_needs_full_grid(grid_axi48):
    spec = cm.InitialSpec(terms=((2, 2, 0.05),))
    with pytest.raises(ConfigError):
        cm.build_initial(grid_axi48, spec, 2)


def test_build_initial_rejects_nonconvex(grid_axi48):
    spec = cm.InitialSpec(terms=((2, 0, 5.0),))
    with pytest.raises(ConvexityError):
        cm.build_initial(grid_axi48, spec, 2)


def test_build_initial_normalizes_and_symmetrizes(grid_full32):
    spec = cm.InitialSpec(terms=((2, 0, 0.1), (4, 2, 0.03)))
    u = cm.build_initial(grid_full32, spec, 1)
    assert cm.evenness_defect(u) == 0.0
    assert cm.mixed_volume_k1(u, 1) == pytest.approx(grid_full32.area, rel=1e-12)
    assert cm.min_radius(u) > 0


def test_flow_config_validation():
    with pytest.raises(ConfigError):
        cm.FlowConfig(n_dim=3, k=3)       # k must stay below n
    with pytest.raises(ConfigError):
        cm.FlowConfig(alpha=0.0)
    with pytest.raises(ConfigError):
        cm.FlowConfig(safety=1.5)
    with pytest.raises(ConfigError):
        cm.FlowConfig(gamma=1.0)
    assert cm.FlowConfig(n_dim=2).gamma_value == pytest.approx(0.2)
    assert cm.FlowConfig(n_dim=3, grid_variant="axisym",
                         resolution=32).gamma_value == pytest.approx(1.0 / 7.0)


def test_evolve_converges_immediately_from_round_start():
    cfg = cm.FlowConfig(n_dim=3, k=1, grid_variant="axisym", resolution=32,
                        init=cm.InitialSpec(base=2.0), residual_tol=1e-6)
    u, trace = cm.evolve(cfg)
    assert trace.converged
    assert trace.steps_accepted == 0
    assert trace.reason == "residual_tol"
    # base was renormalized before the first residual check
    assert np.max(np.abs(u.values - stationary_radius(3, 1))) < 1e-12


def test_evolve_short_run_monitors(grid_axi48):
    cfg = cm.FlowConfig(n_dim=3, k=2, grid_variant="axisym", resolution=48,
                        init=cm.InitialSpec(terms=((2, 0, 0.15),)),
                        residual_tol=1e-9, t_max=0.2, snapshot_every=1)
    u, trace = cm.evolve(cfg)
    assert trace.steps_accepted > 0
    assert trace.max_evenness_defect == 0.0          # symmetry is bit-exact
    assert trace.max_j_step_increase <= 1e-9
    assert trace.max_volume_defect < 1e-10
    assert 0.0 < trace.min_eta <= trace.max_eta <= trace.eta0 * (1 + 1e-8)
    # snapshots: initial sample plus one per step, final time included
    assert len(trace.snapshots) == trace.steps_accepted + 1
    assert trace.snapshots[-1][0] == trace.t_final
    assert trace.records[0].t == 0.0


def test_evolve_accepts_explicit_initial_field(grid_axi48):
    vals = 1.0 + 0.1 * (3 * grid_axi48.cos_t ** 2 - 1) / 2
    u0 = cm.SupportField(grid_axi48, vals)
    cfg = cm.FlowConfig(n_dim=3, k=1, grid_variant="axisym", resolution=48,
                        residual_tol=1e-8, t_max=20.0)
    u, trace = cm.evolve(cfg, u0=u0)
    assert trace.converged
    assert np.max(np.abs(u.values - stationary_radius(3, 1))) < 1e-6


def test_evolve_warns_at_low_alpha():
    cfg = cm.FlowConfig(n_dim=3, k=2, alpha=0.5, grid_variant="axisym",
                        resolution=32, residual_tol=1e-3, t_max=0.05)
    _, trace = cm.evolve(cfg)
    assert "alpha_at_or_below_1_over_k" in trace.warnings


def test_evolve_dt_underrun_aborts_with_trace():
    # an impossible error demand forces the reject loop to the floor
    cfg = cm.FlowConfig(n_dim=3, k=1, grid_variant="axisym", resolution=32,
                        init=cm.InitialSpec(terms=((2, 0, 0.2),)),
                        rtol=1e-16, atol=1e-30, dt_min=1e-4, dt_init=1e-3,
                        residual_tol=1e-14, t_max=5.0)
    with pytest.raises(FlowAbort) as exc:
        cm.evolve(cfg)
    assert exc.value.reason == "dt_min_underrun"
    assert exc.value.trace is not None
    assert exc.value.trace.reason == "dt_min_underrun"


def test_raw_flow_lands_on_t_max_exactly(grid_full32):
    cfg = cm.FlowConfig(n_dim=2, k=1, alpha=1.0, resolution=(32, 64),
                        init=cm.InitialSpec(base=1.0), t_max=0.3,
                        rtol=1e-8)
    raw = cm.evolve_unnormalized(cfg)
    assert raw.reason == "t_max"
    assert raw.times[-1] == 0.3            # exact landing, not 0.3 - epsilon
    # round body, k alpha = 1: u(t) = e^(2t)
    assert np.max(np.abs(raw.values[-1] - math.e ** 0.6)) < 1e-6


def test_raw_flow_blowup_guard():
    cfg = cm.FlowConfig(n_dim=2, k=1, alpha=2.0, resolution=(32, 64),
                        init=cm.InitialSpec(base=1.0), t_max=1.0,
                        guard_factor=5.0, rtol=1e-8)
    raw = cm.evolve_unnormalized(cfg)
    assert raw.reason == "blowup_guard"
    # guard tripped before the k alpha = 2 blow-up at T* = 1/4
    assert raw.times[-1] < 0.25


def test_rescaling_tau_equals_t_when_k_alpha_is_one(grid_full32):
    cfg = cm.FlowConfig(n_dim=2, k=1, alpha=1.0, resolution=(32, 64),
                        init=cm.InitialSpec(base=1.3), t_max=0.2, rtol=1e-8)
    raw = cm.evolve_unnormalized(cfg)
    samples = cm.rescale_raw_to_normalized(raw, 1, 1.0)
    assert np.max(np.abs(samples.tau - np.asarray(raw.times))) < 1e-12
    # every rescaled sample is the stationary round body
    r_star = stationary_radius(2, 1)
    for vals in samples.values:
        assert np.max(np.abs(vals - r_star)) < 1e-7
