"""Acceptance suite: eleven numbered criteria, one report line each.

Each test measures its quantities, files a PASS/FAIL line into the
terminal summary (see conftest), and asserts. Tolerances are pinned
here, not imported, so a library change cannot silently relax them.
"""
import time
from contextlib import contextmanager

import numpy as np
import pytest

import cmflow as cm
from conftest import record_criterion

R_STAR_N2_K1 = 0.70710678118654752  # stationary radius, isotropic n=2 k=1
ANISO_PSI = cm.PsiSpec("power_of_base", {"epsilon": 0.1, "exponent": 3.0})


@contextmanager
def criterion(num, name):
    rec = {"ok": False, "detail": "no measurement recorded"}
    try:
        yield rec
    except BaseException as exc:
        record_criterion(num, name, False, f"raised {type(exc).__name__}: {exc}")
        raise
    record_criterion(num, name, rec["ok"], rec["detail"])
    assert rec["ok"], f"criterion {num} ({name}): {rec['detail']}"


def test_criterion_01_isotropic_baseline():
    with criterion(1, "isotropic baseline returns to the round sphere") as rec:
        cfg = cm.FlowConfig(n_dim=2, k=1, alpha=1.0,
                            grid_variant="full_s2", resolution=(64, 128),
                            init=cm.InitialSpec(1.0, ((2, 0, 0.1),)))
        t0 = time.perf_counter()
        u, trace = cm.evolve(cfg)
        wall = time.perf_counter() - t0
        sup_err = float(np.max(np.abs(u.values - R_STAR_N2_K1)))
        rec["ok"] = (trace.converged and sup_err < 1e-3
                     and trace.residual_final < 1e-6 and wall < 60.0)
        rec["detail"] = (f"sup|u - r*| = {sup_err:.3e} (< 1e-3), "
                         f"relspread {trace.residual_final:.3e} (< 1e-6), "
                         f"{wall:.1f} s (< 60)")


def test_criterion_02_anisotropic_solve():
    with criterion(2, "anisotropic solve meets the elliptic residual") as rec:
        cfg = cm.FlowConfig(n_dim=3, k=2, alpha=1.0, psi=ANISO_PSI,
                            grid_variant="axisym", resolution=96,
                            init=cm.InitialSpec(1.0, ((2, 0, 0.1),)))
        t0 = time.perf_counter()
        u, trace = cm.evolve(cfg)
        wall = time.perf_counter() - t0
        psi = cm.eval_psi(cfg.psi, u.grid)
        report = cm.stationarity_residual(u, psi, cfg.k, cfg.alpha)
        rec["ok"] = (trace.converged and report.sup_residual < 2e-3
                     and wall < 120.0)
        rec["detail"] = (f"sup residual {report.sup_residual:.3e} (< 2e-3), "
                         f"c = {report.c_lp:.6f}, {wall:.1f} s (< 120)")


def test_criterion_03_j_monotonicity(batch_results):
    with criterion(3, "J never increases across the randomized batch") as rec:
        worst_inc = max(t.max_j_step_increase for _, _, t in batch_results)
        worst_rate = max(t.j_rate_final / (1e-6 * abs(t.j_final))
                         for _, _, t in batch_results)
        all_conv = all(t.converged for _, _, t in batch_results)
        rec["ok"] = all_conv and worst_inc <= 1e-9 and worst_rate < 1.0
        rec["detail"] = (f"max step increase {worst_inc:.2e} (<= 1e-9 rel), "
                         f"final |dJ/dt| at {worst_rate:.2e} of the 1e-6|J| "
                         f"budget, {len(batch_results)} runs")


def test_criterion_04_volume_conservation(batch_results):
    with criterion(4, "normalized volume conserved after every step") as rec:
        worst = max(t.max_volume_defect for _, _, t in batch_results)
        rec["ok"] = worst < 1e-10
        rec["detail"] = (f"max relative defect {worst:.2e} (< 1e-10) over "
                         f"{sum(t.steps_accepted for _, _, t in batch_results)} "
                         f"accepted steps")


def test_criterion_05_eta_bounds(batch_results):
    with criterion(5, "eta stays in (0, eta(0)]") as rec:
        low = min(t.min_eta for _, _, t in batch_results)
        rel_high = max(t.max_eta / (t.eta0 * (1.0 + 1e-8))
                       for _, _, t in batch_results)
        rec["ok"] = low > 0.0 and rel_high <= 1.0
        rec["detail"] = (f"min eta {low:.3e} (> 0), max eta at {rel_high:.10f} "
                         f"of the eta(0) bound")


def test_criterion_06_blowup_oracle():
    with criterion(6, "raw flow tracks the closed-form sphere solutions") as rec:
        # supercritical: r' = (2r)^2, r(t) = 1/(1 - 4t), T* = 1/4
        cfg = cm.FlowConfig(n_dim=2, k=1, alpha=2.0, grid_variant="axisym",
                            resolution=32, init=cm.InitialSpec(1.0, ()),
                            t_max=1.0, rtol=1e-10, atol=1e-14)
        raw = cm.evolve_unnormalized(cfg)
        sup_err = 0.0
        for t, vals in zip(raw.times, raw.values):
            if t <= 0.225:
                r = 1.0 / (1.0 - 4.0 * t)
                sup_err = max(sup_err, float(np.max(np.abs(vals - r))) / r)
        guard_ok = raw.reason == "blowup_guard" and raw.times[-1] < 0.25
        covered = raw.times[-1] > 0.225

        # critical k alpha = 1: r(t) = e^{2t}, sampled exactly at t = 1/2
        cfg1 = cm.FlowConfig(n_dim=2, k=1, alpha=1.0, grid_variant="axisym",
                             resolution=32, init=cm.InitialSpec(1.0, ()),
                             t_max=0.5, rtol=1e-10, atol=1e-14)
        raw1 = cm.evolve_unnormalized(cfg1)
        r_exp = float(np.exp(1.0))
        exp_err = float(np.max(np.abs(raw1.values[-1] - r_exp))) / r_exp
        exact_t = raw1.times[-1] == 0.5

        rec["ok"] = (sup_err < 1e-4 and guard_ok and covered
                     and exp_err < 1e-4 and exact_t)
        rec["detail"] = (f"blow-up sup rel err {sup_err:.2e} (< 1e-4), guard at "
                         f"t = {raw.times[-1]:.4f} (< 0.25); exp case rel err "
                         f"{exp_err:.2e} at t = 0.5")


def test_criterion_07_rescaling_consistency():
    with criterion(7, "raw-rescaled and normalized runs agree in tau") as rec:
        ini = cm.InitialSpec(1.0, ((2, 0, 0.08),))
        cfg_n = cm.FlowConfig(n_dim=2, k=1, alpha=0.75, grid_variant="axisym",
                              resolution=48, init=ini, t_max=1.5,
                              residual_tol=1e-13, rtol=1e-8, snapshot_every=1)
        _, tr = cm.evolve(cfg_n)
        cfg_r = cm.FlowConfig(n_dim=2, k=1, alpha=0.75, grid_variant="axisym",
                              resolution=48, init=ini, t_max=2.5, rtol=1e-8)
        ns = cm.rescale_raw_to_normalized(cm.evolve_unnormalized(cfg_r), 1, 0.75)

        t_snap = np.array([s[0] for s in tr.snapshots])
        v_snap = np.array([s[1] for s in tr.snapshots])
        hi = min(ns.tau[-1], t_snap[-1])
        sup = 0.0
        compared = 0
        for tau, vals in zip(ns.tau, ns.values):
            if tau > hi:
                break
            j = np.searchsorted(t_snap, tau)
            if j == 0:
                interp = v_snap[0]
            else:
                w = (tau - t_snap[j - 1]) / (t_snap[j] - t_snap[j - 1])
                interp = (1.0 - w) * v_snap[j - 1] + w * v_snap[j]
            sup = max(sup, float(np.max(np.abs(vals - interp))))
            compared += 1
        rec["ok"] = sup < 5e-3 and compared > 100 and hi > 1.0
        rec["detail"] = (f"sup distance {sup:.2e} (< 5e-3) over tau in "
                         f"[0, {hi:.2f}], {compared} samples")


def test_criterion_08_unique_limit():
    with criterion(8, "distinct starts land on one body") as rec:
        starts = (cm.InitialSpec(1.0, ((2, 0, 0.12),)),
                  cm.InitialSpec(1.0, ((4, 0, -0.05), (2, 0, 0.03))),
                  cm.InitialSpec(1.0, ((6, 0, 0.02), (2, 0, -0.08))))
        finals = []
        for ini in starts:
            cfg = cm.FlowConfig(n_dim=3, k=2, alpha=1.0, psi=ANISO_PSI,
                                grid_variant="axisym", resolution=96, init=ini)
            u, trace = cm.evolve(cfg)
            assert trace.converged
            finals.append(u.values)
        worst = max(float(np.max(np.abs(finals[i] - finals[j])))
                    for i in range(3) for j in range(i + 1, 3))
        rec["ok"] = worst < 1e-3
        rec["detail"] = f"max pairwise sup distance {worst:.2e} (< 1e-3)"


def test_criterion_09_calculus_correctness():
    with criterion(9, "curvature calculus against oracles") as rec:
        # (a) analytic sigma_k gradient vs multiplicity-aware differences
        rng = np.random.default_rng(2024)
        grad_err = 0.0
        for n in (2, 3, 4, 6):
            for k in range(1, n):
                point = rng.uniform(0.5, 2.0, size=2)
                spec = cm.RadiiSpectrum(None, point[None, :], (1, n - 1))

                def f(x, n=n, k=k):
                    s = cm.RadiiSpectrum(None, np.asarray(x)[None, :], (1, n - 1))
                    return float(cm.sigma_k(s, k)[0])

                g = cm.sigma_k_gradient(spec, k)[0]
                for i, mult in enumerate((1, n - 1)):
                    h = 1e-6
                    dx = np.zeros(2)
                    dx[i] = h
                    fd = (f(point + dx) - f(point - dx)) / (2 * h)
                    grad_err = max(grad_err,
                                   abs(fd - mult * g[i]) / max(abs(fd), 1e-30))

        # (b) W annihilates linear functions, order >= 4 under refinement
        def w_kernel_err(h):
            m = int(round(1.0 / h))
            g = cm.build_grid("full_s2", 2, (m, 2 * m))
            lin = (0.2 * np.sin(g.theta)[:, None] * np.cos(g.phi)[None, :]
                   + 0.15 * np.cos(g.theta)[:, None] + 0.0 * g.phi[None, :])
            spec = cm.radii_spectrum(cm.SupportField(g, 1.0 + lin))
            return float(np.max(np.abs(spec.lam - 1.0)))

        from cmflow.oracles import fd_check
        rep = fd_check(w_kernel_err, [1 / 16, 1 / 24, 1 / 32])

        gx = cm.build_grid("axisym", 3, 48)
        spec_ax = cm.radii_spectrum(cm.SupportField(gx, 1.0 + 0.3 * gx.cos_t))
        ax_err = float(np.max(np.abs(spec_ax.lam - 1.0)))

        # (c) Minkowski formula on smooth bodies
        mink = 0.0
        for n, k in ((2, 1), (3, 1), (3, 2), (5, 3)):
            grid = cm.build_grid("axisym", n, 48)
            u = cm.build_initial(grid, cm.InitialSpec(1.0, ((2, 0, 0.15),)), k,
                                 normalize=False)
            mink = max(mink, cm.minkowski_formula_check(u, k).defect)

        # (d) AF inequality on 100 random admissible pairs, plus equality
        rng = np.random.default_rng(77)
        grid = cm.build_grid("axisym", 3, 48)
        min_gap = np.inf
        for _ in range(100):
            u = cm.build_initial(
                grid, cm.InitialSpec(1.0, ((2, 0, float(rng.uniform(-0.12, 0.12))),)),
                2, normalize=False)
            v = cm.build_initial(
                grid, cm.InitialSpec(float(rng.uniform(0.7, 1.3)),
                                     ((int(rng.choice([2, 4])), 0,
                                       float(rng.uniform(-0.1, 0.1))),)),
                2, normalize=False)
            min_gap = min(min_gap, cm.polarized_mixed_volume(v, u, 2).gap_relative)
        u = cm.build_initial(grid, cm.InitialSpec(1.0, ((2, 0, 0.1),)), 2,
                             normalize=False)
        v_eq = cm.SupportField(grid, u.values + 0.1 * grid.cos_t)
        eq_gap = abs(cm.polarized_mixed_volume(v_eq, u, 2).gap_relative)

        rec["ok"] = (grad_err < 1e-6 and rep.observed_order >= 4.0
                     and ax_err < 1e-10 and mink < 1e-8
                     and min_gap >= -1e-9 and eq_gap < 1e-9)
        rec["detail"] = (f"grad FD err {grad_err:.1e} (< 1e-6), W-kernel order "
                         f"{rep.observed_order:.2f} (>= 4), Minkowski defect "
                         f"{mink:.1e} (< 1e-8), AF min gap {min_gap:.1e} "
                         f"(>= -1e-9), equality gap {eq_gap:.1e} (< 1e-9)")


def test_criterion_10_admissibility_gate():
    with criterion(10, "admissibility gate and exponent agreement") as rec:
        grid = cm.build_grid("axisym", 3, 64)
        k, alpha = 2, 1.0

        flat = cm.eval_psi(cm.PsiSpec("constant", {"value": 1.0}), grid)
        m_flat = cm.check_admissible(flat, k, alpha)

        below = cm.eval_psi(cm.PsiSpec(
            "power_of_base", {"epsilon": 0.4, "exponent": 1 + k * alpha}), grid)
        m_below = cm.check_admissible(below, k, alpha)

        beyond = cm.eval_psi(cm.PsiSpec(
            "power_of_base", {"epsilon": 0.7, "exponent": 1 + k * alpha}), grid)
        m_beyond = cm.check_admissible(beyond, k, alpha)

        # both exponent routes agree in sign across a (k, alpha) sweep;
        # check_admissible itself hard-errors on any disagreement
        agree = True
        for kk in (1, 2):
            for aa in (0.6, 1.0, 1.7, 2.5):
                psi = cm.eval_psi(cm.PsiSpec(
                    "power_of_base", {"epsilon": 0.25, "exponent": 2.0}), grid)
                cm.check_admissible(psi, kk, aa)
                rel = cm.cross_check_pc_relation(aa, kk)
                agree &= abs(rel["direct_exponent"]
                             - rel["via_p_exponent"]) < 1e-14

        rec["ok"] = (abs(m_flat - 1.0) < 1e-10
                     and m_below > cm.ADMISSIBLE_MARGIN
                     and m_beyond < 0.0 and agree)
        rec["detail"] = (f"flat margin {m_flat:.6f} (= 1), eps 0.4 margin "
                         f"{m_below:.4f} (> 0), eps 0.7 margin {m_beyond:.4f} "
                         f"(< 0), exponent routes agree on the sweep")


def test_criterion_11_determinism(tmp_path):
    with criterion(11, "identical config and seed give identical bytes") as rec:
        cfg = cm.FlowConfig(n_dim=3, k=1, alpha=1.0, psi=ANISO_PSI,
                            grid_variant="axisym", resolution=48,
                            init=cm.InitialSpec(1.0, ((2, 0, 0.09), (4, 0, 0.02))),
                            residual_tol=1e-5, t_max=10.0)
        payloads = []
        for tag in ("a", "b"):
            u, trace = cm.evolve(cfg)
            path = tmp_path / f"trace_{tag}.csv"
            cm.write_trace_csv(path, trace)
            cm.write_field_txt(tmp_path / f"u_{tag}.txt", u)
            payloads.append((path.read_bytes(),
                             (tmp_path / f"u_{tag}.txt").read_bytes()))
        same_trace = payloads[0][0] == payloads[1][0]
        same_field = payloads[0][1] == payloads[1][1]
        rec["ok"] = same_trace and same_field
        rec["detail"] = (f"trace CSV identical: {same_trace}, final field "
                         f"identical: {same_field} "
                         f"({len(payloads[0][0])} bytes compared)")
