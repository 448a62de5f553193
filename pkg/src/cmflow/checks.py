"""Self-verification battery: oracle checks runnable from the CLI.

Each check returns pass/fail with a one-line diagnostic. The battery is
the release gate: it covers the quadrature, the curvature operators, the
raw flow against its closed-form sphere solution, the two classical
integral identities, and the exponent bookkeeping between the flow and
the elliptic problem it solves.

A fault hook is threaded through for the negative test: corrupting the
quadrature weights must make the area check fail, otherwise the check
itself is dead code.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np
import sympy

from .calculus import (RadiiSpectrum, minkowski_formula_check,
                       polarized_mixed_volume, sigma_k, sigma_k_gradient)
from .flow import FlowConfig, InitialSpec, build_initial, evolve_unnormalized
from .grids import (SphereGrid, SupportField, build_grid, covariant_hessian_s2,
                    sphere_area)
from .oracles import (SphereODE, fd_check, gradient_fd_error,
                      s2_hessian_reference, sigma_k_bruteforce, sphere_radius)
from .residual import cross_check_pc_relation


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _result(name, passed, detail):
    return CheckResult(name, bool(passed), detail)


def _corrupt(grid: SphereGrid) -> SphereGrid:
    w = grid.weights.copy()
    w[0] *= 1.0 + 1e-6
    bad = copy.copy(grid)
    object.__setattr__(bad, "weights", w)
    return bad


def check_quadrature_area(resolution: int = 32, fault: str | None = None) -> CheckResult:
    """Sum of weights reproduces |S^n| to 1e-12 on every grid variant."""
    worst = 0.0
    worst_at = ""
    for n in (2, 3, 4, 5):
        grid = build_grid("axisym", n, resolution)
        if fault == "corrupt_weights":
            grid = _corrupt(grid)
        rel = abs(float(np.sum(grid.weights)) - grid.area) / grid.area
        if rel > worst:
            worst, worst_at = rel, f"axisym n={n}"
    grid = build_grid("full_s2", 2, (resolution, 2 * resolution))
    if fault == "corrupt_weights":
        grid = _corrupt(grid)
    rel = abs(float(np.sum(grid.weights)) - grid.area) / grid.area
    if rel > worst:
        worst, worst_at = rel, "full_s2"
    return _result("quadrature_area", worst < 1e-12,
                   f"max relative area defect {worst:.3e} ({worst_at})")


def check_sphere_ode(resolution: int = 32) -> CheckResult:
    """Raw flow on a round sphere tracks the scalar ODE solution."""
    cfg = FlowConfig(n_dim=2, k=1, alpha=1.0, grid_variant="axisym",
                     resolution=max(8, resolution), init=InitialSpec(1.0, ()),
                     t_max=0.2, rtol=1e-9, atol=1e-13)
    raw = evolve_unnormalized(cfg)
    ode = SphereODE(n_dim=2, k=1, alpha=1.0, r0=1.0)
    worst = 0.0
    for t, vals in zip(raw.times, raw.values):
        r = sphere_radius(ode, t)
        worst = max(worst, float(np.max(np.abs(vals - r))) / r)
    return _result("sphere_ode", worst < 1e-6 and raw.reason == "t_max",
                   f"sup relative tracking error {worst:.3e} "
                   f"over {len(raw.times)} samples")


def _spec_at(point: np.ndarray, n: int) -> RadiiSpectrum:
    return RadiiSpectrum(None, np.asarray(point, dtype=float)[None, :],
                         (1, n - 1))


def check_sigma_values(seed: int = 7) -> CheckResult:
    """Closed-form sigma_k against the brute-force subset sum."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in (2, 3, 4, 5, 6):
        for k in range(1, n):
            a, b = rng.uniform(0.5, 2.0, size=2)
            got = float(sigma_k(_spec_at([a, b], n), k)[0])
            want = sigma_k_bruteforce(np.concatenate([[a], np.full(n - 1, b)]), k)
            worst = max(worst, abs(got - want) / abs(want))
    return _result("sigma_closed_form", worst < 1e-13,
                   f"max relative deviation {worst:.3e} vs subset sums")


def check_sigma_gradient(seed: int = 11) -> CheckResult:
    """Analytic dsigma_k/dlambda against central differences.

    Moving the group-1 coordinate moves all n-1 azimuthal eigenvalues at
    once, so the directional derivative carries the multiplicity.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in (2, 3, 5):
        for k in range(1, n):
            point = rng.uniform(0.6, 1.8, size=2)

            def f(x, n=n, k=k):
                return float(sigma_k(_spec_at(x, n), k)[0])

            def grad(x, n=n, k=k):
                g = sigma_k_gradient(_spec_at(x, n), k)[0]
                return np.array([g[0], (n - 1) * g[1]])

            worst = max(worst, gradient_fd_error(f, grad, point, 1e-6))
    return _result("sigma_gradient_fd", worst < 1e-6,
                   f"max relative gradient deviation {worst:.3e}")


def check_hessian_order(resolution: int = 32) -> CheckResult:
    """FullS2 Hessian against the symbolic reference, plus refinement order.

    The error at the requested resolution must clear an absolute gate,
    and the observed convergence order over a refinement pair must be
    at least 4. Both clauses carry their measured numbers so a failure
    at coarse resolution says exactly what broke.
    """
    th, ph = sympy.symbols("theta phi", real=True)
    expr = 1 + sympy.Rational(1, 5) * sympy.sin(th) ** 2 * sympy.cos(2 * ph) \
        + sympy.Rational(1, 10) * (3 * sympy.cos(th) ** 2 - 1)
    refs = s2_hessian_reference(expr, th, ph)
    fn = sympy.lambdify((th, ph), expr, modules="numpy")

    def err(h):
        n_lat = int(round(1.0 / h))
        grid = build_grid("full_s2", 2, (n_lat, 2 * n_lat))
        tt = grid.theta[:, None] + 0.0 * grid.phi[None, :]
        pp = 0.0 * grid.theta[:, None] + grid.phi[None, :]
        u = SupportField(grid, fn(tt, pp))
        h11, h12, h22 = covariant_hessian_s2(u)
        return max(float(np.max(np.abs(a - r(tt, pp))))
                   for a, r in zip((h11, h12, h22), refs))

    e_here = err(1.0 / resolution)
    report = fd_check(err, [1.0 / resolution, 1.0 / (2 * resolution)])
    ok = e_here < 1e-6 and report.observed_order >= 4.0
    return _result(
        "hessian_order", ok,
        f"error {e_here:.3e} at resolution {resolution} (gate 1e-06), "
        f"observed order {report.observed_order:.2f} (gate 4)")


def check_minkowski(resolution: int = 48) -> CheckResult:
    """(k+1) int u sigma_k dmu = (n-k) int sigma_{k-1} dmu on convex bodies."""
    worst = 0.0
    for n, k in ((2, 1), (3, 1), (3, 2), (5, 3)):
        grid = build_grid("axisym", n, resolution)
        u = build_initial(grid, InitialSpec(1.0, ((2, 0, 0.15),)), k,
                          normalize=False)
        worst = max(worst, minkowski_formula_check(u, k).defect)
    grid = build_grid("full_s2", 2, (resolution, 2 * resolution))
    u = build_initial(grid, InitialSpec(1.0, ((2, 1, 0.1),)), 1, normalize=False)
    worst = max(worst, minkowski_formula_check(u, 1).defect)
    return _result("minkowski_formula", worst < 1e-8,
                   f"max relative defect {worst:.3e}")


def check_af_inequality(resolution: int = 48, seed: int = 3,
                        pairs: int = 25) -> CheckResult:
    """V(v,u,..)^2 >= V(v,v,u,..) V(u,..) with equality at v = a u + linear."""
    rng = np.random.default_rng(seed)
    grid = build_grid("axisym", 3, resolution)
    min_gap = np.inf
    for _ in range(pairs):
        amp_u = rng.uniform(-0.12, 0.12)
        amp_v = rng.uniform(-0.12, 0.12)
        u = build_initial(grid, InitialSpec(1.0, ((2, 0, amp_u),)), 2,
                          normalize=False)
        v = build_initial(
            grid, InitialSpec(float(rng.uniform(0.7, 1.3)),
                              ((int(rng.choice([2, 4])), 0, amp_v),)), 2,
            normalize=False)
        pol = polarized_mixed_volume(v, u, 2)
        min_gap = min(min_gap, pol.gap_relative)
    u = build_initial(grid, InitialSpec(1.0, ((2, 0, 0.1),)), 2, normalize=False)
    lin = SupportField(grid, 0.77 * u.values + 0.05 * grid.cos_t)
    eq_gap = abs(polarized_mixed_volume(lin, u, 2).gap_relative)
    ok = min_gap >= -1e-9 and eq_gap < 1e-9
    return _result("af_inequality", ok,
                   f"min relative gap {min_gap:.3e} over {pairs} pairs, "
                   f"equality-case |gap| {eq_gap:.3e}")


def check_exponent_identity() -> CheckResult:
    """alpha (k + p - 1) = k alpha + 1 across a (k, alpha) sweep."""
    worst = 0.0
    for k in (1, 2, 3, 5):
        for alpha in (0.21, 0.5, 1.0, 1.7, 3.0):
            rep = cross_check_pc_relation(alpha, k)
            worst = max(worst, abs(rep["direct_exponent"]
                                   - rep["via_p_exponent"]))
            if rep["direct_exponent"] * rep["via_p_exponent"] <= 0:
                return _result("exponent_identity", False,
                               f"sign mismatch at k={k}, alpha={alpha}")
    return _result("exponent_identity", worst < 1e-14,
                   f"max exponent mismatch {worst:.3e}")


def run_verify(resolution: int = 32, fault: str | None = None) -> list:
    """The full battery. fault='corrupt_weights' exercises the negative path."""
    out = []
    for fn, kwargs in (
            (check_quadrature_area, {"resolution": resolution, "fault": fault}),
            (check_sphere_ode, {"resolution": resolution}),
            (check_sigma_values, {}),
            (check_sigma_gradient, {}),
            (check_hessian_order, {"resolution": resolution}),
            (check_minkowski, {"resolution": max(48, resolution)}),
            (check_af_inequality, {"resolution": max(48, resolution)}),
            (check_exponent_identity, {})):
        try:
            out.append(fn(**kwargs))
        except Exception as exc:  # a crashed check is a failed check
            out.append(_result(fn.__name__.removeprefix("check_"), False,
                               f"raised {type(exc).__name__}: {exc}"))
    return out
