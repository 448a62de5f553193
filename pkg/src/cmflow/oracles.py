"""Closed-form references the numerical kernels are tested against.

Everything here is independent of the grid and flow machinery: exact
round-body ODE solutions, brute-force elementary symmetric polynomials,
symbolic curvature formulas for 1-D profiles, and a Richardson-style
convergence-order estimator. Tests and the ``verify`` subcommand compare
the production code against these routes; nothing in here may import
from the numerical modules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import sympy


# --------------------------------------------------------------------------
# Round-body ODE
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SphereODE:
    """Round body of radius r0 under du/dt = sigma_k(W_u)^alpha with psi = 1.

    For u identically r the principal radii all equal r, so the support
    function obeys the scalar ODE dr/dt = C(n,k)^alpha * r^(k*alpha).
    """

    n_dim: int
    k: int
    alpha: float
    r0: float = 1.0

    def __post_init__(self):
        if not 1 <= self.k <= self.n_dim:
            raise ValueError("need 1 <= k <= n")
        if self.alpha <= 0 or self.r0 <= 0:
            raise ValueError("alpha and r0 must be positive")

    @property
    def speed(self) -> float:
        """C(n,k)^alpha, the constant in dr/dt = speed * r^(k*alpha)."""
        return math.comb(self.n_dim, self.k) ** self.alpha

    @property
    def power(self) -> float:
        return self.k * self.alpha

    def blowup_time(self) -> float:
        """T* for k*alpha > 1; +inf otherwise (solution global)."""
        ka = self.power
        if ka <= 1:
            return math.inf
        return self.r0 ** (1.0 - ka) / ((ka - 1.0) * self.speed)


def sphere_radius(ode: SphereODE, t):
    """Exact radius at time t (scalar or array), valid for t < blowup_time."""
    t = np.asarray(t, dtype=float)
    ka = ode.power
    if np.any(t >= ode.blowup_time()):
        raise ValueError("requested time is at or past the blow-up time")
    if abs(ka - 1.0) < 1e-13:
        r = ode.r0 * np.exp(ode.speed * t)
    else:
        base = ode.r0 ** (1.0 - ka) + (1.0 - ka) * ode.speed * t
        r = base ** (1.0 / (1.0 - ka))
    return float(r) if r.ndim == 0 else r


def stationary_radius(n_dim: int, k: int) -> float:
    """Radius with int u*sigma_k dmu = |S^n|: C(n,k) r^(k+1) = 1."""
    if not 1 <= k <= n_dim:
        raise ValueError("need 1 <= k <= n")
    return math.comb(n_dim, k) ** (-1.0 / (k + 1))


# --------------------------------------------------------------------------
# Elementary symmetric polynomials, brute force
# --------------------------------------------------------------------------

def elementary_symmetric(values) -> np.ndarray:
    """All e_0..e_m of a 1-D list of eigenvalues, by the stable DP recursion."""
    values = np.asarray(values, dtype=float).ravel()
    e = np.zeros(values.size + 1)
    e[0] = 1.0
    for j, lam in enumerate(values, start=1):
        # e_i += lam * e_{i-1}, descending so each lam enters once
        for i in range(min(j, values.size), 0, -1):
            e[i] += lam * e[i - 1]
    return e


def sigma_k_bruteforce(values, k: int) -> float:
    """sigma_k of an explicit eigenvalue list (multiplicities written out)."""
    e = elementary_symmetric(values)
    if not 0 <= k < e.size:
        raise ValueError("k out of range for this eigenvalue list")
    return float(e[k])


# --------------------------------------------------------------------------
# Symbolic curvature of 1-D profiles and zonal fields
# --------------------------------------------------------------------------

def axisym_radii_reference(u_expr, theta):
    """Callables (lam_r, lam_t) for a sympy profile u(theta).

    lam_r = u'' + u (meridional direction), lam_t = cot(theta) u' + u
    (the n-1 azimuthal directions). Vectorized over numpy inputs.
    """
    du = sympy.diff(u_expr, theta)
    lam_r = sympy.diff(u_expr, theta, 2) + u_expr
    lam_t = sympy.cot(theta) * du + u_expr
    return (
        sympy.lambdify(theta, lam_r, modules="numpy"),
        sympy.lambdify(theta, lam_t, modules="numpy"),
    )


def s2_hessian_reference(u_expr, theta, phi):
    """Callables (H11, H12, H22) for a sympy field u(theta, phi) on S^2.

    Components in the orthonormal frame (d_theta, d_phi / sin theta).
    """
    ut = sympy.diff(u_expr, theta)
    up = sympy.diff(u_expr, phi)
    h11 = sympy.diff(u_expr, theta, 2)
    h12 = (sympy.diff(ut, phi) - sympy.cot(theta) * up) / sympy.sin(theta)
    h22 = sympy.diff(u_expr, phi, 2) / sympy.sin(theta) ** 2 + sympy.cot(theta) * ut
    args = (theta, phi)
    return tuple(sympy.lambdify(args, h, modules="numpy") for h in (h11, h12, h22))


# --------------------------------------------------------------------------
# Convergence-order estimation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FdReport:
    h_values: tuple
    errors: tuple
    orders: tuple          # pairwise slopes log(e_i/e_{i+1}) / log(h_i/h_{i+1})
    observed_order: float  # median of the slopes
    max_error: float


def fd_check(err_fn, h_sequence) -> FdReport:
    """Richardson-style order estimate for err_fn(h) over decreasing h.

    err_fn maps a step size (or inverse resolution) to a scalar error.
    Errors at the roundoff floor would corrupt the slope fit, so pairs
    where the finer error is below 1e-14 are skipped.
    """
    hs = [float(h) for h in h_sequence]
    if len(hs) < 2:
        raise ValueError("need at least two step sizes")
    errs = [abs(float(err_fn(h))) for h in hs]
    orders = []
    for (h0, e0), (h1, e1) in zip(zip(hs, errs), zip(hs[1:], errs[1:])):
        if e1 < 1e-14 or e0 < 1e-14:
            continue
        orders.append(math.log(e0 / e1) / math.log(h0 / h1))
    observed = float(np.median(orders)) if orders else math.inf
    return FdReport(tuple(hs), tuple(errs), tuple(orders), observed, max(errs))


def gradient_fd_error(f, grad, point, h) -> float:
    """Max relative deviation of analytic grad(point) from central differences."""
    point = np.asarray(point, dtype=float)
    g = np.asarray(grad(point), dtype=float)
    approx = np.empty_like(g)
    for i in range(point.size):
        delta = np.zeros_like(point)
        delta[i] = h
        approx[i] = (f(point + delta) - f(point - delta)) / (2.0 * h)
    scale = np.maximum(np.abs(g), 1e-30)
    return float(np.max(np.abs(approx - g) / scale))
