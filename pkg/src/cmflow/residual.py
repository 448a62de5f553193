"""Stationarity diagnostics for the normalized flow.

A stationary state satisfies psi sigma_k(W_u)^alpha = eta u pointwise,
i.e. the ratio rho = psi sigma_k^alpha / u is constant. Equivalently,
with p = 1 + 1/alpha and psi_tilde = psi^(-1/alpha), the body solves

    u^(1-p) sigma_k(W_u) = c psi_tilde

for the constant c recovered below. Spread statistics are taken in the
measure dsigma = u sigma_k dmu, the one the flow conserves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import RadiiSpectrum, radii_spectrum, sigma_k
from .errors import ConvexityError
from .grids import SupportField


@dataclass(frozen=True)
class RhoStatistics:
    mean: float       # dsigma-weighted mean of psi sigma_k^alpha / u
    relspread: float  # max |rho/mean - 1|


@dataclass(frozen=True)
class ResidualReport:
    p: float
    c_lp: float            # dsigma-weighted mean of u^(1-p) sigma_k / psi_tilde
    sup_residual: float    # sup |u^(1-p) sigma_k - c psi_tilde| / (c psi_tilde)
    rho_mean: float
    rho_relspread: float


def rho_hat_statistics(u: SupportField, psi: SupportField, k: int, alpha: float,
                       spectrum: RadiiSpectrum | None = None) -> RhoStatistics:
    """Spread of the pointwise speed ratio; cheap enough to run every step."""
    spec = radii_spectrum(u) if spectrum is None else spectrum
    sk = sigma_k(spec, k)
    if np.min(sk) <= 0.0 or np.min(u.values) <= 0.0:
        raise ConvexityError("rho statistics need sigma_k > 0 and u > 0")
    rho = psi.values * sk ** alpha / u.values
    dsig = u.grid.weights * u.values * sk
    mean = float(np.sum(rho * dsig) / np.sum(dsig))
    relspread = float(np.max(np.abs(rho / mean - 1.0)))
    return RhoStatistics(mean, relspread)


def stationarity_residual(u: SupportField, psi: SupportField, k: int,
                          alpha: float,
                          spectrum: RadiiSpectrum | None = None) -> ResidualReport:
    """How far u is from solving u^(1-p) sigma_k = c psi_tilde."""
    spec = radii_spectrum(u) if spectrum is None else spectrum
    sk = sigma_k(spec, k)
    if np.min(sk) <= 0.0:
        raise ConvexityError("sigma_k must be positive on a stationary candidate")
    if np.min(u.values) <= 0.0:
        raise ConvexityError("support function must be positive")
    p = 1.0 + 1.0 / alpha
    psi_tilde = psi.values ** (-1.0 / alpha)
    lhs = u.values ** (1.0 - p) * sk
    dsig = u.grid.weights * u.values * sk
    c = float(np.sum((lhs / psi_tilde) * dsig) / np.sum(dsig))
    sup_res = float(np.max(np.abs(lhs - c * psi_tilde) / (c * psi_tilde)))
    rho = rho_hat_statistics(u, psi, k, alpha, spectrum=spec)
    return ResidualReport(p, c, sup_res, rho.mean, rho.relspread)


def cross_check_pc_relation(alpha: float, k: int) -> dict:
    """Exponent bookkeeping tying the flow to its stationary equation.

    Returns p = 1 + 1/alpha together with the two admissibility exponents,
    which must agree identically: 1/(1 + k alpha) = 1/(k + p - 1) / alpha
    rearranged as alpha (k + p - 1) = k alpha + 1.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    p = 1.0 + 1.0 / alpha
    lhs = alpha * (k + p - 1.0)
    rhs = k * alpha + 1.0
    if abs(lhs - rhs) > 1e-12 * max(1.0, abs(rhs)):
        raise AssertionError("exponent identity alpha(k+p-1) = k alpha + 1 broke")
    out = {
        "p": p,
        "direct_exponent": 1.0 / (1.0 + k * alpha),
        "via_p_exponent": 1.0 / (alpha * (k + p - 1.0)),
        "p_in_range": bool(1.0 < p < k + 1.0) if alpha > 1.0 / k else None,
    }
    return out
