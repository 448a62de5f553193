"""Anisotropy construction, validation, and the structural admissibility check.

The closed-form families are zonal (Legendre polynomials in cos theta), so
one implementation serves both grid layouts and evenness is automatic for
even degrees. Arbitrary anisotropies can be loaded from a plain text
sample file instead; those are validated, never smoothed.

Admissibility is the convexity of psi^(1/(1 + k alpha)) as a support-like
field: W of that power must be positive definite. The same condition can
be phrased through psi_tilde = psi^(-1/alpha) raised to -1/(k + p - 1)
with p = 1 + 1/alpha; both routes are computed and must agree in sign.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_legendre

from .calculus import min_radius
from .errors import AdmissibilityError, ConfigError, GridError
from .grids import SphereGrid, SupportField

FAMILIES = ("constant", "even_harmonic", "power_of_base")

# strict positivity margin: admissible means min eigenvalue above this
ADMISSIBLE_MARGIN = 1e-8


@dataclass(frozen=True)
class PsiSpec:
    """Closed-form anisotropy: a family name plus numeric parameters."""

    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown psi family {self.family!r}")
        p = dict(self.params)
        if self.family == "constant":
            if p.get("value", 1.0) <= 0:
                raise ConfigError("constant psi must be positive")
        else:
            degree = int(p.get("degree", 2))
            if degree < 2 or degree % 2 != 0:
                raise ConfigError("harmonic degree must be even and >= 2 "
                                  "(odd degrees break evenness)")


def eval_psi(spec: PsiSpec, grid: SphereGrid) -> SupportField:
    """Sample the anisotropy on the grid nodes; every sample must be positive."""
    p = spec.params
    if spec.family == "constant":
        vals = np.full(grid.shape, float(p.get("value", 1.0)))
    else:
        degree = int(p.get("degree", 2))
        leg = eval_legendre(degree, grid.cos_t)
        if spec.family == "even_harmonic":
            profile = 1.0 + float(p.get("amplitude", 0.0)) * leg
        else:  # power_of_base
            base = 1.0 + float(p.get("epsilon", 0.0)) * leg
            if np.any(base <= 0.0):
                raise AdmissibilityError("power_of_base base is nonpositive")
            profile = base ** float(p.get("exponent", 1.0))
        if grid.variant == "full_s2":
            vals = np.broadcast_to(profile[:, None], grid.shape).copy()
        else:
            vals = profile
    if np.any(vals <= 0.0) or not np.all(np.isfinite(vals)):
        raise AdmissibilityError("psi must be positive and finite everywhere")
    # the analytic families are even by construction; make it bit-exact
    from .grids import symmetrize_even

    return symmetrize_even(SupportField(grid, vals))


def check_even(psi_field: SupportField) -> float:
    """Evenness defect max |psi(x) - psi(-x)|; exact zero is not required."""
    from .grids import evenness_defect

    return evenness_defect(psi_field)


def check_admissible(psi_field: SupportField, k: int, alpha: float) -> float:
    """Min eigenvalue of W applied to psi^(1/(1+k alpha)).

    Positive (above ADMISSIBLE_MARGIN) means the anisotropy satisfies the
    structural hypothesis. The equivalent exponent route through
    psi_tilde = psi^(-1/alpha) is evaluated as well; a sign disagreement
    would mean the two power laws were wired inconsistently, so it is a
    hard error, not a return value.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    grid = psi_field.grid
    vals = psi_field.values
    if np.any(vals <= 0.0):
        raise AdmissibilityError("psi must be positive")
    p = 1.0 + 1.0 / alpha
    f_direct = SupportField(grid, vals ** (1.0 / (1.0 + k * alpha)))
    psi_tilde = vals ** (-1.0 / alpha)
    f_tilde = SupportField(grid, psi_tilde ** (-1.0 / (k + p - 1.0)))
    m_direct = min_radius(f_direct)
    m_tilde = min_radius(f_tilde)
    scale = max(abs(m_direct), abs(m_tilde), 1.0)
    if m_direct * m_tilde < 0 and min(abs(m_direct), abs(m_tilde)) > 1e-12 * scale:
        raise AdmissibilityError(
            f"exponent routes disagree: {m_direct:.3e} vs {m_tilde:.3e}")
    return m_direct


def is_admissible(psi_field: SupportField, k: int, alpha: float) -> bool:
    return check_admissible(psi_field, k, alpha) > ADMISSIBLE_MARGIN


def load_sampled_psi(path, grid: SphereGrid) -> SupportField:
    """Read one sample per line, latitude-major, and validate it.

    The file must hold exactly one value per grid node. Values are taken
    as-is (no smoothing); positivity and finiteness are enforced here,
    evenness is the caller's business via check_even.
    """
    data = np.loadtxt(path, dtype=float).ravel()
    expected = int(np.prod(grid.shape))
    if data.size != expected:
        raise GridError(f"sample file has {data.size} values, grid needs {expected}")
    if np.any(data <= 0.0) or not np.all(np.isfinite(data)):
        raise AdmissibilityError("sampled psi must be positive and finite")
    return SupportField(grid, data.reshape(grid.shape))


def psi_spec_to_dict(spec: PsiSpec) -> dict:
    """Flat mapping used for config echo and round-tripping."""
    out = {"family": spec.family}
    out.update({k: float(v) if isinstance(v, float) else v
                for k, v in spec.params.items()})
    return out


def psi_spec_from_config(table: dict) -> PsiSpec:
    family = table.get("family")
    if not isinstance(family, str):
        raise ConfigError("psi.family must be a string")
    params = dict(table.get("params", {}))
    for key, val in params.items():
        if not isinstance(val, (int, float)):
            raise ConfigError(f"psi.params.{key} must be numeric")
    return PsiSpec(family, params)
