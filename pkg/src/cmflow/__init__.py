"""Curvature-measure flow toolkit for even convex bodies on the sphere.

Evolves support functions under the normalized expanding flow
du/dt = psi sigma_k^alpha - eta u and reports how close the limit is to
solving u^(1-p) sigma_k(grad^2 u + u g) = c psi^(-1/alpha).
"""

from .anisotropy import (
    ADMISSIBLE_MARGIN,
    PsiSpec,
    check_admissible,
    check_even,
    eval_psi,
    is_admissible,
    load_sampled_psi,
)
from .calculus import (
    EmbeddedBody,
    MinkowskiReport,
    PolarizedVolumes,
    RadiiSpectrum,
    embed,
    gamma_k_min,
    min_radius,
    minkowski_formula_check,
    mixed_volume_k1,
    polarized_mixed_volume,
    radii_spectrum,
    sigma_k,
    sigma_k_gradient,
    write_mesh,
)
from .errors import (
    AdmissibilityError,
    CmflowError,
    ConfigError,
    ConvexityError,
    FlowAbort,
    GridError,
)
from .artifacts import (
    read_field_txt,
    summary_payload,
    write_field_txt,
    write_raw_csv,
    write_summary_json,
    write_trace_csv,
)
from .checks import CheckResult, run_verify
from .config import (
    RandomInit,
    RunConfig,
    config_echo,
    expand_sweep,
    load_config,
    run_config_from_dict,
)
from .flow import (
    FlowConfig,
    FlowTrace,
    InitialSpec,
    NormalizedSamples,
    RawTrace,
    build_initial,
    eta,
    evolve,
    evolve_unnormalized,
    j_functional,
    normalized_rhs,
    renormalize,
    rescale_raw_to_normalized,
)
from .grids import (
    SphereGrid,
    SupportField,
    build_grid,
    constant_field,
    evenness_defect,
    field_from_function,
    gradient_norm_sq,
    quadrature,
    sphere_area,
    symmetrize_even,
)
from .residual import (
    ResidualReport,
    RhoStatistics,
    cross_check_pc_relation,
    rho_hat_statistics,
    stationarity_residual,
)

__version__ = "0.1.0"

__all__ = [
    "ADMISSIBLE_MARGIN",
    "AdmissibilityError",
    "CheckResult",
    "CmflowError",
    "ConfigError",
    "ConvexityError",
    "EmbeddedBody",
    "FlowAbort",
    "FlowConfig",
    "FlowTrace",
    "GridError",
    "InitialSpec",
    "MinkowskiReport",
    "NormalizedSamples",
    "PolarizedVolumes",
    "PsiSpec",
    "RadiiSpectrum",
    "RandomInit",
    "RawTrace",
    "ResidualReport",
    "RhoStatistics",
    "RunConfig",
    "SphereGrid",
    "SupportField",
    "build_grid",
    "build_initial",
    "check_admissible",
    "check_even",
    "config_echo",
    "constant_field",
    "cross_check_pc_relation",
    "embed",
    "eta",
    "eval_psi",
    "evenness_defect",
    "evolve",
    "evolve_unnormalized",
    "expand_sweep",
    "field_from_function",
    "gamma_k_min",
    "gradient_norm_sq",
    "is_admissible",
    "j_functional",
    "load_config",
    "load_sampled_psi",
    "min_radius",
    "minkowski_formula_check",
    "mixed_volume_k1",
    "normalized_rhs",
    "polarized_mixed_volume",
    "quadrature",
    "radii_spectrum",
    "read_field_txt",
    "renormalize",
    "rescale_raw_to_normalized",
    "rho_hat_statistics",
    "run_config_from_dict",
    "run_verify",
    "sigma_k",
    "sigma_k_gradient",
    "sphere_area",
    "stationarity_residual",
    "summary_payload",
    "symmetrize_even",
    "write_field_txt",
    "write_mesh",
    "write_raw_csv",
    "write_summary_json",
    "write_trace_csv",
]
