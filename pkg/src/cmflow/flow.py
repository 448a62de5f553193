"""Time integration of the normalized and raw expanding flows.

The normalized dynamics for the support function u is

    du/dt = psi sigma_k(W_u)^alpha - eta(t) u,
    eta(t) = (1/|S^n|) int psi sigma_k^(1+alpha) dmu,

whose stationary points solve psi sigma_k^alpha = eta u, and whose
conserved quantity int u sigma_k dmu = |S^n| is re-imposed exactly after
every accepted step by a homogeneous rescaling. The raw flow drops the
eta term and is used for oracle tracking and self-similar rescaling
checks.

Steps use the Bogacki-Shampine 3(2) embedded pair with a PI controller.
A step is accepted only if the embedded error passes, the candidate stays
uniformly convex, and the monotone functional

    J(u) = int psi^(-1/alpha) u^(1+1/alpha) dmu

has not increased beyond a 1e-9 relative slack. Rejections halve dt; an
underrun of dt_min aborts with the trace attached. The candidate is
antipodally symmetrized before renormalization, so evenness is exact at
every step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_legendre, lpmv

from .anisotropy import (
    ADMISSIBLE_MARGIN,
    PsiSpec,
    check_admissible,
    check_even,
    eval_psi,
)
from .calculus import (
    RadiiSpectrum,
    gamma_k_min,
    radii_spectrum,
    sigma_k,
    sigma_k_gradient,
)
from .errors import AdmissibilityError, ConfigError, ConvexityError, FlowAbort
from .grids import (
    SphereGrid,
    SupportField,
    build_grid,
    evenness_defect,
    gradient_norm_sq,
    project_zonal,
    quadrature,
    symmetrize_even,
)
from .residual import rho_hat_statistics

EVEN_PSI_TOL = 1e-10  # relative evenness defect allowed without --allow-uneven

# Bogacki-Shampine 3(2): third-order propagator, second-order comparator
_BS_A = ((), (0.5,), (0.0, 0.75), (2 / 9, 1 / 3, 4 / 9))
_BS_B = (2 / 9, 1 / 3, 4 / 9, 0.0)
_BS_BHAT = (7 / 24, 1 / 4, 1 / 3, 1 / 8)


# --------------------------------------------------------------------------
# Functionals
# --------------------------------------------------------------------------

def eta(u: SupportField, psi: SupportField, k: int, alpha: float,
        spectrum: RadiiSpectrum | None = None) -> float:
    """Mean normalization speed (1/|S^n|) int psi sigma_k^(1+alpha) dmu."""
    spec = radii_spectrum(u) if spectrum is None else spectrum
    sk = sigma_k(spec, k)
    if np.min(sk) <= 0.0:
        raise ConvexityError("sigma_k must be positive for fractional powers")
    integrand = psi.values * sk ** (1.0 + alpha)
    return float(np.sum(u.grid.weights * integrand)) / u.grid.area


def j_functional(u: SupportField, psi: SupportField, alpha: float) -> float:
    """Monotone functional int psi^(-1/alpha) u^(1+1/alpha) dmu."""
    if np.min(u.values) <= 0.0:
        raise ConvexityError("u must be positive (origin inside the body)")
    integrand = psi.values ** (-1.0 / alpha) * u.values ** (1.0 + 1.0 / alpha)
    return float(np.sum(u.grid.weights * integrand))


def normalized_rhs(u: SupportField, psi: SupportField, k: int, alpha: float) -> SupportField:
    """psi sigma_k(W_u)^alpha - eta u, the normalized flow velocity."""
    pieces = _flow_pieces(u.grid, u.values, psi.values, k, alpha)
    return SupportField(u.grid, pieces.rhs)


def renormalize(u: SupportField, k: int,
                spectrum: RadiiSpectrum | None = None) -> SupportField:
    """Rescale so that int u sigma_k(W_u) dmu = |S^n| (exact by homogeneity)."""
    spec = radii_spectrum(u) if spectrum is None else spectrum
    vol = float(np.sum(u.grid.weights * u.values * sigma_k(spec, k)))
    if vol <= 0.0:
        raise ConvexityError("mixed volume must be positive to renormalize")
    lam = (u.grid.area / vol) ** (1.0 / (k + 1))
    out = u.scaled(lam)
    new_vol = float(np.sum(u.grid.weights * out.values
                           * sigma_k(radii_spectrum(out), k)))
    if abs(new_vol - u.grid.area) > 1e-10 * u.grid.area:
        raise FlowAbort("volume", "renormalization failed to restore the volume")
    return out


@dataclass(frozen=True)
class _Pieces:
    spectrum: RadiiSpectrum
    sk: np.ndarray
    speed: np.ndarray   # psi sigma_k^alpha
    eta: float
    rhs: np.ndarray
    dt_stable: float    # explicit-stability cap for the linearized rhs


# real-axis absolute-stability reach of the third-order propagator,
# derated so capped modes decay strongly instead of sitting on the boundary
_STABLE_REACH = 0.72 * 2.51


def _flow_pieces(grid: SphereGrid, vals: np.ndarray, psi_vals: np.ndarray,
                 k: int, alpha: float, normalized: bool = True) -> _Pieces:
    spec = radii_spectrum(SupportField(grid, vals))
    if gamma_k_min(spec, k) <= 0.0:
        raise ConvexityError("state left the Gamma_k cone")
    sk = sigma_k(spec, k)
    sk_alpha = sk ** alpha
    speed = psi_vals * sk_alpha
    if normalized:
        eta_val = float(np.sum(grid.weights * speed * sk)) / grid.area
        rhs = speed - eta_val * vals
    else:
        eta_val = 0.0
        rhs = speed
    # diffusion coefficient of the linearization: alpha psi sigma^(alpha-1)
    # times the largest sigma_k eigenvalue derivative; an explicit step is
    # stable only while dt * coeff * lap_bound stays inside the region
    grad = sigma_k_gradient(spec, k)
    coeff = float(np.max(alpha * speed / sk * np.max(grad, axis=-1)))
    dt_stable = _STABLE_REACH / (coeff * grid.lap_bound + eta_val + 1e-300)
    return _Pieces(spec, sk, speed, eta_val, rhs, dt_stable)


# --------------------------------------------------------------------------
# Configuration and state
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class InitialSpec:
    """Even initial body 'base + sum of zonal/tesseral harmonics'.

    terms are (degree, order, amplitude); degree must be even so the body
    is origin-symmetric. order > 0 needs a full_s2 grid and multiplies the
    unnormalized associated Legendre P_l^m(cos theta) by cos(m phi).
    """

    base: float = 1.0
    terms: tuple = ()

    def __post_init__(self):
        for degree, order, _ in self.terms:
            if degree % 2 != 0 or degree < 2:
                raise ConfigError("initial harmonic degrees must be even >= 2")
            if not 0 <= order <= degree:
                raise ConfigError("need 0 <= order <= degree")


@dataclass(frozen=True)
class FlowConfig:
    n_dim: int = 2
    k: int = 1
    alpha: float = 1.0
    psi: PsiSpec = field(default_factory=lambda: PsiSpec("constant", {"value": 1.0}))
    init: InitialSpec = field(default_factory=InitialSpec)
    grid_variant: str = "full_s2"
    resolution: object = (64, 128)
    dt_init: float = 1e-3
    dt_min: float = 1e-13
    dt_max: float = 0.25
    safety: float = 0.9
    rtol: float = 1e-7
    atol: float = 1e-11
    residual_tol: float = 1e-6
    t_max: float = 50.0
    max_steps: int = 500_000
    monitor_every: int = 25
    gamma: float | None = None       # default 1/(2n+1)
    snapshot_every: int = 0          # 0 disables (t, u) snapshots
    guard_factor: float = 50.0       # raw-flow blow-up guard on max u
    force_inadmissible: bool = False
    allow_uneven: bool = False

    def __post_init__(self):
        if not 1 <= self.k <= self.n_dim - 1:
            raise ConfigError("need 1 <= k <= n-1")
        if self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        if not 0 < self.safety < 1:
            raise ConfigError("safety must lie in (0, 1)")
        if self.gamma is not None and not 0 < self.gamma < 1:
            raise ConfigError("gamma must lie in (0, 1)")

    @property
    def gamma_value(self) -> float:
        return self.gamma if self.gamma is not None else 1.0 / (2 * self.n_dim + 1)


@dataclass
class TraceRecord:
    t: float
    eta: float
    j: float
    volume: float
    min_radius: float
    u_min: float
    u_max: float
    grad_q: float
    residual: float
    dt: float


CSV_COLUMNS = ("t", "eta", "J", "volume", "min_radius", "u_min", "u_max",
               "grad_q", "residual", "dt")


@dataclass
class FlowTrace:
    records: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    converged: bool = False
    reason: str = ""
    t_final: float = 0.0
    steps_accepted: int = 0
    steps_rejected: int = 0
    eta0: float = math.nan
    eta_final: float = math.nan
    j_final: float = math.nan
    residual_final: float = math.nan
    j_rate_final: float = math.nan
    # per-accepted-step extremes (cover every step, not just records)
    max_eta: float = -math.inf
    min_eta: float = math.inf
    max_volume_drift: float = 0.0     # pre-renormalization, relative
    max_volume_defect: float = 0.0    # post-renormalization, relative
    min_min_radius: float = math.inf
    max_j_step_increase: float = 0.0  # relative to |J|
    max_evenness_defect: float = 0.0
    u_max_overall: float = -math.inf
    u_min_overall: float = math.inf
    snapshots: list = field(default_factory=list)


# --------------------------------------------------------------------------
# Initial data
# --------------------------------------------------------------------------

def build_initial(grid: SphereGrid, init: InitialSpec, k: int,
                  normalize: bool = True) -> SupportField:
    """Sample, symmetrize, convexity-check, and renormalize an initial body.

    On axisym grids the state lives in the resolved zonal subspace, so a
    requested degree above n_lat/2 is truncated away.
    """
    vals = np.full(grid.shape, float(init.base))
    for degree, order, amp in init.terms:
        degree = int(degree)
        order = int(order)
        if order == 0:
            profile = eval_legendre(degree, grid.cos_t)
            if grid.variant == "full_s2":
                vals = vals + amp * profile[:, None]
            else:
                vals = vals + amp * profile
        else:
            if grid.variant != "full_s2":
                raise ConfigError("order > 0 harmonics need a full_s2 grid")
            profile = lpmv(order, degree, grid.cos_t)
            block = profile[:, None] * np.cos(order * grid.phi)[None, :]
            # unit sup-norm so amp means the same thing at every order
            vals = vals + amp * block / np.max(np.abs(block))
    vals = project_zonal(grid, vals)
    u = symmetrize_even(SupportField(grid, vals))
    spec = radii_spectrum(u)
    if spec.min_eigenvalue() <= 0.0:
        raise ConvexityError("initial body is not uniformly convex")
    if np.min(u.values) <= 0.0:
        raise ConvexityError("initial support function must be positive")
    if not normalize:
        return u
    return renormalize(u, k, spectrum=spec)


# --------------------------------------------------------------------------
# Stepping
# --------------------------------------------------------------------------

@dataclass
class _StepOutcome:
    values: np.ndarray
    j_new: float
    dt_used: float
    dt_next: float
    volume_drift: float
    err_norm: float


class _Stepper:
    """Embedded-pair driver shared by the normalized and raw flows."""

    def __init__(self, grid, psi_vals, k, alpha, cfg: FlowConfig, normalized: bool):
        self.grid = grid
        self.psi_vals = psi_vals
        self.k = k
        self.alpha = alpha
        self.cfg = cfg
        self.normalized = normalized
        self.err_prev = 1.0
        self.cooldown = 0
        self.rejects_accum = 0

    def _rhs(self, vals):
        return _flow_pieces(self.grid, vals, self.psi_vals, self.k, self.alpha,
                            normalized=self.normalized)

    def attempt(self, vals, j_old, dt, first_pieces):
        """One accept/reject loop; returns a _StepOutcome or raises FlowAbort."""
        cfg = self.cfg
        dt = min(dt, first_pieces.dt_stable)
        rejects = 0
        reason = "error"
        while True:
            if dt < cfg.dt_min:
                label = {"convexity": "convexity_lost", "j": "j_increase"}.get(
                    reason, "dt_min_underrun")
                raise FlowAbort(label, f"dt underran dt_min while rejecting on "
                                       f"{reason}")
            outcome = self._try_dt(vals, j_old, dt, first_pieces)
            if isinstance(outcome, _StepOutcome):
                return outcome
            reason = outcome
            dt *= 0.5
            rejects += 1
            self.cooldown = 3
            self.rejects_accum += 1

    def _try_dt(self, vals, j_old, dt, k1_pieces):
        cfg = self.cfg
        try:
            k1 = k1_pieces.rhs
            k2 = self._rhs(vals + dt * 0.5 * k1).rhs
            k3 = self._rhs(vals + dt * 0.75 * k2).rhs
            cand = vals + dt * (_BS_B[0] * k1 + _BS_B[1] * k2 + _BS_B[2] * k3)
            # projecting onto even (and, on axisym, resolved-degree) fields
            # before the comparator stage moves the point by one step's
            # aliasing only, and lets the stage spectrum double as the
            # acceptance-gate spectrum
            cand = project_zonal(self.grid, cand)
            cand = symmetrize_even(SupportField(self.grid, cand)).values
            if np.min(cand) <= 0.0:
                return "convexity"
            k4_pieces = self._rhs(cand)
        except ConvexityError:
            return "convexity"
        # comparator difference dt sum (b - bhat)_i k_i without forming the
        # second-order solution
        diff = dt * ((_BS_B[0] - _BS_BHAT[0]) * k1 + (_BS_B[1] - _BS_BHAT[1]) * k2
                     + (_BS_B[2] - _BS_BHAT[2]) * k3 - _BS_BHAT[3] * k4_pieces.rhs)
        scale = cfg.atol + cfg.rtol * np.abs(cand)
        err = float(np.sqrt(np.mean((diff / scale) ** 2)))
        if not math.isfinite(err) or err > 1.0:
            return "error"

        spec = k4_pieces.spectrum
        if spec.min_eigenvalue() <= 0.0:
            return "convexity"

        if self.normalized:
            vol = float(np.sum(self.grid.weights * cand * k4_pieces.sk))
            if vol <= 0.0:
                return "convexity"
            drift = abs(vol - self.grid.area) / self.grid.area
            lam = (self.grid.area / vol) ** (1.0 / (self.k + 1))
            cand = lam * cand
            j_new = j_functional(SupportField(self.grid, cand),
                                 SupportField(self.grid, self.psi_vals), self.alpha)
            if j_new > j_old + 1e-9 * abs(j_old):
                return "j"
        else:
            drift = 0.0
            j_new = math.nan

        # PI controller (error exponents for a third-order pair)
        e_now = max(err, 1e-10)
        fac = cfg.safety * e_now ** (-0.7 / 3.0) * self.err_prev ** (0.4 / 3.0)
        cap = 1.0 if self.cooldown > 0 else 1.5
        self.cooldown = max(0, self.cooldown - 1)
        fac = min(cap, max(0.2, fac))
        dt_next = min(cfg.dt_max, max(cfg.dt_min, dt * fac))
        self.err_prev = e_now
        return _StepOutcome(cand, j_new, dt, dt_next, drift, err)


# --------------------------------------------------------------------------
# Normalized evolution
# --------------------------------------------------------------------------

def _prepare(config: FlowConfig, u0: SupportField | None, normalize: bool = True):
    grid = build_grid(config.grid_variant, config.n_dim, config.resolution)
    psi = eval_psi(config.psi, grid)
    warnings = []
    defect = check_even(psi)
    if defect > EVEN_PSI_TOL * float(np.max(psi.values)):
        if not config.allow_uneven:
            raise ConfigError("psi is not even; pass allow_uneven to proceed "
                              "(no convergence claim then)")
        warnings.append("uneven_psi_accepted")
    margin = check_admissible(psi, config.k, config.alpha)
    if margin <= ADMISSIBLE_MARGIN:
        if not config.force_inadmissible:
            raise AdmissibilityError(
                f"psi fails the admissibility hypothesis (margin {margin:.3e}); "
                "pass force_inadmissible to run anyway")
        warnings.append("inadmissible_psi_forced")
    if config.alpha <= 1.0 / config.k:
        warnings.append("alpha_at_or_below_1_over_k")
    if u0 is None:
        u0 = build_initial(grid, config.init, config.k, normalize=normalize)
    else:
        if u0.grid.shape != grid.shape:
            grid = u0.grid
            psi = eval_psi(config.psi, grid)
        u0 = symmetrize_even(SupportField(grid, project_zonal(grid, u0.values)))
        if radii_spectrum(u0).min_eigenvalue() <= 0.0:
            raise ConvexityError("initial body is not uniformly convex")
        if normalize:
            u0 = renormalize(u0, config.k)
    return grid, psi, u0, warnings


def evolve(config: FlowConfig, u0: SupportField | None = None):
    """Run the normalized flow until the stationarity residual drops below
    residual_tol or t reaches t_max. Returns (final field, FlowTrace)."""
    grid, psi, u, warnings = _prepare(config, u0)
    trace = FlowTrace(warnings=warnings)
    stepper = _Stepper(grid, psi.values, config.k, config.alpha, config, True)

    pieces = _flow_pieces(grid, u.values, psi.values, config.k, config.alpha)
    j_val = j_functional(u, psi, config.alpha)
    stats = rho_hat_statistics(u, psi, config.k, config.alpha,
                               spectrum=pieces.spectrum)
    trace.eta0 = pieces.eta
    t = 0.0
    dt = config.dt_init
    u0_max = float(np.max(u.values))

    def record(dt_used):
        grad_q = float(np.max(gradient_norm_sq(u)
                              / u.values ** config.gamma_value))
        trace.records.append(TraceRecord(
            t, pieces.eta, j_val, vol_now(), float(pieces.spectrum.lam.min()),
            float(np.min(u.values)), float(np.max(u.values)),
            grad_q, stats.relspread, dt_used))

    def vol_now():
        return float(np.sum(grid.weights * u.values * pieces.sk))

    record(0.0)
    if config.snapshot_every > 0:
        trace.snapshots.append((0.0, u.values.copy()))
    converged = stats.relspread < config.residual_tol
    j_prev = j_val

    while not converged and t < config.t_max and trace.steps_accepted < config.max_steps:
        remaining = config.t_max - t
        try:
            out = stepper.attempt(u.values, j_val,
                                  min(dt, config.dt_max, remaining), pieces)
        except FlowAbort as abort:
            trace.reason = abort.reason
            trace.t_final = t
            _finalize(trace, pieces, j_val, stats)
            abort.trace = trace
            raise
        trace.steps_rejected = stepper.rejects_accum
        # land on t_max exactly when the clamp was the binding constraint
        t = config.t_max if out.dt_used >= remaining else t + out.dt_used
        dt = out.dt_next
        u = SupportField(grid, out.values)
        j_prev, j_val = j_val, out.j_new
        pieces = _flow_pieces(grid, u.values, psi.values, config.k, config.alpha)
        stats = rho_hat_statistics(u, psi, config.k, config.alpha,
                                   spectrum=pieces.spectrum)
        trace.steps_accepted += 1

        # per-step monitors; these cover every accepted step
        trace.max_eta = max(trace.max_eta, pieces.eta)
        trace.min_eta = min(trace.min_eta, pieces.eta)
        trace.max_volume_drift = max(trace.max_volume_drift, out.volume_drift)
        trace.max_volume_defect = max(
            trace.max_volume_defect, abs(vol_now() - grid.area) / grid.area)
        trace.min_min_radius = min(trace.min_min_radius,
                                   float(pieces.spectrum.lam.min()))
        inc = (j_val - j_prev) / abs(j_prev)
        trace.max_j_step_increase = max(trace.max_j_step_increase, inc)
        trace.max_evenness_defect = max(trace.max_evenness_defect,
                                        evenness_defect(u))
        trace.u_max_overall = max(trace.u_max_overall, float(np.max(u.values)))
        trace.u_min_overall = min(trace.u_min_overall, float(np.min(u.values)))
        trace.j_rate_final = abs(j_val - j_prev) / out.dt_used

        if pieces.eta > trace.eta0 * (1.0 + 1e-8):
            trace.reason = "eta_bound"
            trace.t_final = t
            _finalize(trace, pieces, j_val, stats)
            raise FlowAbort("eta_bound",
                            f"eta exceeded its initial value: {pieces.eta} > "
                            f"{trace.eta0}", trace)

        if trace.steps_accepted % config.monitor_every == 0:
            record(out.dt_used)
        if config.snapshot_every > 0 and \
                trace.steps_accepted % config.snapshot_every == 0:
            trace.snapshots.append((t, u.values.copy()))
        converged = stats.relspread < config.residual_tol

    trace.t_final = t
    if not trace.records or trace.records[-1].t != t:
        record(dt)
    if config.snapshot_every > 0 and (not trace.snapshots
                                      or trace.snapshots[-1][0] != t):
        trace.snapshots.append((t, u.values.copy()))
    trace.converged = converged
    if converged:
        trace.reason = "residual_tol"
    elif t >= config.t_max:
        trace.reason = "t_max"
    else:
        trace.reason = "max_steps"
    _finalize(trace, pieces, j_val, stats)
    return u, trace


def _finalize(trace, pieces, j_val, stats):
    trace.eta_final = pieces.eta
    trace.j_final = j_val
    trace.residual_final = stats.relspread


# --------------------------------------------------------------------------
# Raw (unnormalized) evolution and rescaling
# --------------------------------------------------------------------------

@dataclass
class RawTrace:
    grid: SphereGrid
    times: list = field(default_factory=list)
    values: list = field(default_factory=list)
    reason: str = ""
    steps_accepted: int = 0
    steps_rejected: int = 0


def evolve_unnormalized(config: FlowConfig, u0: SupportField | None = None) -> RawTrace:
    """Raw flow du/dt = psi sigma_k^alpha with a blow-up guard.

    Samples (t, u) at every accepted step, halting at t_max or when
    max u exceeds guard_factor times its initial value.
    """
    grid, psi, u, _ = _prepare(config, u0, normalize=False)
    stepper = _Stepper(grid, psi.values, config.k, config.alpha, config, False)
    trace = RawTrace(grid)
    trace.times.append(0.0)
    trace.values.append(u.values.copy())
    guard = config.guard_factor * float(np.max(u.values))
    t = 0.0
    dt = config.dt_init
    pieces = stepper._rhs(u.values)
    while t < config.t_max and trace.steps_accepted < config.max_steps:
        remaining = config.t_max - t
        try:
            out = stepper.attempt(u.values, math.nan,
                                  min(dt, config.dt_max, remaining), pieces)
        except FlowAbort:
            trace.reason = "dt_min_underrun"
            return trace
        t = config.t_max if out.dt_used >= remaining else t + out.dt_used
        dt = out.dt_next
        u = SupportField(grid, out.values)
        pieces = stepper._rhs(u.values)
        trace.steps_accepted += 1
        trace.steps_rejected = stepper.rejects_accum
        trace.times.append(t)
        trace.values.append(u.values.copy())
        if float(np.max(u.values)) > guard:
            trace.reason = "blowup_guard"
            return trace
    trace.reason = "t_max" if t >= config.t_max else "max_steps"
    return trace


@dataclass
class NormalizedSamples:
    grid: SphereGrid
    tau: np.ndarray
    values: list


def rescale_raw_to_normalized(raw: RawTrace, k: int, alpha: float) -> NormalizedSamples:
    """Map a raw trajectory to normalized time and scale.

    Each sample is rescaled by lam = (|S^n| / V_{k+1})^(1/(k+1)) and the
    normalized time is tau = int lam^(1 - k alpha) dt, accumulated with the
    trapezoid rule. For k alpha = 1 the exponent vanishes and tau = t.
    """
    grid = raw.grid
    area = grid.area
    lam_pow = []
    rescaled = []
    for vals in raw.values:
        u = SupportField(grid, vals)
        spec = radii_spectrum(u)
        vol = float(np.sum(grid.weights * vals * sigma_k(spec, k)))
        if vol <= 0.0:
            raise ConvexityError("raw sample has nonpositive mixed volume")
        lam = (area / vol) ** (1.0 / (k + 1))
        rescaled.append(lam * vals)
        lam_pow.append(lam ** (1.0 - k * alpha))
    times = np.asarray(raw.times)
    integrand = np.asarray(lam_pow)
    tau = np.concatenate([[0.0], np.cumsum(
        0.5 * (integrand[1:] + integrand[:-1]) * np.diff(times))])
    return NormalizedSamples(grid, tau, rescaled)
