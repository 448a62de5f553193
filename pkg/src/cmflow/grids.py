"""Sphere grids, quadrature, and covariant derivative stencils.

Two node layouts back everything else:

* ``full_s2``: tensor grid on S^2 with Gauss latitudes (Gauss-Legendre in
  cos(theta)) times uniform longitudes. Longitude derivatives are spectral
  (FFT); latitude derivatives use 7-point Fornberg stencils on the
  nonuniform thetas, with ghost rows across the poles (theta -> -theta
  means phi -> phi + pi). A longitudinal polar filter truncates Fourier
  modes that a latitude cannot carry (m well above (Nphi/2) sin theta);
  for smooth resolved fields those modes are below roundoff, and dropping
  them keeps the explicit-time-step restriction at the equatorial scale.

* ``axisym``: rotationally symmetric fields on S^n, 2 <= n <= 8, reduced
  to one latitude line. Nodes and weights come from the Gauss rule for
  the measure sin^(n-1)(theta) dtheta (Gauss-Jacobi with a = b = (n-2)/2,
  which is plain Gauss-Legendre when n = 2), so the weight sum equals
  |S^n| to machine precision for every n.

Both layouts exclude the poles, keep nodes mirror-symmetric about the
equator, and carry an antipodal index map that is an exact involution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

from .errors import GridError

FULL_S2 = "full_s2"
AXISYM = "axisym"

STENCIL = 7          # latitude stencil width (order >= 5 on smooth fields)
HALF = STENCIL // 2  # ghost rows per side

FILTER_SLOPE = 1.05  # polar filter keeps m <= ceil(slope * (Nphi/2) * sin)
FILTER_FLOOR = 2     # never cut m <= 2, so linear functions pass untouched


def sphere_area(n_dim: int) -> float:
    """Surface measure of the unit sphere S^n inside R^(n+1)."""
    if n_dim < 1:
        raise ValueError("n_dim must be >= 1")
    return 2.0 * math.pi ** ((n_dim + 1) / 2.0) / math.gamma((n_dim + 1) / 2.0)


def _fornberg_weights(x0: float, nodes: np.ndarray, maxorder: int) -> np.ndarray:
    """Finite-difference weights on arbitrary nodes (Fornberg 1988).

    Returns w with shape (maxorder+1, len(nodes)); row d gives the weights
    of the d-th derivative at x0.
    """
    n = nodes.size
    w = np.zeros((maxorder + 1, n))
    c1 = 1.0
    c4 = nodes[0] - x0
    w[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, maxorder)
        c2 = 1.0
        c5 = c4
        c4 = nodes[i] - x0
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for d in range(mn, 0, -1):
                    w[d, i] = c1 * (d * w[d - 1, i - 1] - c5 * w[d, i - 1]) / c2
                w[0, i] = -c1 * c5 * w[0, i - 1] / c2
            for d in range(mn, 0, -1):
                w[d, j] = (c4 * w[d, j] - d * w[d - 1, j]) / c3
            w[0, j] = c4 * w[0, j] / c3
        c1 = c2
    return w


def _gauss_latitudes(n_lat: int, jacobi_ab: float):
    """Mirror-exact theta nodes and Gauss weights for the given measure."""
    x, wx = roots_jacobi(n_lat, jacobi_ab, jacobi_ab)
    # enforce exact +/- symmetry of the abscissas, then order by theta
    x = 0.5 * (x - x[::-1])
    wx = 0.5 * (wx + wx[::-1])
    cos_t = x[::-1].copy()          # descending x <=> ascending theta
    w = wx[::-1].copy()
    theta = np.arccos(cos_t)
    half = n_lat // 2
    # arccos rounding must not break the equator mirror used by the
    # antipodal map and stencil symmetry
    theta[n_lat - half:] = np.pi - theta[:half][::-1]
    if n_lat % 2 == 1:
        theta[half] = 0.5 * np.pi
        cos_t[half] = 0.0
    cos_t[n_lat - half:] = -cos_t[:half][::-1]
    sin_t = np.sin(theta)
    sin_t[n_lat - half:] = sin_t[:half][::-1]
    return theta, cos_t, sin_t, w


def _latitude_stencils(theta: np.ndarray):
    """Per-latitude first/second derivative weights on the pole-extended axis."""
    n_lat = theta.size
    ext = np.concatenate([
        -theta[HALF - 1::-1],
        theta,
        2.0 * np.pi - theta[:n_lat - HALF - 1:-1],
    ])
    w1 = np.empty((n_lat, STENCIL))
    w2 = np.empty((n_lat, STENCIL))
    for i in range((n_lat + 1) // 2):
        w = _fornberg_weights(theta[i], ext[i:i + STENCIL], 2)
        w1[i] = w[1]
        w2[i] = w[2]
    for i in range(n_lat // 2):
        # mirrored rows get exactly mirrored weights
        w1[n_lat - 1 - i] = -w1[i, ::-1]
        w2[n_lat - 1 - i] = w2[i, ::-1]
    return w1, w2


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Immutable node layout plus quadrature and stencil data."""

    variant: str
    n_dim: int
    shape: tuple
    theta: np.ndarray
    phi: np.ndarray | None
    cos_t: np.ndarray
    sin_t: np.ndarray
    weights: np.ndarray       # same shape as fields; sums to area
    area: float               # |S^n|, analytic
    antipode: np.ndarray      # flat index permutation, same shape as fields
    w1: np.ndarray            # latitude stencils, (n_lat, STENCIL)
    w2: np.ndarray
    mode_mask: np.ndarray | None  # rfft polar filter mask (full_s2 only)
    zonal_projector: np.ndarray | None = None  # axisym state projector
    d1: np.ndarray | None = None  # axisym spectral d/dtheta
    d2: np.ndarray | None = None  # axisym spectral d2/dtheta2
    lap_bound: float = 0.0        # spectral radius of the discrete Laplacian

    @property
    def n_lat(self) -> int:
        return self.shape[0]

    @property
    def n_lon(self) -> int:
        return self.shape[1] if self.variant == FULL_S2 else 0

    def check_field(self, values: np.ndarray):
        if values.shape != self.shape:
            raise GridError(f"field shape {values.shape} != grid shape {self.shape}")


def build_grid(variant: str, n_dim: int, resolution) -> SphereGrid:
    """Construct a grid.

    resolution is (n_lat, n_lon) for full_s2 and an int for axisym.
    full_s2 requires n_dim == 2 and an even n_lon; axisym requires
    2 <= n_dim <= 8 and an even node count (a symmetric odd rule puts a
    node on the equator, which the antipodal involution cannot permute).
    """
    if variant == FULL_S2:
        if n_dim != 2:
            raise GridError("full_s2 grids are S^2 only (n_dim = 2)")
        try:
            n_lat, n_lon = (int(r) for r in resolution)
        except TypeError:
            raise GridError("full_s2 resolution must be (n_lat, n_lon)") from None
        if n_lat < 8 or n_lon < 8:
            raise GridError("need at least 8 nodes per dimension")
        if n_lon % 2 != 0:
            raise GridError("n_lon must be even for exact antipodal symmetry")
        theta, cos_t, sin_t, wlat = _gauss_latitudes(n_lat, 0.0)
        phi = 2.0 * np.pi * np.arange(n_lon) / n_lon
        weights = np.broadcast_to(
            (wlat * (2.0 * np.pi / n_lon))[:, None], (n_lat, n_lon)
        ).copy()
        w1, w2 = _latitude_stencils(theta)
        ii, jj = np.meshgrid(np.arange(n_lat), np.arange(n_lon), indexing="ij")
        antipode = (n_lat - 1 - ii) * n_lon + (jj + n_lon // 2) % n_lon
        m_cut = np.maximum(
            FILTER_FLOOR,
            np.ceil(FILTER_SLOPE * (n_lon / 2.0) * sin_t).astype(int),
        )
        modes = np.arange(n_lon // 2 + 1)
        mode_mask = (modes[None, :] <= m_cut[:, None]).astype(float)
        grid = SphereGrid(
            FULL_S2, 2, (n_lat, n_lon), theta, phi, cos_t, sin_t, weights,
            sphere_area(2), antipode, w1, w2, mode_mask,
        )
        object.__setattr__(grid, "lap_bound", _laplacian_bound(grid))
    elif variant == AXISYM:
        if not 2 <= n_dim <= 8:
            raise GridError("axisym grids support 2 <= n_dim <= 8")
        n_lat = int(resolution)
        if n_lat < 8:
            raise GridError("need at least 8 nodes")
        if n_lat % 2 != 0:
            raise GridError("axisym node count must be even (equator node "
                            "would be an antipodal fixed point)")
        theta, cos_t, sin_t, w = _gauss_latitudes(n_lat, (n_dim - 2) / 2.0)
        weights = sphere_area(n_dim - 1) * w
        w1, w2 = _latitude_stencils(theta)
        antipode = np.arange(n_lat)[::-1].copy()
        cutoff = n_lat // 2
        projector, d1, d2 = _zonal_matrices(n_dim, theta, weights, cutoff)
        grid = SphereGrid(
            AXISYM, n_dim, (n_lat,), theta, None, cos_t, sin_t, weights,
            sphere_area(n_dim), antipode, w1, w2, None, projector, d1, d2,
            float(cutoff * (cutoff + n_dim - 1)),
        )
    else:
        raise GridError(f"unknown grid variant {variant!r}")
    for arr in (grid.theta, grid.cos_t, grid.sin_t, grid.weights,
                grid.antipode, grid.w1, grid.w2):
        arr.setflags(write=False)
    if grid.phi is not None:
        grid.phi.setflags(write=False)
    if grid.mode_mask is not None:
        grid.mode_mask.setflags(write=False)
    for extra in (grid.zonal_projector, grid.d1, grid.d2):
        if extra is not None:
            extra.setflags(write=False)
    return grid


def _laplacian_bound(grid: "SphereGrid") -> float:
    """Spectral radius of the discrete Laplace-Beltrami operator.

    Power iteration on trace(Hessian) + 2u, including the polar filter, so
    explicit steppers can cap dt at the stability limit of the stiffest
    representable mode instead of discovering it through rejections.
    """
    rng = np.random.default_rng(0x5EED)
    v = rng.standard_normal(grid.shape)
    v /= np.sqrt(np.sum(v * v))
    rho = 0.0
    for _ in range(60):
        f = SupportField(grid, v)
        h11, _, h22 = covariant_hessian_s2(f)
        w = h11 + h22
        rho = float(np.sqrt(np.sum(w * w)))
        if rho == 0.0:
            break
        v = w / rho
    return 1.1 * rho


def _zonal_matrices(n_dim: int, theta: np.ndarray, weights: np.ndarray,
                    cutoff: int):
    """Even-degree state projector plus spectral derivative matrices.

    Zonal harmonics on S^n are Gegenbauer polynomials C_l^((n-1)/2) in
    cos theta, orthogonal under the node weights; the Gauss rule keeps
    that orthogonality exact through degree 2*n_lat - 1, so projecting
    and differentiating through the coefficient space is a true spectral
    method on the resolved span. Differentiation matrices use both
    parities (derivatives must be right for odd probes such as linear
    functions); the projector keeps even degrees only, which is the
    symmetry class of the states. Collocated finite-difference radii
    leave a defect pinned at the near-pole nodes where cot(theta) blows
    up; exact derivatives of the resolved span remove it.
    """
    from scipy.special import eval_gegenbauer

    lam = (n_dim - 1) / 2.0
    x = np.cos(theta)
    sin_t = np.sin(theta)
    degrees = np.arange(0, cutoff + 1)
    basis = np.stack([eval_gegenbauer(l, lam, x) for l in degrees], axis=1)
    # d/dx C_l^lam = 2 lam C_{l-1}^{lam+1}
    dbasis = np.zeros_like(basis)
    d2basis = np.zeros_like(basis)
    for j, l in enumerate(degrees):
        if l >= 1:
            dbasis[:, j] = 2.0 * lam * eval_gegenbauer(l - 1, lam + 1.0, x)
        if l >= 2:
            d2basis[:, j] = 4.0 * lam * (lam + 1.0) * eval_gegenbauer(
                l - 2, lam + 2.0, x)
    # chain rule for d/dtheta with x = cos theta
    d_theta = -sin_t[:, None] * dbasis
    d2_theta = sin_t[:, None] ** 2 * d2basis - x[:, None] * dbasis

    scale = np.max(np.abs(basis), axis=0)
    sqw = np.sqrt(weights)
    # columns are w-orthogonal, so R is essentially diagonal and the
    # analysis matrix M: values -> coefficients is well conditioned
    q, r = np.linalg.qr(sqw[:, None] * (basis / scale))
    analysis = np.linalg.solve(r, q.T * sqw[None, :])
    d1 = (d_theta / scale) @ analysis
    d2 = (d2_theta / scale) @ analysis

    # state filter: keep even degrees, damp the top of the resolved band.
    # An explicit stepper's error controller holds the stiffest modes at an
    # amplitude near rtol; their pole values scale like l^3, which would
    # floor the sup-norm residual. The exponential taper (exact 1 below
    # two-thirds of the cutoff, 1e-10 at the cutoff) removes that
    # equilibrium without touching smooth content.
    even = degrees % 2 == 0
    ev_deg = degrees[even]
    qe, re = np.linalg.qr(sqw[:, None] * (basis[:, even] / scale[even]))
    analysis_e = np.linalg.solve(re, qe.T * sqw[None, :])
    l_c = max(2, (2 * cutoff) // 3)
    s = np.clip((ev_deg - l_c) / max(cutoff - l_c, 1), 0.0, 1.0)
    damp = np.exp(np.log(1e-10) * s ** 8)
    damp[s <= 0.0] = 1.0
    projector = ((basis[:, even] / scale[even]) * damp) @ analysis_e
    return projector, d1, d2


@dataclass(frozen=True, eq=False)
class SupportField:
    """Scalar field sampled on a SphereGrid (support functions and friends)."""

    grid: SphereGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        self.grid.check_field(vals)
        object.__setattr__(self, "values", vals)

    def copy(self) -> "SupportField":
        return SupportField(self.grid, self.values.copy())

    def scaled(self, factor: float) -> "SupportField":
        return SupportField(self.grid, factor * self.values)


def field_from_function(grid: SphereGrid, fn) -> SupportField:
    """Sample fn on the nodes: fn(theta, phi) on full_s2, fn(theta) on axisym."""
    if grid.variant == FULL_S2:
        tt = grid.theta[:, None]
        pp = grid.phi[None, :]
        vals = np.broadcast_to(fn(tt, pp), grid.shape).astype(float).copy()
    else:
        vals = np.broadcast_to(fn(grid.theta), grid.shape).astype(float).copy()
    return SupportField(grid, vals)


def constant_field(grid: SphereGrid, value: float) -> SupportField:
    return SupportField(grid, np.full(grid.shape, float(value)))


# --------------------------------------------------------------------------
# Quadrature and symmetry
# --------------------------------------------------------------------------

def quadrature(field: SupportField) -> float:
    """int f dmu over S^n. numpy pairwise summation keeps this deterministic."""
    return float(np.sum(field.grid.weights * field.values))


def antipodal_values(grid: SphereGrid, values: np.ndarray) -> np.ndarray:
    """values composed with the antipodal map, as a new array."""
    if grid.variant == FULL_S2:
        return np.roll(values[::-1, :], grid.n_lon // 2, axis=1)
    return values[::-1].copy()


def evenness_defect(field: SupportField) -> float:
    """max |u(x) - u(-x)| over nodes."""
    return float(np.max(np.abs(
        field.values - antipodal_values(field.grid, field.values))))


def symmetrize_even(field: SupportField) -> SupportField:
    """Project onto even fields: u <- (u + u o antipode) / 2.

    Floating-point addition is commutative, so the result is exactly
    antipodally symmetric (bit-equal pairs), which downstream monitors
    rely on.
    """
    vals = 0.5 * (field.values + antipodal_values(field.grid, field.values))
    return SupportField(field.grid, vals)


# --------------------------------------------------------------------------
# Derivatives
# --------------------------------------------------------------------------

def polar_filter(grid: SphereGrid, values: np.ndarray) -> np.ndarray:
    """Longitudinal truncation to modes a latitude can represent (full_s2)."""
    if grid.variant != FULL_S2:
        return values
    spec = np.fft.rfft(values, axis=1)
    return np.fft.irfft(spec * grid.mode_mask, n=grid.n_lon, axis=1)


def project_zonal(grid: SphereGrid, values: np.ndarray) -> np.ndarray:
    """Spectral truncation of an axisym state; identity on full_s2."""
    if grid.zonal_projector is None:
        return values
    return grid.zonal_projector @ values


def _extend_rows(grid: SphereGrid, values: np.ndarray) -> np.ndarray:
    """Add HALF ghost rows across each pole (phi shifted by pi on full_s2)."""
    if grid.variant == FULL_S2:
        s = grid.n_lon // 2
        lower = np.roll(values[HALF - 1::-1, :], s, axis=1)
        upper = np.roll(values[:-HALF - 1:-1, :], s, axis=1)
    else:
        lower = values[HALF - 1::-1]
        upper = values[:-HALF - 1:-1]
    return np.concatenate([lower, values, upper], axis=0)


def _lat_derivative(grid: SphereGrid, ext: np.ndarray, w: np.ndarray) -> np.ndarray:
    win = np.lib.stride_tricks.sliding_window_view(ext, STENCIL, axis=0)
    if grid.variant == FULL_S2:
        return np.einsum("ijs,is->ij", win, w)
    return np.einsum("is,is->i", win, w)


def _phi_derivative(grid: SphereGrid, values: np.ndarray, order: int) -> np.ndarray:
    spec = np.fft.rfft(values, axis=1)
    m = np.arange(grid.n_lon // 2 + 1)
    spec *= (1j * m) ** order
    if order % 2 == 1:
        # drop the unpaired Nyquist mode of odd derivatives
        spec[:, -1] = 0.0
    return np.fft.irfft(spec, n=grid.n_lon, axis=1)


def covariant_hessian_s2(field: SupportField):
    """Orthonormal-frame Hessian components (H11, H12, H22) on full_s2.

    Frame: e1 = d_theta, e2 = d_phi / sin(theta).
      H11 = u_tt
      H12 = (u_tp - cot(theta) u_p) / sin(theta)
      H22 = u_pp / sin^2(theta) + cot(theta) u_t
    Poles never carry nodes; ghost rows make every stencil interior.
    """
    grid = field.grid
    if grid.variant != FULL_S2:
        raise GridError("covariant_hessian_s2 needs a full_s2 grid")
    u = polar_filter(grid, field.values)
    ext = _extend_rows(grid, u)
    u_t = _lat_derivative(grid, ext, grid.w1)
    u_tt = _lat_derivative(grid, ext, grid.w2)
    u_p = _phi_derivative(grid, u, 1)
    u_pp = _phi_derivative(grid, u, 2)
    u_tp = _lat_derivative(grid, _extend_rows(grid, u_p), grid.w1)
    sin = grid.sin_t[:, None]
    cot = (grid.cos_t / grid.sin_t)[:, None]
    h11 = u_tt
    h12 = (u_tp - cot * u_p) / sin
    h22 = u_pp / sin ** 2 + cot * u_t
    for h in (h11, h12, h22):
        if not np.all(np.isfinite(h)):
            raise GridError("non-finite Hessian entries near the poles")
    return h11, h12, h22


def radii_eigen_axisym(field: SupportField):
    """(lam_r, lam_t) for an axisymmetric field.

    lam_r = u'' + u with multiplicity 1, lam_t = cot(theta) u' + u with
    multiplicity n-1. Gauss nodes exclude the poles, where lam_t would
    need its u'' + u limit, so the formula applies at every node.
    """
    grid = field.grid
    if grid.variant != AXISYM:
        raise GridError("radii_eigen_axisym needs an axisym grid")
    du = grid.d1 @ field.values
    ddu = grid.d2 @ field.values
    lam_r = ddu + field.values
    lam_t = (grid.cos_t / grid.sin_t) * du + field.values
    if not (np.all(np.isfinite(lam_r)) and np.all(np.isfinite(lam_t))):
        raise GridError("non-finite derivatives near the poles")
    return lam_r, lam_t


def gradient_components(field: SupportField):
    """Orthonormal-frame gradient: (u_t, u_p/sin) on full_s2, (u',) on axisym."""
    grid = field.grid
    if grid.variant == FULL_S2:
        u = polar_filter(grid, field.values)
        ext = _extend_rows(grid, u)
        u_t = _lat_derivative(grid, ext, grid.w1)
        u_p = _phi_derivative(grid, u, 1)
        return u_t, u_p / grid.sin_t[:, None]
    return (grid.d1 @ field.values,)


def gradient_norm_sq(field: SupportField) -> np.ndarray:
    """|grad u|^2 at the nodes."""
    comps = gradient_components(field)
    out = comps[0] ** 2
    for c in comps[1:]:
        out = out + c ** 2
    return out
