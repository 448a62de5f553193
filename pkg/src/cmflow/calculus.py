"""Curvature algebra for support functions: radii spectra, sigma_k forms,
mixed volumes, embeddings, and mesh export.

The principal radii are the eigenvalues of W_u = Hess u + u g. On both
grid layouts every node carries at most two distinct eigenvalues, so the
spectrum is stored as two columns with multiplicities: (1, 1) on full_s2
and (1, n-1) on axisym (meridional radius u'' + u, then the azimuthal
radius cot(theta) u' + u repeated n-1 times). All sigma_k algebra is
written against that two-group form; tests cross-check it against a
brute-force elementary-symmetric oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvexityError, GridError
from .grids import (
    AXISYM,
    FULL_S2,
    SphereGrid,
    SupportField,
    covariant_hessian_s2,
    gradient_components,
    quadrature,
    radii_eigen_axisym,
)


@dataclass(frozen=True, eq=False)
class RadiiSpectrum:
    """Per-node principal radii as two eigenvalue groups."""

    grid: SphereGrid
    lam: np.ndarray    # (*grid.shape, 2)
    mult: tuple        # multiplicities of the two columns, sums to n

    @property
    def n_dim(self) -> int:
        return self.mult[0] + self.mult[1]

    def scaled(self, factor: float) -> "RadiiSpectrum":
        return RadiiSpectrum(self.grid, factor * self.lam, self.mult)

    def min_eigenvalue(self) -> float:
        return float(self.lam.min())


def radii_spectrum(u: SupportField) -> RadiiSpectrum:
    """Eigenvalues of W_u = Hess u + u g at every node."""
    grid = u.grid
    if grid.variant == FULL_S2:
        h11, h12, h22 = covariant_hessian_s2(u)
        w11 = h11 + u.values
        w22 = h22 + u.values
        mean = 0.5 * (w11 + w22)
        # symmetric-safe discriminant: hypot avoids cancellation blow-up
        disc = np.hypot(0.5 * (w11 - w22), h12)
        lam = np.stack([mean - disc, mean + disc], axis=-1)
        return RadiiSpectrum(grid, lam, (1, 1))
    lam_r, lam_t = radii_eigen_axisym(u)
    return RadiiSpectrum(grid, np.stack([lam_r, lam_t], axis=-1), (1, grid.n_dim - 1))


def min_radius(u: SupportField) -> float:
    """min eigenvalue of W_u over all nodes; negative reports non-convexity."""
    return radii_spectrum(u).min_eigenvalue()


# --------------------------------------------------------------------------
# sigma_k on two eigenvalue groups
# --------------------------------------------------------------------------

def _two_group_sigma(a, b, m0: int, m1: int, k: int):
    """sigma_k of the multiset {a x m0, b x m1}; sigma_0 = 1."""
    out = 0.0
    for j in range(0, min(k, m0) + 1):
        c = math.comb(m0, j) * math.comb(m1, k - j) if k - j <= m1 else 0
        if c:
            out = out + c * a ** j * b ** (k - j)
    if np.isscalar(out) and k > 0:
        # every admissible split exceeded a multiplicity
        raise ValueError(f"k = {k} exceeds total multiplicity {m0 + m1}")
    return out


def sigma_k(spec: RadiiSpectrum, k: int) -> np.ndarray:
    """k-th elementary symmetric polynomial of the radii, per node."""
    if not 1 <= k <= spec.n_dim:
        raise ValueError(f"need 1 <= k <= {spec.n_dim}")
    return _two_group_sigma(spec.lam[..., 0], spec.lam[..., 1], *spec.mult, k)


def sigma_k_gradient(spec: RadiiSpectrum, k: int) -> np.ndarray:
    """d sigma_k / d lambda for one eigenvalue of each group, stacked last.

    Entry 0 is the derivative in the column-0 eigenvalue, entry 1 the
    derivative in a single column-1 eigenvalue (not the whole group: a
    simultaneous change of all n-1 azimuthal radii scales the entry by
    the multiplicity).
    """
    if not 1 <= k <= spec.n_dim:
        raise ValueError(f"need 1 <= k <= {spec.n_dim}")
    a = spec.lam[..., 0]
    b = spec.lam[..., 1]
    m0, m1 = spec.mult
    da = _two_group_sigma(a, b, m0 - 1, m1, k - 1)
    db = _two_group_sigma(a, b, m0, m1 - 1, k - 1)
    da = np.broadcast_to(da, a.shape)
    db = np.broadcast_to(db, b.shape)
    return np.stack([da, db], axis=-1)


def gamma_k_min(spec: RadiiSpectrum, k: int) -> float:
    """min over nodes and i = 1..k of sigma_i; positive iff W is in Gamma_k."""
    worst = math.inf
    for i in range(1, k + 1):
        worst = min(worst, float(np.min(sigma_k(spec, i))))
    return worst


# --------------------------------------------------------------------------
# Mixed volumes
# --------------------------------------------------------------------------

def mixed_volume_k1(u: SupportField, k: int, spectrum: RadiiSpectrum | None = None) -> float:
    """V_{k+1}(u) = int u sigma_k(W_u) dmu (normalization of the flow)."""
    spec = radii_spectrum(u) if spectrum is None else spectrum
    return quadrature(SupportField(u.grid, u.values * sigma_k(spec, k)))


@dataclass(frozen=True)
class PolarizedVolumes:
    """The Aleksandrov-Fenchel triple (V(v,u,..), V(v,v,u,..), V(u,..))."""

    v_vu: float
    v_vv: float
    v_uu: float

    @property
    def gap(self) -> float:
        return self.v_vu ** 2 - self.v_vv * self.v_uu

    @property
    def gap_relative(self) -> float:
        return self.gap / max(self.v_vu ** 2, 1e-300)


def polarized_mixed_volume(v: SupportField, u: SupportField, k: int) -> PolarizedVolumes:
    """Polarized mixed volumes with k curvature slots.

    v_vu = int v sigma_k(W_u), v_uu = int u sigma_k(W_u), and v_vv has one
    W_u slot replaced by W_v (the complete polarization with two v's).
    Requires W_u in Gamma_k; v may be any smooth even field.
    """
    if v.grid is not u.grid:
        raise GridError("fields must share one grid")
    grid = u.grid
    spec_u = radii_spectrum(u)
    if gamma_k_min(spec_u, k) <= 0.0:
        raise ConvexityError("W_u leaves the Gamma_k cone")
    s_k_u = sigma_k(spec_u, k)
    v_vu = quadrature(SupportField(grid, v.values * s_k_u))
    v_uu = quadrature(SupportField(grid, u.values * s_k_u))

    if grid.variant == FULL_S2:
        # W_v and W_u need not commute: polarize on matrix components
        if k == 1:
            spec_v = radii_spectrum(v)
            mixed = sigma_k(spec_v, 1)
        elif k == 2:
            mixed = _sigma2_polarized_s2(v, u)
        else:
            raise ValueError("full_s2 supports k <= 2")
    else:
        # axisym W's are diagonal in one frame: polarization through the
        # gradient, Sigma_k(W_v, W_u^{k-1}) = (1/k) grad sigma_k(W_u) . lam(W_v)
        spec_v = radii_spectrum(v)
        g = sigma_k_gradient(spec_u, k)
        n_t = grid.n_dim - 1
        mixed = (g[..., 0] * spec_v.lam[..., 0]
                 + n_t * g[..., 1] * spec_v.lam[..., 1]) / k
    v_vv = quadrature(SupportField(grid, v.values * mixed))
    return PolarizedVolumes(v_vu, v_vv, v_uu)


def _sigma2_polarized_s2(v: SupportField, u: SupportField) -> np.ndarray:
    """Sigma_2(W_v, W_u) = (tr W_v tr W_u - tr(W_v W_u)) / 2 on full_s2."""
    av11, av12, av22 = covariant_hessian_s2(v)
    au11, au12, au22 = covariant_hessian_s2(u)
    av11 = av11 + v.values
    av22 = av22 + v.values
    au11 = au11 + u.values
    au22 = au22 + u.values
    tr_prod = av11 * au11 + 2.0 * av12 * au12 + av22 * au22
    return 0.5 * ((av11 + av22) * (au11 + au22) - tr_prod)


@dataclass(frozen=True)
class MinkowskiReport:
    lhs: float     # int u sigma_k dmu
    rhs: float     # (k+1)/(n-k) int sigma_{k+1} dmu
    defect: float  # |lhs - rhs| / |lhs|


def minkowski_formula_check(u: SupportField, k: int) -> MinkowskiReport:
    """Consistency of quadrature and curvature: the two integrals agree."""
    n = u.grid.n_dim
    if not 1 <= k <= n - 1:
        raise ValueError("need 1 <= k <= n - 1")
    spec = radii_spectrum(u)
    lhs = quadrature(SupportField(u.grid, u.values * sigma_k(spec, k)))
    rhs = (k + 1) / (n - k) * quadrature(SupportField(u.grid, sigma_k(spec, k + 1)))
    return MinkowskiReport(lhs, rhs, abs(lhs - rhs) / abs(lhs))


# --------------------------------------------------------------------------
# Embedding and mesh export
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EmbeddedBody:
    """Hypersurface points X = u x + grad u at the grid nodes.

    full_s2: X has shape (n_lat, n_lon, 3) in R^3.
    axisym: X has shape (n_lat, 2), meridian-plane coordinates
    (distance from the symmetry axis, coordinate along the axis).
    rho = |X| in either case.
    """

    grid: SphereGrid
    x: np.ndarray
    rho: np.ndarray


def embed(u: SupportField) -> EmbeddedBody:
    """Map a uniformly convex support function to its hypersurface points."""
    if min_radius(u) <= 0.0:
        raise ConvexityError("embed requires a uniformly convex body")
    grid = u.grid
    if grid.variant == FULL_S2:
        g_t, g_p = gradient_components(u)
        st = grid.sin_t[:, None]
        ct = grid.cos_t[:, None]
        cp = np.cos(grid.phi)[None, :]
        sp = np.sin(grid.phi)[None, :]
        x = np.empty(grid.shape + (3,))
        x[..., 0] = u.values * st * cp + g_t * ct * cp - g_p * sp
        x[..., 1] = u.values * st * sp + g_t * ct * sp + g_p * cp
        x[..., 2] = u.values * ct - g_t * st
    else:
        (du,) = gradient_components(u)
        x = np.empty(grid.shape + (2,))
        x[..., 0] = u.values * grid.sin_t + du * grid.cos_t
        x[..., 1] = u.values * grid.cos_t - du * grid.sin_t
    rho = np.sqrt(np.sum(x * x, axis=-1))
    return EmbeddedBody(grid, x, rho)


def write_mesh(body: EmbeddedBody, path) -> None:
    """Write a triangulated OBJ or PLY mesh of a full_s2 embedding.

    Vertices are emitted latitude-major (node (i, j) is vertex i*n_lon + j,
    0-based), followed by two synthesized pole vertices (centroid of the
    first and last latitude ring) that close the surface with triangle
    fans. The format is chosen by the file suffix.
    """
    if body.grid.variant != FULL_S2:
        raise GridError("mesh export is defined for full_s2 embeddings only")
    n_lat, n_lon = body.grid.shape
    verts = body.x.reshape(-1, 3)
    north = body.x[0].mean(axis=0)
    south = body.x[-1].mean(axis=0)
    all_verts = np.vstack([verts, north[None, :], south[None, :]])
    faces = []
    for i in range(n_lat - 1):
        for j in range(n_lon):
            a = i * n_lon + j
            b = i * n_lon + (j + 1) % n_lon
            c = (i + 1) * n_lon + (j + 1) % n_lon
            d = (i + 1) * n_lon + j
            faces.append((a, d, c))
            faces.append((a, c, b))
    np_id = n_lat * n_lon
    sp_id = np_id + 1
    for j in range(n_lon):
        jn = (j + 1) % n_lon
        faces.append((np_id, jn, j))
        faces.append((sp_id, (n_lat - 1) * n_lon + j, (n_lat - 1) * n_lon + jn))
    path = str(path)
    with open(path, "w") as fh:
        if path.endswith(".ply"):
            fh.write("ply\nformat ascii 1.0\n")
            fh.write(f"element vertex {len(all_verts)}\n")
            fh.write("property float x\nproperty float y\nproperty float z\n")
            fh.write(f"element face {len(faces)}\n")
            fh.write("property list uchar int vertex_indices\nend_header\n")
            for p in all_verts:
                fh.write(f"{p[0]:.9g} {p[1]:.9g} {p[2]:.9g}\n")
            for f in faces:
                fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")
        else:
            for p in all_verts:
                fh.write(f"v {p[0]:.9g} {p[1]:.9g} {p[2]:.9g}\n")
            for f in faces:
                fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")
