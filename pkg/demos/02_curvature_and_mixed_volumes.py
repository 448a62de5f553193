"""Curvature integrals on a convex body: the identities the solver leans on.

Run:  python3 demos/02_curvature_and_mixed_volumes.py
"""
import numpy as np

import cmflow as cm

grid = cm.build_grid("axisym", 3, 64)
# a zonal convex body: round sphere plus a gentle degree-2 bump
u = cm.SupportField(grid, 1.0 + 0.15 * (3 * grid.cos_t ** 2 - 1) / 2)
spec = cm.radii_spectrum(u)

print("== curvature of a perturbed sphere on S^3 ==\n")
print(f"principal radii range: [{spec.lam.min():.4f}, {spec.lam.max():.4f}]")
print(f"Gamma_2 margin (min of sigma_1, sigma_2): {cm.gamma_k_min(spec, 2):.4f}")

for k in (1, 2):
    rep = cm.minkowski_formula_check(u, k)
    print(f"\nk={k}:  int u sigma_{k} dmu        = {rep.lhs:.10f}")
    print(f"      (k+1)/(n-k) int sigma_{k + 1} = {rep.rhs:.10f}")
    print(f"      relative defect           = {rep.defect:.2e}")

print("\nThe two integrals agree because integration by parts on the sphere")
print("has a discrete counterpart in this quadrature/derivative pairing.")

# the quadratic inequality between mixed volumes, and its equality case
v = cm.SupportField(grid, 1.0 + 0.2 * grid.cos_t ** 4)
rep = cm.polarized_mixed_volume(v, u, 2)
print(f"\npolarized volumes: V(v,u)^2 - V(v,v) V(u,u) = {rep.gap:.6e} (>= 0)")

v_eq = cm.SupportField(grid, 0.7 * u.values + 0.1 * grid.cos_t)
rep_eq = cm.polarized_mixed_volume(v_eq, u, 2)
print(f"equality case v = 0.7 u + linear:            {rep_eq.gap:.6e} (~ 0)")

print("\nThat inequality is what makes the flow's J functional monotone, so")
print("the solver re-verifies it on every acceptance run.")
