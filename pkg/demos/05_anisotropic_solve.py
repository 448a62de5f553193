"""Solving the anisotropic stationary problem by flowing to equilibrium.

The normalized flow is a solver in disguise: its stationary states are
exactly the bodies with u^(1-p) sigma_k(W_u) = c psi^(-1/alpha). Here we
hand it a genuinely anisotropic psi and read the solution off the limit.

Run:  python3 demos/05_anisotropic_solve.py
"""
import numpy as np

import cmflow as cm

psi = cm.PsiSpec("power_of_base", {"epsilon": 0.1, "exponent": 3.0})
cfg = cm.FlowConfig(
    n_dim=3, k=2, alpha=1.0, psi=psi,
    grid_variant="axisym", resolution=96,
    init=cm.InitialSpec(terms=((2, 0, 0.1),)),
    residual_tol=1e-9)

print("== anisotropic solve on S^3, k=2, psi = (1 + 0.1 P2)^3 ==\n")
u, trace = cm.evolve(cfg)
grid = u.grid
rep = cm.stationarity_residual(u, cm.eval_psi(psi, grid), cfg.k, cfg.alpha)

print(f"converged     : {trace.converged} in {trace.steps_accepted} steps, "
      f"t = {trace.t_final:.3f}")
print(f"p = 1 + 1/alpha = {rep.p}")
print(f"c (the L^p constant) = {rep.c_lp:.8f}")
print(f"sup residual of u^(1-p) sigma_k = c psi~ : {rep.sup_residual:.3e}")

# the limit is a genuine non-sphere: its radii vary with latitude
spec = cm.radii_spectrum(u)
print(f"\nsupport function range: [{u.values.min():.6f}, {u.values.max():.6f}]")
print(f"principal radii range : [{spec.lam.min():.6f}, {spec.lam.max():.6f}]")

# flatter psi -> rounder body; compare against the isotropic answer
iso = cm.FlowConfig(n_dim=3, k=2, grid_variant="axisym", resolution=96,
                    init=cfg.init, residual_tol=1e-9)
u_iso, _ = cm.evolve(iso)
print(f"\ndistance to the isotropic (round) solution: "
      f"{np.max(np.abs(u.values - u_iso.values)):.4f}")
print("\nUniqueness means the starting body is irrelevant: rerun with any")
print("other even convex start and the same limit appears (see the")
print("acceptance suite, which does exactly that with three starts).")
