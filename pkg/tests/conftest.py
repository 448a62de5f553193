"""Shared fixtures: grids, a randomized run batch, and the acceptance report.

The batch is the expensive shared resource: twenty seeded runs spanning
dimensions, curvature orders, exponents, anisotropy families, and both
grid variants. All per-step invariant suites read from it so the flows
are integrated once per session.
"""
import numpy as np
import pytest

import cmflow as cm

BATCH_SEED = 0xC3A5
BATCH_SIZE = 20


def random_batch_configs(n_runs=BATCH_SIZE, seed=BATCH_SEED):
    """Deterministic spread of admissible runs; convex by construction."""
    rng = np.random.default_rng(seed)
    cfgs = []
    while len(cfgs) < n_runs:
        full = len(cfgs) % 5 == 4          # every fifth run on the 2-sphere grid
        n = 2 if full else int(rng.integers(2, 6))
        k = int(rng.integers(1, n))
        alpha = float(rng.choice([0.5, 1.0, 1.5, 2.0]))
        fam = rng.choice(["constant", "even_harmonic", "power_of_base"])
        if fam == "constant":
            psi = cm.PsiSpec("constant", {"value": float(rng.uniform(0.5, 2.0))})
        elif fam == "even_harmonic":
            psi = cm.PsiSpec("even_harmonic",
                             {"degree": int(rng.choice([2, 4])),
                              "amplitude": float(rng.uniform(0.02, 0.1))})
        else:
            psi = cm.PsiSpec("power_of_base",
                             {"epsilon": float(rng.uniform(0.02, 0.12)),
                              "exponent": float(rng.choice([1.0, 2.0, 3.0]))})
        terms = []
        for _ in range(int(rng.integers(1, 3))):
            deg = int(rng.choice([2, 4, 6]))
            order = int(rng.integers(0, deg + 1)) if full else 0
            amp = float(rng.uniform(0.02, 0.1) * rng.choice([-1.0, 1.0]))
            # curvature of a degree-l harmonic grows ~l^2; keep W positive
            terms.append((deg, order, amp * 6.0 / (deg * (deg + 1))))
        cfgs.append(cm.FlowConfig(
            n_dim=n, k=k, alpha=alpha, psi=psi,
            grid_variant="full_s2" if full else "axisym",
            resolution=(32, 64) if full else 48,
            init=cm.InitialSpec(1.0, tuple(terms)),
            residual_tol=1e-5, t_max=10.0))
    return cfgs


@pytest.fixture(scope="session")
def batch_results():
    out = []
    for cfg in random_batch_configs():
        u, trace = cm.evolve(cfg)
        out.append((cfg, u, trace))
    return out


@pytest.fixture(scope="session")
def grid_axi48():
    return cm.build_grid("axisym", 3, 48)


@pytest.fixture(scope="session")
def grid_full32():
    return cm.build_grid("full_s2", 2, (32, 64))


# --------------------------------------------------------------------------
# Acceptance reporting: one line per criterion in the terminal summary
# --------------------------------------------------------------------------

ACCEPTANCE_LINES = []


def record_criterion(num: int, name: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(
        (num, f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
