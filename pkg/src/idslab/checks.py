"""Built-in verification suites shared by ``idslab selftest`` and the test suite."""
from __future__ import annotations

import numpy as np

from .free_ids import n0_exact_1d, n0_quadrature
from .lattice import DisorderSpec, LatticeSpec, ModelSpec, assemble, build_h0
from .spectral import count_below_grid, dense_eigenvalues


def random_model(rng, max_sites=400, lam_max=2.0):
    """A random model with d in {1, 2}, either boundary and either law."""
    d = int(rng.integers(1, 3))
    L = int(rng.integers(1, (max_sites if d == 1 else int(np.sqrt(max_sites))) + 1))
    boundary = ("dirichlet", "periodic")[int(rng.integers(2))]
    seed = int(rng.integers(0, 2**63))
    if rng.random() < 0.5:
        a = float(rng.uniform(-2, 1))
        law = DisorderSpec("uniform", a, a + float(rng.uniform(0.1, 2)), master_seed=seed)
    else:
        law = DisorderSpec("truncated_gaussian", sigma=float(rng.uniform(0.2, 1.5)),
                           cutoff_k=float(rng.uniform(1, 4)), master_seed=seed)
    return ModelSpec(LatticeSpec(d, L, boundary), disorder=law, lam=float(rng.uniform(0, lam_max)))


def oracle_equivalence(n_models=200, n_energies=20, seed=0, max_sites=400):
    """Compare inertia counts against the Jacobi oracle on random models.

    Returns ``(mismatches, comparisons)``.
    """
    rng = np.random.default_rng(seed)
    bad = total = 0
    for trial in range(n_models):
        model = random_model(rng, max_sites)
        H = assemble(model, trial)
        w = dense_eigenvalues(H)
        scale = model.spectral_radius_bound()
        energies = rng.uniform(-scale - 0.5, scale + 0.5, n_energies)
        counts, jitters = count_below_grid(H, energies)
        ref = np.array([np.count_nonzero(w <= e + j) for e, j in zip(energies, jitters)])
        bad += int(np.count_nonzero(counts != ref))
        total += n_energies
    return bad, total


def free_ids_fidelity(L=4096, step=0.05):
    """Max deviation of the lambda = 0 staircase count/L from arccos(-E/2)/pi."""
    energies = np.round(np.arange(-2.0, 2.0 + step / 2, step), 12)
    h0 = build_h0(LatticeSpec(1, L))
    counts, _ = count_below_grid(h0, energies)
    return float(np.max(np.abs(counts / L - n0_exact_1d(energies))))


def quadrature_fidelity(resolution=4096, step=0.05):
    """Max deviation of the d = 1 quadrature from the closed form."""
    energies = np.round(np.arange(-2.0, 2.0 + step / 2, step), 12)
    return float(np.max(np.abs(n0_quadrature(1, energies, resolution) - n0_exact_1d(energies))))


def selftest(n_models=20, n_energies=20, seed=0, max_sites=200):
    """Run the oracle-equivalence and free-IDS suites; returns a report dict."""
    bad, total = oracle_equivalence(n_models, n_energies, seed, max_sites)
    free_dev = free_ids_fidelity()
    quad_dev = quadrature_fidelity()
    report = {
        "oracle_mismatches": bad,
        "oracle_comparisons": total,
        "free_ids_max_dev": free_dev,
        "quadrature_max_dev": quad_dev,
    }
    report["pass"] = bool(bad == 0 and free_dev <= 0.01 and quad_dev <= 1e-3)
    return report
