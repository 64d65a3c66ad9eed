"""Exact spectral primitives for finite lattice Hamiltonians.

Eigenvalue counts come from Sylvester's law of inertia: the number of
negative pivots of an unpivoted ``LDL^T`` factorisation of ``H - E`` equals
the number of eigenvalues below ``E``. Tridiagonal samples use the Sturm
recurrence, banded ones the banded factorisation. Periodic samples are
first permuted into a folded site order (0, L-1, 1, L-2, ... on every axis),
which moves the wrap couplings into a band of width ``2 L**(d-1)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg.lapack import zgbtrf, zgbtrs

from . import _kernels
from .lattice import HamiltonianSample, LatticeSpec

DENSE_LIMIT = 4096
JITTERS = (1e-12, 1e-10, 1e-8)
_EPS = np.finfo(float).eps


class NumericalFailure(RuntimeError):
    """A factorisation or iteration broke down beyond recovery."""


class InvalidQuery(ValueError):
    """A resolvent was requested at (numerically) a real eigenvalue."""


@dataclass(frozen=True)
class CountResult:
    count: int
    jitter_applied: float = 0.0


@lru_cache(maxsize=64)
def folded_order(lattice: LatticeSpec) -> np.ndarray:
    """Permutation ``perm[old_site] = new_position`` that folds every axis."""
    L, d = lattice.linear_size, lattice.dimension
    fold = np.empty(L, dtype=np.int64)
    seq = [c for pair in zip(range(L), range(L - 1, -1, -1)) for c in pair][:L]
    fold[np.array(seq, dtype=np.int64)] = np.arange(L)
    coords = lattice.coordinates()
    new = np.zeros(lattice.n_sites, dtype=np.int64)
    for axis in range(d):
        new = new * L + fold[coords[:, axis]]
    new.setflags(write=False)
    return new


def solver_band(H: HamiltonianSample):
    """Lower band of ``H`` in the order used for factorisation.

    Returns ``(band, perm)`` where ``perm`` is None when the stored band is
    already complete (no couplings outside it).
    """
    if H.wrap_rows.size == 0:
        return np.ascontiguousarray(H.band), None
    perm = folded_order(H.lattice)
    i, j, v = H.off_diagonal()
    pi, pj = perm[i], perm[j]
    lo, hi = np.minimum(pi, pj), np.maximum(pi, pj)
    bw = int(np.max(hi - lo))
    band = np.zeros((bw + 1, H.n))
    band[0, perm] = H.diagonal
    np.add.at(band, (hi - lo, lo), v)
    return band, perm


def _pivmin(H):
    return _EPS * max(H.scale, 1.0)


def _raw_counts(H, shifts, band=None):
    shifts = np.ascontiguousarray(shifts, dtype=float)
    if H.bandwidth <= 1 and H.wrap_rows.size == 0:
        diag = np.ascontiguousarray(H.band[0])
        off = np.ascontiguousarray(H.band[1, :-1]) if H.bandwidth == 1 else np.zeros(0)
        return _kernels.sturm_negcount_grid(diag, off, shifts, _pivmin(H))
    if band is None:
        band, _ = solver_band(H)
    return _kernels.ldlt_negcount_grid(band, shifts, _pivmin(H))


def count_below_grid(H: HamiltonianSample, energies):
    """Eigenvalue counts at every energy of a grid.

    Returns ``(counts, jitters)``; ``counts[k]`` is the number of eigenvalues
    ``<= energies[k] + jitters[k]``.
    """
    energies = np.asarray(energies, dtype=float)
    if not np.all(np.isfinite(energies)):
        raise ValueError("energies must be finite")
    band = None
    if not (H.bandwidth <= 1 and H.wrap_rows.size == 0):
        band, _ = solver_band(H)
    counts, ok = _raw_counts(H, energies, band)
    jitters = np.zeros(energies.shape)
    for k in np.flatnonzero(~ok):
        counts[k], jitters[k] = _recover(H, energies[k], band)
    return counts, jitters


def _recover(H, E, band):
    for j in JITTERS:
        jitter = j * H.scale
        c, good = _raw_counts(H, np.array([E + jitter]), band)
        if good[0]:
            return int(c[0]), jitter
    if H.n <= DENSE_LIMIT:
        return int(np.count_nonzero(dense_eigenvalues(H) <= E)), 0.0
    raise NumericalFailure(f"inertia count failed at E={E} after all jitter levels")


def count_below(H: HamiltonianSample, E: float) -> CountResult:
    """Number of eigenvalues of ``H`` at or below ``E`` (see ``CountResult``)."""
    counts, jitters = count_below_grid(H, np.array([E], dtype=float))
    return CountResult(int(counts[0]), float(jitters[0]))


def sturm_count(H: HamiltonianSample, E: float) -> int:
    """Sturm-sequence count for tridiagonal samples, without jitter recovery."""
    if H.bandwidth > 1 or H.wrap_rows.size:
        raise ValueError("Sturm count needs a tridiagonal sample")
    diag = np.ascontiguousarray(H.band[0])
    off = np.ascontiguousarray(H.band[1, :-1]) if H.bandwidth == 1 else np.zeros(0)
    c, good = _kernels.sturm_negcount(diag, off, float(E), _pivmin(H))
    if not good:
        raise NumericalFailure("zero pivot in Sturm recurrence")
    return int(c)


def banded_count(H: HamiltonianSample, E: float) -> int:
    """Banded ``LDL^T`` inertia count, without jitter recovery."""
    band, _ = solver_band(H)
    work = np.empty_like(band)
    c, good = _kernels.ldlt_negcount(band, float(E), _pivmin(H), work)
    if not good:
        raise NumericalFailure("zero pivot in banded LDL^T")
    return int(c)


def dense_eigenvalues(H: HamiltonianSample, return_vectors=False, max_sweeps=60):
    """All eigenvalues in ascending order, by cyclic Jacobi rotations.

    Test oracle only; limited to ``n <= 4096``.
    """
    if H.n > DENSE_LIMIT:
        raise ValueError(f"dense oracle limited to n <= {DENSE_LIMIT}, got {H.n}")
    a = np.ascontiguousarray(H.to_dense())
    w, v, _, converged = _kernels.jacobi_eigen(a, max_sweeps, 1e-15, return_vectors)
    if not converged:
        raise NumericalFailure(f"Jacobi did not converge in {max_sweeps} sweeps")
    order = np.argsort(w, kind="stable")
    if return_vectors:
        return w[order], v[:, order]
    return w[order]


def _solver_form(H: HamiltonianSample):
    band, perm = solver_band(H)
    bw = band.shape[0] - 1
    full = np.zeros((2 * bw + 1, H.n))
    full[bw:] = band
    # upper diagonals of a symmetric band are the lower ones shifted right
    for k in range(1, bw + 1):
        full[bw - k, k:] = band[k, : H.n - k]
    return full, bw, perm


class BandedResolvent:
    """LU factors of ``H - z`` in band form, reusable across right-hand sides."""

    def __init__(self, H: HamiltonianSample, z: complex):
        self.z = complex(z)
        self.n = H.n
        self._full, self.bw, self.perm = _solver_form(H)
        bw = self.bw
        ab = np.zeros((3 * bw + 1, self.n), dtype=complex)
        ab[bw:] = self._full
        ab[2 * bw] -= self.z
        self._lu, self._piv, info = zgbtrf(ab, bw, bw)
        if info > 0:
            raise InvalidQuery(f"resolvent is singular at z={self.z}")

    def solve(self, rhs, check=True):
        """``(H - z)^{-1} rhs`` in the sample's own site order."""
        rhs = np.asarray(rhs, dtype=complex)
        b = rhs if self.perm is None else _to_solver(rhs, self.perm)
        u, info = zgbtrs(self._lu, self.bw, self.bw, b, self._piv)
        if info != 0 or not np.all(np.isfinite(u)):
            raise InvalidQuery(f"resolvent is singular at z={self.z}")
        if check:
            resid = np.max(np.abs(_band_matvec(self._full, self.bw, u) - self.z * u - b), initial=0.0)
            if resid > 1e-9:
                raise InvalidQuery(f"resolvent solve residual {resid:.2e} at z={self.z}")
        return u if self.perm is None else u[self.perm]

    def column(self, y: int, check=True):
        e = np.zeros(self.n, dtype=complex)
        e[y] = 1.0
        return self.solve(e, check)


def _to_solver(vec, perm):
    out = np.empty_like(vec)
    out[perm] = vec
    return out


def resolvent_column(H: HamiltonianSample, z: complex, y: int) -> np.ndarray:
    """The column ``(H - z)^{-1} e_y`` by a banded complex solve."""
    return BandedResolvent(H, z).column(y)


def _band_matvec(full, bw, u):
    n = u.shape[0]
    out = full[bw] * u
    for k in range(1, bw + 1):
        out[: n - k] += full[bw - k, k:] * u[k:]
        out[k:] += full[bw + k, : n - k] * u[: n - k]
    return out


def resolvent_element(H: HamiltonianSample, z: complex, x: int, y: int) -> complex:
    """``<x| (H - z)^{-1} |y>``."""
    return complex(resolvent_column(H, z, y)[x])


def distance_to_spectrum(H: HamiltonianSample, E: float, method: str = "auto", tol=None) -> float:
    """``min_i |lambda_i - E|``.

    ``method`` is ``"dense"`` (Jacobi oracle), ``"bisection"`` (inertia
    counts, any size) or ``"auto"`` (dense up to 4096 sites).
    """
    if method == "auto":
        method = "dense" if H.n <= DENSE_LIMIT else "bisection"
    if method == "dense":
        w = dense_eigenvalues(H)
        return float(np.min(np.abs(w - E)))
    if method != "bisection":
        raise ValueError(f"unknown method {method!r}")
    tol = 1e-10 * H.scale if tol is None else tol
    k = count_below(H, E).count
    best = np.inf
    if k > 0:
        best = min(best, E - _kth_eigenvalue(H, k - 1, tol))
    if k < H.n:
        best = min(best, _kth_eigenvalue(H, k, tol) - E)
    return float(max(best, 0.0))


def _kth_eigenvalue(H, k, tol):
    """k-th smallest eigenvalue (0-based) by bisection on inertia counts."""
    lo, hi = -H.scale - 1.0, H.scale + 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if count_below(H, mid).count >= k + 1:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
