"""Finite-volume lattice Anderson Hamiltonians.

A model is the adjacency (hopping) operator of the box ``{0..L-1}^d`` plus a
periodic background and ``lambda`` times an iid random on-site potential.
Sites are numbered in row-major order over their coordinates, so the
nearest-neighbour couplings along the last axis sit on the first
off-diagonal and those along the first axis at offset ``L**(d-1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

MAX_SITES = 10**6
_MASK64 = (1 << 64) - 1
_RESAMPLE_CAP = 10**6


class SizeOverflowError(ValueError):
    """Box has more sites than the configured maximum matrix dimension."""


def _readonly(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LatticeSpec:
    dimension: int
    linear_size: int
    boundary: str = "dirichlet"

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.dimension}")
        if int(self.linear_size) != self.linear_size or self.linear_size < 1:
            raise ValueError(f"linear_size must be an integer >= 1, got {self.linear_size}")
        if self.boundary not in ("dirichlet", "periodic"):
            raise ValueError(f"boundary must be 'dirichlet' or 'periodic', got {self.boundary!r}")

    @property
    def n_sites(self) -> int:
        return self.linear_size**self.dimension

    @property
    def bandwidth(self) -> int:
        """Offset of the farthest in-box coupling in row-major order."""
        if self.n_sites == 1:
            return 0
        return self.linear_size ** (self.dimension - 1)

    @property
    def center(self) -> int:
        """Row-major index of the site at coordinates (L//2, ..., L//2)."""
        L = self.linear_size
        return sum((L // 2) * L**k for k in range(self.dimension))

    def coordinates(self) -> np.ndarray:
        """Integer coordinates of every site, shape (n_sites, d)."""
        L, d = self.linear_size, self.dimension
        grids = np.indices((L,) * d).reshape(d, -1)
        return grids.T.copy()

    def neighbor_pairs(self):
        """Nearest-neighbour couplings as ``(i, j, weight)`` with ``i < j``.

        With periodic boundaries and ``L == 2`` the forward edge and the wrap
        edge join the same pair of sites and the weight is 2. An axis of
        length 1 carries no coupling.
        """
        L, d = self.linear_size, self.dimension
        idx = np.arange(self.n_sites).reshape((L,) * d)
        rows, cols = [], []
        for axis in range(d):
            if L == 1:
                continue
            lo = np.take(idx, np.arange(L - 1), axis=axis).ravel()
            hi = np.take(idx, np.arange(1, L), axis=axis).ravel()
            rows.append(lo)
            cols.append(hi)
            if self.boundary == "periodic":
                rows.append(np.take(idx, [0], axis=axis).ravel())
                cols.append(np.take(idx, [L - 1], axis=axis).ravel())
        if not rows:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty, np.zeros(0)
        i = np.concatenate(rows).astype(np.int64)
        j = np.concatenate(cols).astype(np.int64)
        key = i * self.n_sites + j
        uniq, counts = np.unique(key, return_counts=True)
        return uniq // self.n_sites, uniq % self.n_sites, counts.astype(float)


@dataclass(frozen=True, eq=False)
class PeriodicPotential:
    """Background potential V0 tabulated on one period of Z^d."""

    period: tuple
    values: np.ndarray

    def __post_init__(self):
        period = tuple(int(p) for p in self.period)
        if not period or any(p < 1 for p in period):
            raise ValueError(f"period entries must be >= 1, got {self.period}")
        vals = np.asarray(self.values, dtype=float)
        if vals.size != math.prod(period):
            raise ValueError(
                f"values has {vals.size} entries, period {period} needs {math.prod(period)}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("background values must be finite")
        object.__setattr__(self, "period", period)
        object.__setattr__(self, "values", _readonly(vals.reshape(period)))

    @classmethod
    def zero(cls, dimension: int) -> "PeriodicPotential":
        return cls((1,) * dimension, np.zeros((1,) * dimension))

    def __eq__(self, other):
        if not isinstance(other, PeriodicPotential):
            return NotImplemented
        return self.period == other.period and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.period, self.values.tobytes()))

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values)

    def at(self, coords) -> np.ndarray:
        """Values at integer site coordinates, shape (..., d)."""
        coords = np.asarray(coords)
        if coords.shape[-1] != len(self.period):
            raise ValueError("coordinate dimension does not match the period vector")
        wrapped = np.mod(coords, self.period)
        return self.values[tuple(np.moveaxis(wrapped, -1, 0))]


@dataclass(frozen=True)
class DisorderSpec:
    """Law of the iid on-site variables plus the master seed.

    ``law`` is ``"uniform"`` (on ``[a, b)``) or ``"truncated_gaussian"``
    (mean zero, standard deviation ``sigma`` before conditioning on
    ``|w| <= cutoff_k * sigma``). Both have bounded support and density.
    """

    law: str = "uniform"
    a: float = -1.0
    b: float = 1.0
    sigma: float = 1.0
    cutoff_k: float = 3.0
    master_seed: int = 0

    def __post_init__(self):
        if self.law == "uniform":
            if not (np.isfinite(self.a) and np.isfinite(self.b)) or not self.a < self.b:
                raise ValueError(f"uniform law needs a < b, got a={self.a}, b={self.b}")
        elif self.law == "truncated_gaussian":
            if not self.sigma > 0:
                raise ValueError(f"sigma must be > 0, got {self.sigma}")
            if not self.cutoff_k > 0:
                raise ValueError(f"cutoff_k must be > 0, got {self.cutoff_k}")
        else:
            raise ValueError(f"unknown disorder law {self.law!r}")
        if int(self.master_seed) != self.master_seed or not 0 <= self.master_seed <= _MASK64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")

    def support_max(self) -> float:
        """Largest ``|w|`` on the support."""
        if self.law == "uniform":
            return float(max(abs(self.a), abs(self.b)))
        return float(self.cutoff_k * self.sigma)

    def mean(self) -> float:
        if self.law == "uniform":
            return 0.5 * (self.a + self.b)
        return 0.0

    def mean_abs(self) -> float:
        """First absolute moment E|w|, in closed form."""
        if self.law == "uniform":
            a, b = self.a, self.b
            if a >= 0:
                return 0.5 * (a + b)
            if b <= 0:
                return -0.5 * (a + b)
            return (a * a + b * b) / (2.0 * (b - a))
        # half-normal moment restricted to [0, k*sigma], renormalised by the mass kept
        k = self.cutoff_k
        mass = math.erf(k / math.sqrt(2.0))
        return self.sigma * math.sqrt(2.0 / math.pi) * (1.0 - math.exp(-0.5 * k * k)) / mass


def mix_seed(master_seed: int, index: int) -> int:
    """64-bit stream seed for one realization.

    splitmix64 finaliser applied to ``master_seed XOR splitmix64(index)``.
    """

    def splitmix(z):
        z = (z + 0x9E3779B97F4A7C15) & _MASK64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    return splitmix((int(master_seed) ^ splitmix(int(index))) & _MASK64)


def sample_disorder(spec: DisorderSpec, n_sites: int, realization_index: int) -> np.ndarray:
    """Draw ``n_sites`` iid disorder values for one realization.

    The stream is a PCG64 generator seeded with
    ``mix_seed(spec.master_seed, realization_index)``, so the output depends
    only on that pair.
    """
    if realization_index < 0:
        raise ValueError("realization_index must be >= 0")
    rng = np.random.Generator(np.random.PCG64(mix_seed(spec.master_seed, realization_index)))
    if spec.law == "uniform":
        return spec.a + (spec.b - spec.a) * rng.random(n_sites)

    bound = spec.cutoff_k * spec.sigma
    out = rng.normal(0.0, spec.sigma, n_sites)
    bad = np.flatnonzero(np.abs(out) > bound)
    tries = 1
    while bad.size:
        if tries >= _RESAMPLE_CAP:
            raise RuntimeError("truncated Gaussian rejection sampling exceeded its resample cap")
        out[bad] = rng.normal(0.0, spec.sigma, bad.size)
        bad = bad[np.abs(out[bad]) > bound]
        tries += 1
    return out


@dataclass(frozen=True)
class ModelSpec:
    lattice: LatticeSpec
    background: PeriodicPotential = None
    disorder: DisorderSpec = field(default_factory=DisorderSpec)
    lam: float = 0.0

    def __post_init__(self):
        if self.background is None:
            object.__setattr__(self, "background", PeriodicPotential.zero(self.lattice.dimension))
        if len(self.background.period) != self.lattice.dimension:
            raise ValueError("background period length must equal the lattice dimension")
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lambda must be >= 0, got {self.lam}")

    def spectral_radius_bound(self) -> float:
        """Gershgorin bound on the modulus of every eigenvalue of a sample."""
        return (
            2.0 * self.lattice.dimension
            + self.background.max_abs
            + self.lam * self.disorder.support_max()
        )

    def with_lambda(self, lam: float) -> "ModelSpec":
        return ModelSpec(self.lattice, self.background, self.disorder, float(lam))


@dataclass(frozen=True, eq=False)
class HamiltonianSample:
    """One symmetric matrix H_Lambda in lower band storage.

    ``band[k, j]`` holds ``H[j + k, j]`` for ``0 <= k <= bandwidth``; the
    periodic wrap couplings that fall outside the band are kept as the
    triplets ``wrap_rows``, ``wrap_cols``, ``wrap_vals`` (row < col).
    """

    lattice: LatticeSpec
    band: np.ndarray
    wrap_rows: np.ndarray
    wrap_cols: np.ndarray
    wrap_vals: np.ndarray
    scale: float
    realization_index: int = -1
    disorder_values: np.ndarray = None

    @property
    def n(self) -> int:
        return self.band.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.band.shape[0] - 1

    @property
    def diagonal(self) -> np.ndarray:
        return self.band[0]

    def entry(self, i: int, j: int) -> float:
        if i < j:
            i, j = j, i
        if i - j <= self.bandwidth:
            val = float(self.band[i - j, j])
        else:
            val = 0.0
        hit = (self.wrap_rows == j) & (self.wrap_cols == i)
        return val + float(self.wrap_vals[hit].sum())

    def off_diagonal(self):
        """All off-diagonal couplings as ``(i, j, value)`` with ``i < j``."""
        rows, cols, vals = [], [], []
        for k in range(1, self.bandwidth + 1):
            v = self.band[k, : self.n - k]
            nz = np.flatnonzero(v)
            rows.append(nz)
            cols.append(nz + k)
            vals.append(v[nz])
        rows.append(self.wrap_rows)
        cols.append(self.wrap_cols)
        vals.append(self.wrap_vals)
        return (
            np.concatenate(rows).astype(np.int64),
            np.concatenate(cols).astype(np.int64),
            np.concatenate(vals).astype(float),
        )

    def to_dense(self) -> np.ndarray:
        h = np.diag(np.array(self.diagonal, dtype=float))
        i, j, v = self.off_diagonal()
        h[i, j] += v
        h[j, i] += v
        return h

    def with_diagonal(self, diagonal, realization_index=-1, disorder_values=None, scale=None):
        band = np.array(self.band)
        band[0] = diagonal
        return HamiltonianSample(
            self.lattice,
            _readonly(band),
            self.wrap_rows,
            self.wrap_cols,
            self.wrap_vals,
            self.scale if scale is None else scale,
            realization_index,
            None if disorder_values is None else _readonly(disorder_values),
        )


def build_h0(lattice: LatticeSpec, background: PeriodicPotential = None, max_sites: int = MAX_SITES):
    """Free Hamiltonian: hopping 1 between nearest neighbours plus V0 on the diagonal."""
    if lattice.n_sites > max_sites:
        raise SizeOverflowError(
            f"|Lambda| = {lattice.n_sites} exceeds the maximum matrix dimension {max_sites}"
        )
    if background is None:
        background = PeriodicPotential.zero(lattice.dimension)
    n, bw = lattice.n_sites, lattice.bandwidth
    band = np.zeros((bw + 1, n))
    band[0] = background.at(lattice.coordinates())
    i, j, w = lattice.neighbor_pairs()
    inband = (j - i) <= bw
    band[j[inband] - i[inband], i[inband]] = w[inband]
    out = ~inband
    return HamiltonianSample(
        lattice,
        _readonly(band),
        _readonly(i[out]),
        _readonly(j[out]),
        _readonly(w[out]),
        2.0 * lattice.dimension + background.max_abs,
    )


def assemble(model: ModelSpec, realization_index: int, h0: HamiltonianSample = None,
             max_sites: int = MAX_SITES) -> HamiltonianSample:
    """H0 + lambda * diag(w) for one disorder realization.

    ``h0`` may be passed in to reuse the free part across realizations.
    """
    if h0 is None:
        h0 = build_h0(model.lattice, model.background, max_sites)
    omega = sample_disorder(model.disorder, h0.n, realization_index)
    diag = h0.diagonal + model.lam * omega
    return h0.with_diagonal(diag, realization_index, omega, model.spectral_radius_bound())
