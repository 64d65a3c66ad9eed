"""Monte Carlo disorder averages: IDS curves, IDS surfaces and Wegner probabilities.

Realizations are independent units of work. Each one is seeded from
``(master_seed, realization_index)`` and results are reduced in index
order, so the output does not depend on the number of workers.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .lattice import ModelSpec, build_h0, mix_seed, sample_disorder
from .spectral import NumericalFailure, count_below_grid, distance_to_spectrum


class EstimationError(RuntimeError):
    """A spectral failure inside one realization, tagged with where it happened."""


def _map(fn, items, workers):
    items = list(items)
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _check_grid(energies):
    energies = np.asarray(energies, dtype=float)
    if energies.ndim != 1 or energies.size == 0:
        raise ValueError("energy grid must be a non-empty 1-d sequence")
    if np.any(np.diff(energies) <= 0):
        raise ValueError("energy grid must be strictly ascending")
    return energies


def _aggregate(counts, n):
    frac = counts / n
    R = counts.shape[0]
    mean = frac.mean(axis=0)
    if R == 1:
        return mean, np.zeros(frac.shape[1])
    stderr = frac.std(axis=0, ddof=1) / np.sqrt(R)
    # identical columns give exactly zero, not rounding residue
    stderr[np.ptp(counts, axis=0) == 0] = 0.0
    return mean, stderr


@dataclass(frozen=True, eq=False)
class IDSEstimate:
    model: ModelSpec
    energies: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    realizations: int

    def csv_rows(self):
        lat = self.model.lattice
        for e, m, s in zip(self.energies, self.mean, self.stderr):
            yield [self.model.lam, e, m, s, self.realizations, lat.linear_size,
                   lat.dimension, lat.boundary, self.model.disorder.master_seed]


@dataclass(frozen=True, eq=False)
class IDSSurface:
    model: ModelSpec
    energies: np.ndarray
    lambdas: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    realizations: int
    couple_seeds: bool = True

    def row(self, i) -> IDSEstimate:
        return IDSEstimate(self.model.with_lambda(self.lambdas[i]), self.energies,
                           self.mean[i], self.stderr[i], self.realizations)

    def csv_rows(self):
        for i in range(len(self.lambdas)):
            yield from self.row(i).csv_rows()


@dataclass(frozen=True, eq=False)
class WegnerResult:
    E: float
    etas: np.ndarray
    prob: np.ndarray
    stderr: np.ndarray
    volume: int
    realizations: int


def _counts_for(model, h0, r, energies):
    omega = sample_disorder(model.disorder, h0.n, r)
    H = h0.with_diagonal(h0.diagonal + model.lam * omega, r, None, model.spectral_radius_bound())
    try:
        counts, _ = count_below_grid(H, energies)
    except NumericalFailure as exc:
        raise EstimationError(f"realization {r}: {exc}") from exc
    return counts


def estimate_ids(model: ModelSpec, energies, R: int, workers=None) -> IDSEstimate:
    """Average of ``count_below(H, E) / |Lambda|`` over ``R`` realizations."""
    if R < 1:
        raise ValueError("R must be >= 1")
    energies = _check_grid(energies)
    h0 = build_h0(model.lattice, model.background)
    if model.lam == 0:
        # no randomness: every realization is H0
        counts = np.tile(_counts_for(model, h0, 0, energies), (R, 1))
    else:
        counts = np.array(_map(lambda r: _counts_for(model, h0, r, energies), range(R), workers))
    mean, stderr = _aggregate(counts, h0.n)
    return IDSEstimate(model, energies, mean, stderr, R)


def estimate_surface(model_base: ModelSpec, energies, lambdas, R: int,
                     couple_seeds: bool = True, workers=None) -> IDSSurface:
    """IDS estimates for every lambda in ``lambdas``.

    With ``couple_seeds`` all rows share the same disorder realizations, so
    row differences carry far less variance than independent runs.
    """
    if R < 1:
        raise ValueError("R must be >= 1")
    energies = _check_grid(energies)
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.ndim != 1 or lambdas.size == 0 or np.any(lambdas < 0):
        raise ValueError("lambdas must be a non-empty list of values >= 0")
    if np.any(np.diff(lambdas) < 0):
        raise ValueError("lambdas must be ascending")
    h0 = build_h0(model_base.lattice, model_base.background)

    def one(r):
        rows = []
        omega = None
        for i, lam in enumerate(lambdas):
            if couple_seeds:
                if omega is None:
                    omega = sample_disorder(model_base.disorder, h0.n, r)
                w = omega
            else:
                spec = replace(model_base.disorder,
                               master_seed=mix_seed(model_base.disorder.master_seed, i + 1))
                w = sample_disorder(spec, h0.n, r)
            m = model_base.with_lambda(lam)
            H = h0.with_diagonal(h0.diagonal + lam * w, r, None, m.spectral_radius_bound())
            try:
                rows.append(count_below_grid(H, energies)[0])
            except NumericalFailure as exc:
                raise EstimationError(f"realization {r}, lambda {lam}: {exc}") from exc
        return rows

    counts = np.array(_map(one, range(R), workers))  # (R, n_lambda, n_E)
    mean = np.empty((lambdas.size, energies.size))
    stderr = np.empty_like(mean)
    for i in range(lambdas.size):
        mean[i], stderr[i] = _aggregate(counts[:, i, :], h0.n)
    return IDSSurface(model_base, energies, lambdas, mean, stderr, R, couple_seeds)


def wegner_probability(model: ModelSpec, E: float, etas, R: int, workers=None,
                       method: str = "auto") -> WegnerResult:
    """Fraction of realizations with an eigenvalue within ``eta`` of ``E``."""
    etas = np.sort(np.asarray(etas, dtype=float))[::-1]
    if etas.size == 0 or np.any(etas <= 0):
        raise ValueError("etas must be positive")
    if R < 1:
        raise ValueError("R must be >= 1")
    h0 = build_h0(model.lattice, model.background)

    def one(r):
        omega = sample_disorder(model.disorder, h0.n, r)
        H = h0.with_diagonal(h0.diagonal + model.lam * omega, r, None, model.spectral_radius_bound())
        try:
            return distance_to_spectrum(H, E, method)
        except NumericalFailure as exc:
            raise EstimationError(f"realization {r}, E={E}: {exc}") from exc

    dist = np.array(_map(one, range(R), workers))
    prob = (dist[None, :] <= etas[:, None]).mean(axis=1)
    stderr = np.sqrt(prob * (1 - prob) / R)
    return WegnerResult(float(E), etas, prob, stderr, h0.n, R)
