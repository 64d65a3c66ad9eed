"""IDS of the free lattice Laplacian.

With hopping 1 the band is ``sum_i 2 cos(theta_i)`` over the torus
``[-pi, pi]^d``. In one dimension ``N0(E) = arccos(-E/2) / pi``; in higher
dimension the level-set volume is counted on a midpoint grid.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .analysis import default_separations, fit_power_law, modulus_of_continuity


def n0_exact_1d(E):
    """Closed-form free IDS in d = 1, clamped to 0 below -2 and 1 above 2."""
    E = np.asarray(E, dtype=float)
    out = np.arccos(np.clip(-E / 2.0, -1.0, 1.0)) / np.pi
    return float(out) if out.ndim == 0 else out


def n0_quadrature(d: int, E, resolution: int = 256):
    """Fraction of midpoint-grid torus points with ``sum_i 2 cos(theta_i) <= E``.

    The error is of order ``1/resolution``.
    """
    if d not in (1, 2, 3):
        raise ValueError(f"d must be 1, 2 or 3, got {d}")
    if resolution < 64:
        raise ValueError("resolution must be >= 64")
    theta = -np.pi + (np.arange(resolution) + 0.5) * (2 * np.pi / resolution)
    band = np.sort(2.0 * np.cos(theta))
    # sum over the first d-1 axes; the last axis is counted by bisection
    partial = np.zeros(1)
    for _ in range(d - 1):
        partial = (partial[:, None] + band[None, :]).ravel()
    E_arr = np.atleast_1d(np.asarray(E, dtype=float))
    total = resolution**d
    out = np.empty(E_arr.shape)
    for k, e in enumerate(E_arr):
        if e >= 2 * d:
            out[k] = 1.0
        elif e < -2 * d:
            out[k] = 0.0
        else:
            out[k] = np.searchsorted(band, e - partial, side="right").sum() / total
    return float(out[0]) if np.ndim(E) == 0 else out


@dataclass(frozen=True, eq=False)
class FreeIDSTable:
    dimension: int
    energies: np.ndarray
    values: np.ndarray
    method: str

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["E", "N0"])
            for e, v in zip(self.energies, self.values):
                w.writerow([f"{e:.17g}", f"{v:.17g}"])


def free_ids_table(d: int, energies, resolution: int = 256) -> FreeIDSTable:
    energies = np.asarray(energies, dtype=float)
    if d == 1:
        return FreeIDSTable(1, energies, n0_exact_1d(energies), "closed_form_1d")
    return FreeIDSTable(d, energies, n0_quadrature(d, energies, resolution), "quadrature")


def measure_q1(table: FreeIDSTable, window, separations=None):
    """Local Hölder exponent of the free IDS on ``window``."""
    if separations is None:
        separations = default_separations(table.energies, window)
    pairs = modulus_of_continuity(table.energies, table.values, window, separations)
    return fit_power_law(pairs, window, "energy")
