"""Power-law fits of moduli of continuity and the theorem-exponent checks."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class UndefinedExponent(ValueError):
    """Too few nonzero increments to fit an exponent."""


@dataclass(frozen=True)
class HolderFit:
    exponent: float
    log_constant: float
    r_squared: float
    n_pairs: int
    window: tuple = None
    variable: str = "energy"
    ci: float = 0.0
    flags: tuple = ()

    @property
    def constant(self) -> float:
        return float(np.exp(self.log_constant))

    @property
    def lower(self) -> float:
        """Exponent minus its leave-one-out half-width."""
        return self.exponent - self.ci


@dataclass(frozen=True)
class TheoremExponents:
    q1_input: float
    q_star: float
    q_guaranteed: float
    q2_guaranteed: float


def compute_guaranteed_exponents(q1: float, q_star: float = 1.0) -> TheoremExponents:
    """Largest exponents the continuity theorems allow for a free IDS exponent ``q1``.

    ``q = q1 q* / (q1 + 2)`` in energy and ``q2 = 2 q / (q + 3)`` in disorder.
    """
    if not 0 < q1 <= 1:
        raise ValueError(f"q1 must lie in (0, 1], got {q1}")
    if not 0 < q_star <= 1:
        raise ValueError(f"q_star must lie in (0, 1], got {q_star}")
    q = q1 * q_star / (q1 + 2.0)
    return TheoremExponents(q1, q_star, q, 2.0 * q / (q + 3.0))


def _ols(x, y):
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = np.sum((x - xm) * (y - ym)) / sxx
    return slope, ym - slope * xm


def fit_power_law(pairs, window=None, variable="energy") -> HolderFit:
    """Least-squares fit of ``log m = log C + q log h``.

    ``pairs`` is a sequence of ``(h, m)`` with ``h > 0`` and ``m >= 0``;
    pairs with ``m == 0`` are dropped. The reported ``ci`` is the largest
    shift of the slope when one pair is left out.
    """
    arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
    h, m = arr[:, 0], arr[:, 1]
    if np.any(h <= 0) or not np.all(np.isfinite(arr)):
        raise ValueError("separations must be positive and finite")
    if np.any(m < 0):
        raise ValueError("increments must be >= 0")
    keep = m > 0
    h, m = h[keep], m[keep]
    if h.size < 3 or np.unique(h).size < 2:
        raise UndefinedExponent(f"need >= 3 nonzero increments at >= 2 separations, have {h.size}")
    x, y = np.log(h), np.log(m)
    slope, icpt = _ols(x, y)
    resid = y - (icpt + slope * x)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - np.sum(resid**2) / ss_tot)
    spread = 0.0
    for i in range(h.size):
        xi, yi = np.delete(x, i), np.delete(y, i)
        if np.ptp(xi) > 0:
            spread = max(spread, abs(_ols(xi, yi)[0] - slope))
    flags = []
    if h.max() / h.min() < 10:
        flags.append("narrow_range")
    if r2 < 0.9:
        flags.append("low_r_squared")
    return HolderFit(
        float(slope), float(icpt), float(r2), int(h.size),
        None if window is None else tuple(float(w) for w in window),
        variable, float(spread), tuple(flags),
    )


def modulus_of_continuity(x, y, window, separations, rel_tol=1e-6):
    """``m(h) = max |y(x) - y(x')|`` over grid pairs in ``window`` with ``|x - x'| = h``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lo, hi = window
    inside = (x >= lo - 1e-12) & (x <= hi + 1e-12)
    xs, ys = x[inside], y[inside]
    if xs.size < 2:
        raise ValueError(f"window {window} holds fewer than 2 grid points")
    dx = xs[None, :] - xs[:, None]
    dy = np.abs(ys[None, :] - ys[:, None])
    out = []
    for h in separations:
        hit = np.abs(dx - h) <= rel_tol * max(h, 1e-300)
        if not hit.any():
            raise ValueError(f"separation {h} is not realised on the grid inside {window}")
        out.append((float(h), float(dy[hit].max())))
    return out


def default_separations(x, window, n_min=8):
    """Dyadic multiples of the grid step up to half the window width."""
    x = np.asarray(x, dtype=float)
    lo, hi = window
    xs = x[(x >= lo - 1e-12) & (x <= hi + 1e-12)]
    if xs.size < n_min:
        raise ValueError(f"window {window} needs >= {n_min} grid points, has {xs.size}")
    step = float(np.median(np.diff(xs)))
    seps = []
    h = step
    while h <= 0.5 * (xs[-1] - xs[0]) * (1 + 1e-9):
        seps.append(h)
        h *= 2
    return seps


def holder_in_energy(est, window, separations=None) -> HolderFit:
    """Fit the energy Hölder exponent of an IDS estimate on ``window``."""
    if separations is None:
        separations = default_separations(est.energies, window)
    pairs = modulus_of_continuity(est.energies, est.mean, window, separations)
    fit = fit_power_law(pairs, window, "energy")
    lo, hi = window
    inside = (est.energies >= lo - 1e-12) & (est.energies <= hi + 1e-12)
    noise = 3.0 * float(np.max(est.stderr[inside]))
    if noise > 0 and min(m for _, m in pairs) < noise:
        fit = _with_flag(fit, "noise_dominated")
    return fit


def _with_flag(fit, flag):
    return HolderFit(fit.exponent, fit.log_constant, fit.r_squared, fit.n_pairs,
                     fit.window, fit.variable, fit.ci, fit.flags + (flag,))


def _energy_column(surface, E):
    k = np.flatnonzero(np.abs(surface.energies - E) <= 1e-12 * max(1.0, abs(E)))
    if k.size == 0:
        raise ValueError(f"E={E} is not on the surface's energy grid")
    return int(k[0])


def holder_in_disorder(surface, E) -> HolderFit:
    """Fit the disorder Hölder exponent at energy ``E`` over all lambda pairs."""
    col = _energy_column(surface, E)
    lams = np.asarray(surface.lambdas, dtype=float)
    if np.unique(lams).size < 4:
        raise ValueError("need at least 4 distinct lambda values")
    vals = surface.mean[:, col]
    pairs = []
    for i in range(lams.size):
        for j in range(i + 1, lams.size):
            if lams[j] != lams[i]:
                pairs.append((abs(lams[j] - lams[i]), abs(vals[j] - vals[i])))
    return fit_power_law(pairs, (float(lams.min()), float(lams.max())), "disorder")


@dataclass(frozen=True)
class WeakDisorderTable:
    E: float
    n0_ref: float
    lambdas: np.ndarray
    deviation: np.ndarray
    stderr: np.ndarray
    converges: bool
    decay_fit: HolderFit = None
    rows: list = field(default_factory=list)


def weak_disorder_table(surface, E, n0_ref=None) -> WeakDisorderTable:
    """Deviation ``|N_lambda(E) - N_0(E)|`` per lambda, with a convergence verdict.

    The verdict holds when, ordered by increasing lambda, no deviation exceeds
    the next one by more than two combined standard errors.
    """
    col = _energy_column(surface, E)
    lams = np.asarray(surface.lambdas, dtype=float)
    order = np.argsort(lams, kind="stable")
    lams = lams[order]
    mean = surface.mean[order, col]
    se = surface.stderr[order, col]
    if n0_ref is None:
        zero = np.flatnonzero(lams == 0)
        if zero.size == 0:
            raise ValueError("no lambda = 0 row and no n0_ref supplied")
        n0_ref = float(mean[zero[0]])
    dev = np.abs(mean - n0_ref)
    ok = all(
        dev[i] <= dev[i + 1] + 2.0 * np.hypot(se[i], se[i + 1])
        for i in range(lams.size - 1)
    )
    pos = (lams > 0) & (dev > 0)
    decay = None
    if np.count_nonzero(pos) >= 3:
        decay = fit_power_law(np.column_stack([lams[pos], dev[pos]]),
                              (float(lams[pos].min()), float(lams[pos].max())), "disorder")
    rows = [(float(l), float(d), float(s)) for l, d, s in zip(lams, dev, se)]
    return WeakDisorderTable(float(E), float(n0_ref), lams, dev, se, bool(ok), decay, rows)


@dataclass(frozen=True)
class CombesThomasFit:
    rate: float
    prefactor: float
    r_squared: float
    d0: float
    passed: bool


def combes_thomas_fit(d: int, E: float, max_range: int = 10, L: int = None) -> CombesThomasFit:
    """Exponential decay rate of the free resolvent ``|<x0|R0(E)|x0 + k>|``, k = 1..max_range.

    Passes when the fitted rate is at least ``d0 / 2`` with ``d0 = |E| - 2d``.
    """
    from .lattice import LatticeSpec, build_h0
    from .spectral import resolvent_column

    d0 = abs(E) - 2.0 * d
    if d0 <= 0:
        raise ValueError(f"E={E} lies inside the free spectrum [-{2 * d}, {2 * d}]")
    if L is None:
        L = 4 * max_range
    if L < 4 * max_range:
        raise ValueError("need L >= 4 * max_range")
    lat = LatticeSpec(d, L)
    h0 = build_h0(lat)
    x0 = lat.center
    col = resolvent_column(h0, complex(E), x0)
    k = np.arange(1, max_range + 1)
    g = np.abs(col[x0 + k])
    slope, icpt = _ols(k.astype(float), np.log(g))
    resid = np.log(g) - (icpt + slope * k)
    ss_tot = np.sum((np.log(g) - np.log(g).mean()) ** 2)
    r2 = 1.0 if ss_tot == 0 else 1.0 - np.sum(resid**2) / ss_tot
    rate = -float(slope)
    return CombesThomasFit(rate, float(np.exp(icpt)), float(r2), float(d0), rate >= d0 / 2)


def verdict(theorem: str, fit: HolderFit, q_guaranteed: float) -> dict:
    """Report dict for a Hölder check: the fitted exponent minus its CI must reach the guarantee."""
    return {
        "theorem": theorem,
        "window": list(fit.window) if fit.window is not None else None,
        "q_guaranteed": q_guaranteed,
        "q_hat": fit.exponent,
        "ci": fit.ci,
        "pass": bool(fit.exponent - fit.ci >= q_guaranteed),
    }
