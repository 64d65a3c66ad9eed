"""Weak-disorder expansion of the averaged resolvent outside the free band.

For ``z = E + i*eps`` the resolvent of ``H0 + lambda V`` expands as
``sum_k R0 (-lambda V R0)^k``. Its site-0 diagonal element is averaged over
disorder term by term, on the same realizations that feed a direct average
of ``<0|(H - z)^{-1}|0>``, so series and direct value share their noise.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .estimator import _map
from .lattice import LatticeSpec, ModelSpec, build_h0, sample_disorder
from .spectral import BandedResolvent


class DivergentSeries(ValueError):
    """The convergence predicate fails and no override was given."""


def free_gap(model: ModelSpec, E: float) -> float:
    """Distance from ``E`` to the Gershgorin interval of ``H0``; ``|E| - 2d`` for zero background."""
    return abs(E) - (2.0 * model.lattice.dimension + model.background.max_abs)


@dataclass(frozen=True)
class ConvergenceCheck:
    lam: float
    E: float
    d: int
    d0: float
    moment: float
    c1_assumed: float
    ratio: float
    empirical_ratio: float
    verdict: bool


def convergence_check(model: ModelSpec, E: float, c1_assumed: float = 1.0,
                      terms=None, term_stderr=None) -> ConvergenceCheck:
    """Evaluate ``lambda E|w0| C1 / d0^(d+1) < 1``.

    When series terms are supplied, the largest ratio of consecutive terms
    that both stand out of their Monte Carlo noise (``|T_k| > 3 se_k``) is
    recorded as ``empirical_ratio``.
    """
    d0 = free_gap(model, E)
    if d0 <= 0:
        raise ValueError(f"E={E} is not outside the free spectrum")
    d = model.lattice.dimension
    moment = model.disorder.mean_abs()
    ratio = model.lam * moment * c1_assumed / d0 ** (d + 1)
    emp = math.nan
    if terms is not None:
        terms = np.asarray(terms)
        se = np.zeros(terms.shape) if term_stderr is None else np.asarray(term_stderr)
        sig = np.abs(terms) > 3.0 * se
        ratios = [abs(terms[k + 1] / terms[k])
                  for k in range(terms.size - 1) if sig[k] and sig[k + 1]]
        if ratios:
            emp = float(max(ratios))
    return ConvergenceCheck(model.lam, float(E), d, d0, moment, c1_assumed, ratio, emp, ratio < 1)


@dataclass(frozen=True, eq=False)
class DOSSeriesResult:
    E: float
    epsilon: float
    lam: float
    orders: np.ndarray
    order_stderr: np.ndarray
    partial_sums: np.ndarray
    partial_stderr: np.ndarray
    direct_value: complex
    direct_stderr: float
    diff_stderr: np.ndarray
    box_size: int
    realizations: int
    check: ConvergenceCheck

    def gap(self, K=None) -> float:
        """``|partial_sums[K] - direct_value|``."""
        K = len(self.orders) - 1 if K is None else K
        return abs(self.partial_sums[K] - self.direct_value)

    def combined_stderr(self, K=None) -> float:
        K = len(self.orders) - 1 if K is None else K
        return math.hypot(self.partial_stderr[K], self.direct_stderr)

    def csv_rows(self):
        for k, (t, s) in enumerate(zip(self.orders, self.order_stderr)):
            yield [k, t.real, t.imag, s]


def _complex_stderr(x):
    if x.shape[0] < 2:
        return np.zeros(x.shape[1:])
    return np.sqrt(x.real.var(axis=0, ddof=1) + x.imag.var(axis=0, ddof=1)) / np.sqrt(x.shape[0])


def _box(model, L_box):
    lat = LatticeSpec(model.lattice.dimension, L_box, "dirichlet")
    return lat, build_h0(lat, model.background)


def _check_box(model, E, L_box):
    d0 = free_gap(model, E)
    if d0 <= 0:
        raise ValueError(f"E={E} is not outside the free spectrum")
    if math.exp(-d0 * L_box / 4.0) >= 1e-8:
        raise ValueError(f"L_box={L_box} too small for d0={d0:.4g}: need exp(-d0 L/4) < 1e-8")


def _per_realization_terms(model, h0, origin, r0, u0, K, r):
    omega = sample_disorder(model.disorder, h0.n, r)
    terms = np.empty(K + 1, dtype=complex)
    u = u0
    terms[0] = u[origin]
    for k in range(1, K + 1):
        u = r0.solve(-model.lam * omega * u, check=False)
        terms[k] = u[origin]
    return terms, omega


def series_term(model: ModelSpec, E: float, epsilon: float, k: int, L_box: int, R: int,
                workers=None):
    """Monte Carlo mean and standard error of ``E<0|R0 (-lambda V R0)^k|0>``.

    The sign of ``epsilon`` picks the half plane; ``k = 0`` is deterministic.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if epsilon == 0:
        raise ValueError("epsilon must be nonzero")
    _check_box(model, E, L_box)
    lat, h0 = _box(model, L_box)
    z = complex(E, epsilon)
    r0 = BandedResolvent(h0, z)
    origin = lat.center
    u0 = r0.column(origin)
    if k == 0:
        return complex(u0[origin]), 0.0
    vals = np.array(_map(
        lambda r: _per_realization_terms(model, h0, origin, r0, u0, k, r)[0][k], range(R), workers))
    return complex(vals.mean()), float(_complex_stderr(vals[:, None])[0])


def dos_series_run(model: ModelSpec, E: float, epsilon: float = 1e-3, K: int = 4,
                   L_box: int = 512, R: int = 400, c1_assumed: float = 1.0,
                   force: bool = False, workers=None) -> DOSSeriesResult:
    """Series terms ``T_0..T_K`` and the direct resolvent average on shared realizations."""
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    if K < 0 or R < 1:
        raise ValueError("need K >= 0 and R >= 1")
    _check_box(model, E, L_box)
    pre = convergence_check(model, E, c1_assumed)
    if not pre.verdict:
        if not force:
            raise DivergentSeries(f"convergence ratio {pre.ratio:.4g} >= 1")
        warnings.warn(f"convergence ratio {pre.ratio:.4g} >= 1; running anyway", stacklevel=2)

    lat, h0 = _box(model, L_box)
    z = complex(E, epsilon)
    r0 = BandedResolvent(h0, z)
    origin = lat.center
    u0 = r0.column(origin)

    def one(r):
        terms, omega = _per_realization_terms(model, h0, origin, r0, u0, K, r)
        H = h0.with_diagonal(h0.diagonal + model.lam * omega, r)
        direct = BandedResolvent(H, z).column(origin)[origin]
        return terms, direct

    out = _map(one, range(R), workers)
    terms = np.array([t for t, _ in out])  # (R, K+1)
    direct = np.array([g for _, g in out])
    partial = np.cumsum(terms, axis=1)
    orders = terms.mean(axis=0)
    order_se = _complex_stderr(terms)
    order_se[0] = 0.0
    partial_se = _complex_stderr(partial)
    partial_se[0] = 0.0
    diff_se = _complex_stderr(partial - direct[:, None])
    check = convergence_check(model, E, c1_assumed, orders, order_se)
    return DOSSeriesResult(
        float(E), float(epsilon), float(model.lam), orders, order_se,
        partial.mean(axis=0), partial_se, complex(direct.mean()),
        float(_complex_stderr(direct[:, None])[0]), diff_se, L_box, R, check,
    )
