import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from idslab.analysis import (
    UndefinedExponent, combes_thomas_fit, compute_guaranteed_exponents, fit_power_law,
    holder_in_disorder, holder_in_energy, verdict, weak_disorder_table,
)
from idslab.estimator import IDSEstimate, IDSSurface, estimate_ids
from idslab.free_ids import free_ids_table, measure_q1, n0_exact_1d
from idslab.lattice import LatticeSpec, ModelSpec


def test_guaranteed_exponents():
    t = compute_guaranteed_exponents(1.0, 1.0)
    assert t.q_guaranteed == pytest.approx(1 / 3, abs=1e-15)
    assert t.q2_guaranteed == pytest.approx(0.2, abs=1e-15)
    t = compute_guaranteed_exponents(0.5, 1.0)
    assert t.q_guaranteed == pytest.approx(0.2, abs=1e-15)
    assert t.q2_guaranteed == pytest.approx(0.125, abs=1e-15)
    t = compute_guaranteed_exponents(1e-9, 1.0)
    assert t.q_guaranteed < 1e-9 and t.q2_guaranteed < 1e-9


@settings(max_examples=50)
@given(q1=st.floats(1e-6, 1.0), qs=st.floats(1e-6, 1.0))
def test_guaranteed_ordering(q1, qs):
    t = compute_guaranteed_exponents(q1, qs)
    assert 0 < t.q2_guaranteed < t.q_guaranteed <= t.q1_input


@pytest.mark.parametrize("q1,qs", [(0, 1), (1.2, 1), (0.5, 0), (0.5, 1.5)])
def test_guaranteed_domain(q1, qs):
    with pytest.raises(ValueError):
        compute_guaranteed_exponents(q1, qs)


def test_fit_synthetic_square_root():
    pairs = [(h, h**0.5) for h in (0.1, 0.01, 0.001)]
    fit = fit_power_law(pairs)
    assert fit.exponent == pytest.approx(0.5, abs=1e-10)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.ci == pytest.approx(0.0, abs=1e-10)


def test_fit_flat():
    fit = fit_power_law([(0.1, 0.3), (0.05, 0.3), (0.01, 0.3), (0.001, 0.3)])
    assert fit.exponent == pytest.approx(0.0, abs=1e-10)


def test_fit_hand_computed_slope():
    # slope of log m on log h worked out with the closed-form OLS sums
    fit = fit_power_law([(0.1, 0.02), (0.05, 0.011), (0.025, 0.006)])
    assert fit.exponent == pytest.approx(0.8684827970831033, abs=1e-12)


def test_fit_rejects_bad_input():
    with pytest.raises(UndefinedExponent):
        fit_power_law([(0.1, 0.0), (0.2, 0.0), (0.3, 0.0)])
    with pytest.raises(ValueError):
        fit_power_law([(0.1, -1.0), (0.2, 1.0), (0.3, 1.0)])
    with pytest.raises(UndefinedExponent):
        fit_power_law([(0.1, 1.0), (0.2, 0.0), (0.3, 1.0)])


def test_fit_narrow_range_flag():
    fit = fit_power_law([(0.1, 0.1), (0.2, 0.2), (0.3, 0.3)])
    assert "narrow_range" in fit.flags


@settings(max_examples=40)
@given(c=st.floats(1e-6, 1e6), q=st.floats(-2, 2), noise=st.lists(st.floats(-0.3, 0.3), min_size=5, max_size=5))
def test_fit_scale_equivariant(c, q, noise):
    h = np.array([0.5, 0.2, 0.1, 0.05, 0.01])
    m = h**q * np.exp(noise)
    a = fit_power_law(np.column_stack([h, m]))
    b = fit_power_law(np.column_stack([h, c * m]))
    assert b.exponent == pytest.approx(a.exponent, abs=1e-12)
    assert b.log_constant == pytest.approx(a.log_constant + math.log(c), abs=1e-9)


def _estimate(E, mean, stderr=None, model=None):
    model = model or ModelSpec(LatticeSpec(1, 10))
    stderr = np.zeros_like(mean) if stderr is None else stderr
    return IDSEstimate(model, np.asarray(E), np.asarray(mean), np.asarray(stderr), 1)


def test_holder_energy_matches_measure_q1():
    E = np.round(np.arange(-1.5, 1.5 + 1e-9, 0.01), 10)
    table = free_ids_table(1, E)
    est = _estimate(E, table.values)
    for window in [(-1, 1), (-1.5, -0.5), (0.2, 1.4)]:
        assert holder_in_energy(est, window).exponent == pytest.approx(
            measure_q1(table, window).exponent, abs=1e-6)


def test_holder_energy_free_staircase():
    E = np.round(np.arange(-1, 1 + 1e-9, 0.05), 10)
    est = estimate_ids(ModelSpec(LatticeSpec(1, 4096)), E, 1)
    assert holder_in_energy(est, (-1, 1), [0.4, 0.2, 0.1, 0.05]).exponent >= 0.9


def test_holder_energy_tiny_staircase_still_returns():
    E = np.round(np.arange(-2.5, 2.5 + 1e-9, 0.05), 10)
    est = estimate_ids(ModelSpec(LatticeSpec(1, 10), lam=1.0), E, 1)
    fit = holder_in_energy(est, (-2.5, 2.5), [0.05, 0.1, 0.2, 0.4])
    assert np.isfinite(fit.exponent)
    assert fit.r_squared < 0.9
    assert "low_r_squared" in fit.flags


def test_holder_energy_noise_flag():
    E = np.round(np.arange(-1, 1 + 1e-9, 0.1), 10)
    est = _estimate(E, 0.5 + 0.01 * E, np.full(E.size, 0.01))
    assert "noise_dominated" in holder_in_energy(est, (-1, 1), [0.1, 0.2, 0.4]).flags


def test_holder_energy_unrealisable_separation():
    E = np.round(np.arange(-1, 1 + 1e-9, 0.1), 10)
    with pytest.raises(ValueError):
        holder_in_energy(_estimate(E, n0_exact_1d(E)), (-1, 1), [0.15])


def _surface(lams, mean, E=(0.0,), stderr=None):
    lams = np.asarray(lams, dtype=float)
    mean = np.asarray(mean, dtype=float).reshape(lams.size, len(E))
    se = np.zeros_like(mean) if stderr is None else np.asarray(stderr).reshape(mean.shape)
    return IDSSurface(ModelSpec(LatticeSpec(1, 10)), np.asarray(E), lams, mean, se, 1)


def test_holder_disorder_synthetic_linear():
    lams = np.linspace(0, 1, 11)
    s = _surface(lams, n0_exact_1d(0.3) + 0.1 * lams, E=(0.3,))
    assert holder_in_disorder(s, 0.3).exponent == pytest.approx(1.0, abs=1e-6)


def test_holder_disorder_degenerate_grid():
    s = _surface([0.5, 0.5, 0.5, 0.5], [0.5, 0.5, 0.5, 0.5])
    with pytest.raises(ValueError):
        holder_in_disorder(s, 0.0)


def test_holder_disorder_energy_must_be_on_grid():
    s = _surface(np.linspace(0, 1, 5), np.linspace(0.5, 0.6, 5))
    with pytest.raises(ValueError):
        holder_in_disorder(s, 0.1)


def test_weak_disorder_zero_surface():
    s = _surface([0.0, 0.0], [0.5, 0.5])
    t = weak_disorder_table(s, 0.0, 0.5)
    assert np.all(t.deviation <= 2 / 10)
    assert t.converges


def test_weak_disorder_synthetic_decay():
    lams = np.array([0.0, 0.05, 0.1, 0.2, 0.4, 0.8])
    s = _surface(lams, 0.25 + lams**0.3)
    t = weak_disorder_table(s, 0.0, 0.25)
    assert t.converges
    assert t.decay_fit.exponent == pytest.approx(0.3, abs=1e-3)
    assert t.rows[0] == (0.0, 0.0, 0.0)


def test_weak_disorder_detects_non_convergence():
    lams = np.array([0.1, 0.2, 0.4])
    s = _surface(lams, [0.6, 0.55, 0.52], stderr=[0.001, 0.001, 0.001])
    assert not weak_disorder_table(s, 0.0, 0.5).converges


def test_weak_disorder_needs_reference():
    with pytest.raises(ValueError):
        weak_disorder_table(_surface([0.1, 0.2], [0.5, 0.5]), 0.0)


def test_combes_thomas_examples():
    fit = combes_thomas_fit(1, 3.0, 10, 512)
    assert fit.rate == pytest.approx(math.acosh(1.5), rel=0.01)
    assert fit.rate >= 0.5 and fit.passed
    near = combes_thomas_fit(1, 2.01, 10, 512)
    assert near.rate == pytest.approx(math.acosh(1.005), rel=0.01)
    assert near.rate >= 0.005 and near.passed
    assert combes_thomas_fit(1, -3.0, 10, 512).rate == pytest.approx(fit.rate, abs=1e-12)


def test_combes_thomas_2d():
    fit = combes_thomas_fit(2, 5.0, 8, 40)
    assert fit.passed and fit.rate >= 0.5


def test_combes_thomas_rejects_in_band():
    with pytest.raises(ValueError):
        combes_thomas_fit(1, 1.5, 10, 512)
    with pytest.raises(ValueError):
        combes_thomas_fit(1, 3.0, 10, 20)


def test_verdict_keys():
    fit = fit_power_law([(h, h) for h in (0.4, 0.2, 0.1, 0.05)], (-1, 1))
    v = verdict("holder_in_energy", fit, 1 / 3)
    assert list(v) == ["theorem", "window", "q_guaranteed", "q_hat", "ci", "pass"]
    assert v["pass"] is True
