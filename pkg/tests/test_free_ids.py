import csv

import numpy as np
import pytest

from idslab.analysis import UndefinedExponent
from idslab.checks import free_ids_fidelity, quadrature_fidelity
from idslab.free_ids import FreeIDSTable, free_ids_table, measure_q1, n0_exact_1d, n0_quadrature


def test_closed_form_values():
    assert n0_exact_1d(0.0) == pytest.approx(0.5, abs=1e-15)
    assert n0_exact_1d(-2.0) == 0.0
    assert n0_exact_1d(2.0) == 1.0
    assert n0_exact_1d(1.0) == pytest.approx(2 / 3, abs=1e-15)
    assert n0_exact_1d(-7.0) == 0.0 and n0_exact_1d(9.0) == 1.0


def test_closed_form_table_invariants():
    t = free_ids_table(1, np.linspace(-2, 2, 201))
    assert t.method == "closed_form_1d"
    assert np.all(np.diff(t.values) >= 0)
    np.testing.assert_allclose(t.values + t.values[::-1], 1.0, atol=1e-14)


@pytest.mark.parametrize("res", [64, 256])
def test_quadrature_2d(res):
    assert abs(n0_quadrature(2, 0.0, res) - 0.5) <= 2 / res
    assert n0_quadrature(2, 4.0, res) == 1.0
    assert n0_quadrature(2, 5.5, res) == 1.0
    assert n0_quadrature(2, -4 + 1e-6, res) < 1e-3


def test_quadrature_3d_symmetry():
    E = np.linspace(-6, 6, 25)
    vals = n0_quadrature(3, E, 64)
    assert vals[0] == 0.0 and vals[-1] == 1.0
    assert np.all(np.diff(vals) >= 0)
    np.testing.assert_allclose(vals + vals[::-1], 1.0, atol=2 / 64)


def test_quadrature_2d_matches_counting_reference():
    # independent route: Monte Carlo over the torus with a fixed stream
    rng = np.random.default_rng(0)
    th = rng.uniform(-np.pi, np.pi, (400_000, 2))
    band = 2 * np.cos(th).sum(axis=1)
    for E in (-3.0, -1.0, 0.5, 2.5):
        assert n0_quadrature(2, E, 512) == pytest.approx(np.mean(band <= E), abs=5e-3)


def test_quadrature_matches_closed_form_1d():
    assert quadrature_fidelity(4096) <= 1e-3


def test_finite_volume_matches_closed_form():
    assert free_ids_fidelity(4096, 0.05) <= 0.01


def test_resolution_floor():
    with pytest.raises(ValueError):
        n0_quadrature(2, 0.0, 32)


def test_measure_q1_interior():
    t = free_ids_table(1, np.round(np.arange(-0.5, 0.5 + 1e-9, 0.01), 10))
    fit = measure_q1(t, (-0.5, 0.5))
    assert 0.95 <= fit.exponent <= 1.05


def test_measure_q1_band_edge():
    t = free_ids_table(1, np.round(np.arange(-2.0, -1.9 + 1e-9, 0.001), 10))
    fit = measure_q1(t, (-2.0, -1.9))
    assert 0.45 <= fit.exponent <= 0.6


def test_measure_q1_synthetic_linear():
    E = np.round(np.arange(-1, 1 + 1e-9, 0.05), 10)
    t = FreeIDSTable(1, E, np.abs(E), "closed_form_1d")
    assert measure_q1(t, (-1, 1)).exponent == pytest.approx(1.0, abs=1e-6)


def test_measure_q1_constant_is_undefined():
    E = np.linspace(-1, 1, 21)
    t = FreeIDSTable(1, E, np.full(21, 0.3), "closed_form_1d")
    with pytest.raises(UndefinedExponent):
        measure_q1(t, (-1, 1))


def test_measure_q1_needs_points():
    t = free_ids_table(1, np.linspace(-1, 1, 5))
    with pytest.raises(ValueError):
        measure_q1(t, (-1, 1))


def test_csv_export(tmp_path):
    t = free_ids_table(1, [-2.0, 0.0, 1.0])
    path = tmp_path / "n0.csv"
    t.to_csv(path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["E", "N0"]
    assert float(rows[3][1]) == pytest.approx(2 / 3, abs=1e-15)
