import math

import numpy as np
import pytest

from qgres.quadrature import NODES, W_GAUSS, W_KRONROD, QuadratureError, integrate_segment


def test_rule_weights():
    assert math.isclose(W_KRONROD.sum(), 1.0, rel_tol=1e-15)
    assert math.isclose(W_GAUSS.sum(), 1.0, rel_tol=1e-15)
    # Kronrod is exact for degree 22 polynomials, Gauss-7 for degree 13
    for k in range(23):
        assert math.isclose(W_KRONROD @ NODES**k, 1 / (k + 1), rel_tol=1e-13)
    for k in range(14):
        assert math.isclose(W_GAUSS @ NODES**k, 1 / (k + 1), rel_tol=1e-13)


def test_gaussian_integral():
    res = integrate_segment(lambda z: np.exp(-z * z), -8, 8, tol=1e-14)
    assert abs(res.value - math.sqrt(math.pi)) < 1e-14


def test_complex_segment_log():
    # from 1 to i along the chord: int dz/z = i pi/2
    res = integrate_segment(lambda z: 1 / z, 1, 1j, tol=1e-13)
    assert abs(res.value - 0.5j * math.pi) < 1e-13


def test_panel_values_sum():
    res = integrate_segment(np.cos, 0, 10, tol=1e-12, initial_panels=5, return_panels=True)
    assert len(res.panel_values) == 5
    assert abs(res.panel_values.sum() - res.value) < 1e-15
    assert abs(res.panel_values[0] - math.sin(2.0)) < 1e-12


def test_nonfinite_and_budget():
    with pytest.raises(QuadratureError), np.errstate(divide="ignore", invalid="ignore"):
        integrate_segment(lambda z: 1 / (z - 0.5), 0, 1, tol=1e-12)
    with pytest.raises(QuadratureError):
        integrate_segment(lambda z: np.sin(1 / (z + 1e-12)), 0, 1, tol=1e-14, max_panels=50)
