import math

import numpy as np
import pytest

import _dftomo as dft


def test_structure_numbers():
    s = dft.structure_numbers(2, 2, 1, 1)
    assert s["order_R"] == -0.5
    assert s["order_normal"] == -1.0
    assert s["excess_conjugate"] == 0
    assert s["order_artifact"] == -1.0


def test_metric_presets():
    m = dft.MetricField.preset("curvature1", 1.2)
    assert m.gauss_curvature(0.3, -0.2) == pytest.approx(1.0)
    assert dft.MetricField.preset("euclidean").lambda_at(0.5, 0.5) == 0.0


def test_forward_adjoint_dot_product():
    spec = dft.lines_fibration()
    f = dft.phantom("gaussian", 32, 1.0)
    u = dft.forward(spec, f)
    g = dft.adjoint(spec, u, 32, 1.0)
    assert np.isfinite(u.values).all()
    assert np.isfinite(g.values).all()
    assert u.values.max() > 0
    assert g.values.max() > 0


def test_radon_inversion_error():
    spec = dft.lines_fibration()
    f = dft.phantom("gaussian", 96, 1.0)
    u = dft.forward(spec, f)
    rec = dft.radon_invert(u, 96, 1.0)
    err = np.linalg.norm(rec.values - f.values) / np.linalg.norm(f.values)
    assert err < 0.08


def test_fractional_laplacian_eigenfunction():
    f = dft.GridFunction.zeros(32, 1.0)
    vals = np.empty((32, 32))
    h = 2.0 / 32
    xi = math.pi * 3
    for i in range(32):
        for j in range(32):
            x = -1.0 + (i + 0.5) * h
            vals[i, j] = math.cos(xi * x)
    f.values = vals
    g = dft.fractional_laplacian(f, 1.0, 1)
    assert np.allclose(g.values, xi * vals, atol=1e-8 * xi)


def test_conjugate_scan_focusing():
    m = dft.MetricField.preset("focusing(0.8,0.25)")
    pairs = dft.conjugate_scan(m, 0.0, 0.0)
    assert pairs, "the diameter through the bump must have conjugate points"
    t0, t1, degree = pairs[0]
    assert degree == 1
    assert t1 > t0


def test_validation_errors_surface_as_python_exceptions():
    with pytest.raises(Exception):
        dft.structure_numbers(2, 3, 1, None)
