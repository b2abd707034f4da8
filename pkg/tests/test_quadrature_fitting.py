import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from alpertlab.fitting import fit_slope
from alpertlab.quadrature import (
    QuadratureError, QuadratureSpec, composite_rule, gauss_legendre, oscillatory_breaks, tensor_rule,
)


def test_gauss_exact_for_polynomials():
    x, w = gauss_legendre(5, 0.0, 2.0)
    for k in range(10):
        assert math.isclose(np.sum(w * x**k), 2.0 ** (k + 1) / (k + 1), rel_tol=1e-13)


def test_tensor_rule_volume():
    x, w = tensor_rule([gauss_legendre(3, 0, 1), gauss_legendre(4, -1, 1)])
    assert x.shape == (12, 2)
    assert math.isclose(w.sum(), 2.0)


def test_oscillatory_rule_against_scipy():
    spec = QuadratureSpec()
    k = 200.0
    br = oscillatory_breaks([0.0, 1.0], lambda a, b: k, spec)
    x, w = composite_rule(br, spec.order)
    ours = np.sum(w * np.cos(k * x) * np.exp(-x))
    ref, _ = integrate.quad(lambda t: np.exp(-t), 0, 1, weight="cos", wvar=k)
    assert abs(ours - ref) < 1e-12


def test_panel_budget():
    spec = QuadratureSpec(max_panels=10)
    with pytest.raises(QuadratureError):
        oscillatory_breaks([0.0, 1.0], lambda a, b: 1e6, spec)


def test_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(points_per_wavelength=2)
    assert QuadratureSpec().refined().points_per_wavelength == 12.0


@settings(max_examples=50, deadline=None)
@given(p=st.floats(-4, 4, allow_nan=False), c=st.floats(0.1, 10, allow_nan=False))
def test_fit_recovers_power_law(p, c):
    x = np.logspace(0, 3, 8)
    f = fit_slope(x, c * x**p)
    assert abs(f.slope - p) < 1e-9
    assert f.residual < 1e-9
    assert f.n_used == 6


def test_fit_trim_and_base():
    x = 2.0 ** np.arange(3, 7)
    f = fit_slope(x, x**-1.5, log_base=2, trim=0)
    assert f.n_used == 4 and abs(f.slope + 1.5) < 1e-12
    with pytest.raises(ValueError):
        fit_slope([1.0, 2.0], [0.0, 0.0], trim=0)
