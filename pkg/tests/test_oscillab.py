import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from alpertlab.oscillab import (
    PeriodicAmplitude, default_cutoff, fourier_coeffs, improved_scan, psp_bound, psp_integral,
    rapid_decay_scan,
)


@pytest.mark.parametrize("dim", [1, 2])
def test_constant_amplitude_at_zero_gamma(dim):
    # int psi(z/N) dz = (N * 2 * mid)^dim with mid = 3/2 for the default cutoff
    N = 4
    r = psp_integral(PeriodicAmplitude.constant(), None, N, 0.0, 0.0, 0.0) if dim == 1 else psp_integral(
        PeriodicAmplitude.constant(dim=2), None, N, 0.0, 0.0, 0.0, route="direct"
    )
    assert abs(r.value - (3.0 * N) ** dim) < 1e-9 * (3.0 * N) ** dim


@pytest.mark.parametrize("gamma,beta,a", [(0.7, 0.3, 0.2), (3.0, -1.0, 1.5), (0.05, 2.0, -3.0)])
def test_direct_route_against_scipy(gamma, beta, a):
    phi = PeriodicAmplitude.cosine(0.5)
    psi = default_cutoff()
    N = 2

    def g(z, part):
        v = psi(np.array([z / N]))[0] * phi(np.array([z]))[0] * np.exp(1j * (beta * z - gamma * (z + a) ** 2))
        return v.real if part == 0 else v.imag

    ref = complex(*(integrate.quad(g, -4, 4, args=(p,), limit=800, epsabs=1e-12)[0] for p in (0, 1)))
    val = psp_integral(phi, None, N, beta, gamma, a, route="direct").value
    assert abs(val - ref) < 1e-9


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(0, 10_000), K=st.integers(1, 10), N=st.integers(1, 8),
    gamma=st.floats(0.0, 40.0), beta=st.floats(-1, 1), a=st.floats(-3, 3),
)
def test_fresnel_and_direct_routes_agree(seed, K, N, gamma, beta, a):
    phi = PeriodicAmplitude.random_trig(K, np.random.default_rng(seed))
    r = psp_integral(phi, None, N, beta, gamma, a, route="both")
    assert r.rel_diff < 1e-6


def test_routes_agree_in_two_dimensions():
    phi = PeriodicAmplitude.random_trig(2, np.random.default_rng(3), dim=2)
    r = psp_integral(phi, None, 2, (0.1, -0.2), 2.0, (0.3, 0.0), route="both")
    assert r.rel_diff < 1e-6


def test_fourier_coefficients_against_closed_form():
    phi = PeriodicAmplitude.bernoulli(5, 1.0)
    tab = fourier_coeffs(phi, 16, points_per_axis=8192)
    exact = phi.coeffs(tab.labels)
    assert np.max(np.abs(tab.values.ravel() - exact)) < 1e-9


def test_cosine_coefficients_2d():
    phi = PeriodicAmplitude.cosine(0.5, 2)
    tab = fourier_coeffs(phi, 2)
    assert np.isclose(tab[(0, 0)], 1.0) and np.isclose(tab[(1, -1)], 0.125)
    assert abs(tab[(1, 0)]) < 1e-14


def test_periodicity_and_smoothness_norms():
    phi = PeriodicAmplitude.cosine(0.5)
    assert phi.periodicity_defect() < 1e-12
    assert np.isclose(phi.c_tau_norm(0), 1.5, rtol=1e-4)
    assert np.isclose(phi.c_tau_norm(1), 0.5 * 2 * math.pi, rtol=1e-4)


def test_bound_and_scans():
    assert psp_bound(0.0, 8, 1) == 8
    assert psp_bound(1e4, 8, 1) == pytest.approx(1e-2)
    with pytest.raises(ValueError):
        rapid_decay_scan(PeriodicAmplitude.cosine(), None, 8, 1.0, [10.0], 2)
    out = improved_scan(PeriodicAmplitude.cosine(), None, 8, 10.0, 0.0, 0.5, 0.1, 4, 2)
    assert 0 < out["bound"] <= max(out["psp_bound"], out["moment_bound"])
    with pytest.raises(ValueError):
        improved_scan(PeriodicAmplitude.cosine(), None, 8, 10.0, 0.0, 1.5, 0.1, 4, 2)


def test_rejects_negative_gamma():
    with pytest.raises(ValueError):
        psp_integral(PeriodicAmplitude.constant(), None, 4, 0.0, -1.0, 0.0)
