import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from alpertlab.extension import (
    Freq, averaged_extension, averaged_gamma_direct, averaged_gamma_oscillatory, exp_sum_omega,
    extend, extend_many, extend_wavelet_factored, extension_from_nodes, sum_over_m,
)
from alpertlab.grid import Cube
from alpertlab.modulation import ChannelModel, CutoffPsi, ModBasis, random_f
from alpertlab.quadrature import QuadratureSpec
from alpertlab.wavelet import BoxFunction, build_alpert_family, build_mollifier, smooth_wavelet


@pytest.fixture(scope="module")
def model():
    fam, moll = build_alpert_family(1, 3), build_mollifier(1, 3)
    f, _ = random_f(fam, moll, 2.0**-6, 3, np.random.default_rng(5))
    return ChannelModel(fam, moll, 2.0**-6, 3, f)


def test_extend_against_scipy():
    f = BoxFunction(lambda x: 1.0 - x[:, 0] ** 2, (-1.0,), (1.0,), degree=2)
    xi = Freq((7.0,), 12.0)
    re, _ = integrate.quad(lambda t: (1 - t * t) * np.cos(7 * t + 12 * t * t), -1, 1, limit=500, epsabs=1e-13)
    im, _ = integrate.quad(lambda t: -(1 - t * t) * np.sin(7 * t + 12 * t * t), -1, 1, limit=500, epsabs=1e-13)
    assert abs(extend(f, xi) - complex(re, im)) < 1e-11


def test_extend_at_zero_is_the_integral():
    fam, moll = build_alpert_family(2, 2), build_mollifier(2, 2)
    w = smooth_wavelet(fam, 1, Cube((0.1, 0.2), 0.25), 2.0**-6, moll)
    assert abs(extend(w, Freq((0.0, 0.0), 0.0))) < 1e-12


@settings(max_examples=15, deadline=None)
@given(a=st.floats(-60, 60, allow_nan=False), lam=st.floats(-60, 60, allow_nan=False), c=st.floats(-1, 1, allow_nan=False))
def test_factored_form_matches_direct(a, lam, c):
    fam, moll = build_alpert_family(1, 2), build_mollifier(1, 2)
    w = smooth_wavelet(fam, 1, Cube((c,), 0.125), 2.0**-6, moll)
    xi = Freq((a,), lam)
    assert abs(extend_wavelet_factored(w, xi) - extend(w, xi)) < 1e-10


def test_extend_many_matches_extend():
    fam, moll = build_alpert_family(1, 2), build_mollifier(1, 2)
    w = smooth_wavelet(fam, 0, Cube((0.3,), 0.25), 2.0**-6, moll)
    xis = np.array([[1.0, 2.0], [-30.0, 5.0], [4.0, -20.0]])
    many = extend_many(w, xis)
    for row, v in zip(xis, many):
        assert abs(v - extend(w, Freq((row[0],), row[1]))) < 1e-11


def test_extension_from_nodes_paraboloid_phase():
    x = np.array([[0.5], [-0.25]])
    wf = np.array([1.0, 2.0])
    out = extension_from_nodes(x, wf, np.array([[3.0, 4.0]]))
    ref = np.exp(-1j * (1.5 + 1.0)) + 2 * np.exp(-1j * (-0.75 + 0.25))
    assert np.isclose(out[0], ref)


@settings(max_examples=25, deadline=None)
@given(
    s=st.integers(1, 5), k=st.integers(-4, 4), a=st.floats(-40, 40), lam=st.floats(0.5, 40),
    x=st.floats(-0.5, 0.5), nu=st.floats(0, 0.999),
)
def test_lattice_sum_completed_square(s, k, a, lam, x, nu):
    B = ModBasis(s, 1)
    k = max(-B.N, min(B.N, k))
    psi = CutoffPsi.for_region(Cube((0.0,), 2.0))
    d, c = exp_sum_omega(B.omega([k]), Freq((a,), lam), [x], [nu * B.h], s, psi, check=False)
    assert abs(d - c) <= 1e-10 * (2 * B.N + 1)


def test_gamma_routes_agree(model):
    xi = Freq((3.0,), -2.5)
    x = np.array([0.03])
    d = averaged_gamma_direct(model, (2,), xi, x, 64 * model.N)
    o = averaged_gamma_oscillatory(model, (2,), xi, x)
    assert np.max(np.abs(d - o)) < 1e-6 * np.max(np.abs(d))


def test_wrong_square_sign_disagrees(model):
    xi = Freq((3.0,), -2.5)
    x = np.array([0.03])
    d = averaged_gamma_direct(model, (2,), xi, x, 64 * model.N)
    bad = averaged_gamma_oscillatory(model, (2,), xi, x, sign=+1)
    assert np.max(np.abs(d - bad)) > 1e-2 * np.max(np.abs(d))


def test_averaged_extension_routes(model):
    xi = Freq((2.0,), 3.0)
    wg = averaged_extension(model, xi, route="which-gives")
    me = averaged_extension(model, xi, route="must-est")
    bf = averaged_extension(model, xi, route="brute-force", n_offsets=64 * model.N)
    sc = np.abs(bf).max()
    assert np.abs(wg - me).max() < 1e-8 * sc
    assert np.abs(wg - bf).max() < 1e-4 * sc
    single = averaged_extension(model, xi, km=(1,))
    assert np.isclose(single, wg[model.N + 1])


def test_sum_over_channels_equals_direct_average(model):
    total, direct = sum_over_m(model, Freq((-5.0,), -1.5))
    assert abs(total - direct) < 1e-3 * abs(direct)
