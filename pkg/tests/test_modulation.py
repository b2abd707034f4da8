import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from alpertlab.modulation import (
    ChannelModel, CutoffPsi, ModBasis, bump_hat, build_g_m, modulated_f, random_f,
)
from alpertlab.wavelet import build_alpert_family, build_mollifier


@settings(max_examples=30, deadline=None)
@given(s=st.integers(0, 4), dim=st.integers(1, 2), off=st.floats(-0.5, 0.5, allow_nan=False), seed=st.integers(0, 99))
def test_basis_parseval_and_reconstruction(s, dim, off, seed):
    B = ModBasis(s, dim, (off * 2.0**-s,) * dim)
    r = np.random.default_rng(seed)
    a = r.standard_normal(B.size) + 1j * r.standard_normal(B.size)
    c = B.decompose(a)
    assert np.isclose(np.linalg.norm(c), np.linalg.norm(a), rtol=1e-12)
    assert np.allclose(B.reconstruct(c), a, atol=1e-12)


def test_basis_vectors_orthonormal():
    B = ModBasis(2, 2, (0.03, -0.01))
    P = np.array([B.phi(k) for k in B.labels])
    assert np.allclose(P.conj() @ P.T, np.eye(B.size), atol=1e-12)


def test_decompose_matches_explicit_inner_products(rng):
    B = ModBasis(2, 1, (0.07,))
    a = rng.standard_normal(B.size)
    c = B.decompose(a)
    for i, k in enumerate(B.labels):
        assert np.isclose(c[i], np.vdot(B.phi(k), a))


def test_channel_frequencies():
    B = ModBasis(3, 1)
    w = B.omega(B.labels)[:, 0]
    assert np.isclose(w.max(), 2 * np.pi * 8 * 8 / 17)
    assert np.allclose(w, -w[::-1])


def test_cutoff_plateau_and_support():
    psi = CutoffPsi(1, (0.0,), 0.25, 1.0, 4)
    assert np.allclose(psi(np.linspace(-0.25, 0.25, 11)), 1.0)
    assert np.allclose(psi(np.array([1.0, -1.2, 3.0])), 0.0)
    t = np.linspace(-1, 1, 2001)
    assert np.all(np.diff(psi(t[t >= 0])) <= 1e-15)


@pytest.mark.parametrize("omega", [0.0, 1.3, 7.0, 40.0])
def test_cutoff_fourier_transform_against_quadrature(omega):
    psi = CutoffPsi(1, (0.0,), 0.25, 1.0, 3)
    re, _ = integrate.quad(lambda t: psi(np.array([t]))[0] * np.cos(omega * t), -1, 1, limit=400, epsabs=1e-13)
    assert abs(psi.hat1(omega) - re) < 1e-10


def test_bump_hat_at_zero():
    assert np.isclose(bump_hat(0.0, 4), 1.0)


def test_random_f_layout(rng):
    fam, moll = build_alpert_family(1, 2), build_mollifier(1, 2)
    f, seq = random_f(fam, moll, 2.0**-6, 3, rng)
    assert len(seq.cubes) == 8 and len(seq) == 16
    g, gs = random_f(fam, moll, 2.0**-6, 3, rng, unimodular=True)
    assert np.allclose(np.abs(gs.values), 1.0)
    h, hs = modulated_f(fam, moll, 2.0**-6, 3, 2.0)
    c = np.array([Q.center[0] for Q in hs.cubes])
    assert np.allclose(hs.values, np.exp(2j * c))


def test_channels_synthesize_the_dual_coefficients(rng):
    fam, moll = build_alpert_family(1, 2), build_mollifier(1, 2)
    f, _ = random_f(fam, moll, 2.0**-6, 3, rng)
    model = ChannelModel(fam, moll, 2.0**-6, 3, f)
    nu = np.array([0.05])
    a = model.coefficients(nu)
    B = model.basis(nu)
    A = model.channels(nu) * model.channel_norm()
    assert np.allclose(B.reconstruct(A), a.reshape(B.size, -1), atol=1e-12)
    # sum over channels of g_m reproduces M_psi Q f
    x = rng.uniform(-1, 1, (40, 1))
    tot = np.zeros(40, dtype=complex)
    for i, km in enumerate(B.labels):
        for m in range(model.n_members):
            tot += model.channels(nu)[i, m] * build_g_m(model, nu, km, m)(x)
    assert np.allclose(tot, model.qf(nu, with_psi=True)(x), atol=1e-10)


def test_reduce_is_periodic():
    fam, moll = build_alpert_family(1, 1), build_mollifier(1, 1)
    f, _ = random_f(fam, moll, 2.0**-6, 2, np.random.default_rng(0))
    model = ChannelModel(fam, moll, 2.0**-6, 2, f)
    assert np.allclose(model.reduce([0.3]), model.reduce([0.3 + 0.25]))
