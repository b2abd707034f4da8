import numpy as np
import pytest

from alpertlab.grid import Cube
from alpertlab.quadrature import QuadratureSpec
from alpertlab.wavelet import (
    AlpertFamily, Expansion, Mollifier, alpert_dimension, build_alpert_family, build_mollifier,
    inner_product, moment, multi_indices, plain_wavelet, smooth_wavelet,
)


def test_multi_indices_counts():
    assert len(multi_indices(1, 2)) == 3
    assert len(multi_indices(2, 2)) == 6
    assert len(multi_indices(3, 1)) == 4


@pytest.mark.parametrize(
    "dim,kappa,expected",
    [(1, 1, 1), (1, 2, 2), (1, 3, 3), (2, 1, 3), (2, 2, 9)],
)
def test_family_size_matches_direct_count(dim, kappa, expected):
    # 2^dim children times the polynomial space, minus the constraints
    n_poly = len(multi_indices(dim, kappa - 1))
    assert expected == (2**dim - 1) * n_poly
    assert len(build_alpert_family(dim, kappa)) == expected
    assert alpert_dimension(dim, kappa) == expected


def test_pure_power_constraints_leave_more():
    assert alpert_dimension(2, 3, "full") == 18
    assert alpert_dimension(2, 3, "pure") == 19
    assert alpert_dimension(3, 2) == 28


@pytest.mark.parametrize("dim,kappa", [(1, 3), (2, 2)])
def test_family_orthonormal(dim, kappa):
    fam = build_alpert_family(dim, kappa)
    Q = Cube((0.5,) * dim, 1.0)
    ws = [plain_wavelet(fam, a, Q) for a in range(len(fam))]
    G = np.array([[inner_product(u, v).real for v in ws] for u in ws])
    assert np.allclose(G, np.eye(len(ws)), atol=1e-10)


def test_plain_wavelet_l2_scaling():
    fam = build_alpert_family(1, 2)
    w = plain_wavelet(fam, 1, Cube((0.3,), 2.0**-5))
    assert abs(inner_product(w, w) - 1.0) < 1e-10


@pytest.mark.parametrize("dim,kappa", [(1, 1), (1, 2), (1, 3), (2, 3)])
def test_mollifier_moments(dim, kappa):
    m = build_mollifier(dim, kappa)
    box = Cube((0.0,) * dim, 2.0)
    from alpertlab.wavelet import BoxFunction

    f = BoxFunction(m, tuple(box.lower), tuple(box.upper), degree=2 * m.r + kappa)
    for beta in multi_indices(dim, kappa - 1):
        target = 1.0 if sum(beta) == 0 else 0.0
        assert abs(moment(f, beta) - target) < 1e-10


def test_smooth_wavelet_support_and_moments():
    fam = build_alpert_family(1, 3)
    moll = build_mollifier(1, 3)
    Q = Cube((0.0,), 0.25)
    eta = 2.0**-6
    w = smooth_wavelet(fam, 2, Q, eta, moll)
    assert np.isclose(w.lower[0], -0.125 - eta * 0.25)
    assert np.isclose(w.upper[0], 0.125 + eta * 0.25)
    for b in range(3):
        assert abs(moment(w, (b,))) < 1e-12
    # smoothing costs little L2 mass at small eta
    assert abs(inner_product(w, w) - 1.0) < 0.1


def test_smooth_wavelet_matches_numeric_convolution():
    from scipy import integrate

    fam = build_alpert_family(1, 2)
    moll = build_mollifier(1, 2)
    Q = Cube((0.5,), 1.0)
    eta = 0.1
    h = plain_wavelet(fam, 0, Q)
    w = smooth_wavelet(fam, 0, Q, eta, moll)
    for x in (0.0, 0.03, 0.5, 0.95):
        jumps = [t for t in ((x - b) / eta for b in (0.0, 0.5, 1.0)) if -1 < t < 1]
        ref, _ = integrate.quad(
            lambda t: h(np.array([[x - eta * t]]))[0] * moll(np.array([[t]]))[0],
            -1, 1, points=jumps or None, epsabs=1e-13, limit=200,
        )
        assert abs(ref - w(np.array([[x]]))[0]) < 1e-10


def test_smooth_wavelet_rejects_bad_eta():
    fam = build_alpert_family(1, 1)
    with pytest.raises(ValueError):
        smooth_wavelet(fam, 0, Cube((0.0,), 1.0), 0.6, build_mollifier(1, 1))


def test_json_round_trip():
    fam = build_alpert_family(2, 2)
    back = AlpertFamily.from_json(fam.to_json())
    x = np.random.default_rng(0).uniform(0, 1, (20, 2))
    for a in range(len(fam)):
        assert np.allclose(back.members[a](x), fam.members[a](x))
    m = build_mollifier(1, 3)
    assert np.allclose(Mollifier.from_json(m.to_json()).coeffs, m.coeffs)


def test_expansion_evaluates_linear_combination(rng):
    fam = build_alpert_family(1, 2)
    ws = [plain_wavelet(fam, a, Cube((c,), 0.5)) for c in (0.25, 0.75) for a in range(2)]
    c = rng.standard_normal(4)
    f = Expansion(ws, c)
    x = rng.uniform(0, 1, (30, 1))
    assert np.allclose(f(x), sum(ci * w(x) for ci, w in zip(c, ws)))
