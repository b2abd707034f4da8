import numpy as np
import pytest

from alpertlab.frame import (
    CoeffSeq, Frame, FrameConfig, apply_T_inverse, lq_norm, lq_seq, pseudoprojection_Q,
)
from alpertlab.grid import Cube, Grid
from alpertlab.wavelet import Expansion, build_alpert_family, build_mollifier, plain_wavelet


def _cfg(s=3, kappa=2, eta=2.0**-6, grid=None):
    return FrameConfig(
        build_alpert_family(1, kappa), build_mollifier(1, kappa), eta, (s, s),
        grid=grid, region=Cube((0.5,), 1.0), neumann_tol=1e-12,
    )


def test_gram_symmetric_positive_and_near_identity():
    fr = Frame(_cfg())
    G = fr.gram.toarray()
    assert np.allclose(G, G.T, atol=1e-14)
    ev = np.linalg.eigvalsh(G)
    assert ev.min() > 0.5
    assert fr.contraction_ratio() < 0.5


def test_plain_frame_is_orthonormal():
    cfg = FrameConfig(build_alpert_family(1, 2), None, 0.0, (3, 3), region=Cube((0.5,), 1.0))
    G = Frame(cfg).gram.toarray()
    assert np.allclose(G, np.eye(G.shape[0]), atol=1e-12)


def test_dual_coefficients_by_quadrature_give_identity():
    fr = Frame(_cfg())
    for i in (0, 5, len(fr) - 1):
        dual = fr.solve(fr.analysis(fr.wavelets[i])).coeffs
        e = np.zeros(len(fr))
        e[i] = 1
        assert np.max(np.abs(dual - e)) < 1e-10


def test_Q_idempotent_on_random_fine_input(rng):
    cfg = _cfg(3)
    fine = Frame(_cfg(4))
    f = Expansion(fine.wavelets, rng.standard_normal(len(fine)))
    _, Qf = pseudoprojection_Q(f, 3, cfg)
    _, QQf = pseudoprojection_Q(Qf, 3, cfg)
    assert np.allclose(Qf.coeffs, QQf.coeffs, atol=1e-10)


def test_Q_outside_window_raises():
    with pytest.raises(ValueError):
        pseudoprojection_Q(Expansion([], np.zeros(0)), 5, _cfg(3))


def test_T_inverse_needs_span():
    with pytest.raises(ValueError):
        apply_T_inverse(lambda x: np.ones(len(x)), np.zeros((1, 1)), _cfg())


def test_shifted_grid_frame():
    fr = Frame(_cfg(grid=Grid(1, (0.01,))))
    assert fr.contraction_ratio() < 0.5


def test_coeffseq_csv_round_trip(tmp_path, rng):
    fr = Frame(_cfg())
    seq = CoeffSeq(3, fr.cubes_by_scale[3], 2, rng.standard_normal(len(fr)) + 1j)
    seq.to_csv(tmp_path / "c.csv")
    back = CoeffSeq.from_csv(tmp_path / "c.csv", 3)
    assert np.allclose(back.values, seq.values)


def test_lq_norm_matches_closed_form():
    # a single orthonormal Haar-type wavelet on a cube of side h has |h| = h^-1/2
    fam = build_alpert_family(1, 1)
    w = plain_wavelet(fam, 0, Cube((0.5,), 0.25))
    f = Expansion([w], np.array([1.0]))
    for q in (2.0, 3.0, 4.0):
        assert np.isclose(lq_norm(f, q), 0.25 ** (1 / q - 0.5))
    assert np.isclose(lq_seq([3.0, 4.0], 2), 5.0)
