import os
import subprocess
import sys

import numpy as np
import pytest

from alpertlab import _kernels_py, kernels


def _phase_sum_naive(amp, x, u, v):
    return np.array([
        sum(a * np.exp(-1j * (up @ xj + vp * (xj @ xj))) for a, xj in zip(amp, x)) for up, vp in zip(u, v)
    ])


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_phase_sum_against_naive_loop(dim, rng):
    x = rng.uniform(-1, 1, (23, dim))
    amp = rng.standard_normal(23) + 1j * rng.standard_normal(23)
    u = rng.uniform(-30, 30, (7, dim))
    v = rng.uniform(-30, 30, 7)
    ref = _phase_sum_naive(amp, x, u, v)
    assert np.allclose(kernels.phase_sum(amp, x, u, v), ref, atol=1e-11)
    assert np.allclose(_kernels_py.phase_sum(amp, x, u, v), ref, atol=1e-11)


def test_legendre_eval_matches_numpy(rng):
    breaks = np.array([-1.0, -0.2, 0.5, 1.0])
    coeffs = rng.standard_normal((3, 5))
    x = rng.uniform(-1.2, 1.2, 200)
    out = kernels.legendre_pp_eval(breaks, coeffs, x)
    ref = _kernels_py.legendre_pp_eval(breaks, coeffs, x)
    assert np.allclose(out, ref, atol=1e-13)
    assert np.all(out[(x < -1) | (x >= 1)] == 0)


def test_backend_reported():
    assert kernels.BACKEND in ("compiled", "python")


def test_environment_forces_fallback():
    env = dict(os.environ, ALPERTLAB_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import alpertlab; print(alpertlab.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
