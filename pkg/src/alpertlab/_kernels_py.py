"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np
from numpy.polynomial import legendre as _leg

# rows of the phase matrix built per block; bounds peak memory
_BLOCK = 1 << 22


def phase_sum(amp, x, u, v):
    """out[p] = sum_j amp[j] * exp(-i (u[p].x[j] + v[p] |x[j]|^2))."""
    amp = np.asarray(amp, dtype=complex)
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    xsq = np.einsum("jk,jk->j", x, x)
    out = np.empty(u.shape[0], dtype=complex)
    step = max(1, _BLOCK // max(1, x.shape[0]))
    for lo in range(0, u.shape[0], step):
        hi = min(lo + step, u.shape[0])
        ph = u[lo:hi] @ x.T + v[lo:hi, None] * xsq[None, :]
        out[lo:hi] = np.exp(-1j * ph) @ amp
    return out


def legendre_pp_eval(breaks, coeffs, x):
    """Evaluate a 1D piecewise Legendre series; zero outside [breaks[0], breaks[-1])."""
    breaks = np.asarray(breaks, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape[0])
    inside = (x >= breaks[0]) & (x < breaks[-1])
    if not inside.any():
        return out
    xi = x[inside]
    seg = np.searchsorted(breaks, xi, side="right") - 1
    a, b = breaks[seg], breaks[seg + 1]
    t = (2.0 * xi - a - b) / (b - a)
    basis = _leg.legvander(t, coeffs.shape[1] - 1)
    out[inside] = np.einsum("pk,pk->p", basis, coeffs[seg])
    return out
