"""Fourier extension on the paraboloid, lattice sums Omega and their grid averages Gamma.

Angular convention: E f(xi) = int exp(-i (xi' . x + xi_d |x|^2)) f(x) dx.

For channel m with angular frequency omega_m (see :mod:`alpertlab.modulation`)
and a frequency xi = (xi', lam), the lattice sum attached to a point x of the
reference wavelet support is

    Omega(xi, x; nu) = sum_k psi(c_k) exp(-i (beta . c_k + lam |c_k|^2)),
    beta = xi' + 2 lam x - omega_m,

and completing the square with alpha = beta / (2 lam) gives

    Omega = exp(i |beta|^2 / (4 lam)) sum_k psi(c_k) exp(-i lam |c_k + alpha|^2).

Averaging A_m(nu) Omega(nu) over the offset nu turns the lattice sum into an
integral because the shifted lattices tile space:

    Gamma(xi, x) = 2^(s dim) exp(i |beta|^2 / (4 lam))
                   * int (A_per psi)(y - alpha) exp(-i lam |y|^2) dy,

with A_per(c) = A_m(offset of the grid whose cube is centred at c).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .grid import Cube, lattice_centers
from .modulation import ChannelModel, CutoffPsi, ModBasis
from .quadrature import (
    QuadratureError,
    QuadratureSpec,
    composite_rule,
    gauss_legendre,
    oscillatory_breaks,
    tensor_rule,
)
from .wavelet import CubeWavelet, Expansion

__all__ = [
    "Freq",
    "QuadratureSpec",
    "QuadratureError",
    "extend",
    "hhat_lambda",
    "extend_wavelet_factored",
    "exp_sum_omega",
    "averaged_gamma_direct",
    "averaged_gamma_oscillatory",
    "averaged_extension",
    "sum_over_m",
    "channel_extension",
    "extend_many",
    "extension_from_nodes",
]


@dataclass(frozen=True)
class Freq:
    """A frequency (xi', xi_d) on the dual side of the paraboloid."""

    xi_prime: tuple
    xi_d: float

    def __post_init__(self):
        object.__setattr__(self, "xi_prime", tuple(float(v) for v in np.atleast_1d(self.xi_prime)))
        object.__setattr__(self, "xi_d", float(self.xi_d))

    @property
    def dim(self) -> int:
        return len(self.xi_prime)

    @property
    def lam(self) -> float:
        return self.xi_d

    @property
    def vec(self) -> np.ndarray:
        return np.asarray(self.xi_prime)

    @property
    def norm(self) -> float:
        return float(math.hypot(np.linalg.norm(self.vec), self.xi_d))

    def beta(self, omega, x) -> np.ndarray:
        return self.vec + 2.0 * self.xi_d * np.asarray(x, dtype=float) - np.asarray(omega, dtype=float)

    def alpha(self, omega, x) -> np.ndarray:
        if self.xi_d == 0:
            raise ZeroDivisionError("alpha needs xi_d != 0")
        return self.beta(omega, x) / (2.0 * self.xi_d)


# ---------------------------------------------------------------------------
# extension of compactly supported functions


def _extension_rule(f, xi: Freq, spec: QuadratureSpec):
    axes = []
    for i in range(f.dim):
        lo, hi = f.lower[i], f.upper[i]
        br = np.asarray(f.axis_breaks(i), dtype=float)
        br = np.unique(np.concatenate([[lo, hi], br[(br > lo) & (br < hi)]]))
        xi_i, lam = xi.xi_prime[i], xi.xi_d

        def fmax(a, b, xi_i=xi_i, lam=lam):
            return abs(xi_i) + 2.0 * abs(lam) * max(abs(a), abs(b))

        axes.append(composite_rule(oscillatory_breaks(br, fmax, spec), spec.order))
    return tensor_rule(axes)


def _extend_once(f, xi: Freq, spec: QuadratureSpec):
    x, w = _extension_rule(f, xi, spec)
    amp = (w * f(x)).astype(complex)
    val = kernels.phase_sum(amp, x, xi.vec[None, :], np.array([xi.xi_d]))[0]
    return complex(val), float(np.sum(np.abs(amp)))


def extend(f, xi: Freq, quad: QuadratureSpec | None = None) -> complex:
    """E f(xi) by oscillatory Gauss panels with a step-halving agreement check.

    ``f`` needs ``dim``, ``lower``, ``upper`` and ``axis_breaks``; wavelets,
    expansions and :class:`~alpertlab.wavelet.BoxFunction` all qualify.
    """
    quad = quad or QuadratureSpec()
    if f.dim != xi.dim:
        raise ValueError("frequency and function dimensions differ")
    v1, scale = _extend_once(f, xi, quad)
    v2, _ = _extend_once(f, xi, quad.refined())
    if abs(v1 - v2) > quad.tol * max(scale, 1e-300):
        raise QuadratureError(f"extension quadrature disagrees on refinement: {abs(v1 - v2):.3e}")
    return v2


def _reference_wavelet(w: CubeWavelet) -> CubeWavelet:
    return CubeWavelet(w.ref, Cube((0.0,) * w.dim, w.cube.side), w.member, w.eta)


def hhat_lambda(w: CubeWavelet, zeta, lam: float, quad: QuadratureSpec | None = None) -> np.ndarray:
    """int w0(y) exp(-i zeta . y - i lam |y|^2) dy for the wavelet recentred at 0.

    ``zeta`` has shape (P, dim); one call handles all P frequencies.
    """
    quad = quad or QuadratureSpec()
    w0 = _reference_wavelet(w)
    zeta = np.atleast_2d(np.asarray(zeta, dtype=float))
    if w.dim == 1 and zeta.shape[0] == 1 and zeta.shape[1] != 1:
        zeta = zeta.T
    zmax = np.max(np.abs(zeta), axis=0) if zeta.size else np.zeros(w.dim)
    axes = []
    for i in range(w.dim):
        br = w0.axis_breaks(i)

        def fmax(a, b, z=zmax[i]):
            return z + 2.0 * abs(lam) * max(abs(a), abs(b))

        axes.append(composite_rule(oscillatory_breaks(br, fmax, quad), quad.order))
    y, wt = tensor_rule(axes)
    amp = (wt * w0(y)).astype(complex)
    return kernels.phase_sum(amp, y, zeta, np.full(zeta.shape[0], float(lam)))


def extend_wavelet_factored(w: CubeWavelet, xi: Freq, quad: QuadratureSpec | None = None) -> complex:
    """E h_J(xi) = exp(-i xi' . c - i lam |c|^2) * hhat_lam(xi' + 2 lam c)."""
    c = np.asarray(w.cube.center)
    lam = xi.xi_d
    phase = np.exp(-1j * (float(xi.vec @ c) + lam * float(c @ c)))
    return complex(phase * hhat_lambda(w, (xi.vec + 2.0 * lam * c)[None, :], lam, quad)[0])


# ---------------------------------------------------------------------------
# lattice sum Omega


def exp_sum_omega(omega, xi: Freq, x, nu, s: int, psi: CutoffPsi, check: bool = True):
    """Direct lattice sum Omega and its completed-square form.

    Returns ``(direct, completed)``.  With ``check`` the two must agree to
    1e-10 relative to sum |psi|, or to the rounding floor of the largest
    phase, whichever is larger.  ``completed`` is None when lam = 0.
    """
    c = lattice_centers(nu, s)
    wpsi = psi(c)
    beta = xi.beta(omega, x)
    lam = xi.lam
    direct = complex(np.sum(wpsi * np.exp(-1j * (c @ beta + lam * np.sum(c * c, axis=1)))))
    if lam == 0:
        return direct, None
    alpha = beta / (2.0 * lam)
    ca = c + alpha
    completed = complex(
        np.exp(1j * float(beta @ beta) / (4.0 * lam))
        * np.sum(wpsi * np.exp(-1j * lam * np.sum(ca * ca, axis=1)))
    )
    if check:
        scale = float(np.sum(np.abs(wpsi))) or 1.0
        phase = float(beta @ beta) / (4.0 * abs(lam)) + abs(lam) * float(np.max(np.sum(ca * ca, axis=1)))
        tol = scale * max(1e-10, 64.0 * np.finfo(float).eps * phase)
        if abs(direct - completed) > tol:
            raise AssertionError(f"completed-square form disagrees: {abs(direct - completed):.3e} > {tol:.3e}")
    return direct, completed


def _midpoint_offsets(model: ChannelModel, n: int) -> np.ndarray:
    t = model.h * (np.arange(n) + 0.5) / n
    mesh = np.meshgrid(*([t] * model.dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def averaged_gamma_direct(
    model: ChannelModel, km, xi: Freq, x, n_offsets: int | None = None
) -> np.ndarray:
    """Gamma as the average over offsets of A_m(nu) Omega(nu), one value per member.

    The average runs over one period [0, 2^-s)^dim with a midpoint rule;
    periodicity of the integrand makes this equal to the average over all
    grid shifts.
    """
    n = n_offsets or 16 * 2**model.s
    km = np.atleast_1d(km)
    idx = _channel_index(model, km)
    omega = ModBasis(model.s, model.dim).omega(km)
    total = np.zeros(model.n_members, dtype=complex)
    for nu in _midpoint_offsets(model, n):
        A = model.channels(nu)[idx]
        om, _ = exp_sum_omega(omega, xi, x, nu, model.s, model.psi, check=False)
        total += A * om
    return total / (n**model.dim)


# ---------------------------------------------------------------------------
# integrals over the periodised channel amplitude


def _kink_offsets(model: ChannelModel) -> np.ndarray:
    """Offsets nu in [0, h) where A_m or the cutoff may lose smoothness.

    A_m is a piecewise polynomial in nu: correlations of piecewise
    polynomials only break where a breakpoint of f meets a breakpoint of a
    shifted frame wavelet.  The cutoff adds its own breakpoints.
    """
    h = model.h
    w = _member_wavelets(model)[0]
    out = [0.0]
    for i in range(model.dim):
        pf = np.mod(np.asarray(model.f.axis_breaks(i)), h)
        pw = np.mod(w.axis_breaks(i) - 0.5 * h, h)  # frame breaks at offset 0
        out.extend(np.mod(pf[:, None] - pw[None, :], h).ravel())
        out.extend(np.mod(model.psi.axis_breaks(i) + 0.5 * h, h))
    k = np.unique(np.round(np.asarray(out) / h, 12)) * h
    return k[(k >= 0) & (k < h)]


def _cell_rule(model: ChannelModel, fmax: float, quad: QuadratureSpec, order: int | None = None):
    """Gauss nodes in c over the cells [h j - h/2, h j + h/2), j = -N..N, per axis.

    Every cell carries the same offsets nu in (0, h).  Sub-panel edges include
    every kink offset of the integrand, so each panel sees a polynomial
    amplitude times a smooth phase, and panels are split further to honour
    the wavelength budget.  Returns (nu_nodes, nu_weights, cell_starts).
    """
    order = order or quad.order
    h = model.h
    edges = np.unique(np.concatenate([_kink_offsets(model), [h]]))
    edges = oscillatory_breaks(edges, lambda a, b: fmax, quad)
    nu, w = composite_rule(edges, order)
    starts = h * np.arange(-model.N, model.N + 1) - 0.5 * h
    return nu, w, starts


def _tensor_cells(model: ChannelModel, nu1, w1, starts):
    """Tensor layout: offsets (n_nu^dim, dim), weights, and c = start + nu per cell."""
    dim = model.dim
    mesh = np.meshgrid(*([nu1] * dim), indexing="ij")
    nus = np.stack([m.ravel() for m in mesh], axis=1)
    wm = np.meshgrid(*([w1] * dim), indexing="ij")
    wts = np.prod(np.stack([m.ravel() for m in wm], axis=1), axis=1)
    smesh = np.meshgrid(*([starts] * dim), indexing="ij")
    cell0 = np.stack([m.ravel() for m in smesh], axis=1)
    return nus, wts, cell0


def _amplitude_table(model: ChannelModel, nus) -> np.ndarray:
    """A_m(nu) for all nodes: shape (n_nu, n_channels, n_members)."""
    return np.stack([model.channels(nu) for nu in nus], axis=0)


def _channel_index(model: ChannelModel, km) -> int:
    km = np.atleast_1d(np.asarray(km, dtype=int))
    n = 2 * model.N + 1
    idx = 0
    for k in km:
        if abs(k) > model.N:
            raise ValueError("channel label outside {-N..N}")
        idx = idx * n + int(k) + model.N
    return idx


def averaged_gamma_oscillatory(
    model: ChannelModel, km, xi: Freq, x, quad: QuadratureSpec | None = None, sign: int = -1,
) -> np.ndarray:
    """Gamma from the single oscillatory integral over y = c + alpha, one value per member.

    ``sign`` selects exp(sign * i lam |y|^2) inside the integral; only -1
    reproduces the direct average (the other sign is kept to demonstrate it).
    When lam = 0 the pure average 2^(s dim) int A_per psi exp(-i beta . c) dc
    is used.
    """
    quad = quad or QuadratureSpec()
    km = np.atleast_1d(km)
    idx = _channel_index(model, km)
    omega = ModBasis(model.s, model.dim).omega(km)
    beta = xi.beta(omega, x)
    lam = xi.lam
    fmax = float(np.max(np.abs(beta))) + 2.0 * abs(lam) * (1.0 + model.h) + float(np.max(np.abs(omega)))
    nu1, w1, starts = _cell_rule(model, fmax, quad)
    nus, wts, cell0 = _tensor_cells(model, nu1, w1, starts)
    A = _amplitude_table(model, nus)[:, idx, :]  # (n_nu, members)
    c = (cell0[:, None, :] + nus[None, :, :]).reshape(-1, model.dim)
    amp = (model.psi(c).reshape(cell0.shape[0], -1) * wts[None, :])  # (cells, n_nu)
    scale = 2.0 ** (model.s * model.dim)
    out = np.zeros(model.n_members, dtype=complex)
    if lam == 0:
        ph = np.exp(-1j * (c @ beta)).reshape(cell0.shape[0], -1)
        for a in range(model.n_members):
            out[a] = scale * np.sum(amp * ph * A[None, :, a])
        return out
    alpha = beta / (2.0 * lam)
    y = c + alpha
    ph = np.exp(sign * 1j * lam * np.sum(y * y, axis=1)).reshape(cell0.shape[0], -1)
    pre = np.exp(1j * float(beta @ beta) / (4.0 * lam))
    for a in range(model.n_members):
        out[a] = scale * pre * np.sum(amp * ph * A[None, :, a])
    return out


# ---------------------------------------------------------------------------
# averaged extension of the channel inputs


def _K(model: ChannelModel) -> float:
    return 2.0 ** (model.s * model.dim) * (2 * model.N + 1) ** (-model.dim / 2.0) * model.channel_norm()


def _member_wavelets(model: ChannelModel) -> list:
    cfg = model.config(np.zeros(model.dim))
    return [cfg.wavelet(a, Cube((0.0,) * model.dim, model.h)) for a in range(model.n_members)]


def averaged_extension(
    model: ChannelModel,
    xi: Freq,
    km=None,
    route: str = "which-gives",
    quad: QuadratureSpec | None = None,
    n_offsets: int | None = None,
) -> np.ndarray | complex:
    """E_G <a, phi^m> E g_m(xi), summed over family members.

    Routes:

    * ``"which-gives"``: K exp(i|b0|^2/4lam) int (A_per psi)(w - a0)
      hhat_lam(2 lam w + omega) exp(-i lam |w|^2) dw with b0 = xi' - omega,
      a0 = b0/(2 lam) and K = 2^(s dim) (2N+1)^(-dim/2).  Needs lam != 0.
    * ``"must-est"``: (2N+1)^(-dim/2) int Gamma(xi, x) exp(-i xi'.x - i lam|x|^2) h(x) dx.
    * ``"brute-force"``: midpoint average over offsets of sum_m-channel
      A_m(nu) E g_m(xi; nu), with E h_J in factored form.

    With ``km=None`` all channels are returned as an array.
    """
    quad = quad or QuadratureSpec()
    B = ModBasis(model.s, model.dim)
    labels = B.labels
    omegas = B.omega(labels)  # (n_m, dim)
    sel = slice(None) if km is None else _channel_index(model, km)
    lam = xi.lam
    ws = _member_wavelets(model)
    if route == "brute-force":
        n = n_offsets or 16 * 2**model.s
        total = np.zeros(labels.shape[0], dtype=complex)
        for nu in _midpoint_offsets(model, n):
            total += channel_extension(model, nu, xi, quad, ws)
        res = total / n**model.dim
        return res if km is None else res[sel]
    # shared cell rule for the remaining routes
    om_sel = omegas if km is None else omegas[sel][None, :]
    if route == "which-gives":
        if lam == 0:
            raise ZeroDivisionError("the which-gives route needs xi_d != 0")
        b0 = xi.vec[None, :] - om_sel
        fmax = float(np.max(np.abs(b0))) + 2.0 * abs(lam) * (1.0 + model.h) + float(np.max(np.abs(omegas)))
        nu1, w1, starts = _cell_rule(model, fmax, quad)
        nus, wts, cell0 = _tensor_cells(model, nu1, w1, starts)
        A = _amplitude_table(model, nus)  # (n_nu, n_m, members)
        if km is not None:
            A = A[:, sel : sel + 1, :]
        c = (cell0[:, None, :] + nus[None, :, :]).reshape(-1, model.dim)
        n_cells, n_nu = cell0.shape[0], nus.shape[0]
        amp = model.psi(c) * np.tile(wts, n_cells)
        out = np.zeros(om_sel.shape[0], dtype=complex)
        for a, w in enumerate(ws):
            hh = hhat_lambda(w, xi.vec[None, :] + 2.0 * lam * c, lam, quad)
            base = amp * hh
            for j in range(om_sel.shape[0]):
                a0 = b0[j] / (2.0 * lam)
                wv = c + a0  # w = c + alpha0
                big = float(b0[j] @ b0[j]) / (4.0 * abs(lam))
                if big < 1e6:
                    ph = np.exp(1j * big * np.sign(lam)) * np.exp(-1j * lam * np.sum(wv * wv, axis=1))
                else:  # same integral before completing the square, avoiding cancellation
                    ph = np.exp(-1j * (c @ b0[j] + lam * np.sum(c * c, axis=1)))
                Aj = np.repeat(A[:, j, a][None, :], n_cells, axis=0).ravel()
                out[j] += np.sum(base * ph * Aj)
        res = _K(model) * out
        return res if km is None else res[0]
    if route == "must-est":
        out = np.zeros(om_sel.shape[0], dtype=complex)
        for a, w in enumerate(ws):
            x_axes = [composite_rule(w.axis_breaks(i), quad.order) for i in range(model.dim)]
            xs, xw = tensor_rule(x_axes)
            hx = w(xs) * np.exp(-1j * (xs @ xi.vec + lam * np.sum(xs * xs, axis=1))) * xw
            xmax = float(np.max(np.abs(xs)))
            fmax = (
                float(np.max(np.abs(xi.vec[None, :] - om_sel))) + 2.0 * abs(lam) * (1.0 + model.h + xmax)
                + float(np.max(np.abs(omegas)))
            )
            nu1, w1, starts = _cell_rule(model, fmax, quad)
            nus, wts, cell0 = _tensor_cells(model, nu1, w1, starts)
            A = _amplitude_table(model, nus)
            if km is not None:
                A = A[:, sel : sel + 1, :]
            c = (cell0[:, None, :] + nus[None, :, :]).reshape(-1, model.dim)
            n_cells = cell0.shape[0]
            amp0 = model.psi(c) * np.tile(wts, n_cells)
            for j in range(om_sel.shape[0]):
                Aj = np.repeat(A[:, j, a][None, :], n_cells, axis=0).ravel()
                beta_x = xi.vec[None, :] + 2.0 * lam * xs - om_sel[j][None, :]
                gam = kernels.phase_sum(
                    (amp0 * Aj).astype(complex), c, beta_x, np.full(xs.shape[0], lam)
                )
                gam *= 2.0 ** (model.s * model.dim)
                out[j] += np.sum(gam * hx)
        res = (2 * model.N + 1) ** (-model.dim / 2.0) * model.channel_norm() * out
        return res if km is None else res[0]
    raise ValueError(f"unknown route {route!r}")


def channel_extension(model: ChannelModel, nu, xi: Freq, quad: QuadratureSpec | None = None, ws=None) -> np.ndarray:
    """<a^nu, phi^m> E g_m(xi) on the single grid with offset nu, for every channel.

    Members are summed; E h_J is taken in factored form.
    """
    quad = quad or QuadratureSpec()
    ws = ws or _member_wavelets(model)
    lam = xi.lam
    A = model.channels(nu)  # (n_m, members)
    Bn = model.basis(nu)
    c = Bn.points()
    psi_c = model.psi(c)
    base = np.exp(-1j * (c @ xi.vec + lam * np.sum(c * c, axis=1)))
    total = np.zeros(A.shape[0], dtype=complex)
    for a, w in enumerate(ws):
        hh = hhat_lambda(w, xi.vec[None, :] + 2.0 * lam * c, lam, quad)
        F = _synthesize_channels(Bn, psi_c * base * hh)  # E g_m(xi) for every m
        total += A[:, a] * F * model.channel_norm()
    return total


def extension_from_nodes(x, wf, xis) -> np.ndarray:
    """sum_j wf_j exp(-i (xi' . x_j + xi_d |x_j|^2)) for each row (xi', xi_d) of ``xis``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    xis = np.atleast_2d(np.asarray(xis, dtype=float))
    dim = x.shape[1]
    return kernels.phase_sum(np.asarray(wf, dtype=complex), x, xis[:, :dim].copy(), xis[:, dim].copy())


def extend_many(f, xis, quad: QuadratureSpec | None = None) -> np.ndarray:
    """E f at every row of ``xis`` (shape (P, dim + 1)) on one shared panel rule.

    Panels are sized for the largest frequency in ``xis``; no refinement
    check is made (use :func:`extend` for a checked single value).
    """
    quad = quad or QuadratureSpec()
    xis = np.atleast_2d(np.asarray(xis, dtype=float))
    zmax = np.max(np.abs(xis), axis=0)
    probe = Freq(tuple(zmax[: f.dim]), float(zmax[f.dim]))
    x, w = _extension_rule(f, probe, quad)
    return extension_from_nodes(x, w * f(x), xis)


def _synthesize_channels(B: ModBasis, vals) -> np.ndarray:
    """sum_J phi^m_J vals_J for every channel m, i.e. conj(<conj vals, phi^m>)."""
    return np.conj(B.decompose(np.conj(np.asarray(vals, dtype=complex))))


def sum_over_m(
    model: ChannelModel,
    xi: Freq,
    route: str = "which-gives",
    quad: QuadratureSpec | None = None,
    n_offsets: int | None = None,
) -> tuple:
    """(sum over channels of the averaged extension, E_G E[M_psi Q f](xi) computed directly)."""
    quad = quad or QuadratureSpec()
    total = complex(np.sum(averaged_extension(model, xi, None, route, quad, n_offsets)))
    n = n_offsets or 16 * 2**model.s
    direct = 0j
    for nu in _midpoint_offsets(model, n):
        direct += extend(model.qf(nu, with_psi=True), xi, quad)
    return total, direct / n**model.dim
