"""Quadratic-phase integrals with 1-periodic amplitudes.

The object of study is

    I = int psi(z/N) exp(i beta . z) phi(z) exp(-i gamma |z + a|^2) dz,

with phi 1-periodic and psi a tensor cutoff (plateau [-1,1], support [-2,2]
per axis by default).  Two independent evaluations are provided:

* ``direct``: oscillatory Gauss panels in z;
* ``fresnel``: expand phi in its Fourier series.  Each harmonic is a shifted
  Fresnel integral; after completing the square it becomes, by Parseval, an
  integral of the cutoff's Fourier transform against exp(i w^2 / (4 gamma)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from . import kernels
from .fitting import SlopeFit, fit_slope
from .modulation import CutoffPsi
from .quadrature import QuadratureError, QuadratureSpec, composite_rule, oscillatory_breaks, tensor_rule

__all__ = [
    "PeriodicAmplitude",
    "FourierTable",
    "fourier_coeffs",
    "default_cutoff",
    "psp_integral",
    "psp_bound",
    "rapid_decay_scan",
    "improved_scan",
]


def default_cutoff(dim: int = 1, r: int = 8) -> CutoffPsi:
    """Cutoff equal to 1 on [-1,1]^dim and supported in [-2,2]^dim."""
    return CutoffPsi(dim, None, 1.0, 2.0, r)


# ---------------------------------------------------------------------------
# amplitudes


@dataclass(frozen=True, eq=False)
class FourierTable:
    """Fourier coefficients on {-K..K}^dim (last axis fastest)."""

    K: int
    dim: int
    values: np.ndarray  # shape (2K+1,)*dim

    @property
    def labels(self) -> np.ndarray:
        r = np.arange(-self.K, self.K + 1)
        mesh = np.meshgrid(*([r] * self.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def __getitem__(self, k) -> complex:
        k = np.atleast_1d(k)
        return complex(self.values[tuple(int(x) + self.K for x in k)])

    def as_dict(self) -> dict:
        return {tuple(int(x) for x in k): complex(v) for k, v in zip(self.labels, self.values.ravel())}

    def nonzero(self, rel: float = 0.0):
        """Labels and values, dropping entries below rel * max."""
        v = self.values.ravel()
        keep = np.abs(v) > rel * np.abs(v).max() if rel > 0 else np.abs(v) > 0
        return self.labels[keep], v[keep]


@dataclass(frozen=True, eq=False)
class PeriodicAmplitude:
    """A 1-periodic function on R^dim.

    ``coeffs``, when given, returns exact Fourier coefficients for an (M, dim)
    array of integer labels; otherwise they are computed by the trapezoid
    rule.  ``bandwidth`` bounds the harmonics that matter (used to size
    panels and harmonic windows).  ``breaks`` are points of [0,1) where phi
    may be nonsmooth.
    """

    dim: int
    fn: Callable
    bandwidth: int = 16
    coeffs: Callable | None = None
    breaks: tuple = ()
    name: str = "phi"

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.dim == 1 and z.ndim <= 1:
            z = z.reshape(-1, 1)
        return np.asarray(self.fn(np.atleast_2d(z)), dtype=complex)

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, value: complex = 1.0, dim: int = 1) -> "PeriodicAmplitude":
        def coeffs(k):
            return np.where(np.all(k == 0, axis=1), complex(value), 0j)

        return cls(dim, lambda z: np.full(z.shape[0], complex(value)), 0, coeffs, (), "constant")

    @classmethod
    def cosine(cls, amp: float = 0.5, dim: int = 1) -> "PeriodicAmplitude":
        """1 + amp * prod_i cos(2 pi z_i)."""

        def fn(z):
            return 1.0 + amp * np.prod(np.cos(2 * np.pi * z), axis=1)

        def coeffs(k):
            k = np.asarray(k)
            zero = np.all(k == 0, axis=1)
            ones = np.all(np.abs(k) == 1, axis=1)
            return np.where(zero, 1.0 + 0j, 0j) + np.where(ones, amp / 2.0**dim, 0.0)

        return cls(dim, fn, 1, coeffs, (), f"1+{amp}cos")

    @classmethod
    def bernoulli(cls, order: int, amp: float = 1.0, dim: int = 1) -> "PeriodicAmplitude":
        """1 + amp * prod_i B_n({z_i}), periodic Bernoulli polynomial of degree n.

        B_n({z}) is of class C^(n-2) with Fourier coefficients
        -n! / (2 pi i k)^n for k != 0 and 0 at k = 0.
        """
        if order < 2:
            raise ValueError("Bernoulli amplitude needs order >= 2 to be continuous")
        bn = special.bernoulli(order)
        poly = np.array([special.comb(order, j) * bn[j] for j in range(order + 1)])  # coeff of x^{n-j}

        def b1(t):
            t = np.mod(t, 1.0)
            return sum(poly[j] * t ** (order - j) for j in range(order + 1))

        def fn(z):
            return 1.0 + amp * np.prod(b1(z), axis=1)

        def c1(k):
            k = np.asarray(k, dtype=float)
            out = np.zeros(k.shape, dtype=complex)
            nz = k != 0
            out[nz] = -math.factorial(order) / (2j * np.pi * k[nz]) ** order
            return out

        def coeffs(k):
            k = np.asarray(k)
            zero = np.all(k == 0, axis=1)
            return np.where(zero, 1.0 + 0j, 0j) + amp * np.prod(c1(k), axis=1)

        return cls(dim, fn, 2000, coeffs, (0.0,), f"B{order}")

    @classmethod
    def trigonometric(cls, table: dict, dim: int = 1, breaks: tuple = ()) -> "PeriodicAmplitude":
        """Finite Fourier series sum_k c_k exp(2 pi i k.z) from {label: c_k}."""
        labels = np.array([np.atleast_1d(k) for k in table], dtype=int).reshape(len(table), dim)
        vals = np.array(list(table.values()), dtype=complex)
        lookup = {tuple(k): v for k, v in zip(labels.tolist(), vals)}

        def fn(z):
            return np.exp(2j * np.pi * (z @ labels.T)) @ vals

        def coeffs(k):
            return np.array([lookup.get(tuple(x), 0j) for x in np.asarray(k).tolist()], dtype=complex)

        K = int(np.abs(labels).max()) if labels.size else 0
        return cls(dim, fn, K, coeffs, breaks, f"trig{K}")

    @classmethod
    def random_trig(cls, K: int, rng, dim: int = 1) -> "PeriodicAmplitude":
        """Random trigonometric polynomial of degree K with coefficients decaying like 1/(1+|k|^2)."""
        r = np.arange(-K, K + 1)
        mesh = np.meshgrid(*([r] * dim), indexing="ij")
        labels = np.stack([m.ravel() for m in mesh], axis=1)
        c = (rng.standard_normal(len(labels)) + 1j * rng.standard_normal(len(labels))) / (1.0 + np.sum(labels**2, axis=1))
        return cls.trigonometric({tuple(k): v for k, v in zip(labels.tolist(), c)}, dim)

    # -- diagnostics ------------------------------------------------------

    def periodicity_defect(self, n: int = 64, seed: int = 0) -> float:
        rng = np.random.default_rng(seed)
        z = rng.random((n, self.dim)) * 2 - 1
        shift = rng.integers(-3, 4, size=(n, self.dim))
        return float(np.max(np.abs(self(z + shift) - self(z))))

    def c_tau_norm(self, tau: int, h: float = 1e-3, samples: int | None = None) -> float:
        """max over |alpha| <= tau of sup |d^alpha phi|, by central differences.

        Each difference quotient at step h is Richardson-combined with the
        one at h/2 (second-order error cancelled).  Samples avoid the
        declared breakpoints by half a step.
        """
        n = samples or (512 if self.dim == 1 else 48)
        t = (np.arange(n) + 0.5) / n
        mesh = np.meshgrid(*([t] * self.dim), indexing="ij")
        z = np.stack([m.ravel() for m in mesh], axis=1)
        best = float(np.max(np.abs(self(z))))
        for order in range(1, tau + 1):
            for alpha in _multi(self.dim, order):
                d1 = self._diff(z, alpha, h)
                d2 = self._diff(z, alpha, h / 2)
                est = (4.0 * d2 - d1) / 3.0
                best = max(best, float(np.max(np.abs(est))))
        return best

    def _diff(self, z, alpha, h):
        pts = [(1.0, np.zeros(self.dim))]
        for i, k in enumerate(alpha):
            new = []
            for j in range(k + 1):
                c = (-1) ** j * special.comb(k, j)
                for w, off in pts:
                    o = off.copy()
                    o[i] += (k / 2.0 - j) * h
                    new.append((w * c, o))
            pts = new
        tot = np.zeros(z.shape[0], dtype=complex)
        for w, off in pts:
            tot += w * self(z + off)
        return tot / h ** sum(alpha)


def _multi(dim, order):
    import itertools

    return [a for a in itertools.product(range(order + 1), repeat=dim) if sum(a) == order]


def fourier_coeffs(phi: PeriodicAmplitude, K: int, points_per_axis: int | None = None) -> FourierTable:
    """Trapezoid-rule Fourier coefficients on {-K..K}^dim.

    Uses at least 8K points per axis (and at least 64).  For smooth periodic
    integrands the trapezoid rule is spectrally accurate.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    M = max(points_per_axis or 0, 8 * K, 64)
    t = np.arange(M) / M - 0.5
    mesh = np.meshgrid(*([t] * phi.dim), indexing="ij")
    z = np.stack([m.ravel() for m in mesh], axis=1)
    vals = phi(z).reshape((M,) * phi.dim)
    # grid starts at -1/2: coefficient k picks up exp(i pi k) per axis
    F = np.fft.fftn(vals) / M**phi.dim
    idx = np.mod(np.arange(-K, K + 1), M)
    sub = F[np.ix_(*([idx] * phi.dim))]
    sign = (-1.0) ** np.abs(np.arange(-K, K + 1))
    for ax in range(phi.dim):
        shape = [1] * phi.dim
        shape[ax] = -1
        sub = sub * sign.reshape(shape)
    return FourierTable(K, phi.dim, sub)


# ---------------------------------------------------------------------------
# the integral


def _harmonics(phi: PeriodicAmplitude, K: int):
    r = np.arange(-K, K + 1)
    if phi.coeffs is not None:
        return r, lambda k: phi.coeffs(k)
    table = fourier_coeffs(phi, K)
    return r, lambda k: table.values[tuple((np.asarray(k) + K).T)]


def _hat_cutoff_W(psi: CutoffPsi, N: float) -> float:
    """Half-width in w beyond which |N hat psi1(N w)| < 1e-17 of its peak.

    The bump transform obeys |b(x)| <= C x^-(r+1) with
    C = Gamma(r + 3/2) 2^(r+1) / sqrt(pi).
    """
    r = psi.r
    C = special.gamma(r + 1.5) * 2.0 ** (r + 1) / math.sqrt(math.pi)
    x = (C / 1e-17) ** (1.0 / (r + 1))
    return x / (N * psi.width)


def _harmonic_direct_1d(psi, N, b, gamma, a, quad):
    lo, hi = -psi.support * N, psi.support * N
    br = np.array([lo, -psi.plateau * N, psi.plateau * N, hi])
    fm = float(np.max(np.abs(b))) + 2.0 * gamma * (hi + abs(a))
    z, w = composite_rule(oscillatory_breaks(br, lambda u, v: fm, quad), quad.order)
    amp = (w * psi.profile(z / N) * np.exp(-1j * gamma * (z + a) ** 2)).astype(complex)
    return kernels.phase_sum(amp, z[:, None], -np.asarray(b, dtype=float)[:, None], np.zeros(len(b)))


def _fresnel_1d(psi: CutoffPsi, N: float, b: np.ndarray, gamma: float, a: float, quad: QuadratureSpec):
    """int psi1(z/N) exp(i b z) exp(-i gamma (z + a)^2) dz for each b.

    Completing the square with u0 = a - b/(2 gamma) and applying Parseval
    against the transform of exp(-i gamma u^2) gives

        exp(i (b^2/(4 gamma) - a b)) sqrt(pi/(i gamma)) / (2 pi)
            * int N exp(-i w u0) hat psi1(N w) exp(i w^2 / (4 gamma)) dw.

    When gamma is so small that this w-integral would need more panels than
    integrating in z, the harmonic integrals are done in z instead.
    """
    b = np.asarray(b, dtype=float)
    if b.size == 0:
        return np.zeros(0, dtype=complex)
    if gamma == 0:
        return N * psi.hat1(-N * b) * np.exp(0j)
    u0 = a - b / (2.0 * gamma)
    W = _hat_cutoff_W(psi, N)
    # hat psi1(N w) itself oscillates at rate up to N * support
    freq = float(np.max(np.abs(u0))) + W / (2.0 * gamma) + N * psi.support
    cost_w = 2 * W * freq
    cost_z = 2 * psi.support * N * (float(np.max(np.abs(b))) + 2.0 * gamma * (psi.support * N + abs(a)))
    if cost_w > 50 * cost_z:
        return _harmonic_direct_1d(psi, N, b, gamma, a, quad)
    br = oscillatory_breaks(np.linspace(-W, W, 33), lambda lo, hi: freq, quad)
    w, wt = composite_rule(br, quad.order)
    amp = (wt * N * psi.hat1(N * w) * np.exp(1j * w * w / (4.0 * gamma))).astype(complex)
    integral = kernels.phase_sum(amp, w[:, None], u0[:, None], np.zeros(u0.size))
    pref = np.exp(1j * (b * b / (4.0 * gamma) - a * b)) * np.sqrt(np.pi / (1j * gamma)) / (2.0 * np.pi)
    return pref * integral


@dataclass
class PSPResult:
    value: complex
    route: str
    other: complex | None = None
    harmonics_used: int = 0

    @property
    def rel_diff(self) -> float:
        if self.other is None:
            return float("nan")
        return abs(self.value - self.other) / max(abs(self.value), 1e-300)


def _psp_fresnel(phi, psi, N, beta, gamma, a, quad, K, window):
    dim = phi.dim
    r, cf = _harmonics(phi, K)
    if gamma * (psi.support * N + float(np.max(np.abs(a)))) ** 2 < 1e-15:
        gamma = 0.0  # the chirp is 1 to rounding on the support
    # per axis, drop harmonics that are non-stationary by a wide margin on the support
    W = _hat_cutoff_W(psi, N)
    keep_axes, tables = [], []
    for i in range(dim):
        b = beta[i] + 2 * np.pi * r
        if gamma > 0:
            zs = b / (2.0 * gamma) - a[i]
            slope = 2.0 * gamma * np.maximum(np.abs(zs) - psi.support * N, 0.0)
            keep = slope < window * max(W, math.sqrt(gamma))
        else:
            keep = np.ones(r.shape, dtype=bool)
        ks = r[keep]
        keep_axes.append(ks)
        tables.append(_fresnel_1d(psi, N, beta[i] + 2 * np.pi * ks, gamma, a[i], quad))
    mesh = np.meshgrid(*keep_axes, indexing="ij")
    labels = np.stack([m.ravel() for m in mesh], axis=1)
    if labels.size == 0:
        return 0j, 0
    coeff = cf(labels)
    prod = np.ones(labels.shape[0], dtype=complex)
    for i in range(dim):
        idx = np.searchsorted(keep_axes[i], labels[:, i])
        prod *= tables[i][idx]
    return complex(np.sum(coeff * prod)), labels.shape[0]


def _psp_direct(phi, psi, N, beta, gamma, a, quad):
    dim = phi.dim
    axes = []
    for i in range(dim):
        lo, hi = -psi.support * N, psi.support * N
        br = [lo, -psi.plateau * N, psi.plateau * N, hi]
        if phi.breaks:
            ints = np.arange(math.floor(lo), math.ceil(hi) + 1)
            br += [float(k + b) for k in ints for b in phi.breaks]
        br = np.unique(np.clip(br, lo, hi))

        def fmax(u, v, i=i):
            return abs(beta[i]) + 2 * np.pi * phi.bandwidth + 2.0 * gamma * (max(abs(u), abs(v)) + abs(a[i]))

        axes.append(composite_rule(oscillatory_breaks(br, fmax, quad), quad.order))
    z, w = tensor_rule(axes)
    total = 0j
    step = 1 << 16
    for lo in range(0, z.shape[0], step):
        zc, wc = z[lo : lo + step], w[lo : lo + step]
        za = zc + a
        ph = zc @ beta - gamma * np.sum(za * za, axis=1)
        total += complex(np.sum(wc * psi(zc / N) * phi(zc) * np.exp(1j * ph)))
    return total


def psp_integral(
    phi: PeriodicAmplitude,
    psi: CutoffPsi | None,
    N: float,
    beta,
    gamma: float,
    a,
    quad: QuadratureSpec | None = None,
    route: str = "fresnel",
    K: int | None = None,
    window: float = 4.0,
) -> PSPResult:
    """The periodic stationary phase integral by the requested route.

    ``route`` is ``"fresnel"``, ``"direct"`` or ``"both"`` (fresnel value,
    direct value in ``other``).  ``K`` caps the harmonics (default: the
    amplitude's bandwidth); in the Fresnel route a harmonic is skipped when
    the smallest phase derivative over the support exceeds ``window`` times
    both the cutoff's negligible-transform frequency and sqrt(gamma), so the
    harmonic is non-stationary well beyond the cutoff's resolution.
    """
    quad = quad or QuadratureSpec()
    dim = phi.dim
    psi = psi or default_cutoff(dim)
    if gamma < 0 or N < 1:
        raise ValueError("need gamma >= 0 and N >= 1")
    beta = np.broadcast_to(np.asarray(beta, dtype=float), (dim,)).copy()
    a = np.broadcast_to(np.asarray(a, dtype=float), (dim,)).copy()
    K = max(int(K if K is not None else phi.bandwidth), 1)
    if route == "direct":
        return PSPResult(_psp_direct(phi, psi, N, beta, gamma, a, quad), "direct")
    val, used = _psp_fresnel(phi, psi, N, beta, gamma, a, quad, K, window)
    if route == "fresnel":
        return PSPResult(val, "fresnel", None, used)
    if route == "both":
        return PSPResult(val, "both", _psp_direct(phi, psi, N, beta, gamma, a, quad), used)
    raise ValueError(f"unknown route {route!r}")


def psp_bound(gamma: float, N: float, dim: int, phi_norm: float = 1.0) -> float:
    """min{gamma^(-dim/2) ||phi||, N^dim}."""
    if gamma == 0:
        return float(N**dim)
    return float(min(gamma ** (-dim / 2.0) * phi_norm, N**dim))


# ---------------------------------------------------------------------------
# scans


def rapid_decay_scan(
    phi: PeriodicAmplitude,
    psi: CutoffPsi | None,
    N: float,
    gamma: float,
    a_values,
    tau: int,
    quad: QuadratureSpec | None = None,
    beta=0.0,
) -> dict:
    """|I(a)| against the envelope (1/(2 gamma |a|))^(tau-1) min{gamma^(-dim/2)||phi||_{C^(tau-1)}, N^dim}."""
    a_values = np.asarray(a_values, dtype=float)
    if np.any(np.abs(a_values) < 4 * N):
        raise ValueError("rapid decay scan needs |a| >= 4N")
    dim = phi.dim
    norm = phi.c_tau_norm(tau - 1)
    rows = []
    for a in a_values:
        av = np.full(dim, a / math.sqrt(dim))
        res = psp_integral(phi, psi, N, beta, gamma, av, quad)
        env = (1.0 / (2.0 * gamma * abs(a))) ** (tau - 1) * psp_bound(gamma, N, dim, norm)
        rows.append({"a": float(a), "value": res.value, "bound": env, "ratio": abs(res.value) / env})
    try:
        fit = fit_slope([r["a"] for r in rows], [abs(r["value"]) for r in rows])
    except ValueError:  # all values at round-off zero, e.g. a constant amplitude
        fit = None
    return {"rows": rows, "fit": fit, "phi_norm": norm}


def improved_scan(
    phi: PeriodicAmplitude,
    psi: CutoffPsi | None,
    N: float,
    gamma: float,
    a,
    theta: float,
    delta: float,
    s: int,
    tau_prime: float,
    quad: QuadratureSpec | None = None,
    moment_scale: float = 1.0,
) -> dict:
    """|I| against the geometric mean of the moment and stationary-phase bounds.

    The moment bound is moment_scale * (2^(-delta s))^tau'; the stationary
    phase bound is min{gamma^(-dim/2)||phi||, N^dim} scaled by the same
    amplitude size.  theta = 0 gives the plain stationary-phase bound and
    theta = 1 the moment bound.
    """
    if not 0 <= theta <= 1:
        raise ValueError("theta must lie in [0, 1]")
    dim = phi.dim
    res = psp_integral(phi, psi, N, 0.0, gamma, a, quad)
    norm = phi.c_tau_norm(0)
    psp = psp_bound(gamma, N, dim, norm)
    mom = moment_scale * (2.0 ** (-delta * s)) ** tau_prime
    comb = mom**theta * psp ** (1.0 - theta)
    return {
        "s": s,
        "value": res.value,
        "psp_bound": psp,
        "moment_bound": mom,
        "bound": comb,
        "ratio": abs(res.value) / comb,
        "theta": theta,
    }
