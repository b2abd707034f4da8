"""Modulated coefficient channels on the lattice of a shifted grid.

Conventions used throughout the package:

* At scale s (N = 2^s, h = 2^-s) the grid with offset nu in [0, h)^dim has
  lattice-labelled cubes with centres c_k = h k + nu - h/2, k in {-N..N}^dim.
* Channel m = 2^-s k_m has angular frequency omega_m = 2 pi 2^(2s) m / (2N+1)
  per axis, and phi^m_k = exp(i omega_m . c_k) / (2N+1)^(dim/2).  On the
  2N+1 labels this is a unitary discrete Fourier basis.
* A_m(nu) = <a(nu), phi^m> where a(nu) are the dual frame coefficients of f
  on the grid with offset nu.  Shifting nu by h relabels the cubes by one
  and leaves A_m unchanged, so A_m is h-periodic in every coordinate.
"""

from __future__ import annotations

import csv
import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .frame import CoeffSeq, Frame, FrameConfig
from .grid import Cube, Grid, cubes_at_scale
from .wavelet import AlpertFamily, Expansion, Mollifier

__all__ = [
    "ModBasis",
    "CutoffPsi",
    "ChannelModel",
    "bump_hat",
    "decompose",
    "multiplier_M_psi",
    "build_g_m",
    "A_m",
    "random_f",
    "modulated_f",
]


@dataclass(frozen=True)
class ModBasis:
    """Discrete Fourier basis on the lattice labels {-N..N}^dim at scale s.

    ``offset`` is the position of label 0 relative to h*0, i.e. lattice point
    k sits at h*k + offset.  With ``offset = nu - h/2`` these are the cube
    centres of the grid with offset nu.
    """

    s: int
    dim: int = 1
    offset: tuple = None

    def __post_init__(self):
        if self.s < 0 or self.dim < 1:
            raise ValueError("need s >= 0 and dim >= 1")
        off = (0.0,) * self.dim if self.offset is None else tuple(float(o) for o in np.atleast_1d(self.offset))
        if len(off) != self.dim:
            raise ValueError("offset length must equal dim")
        object.__setattr__(self, "offset", off)

    @property
    def N(self) -> int:
        return 2**self.s

    @property
    def h(self) -> float:
        return 2.0**-self.s

    @property
    def n_axis(self) -> int:
        return 2 * self.N + 1

    @property
    def size(self) -> int:
        return self.n_axis**self.dim

    @property
    def labels(self) -> np.ndarray:
        """Integer labels, last axis fastest; also the channel labels k_m."""
        r = np.arange(-self.N, self.N + 1)
        mesh = np.meshgrid(*([r] * self.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def omega(self, km) -> np.ndarray:
        return 2.0 * np.pi * self.N * np.asarray(km, dtype=float) / self.n_axis

    def points(self) -> np.ndarray:
        return self.h * self.labels + np.asarray(self.offset)

    def _axis_matrix(self, axis: int) -> np.ndarray:
        r = np.arange(-self.N, self.N + 1)
        w = self.omega(r)
        pos = self.h * r + self.offset[axis]
        return np.exp(1j * np.outer(w, pos)) / math.sqrt(self.n_axis)  # [m, k]

    def phi(self, km) -> np.ndarray:
        km = np.atleast_1d(km)
        out = np.ones(1, dtype=complex)
        for i in range(self.dim):
            row = self._axis_matrix(i)[int(km[i]) + self.N]
            out = np.multiply.outer(out, row).ravel()
        return out

    def _apply(self, a, conj: bool) -> np.ndarray:
        a = np.asarray(a, dtype=complex)
        if a.shape[0] != self.size:
            raise ValueError(f"expected {self.size} lattice entries, got {a.shape[0]}")
        rest = a.shape[1:]
        t = a.reshape((self.n_axis,) * self.dim + rest)
        for i in range(self.dim):
            F = self._axis_matrix(i)
            F = F.conj() if conj else F.T
            t = np.moveaxis(np.tensordot(F, t, axes=([1], [i])), 0, i)
        return t.reshape((self.size,) + rest)

    def decompose(self, a) -> np.ndarray:
        """<a, phi^m> for every channel (rows follow :attr:`labels`)."""
        return self._apply(a, conj=True)

    def reconstruct(self, coeffs) -> np.ndarray:
        """sum_m coeffs_m phi^m."""
        return self._apply(coeffs, conj=False)

    def to_csv(self, coeffs, path) -> None:
        coeffs = np.asarray(coeffs)
        cols = coeffs.reshape(self.size, -1)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            head = [f"m_{i}" for i in range(self.dim)]
            if cols.shape[1] == 1:
                w.writerow(head + ["re", "im"])
            else:
                w.writerow(head + ["member", "re", "im"])
            for km, row in zip(self.labels, cols):
                m = [repr(float(k) * self.h) for k in km]
                for a, v in enumerate(row):
                    extra = [] if cols.shape[1] == 1 else [a]
                    w.writerow(m + extra + [repr(float(v.real)), repr(float(v.imag))])


def decompose(a, basis: ModBasis) -> np.ndarray:
    return basis.decompose(a)


# ---------------------------------------------------------------------------
# cutoff


def _bump_moments(r: int, n: int) -> np.ndarray:
    k = np.arange(n)
    return special.beta(k + 0.5, r + 1.0) / special.beta(0.5, r + 1.0)


def bump_hat(omega, r: int) -> np.ndarray:
    """Fourier transform of the unit-mass bump (1 - u^2)^r on [-1, 1]."""
    w = np.abs(np.asarray(omega, dtype=float))
    out = np.empty_like(w)
    small = w < 0.5
    if small.any():
        mom = _bump_moments(r, 14)
        ws = w[small]
        # Taylor series in the even moments; terms decay like w^{2k}/(2k)!
        tot = np.zeros_like(ws)
        fact = 1.0
        for k in range(14):
            if k:
                fact *= (2 * k - 1) * (2 * k)
            tot += (-1) ** k * mom[k] * ws ** (2 * k) / fact
        out[small] = tot
    big = ~small
    if big.any():
        wb = w[big]
        c = special.gamma(r + 1.5) * 2.0 ** (r + 1) / math.sqrt(math.pi)
        out[big] = c * special.spherical_jn(r, wb) / wb**r
    return out


@dataclass(frozen=True)
class CutoffPsi:
    """Tensor cutoff equal to 1 on the plateau box and 0 off the support box.

    Per axis the profile is the indicator of [-(p+S)/2, (p+S)/2] convolved with
    the unit-mass bump (1 - u^2)^r of half width (S-p)/2, where p and S are
    the plateau and support half widths.  It is a piecewise polynomial of
    degree 2r+1 in class C^r.
    """

    dim: int = 1
    center: tuple = None
    plateau: float = 0.25
    support: float = 1.0
    r: int = 4

    def __post_init__(self):
        c = (0.0,) * self.dim if self.center is None else tuple(float(x) for x in np.atleast_1d(self.center))
        if len(c) != self.dim:
            raise ValueError("center length must equal dim")
        object.__setattr__(self, "center", c)
        if not 0 <= self.plateau < self.support:
            raise ValueError("need 0 <= plateau < support")
        if self.r < 1:
            raise ValueError("r must be a positive integer")

    @classmethod
    def for_region(cls, U: Cube, r: int = 4) -> "CutoffPsi":
        """Plateau on the quarter-size concentric cube, support U."""
        half = 0.5 * U.side
        return cls(U.dim, U.center, 0.25 * half, half, r)

    @property
    def mid(self) -> float:
        return 0.5 * (self.plateau + self.support)

    @property
    def width(self) -> float:
        return 0.5 * (self.support - self.plateau)

    def profile(self, t) -> np.ndarray:
        t = np.abs(np.asarray(t, dtype=float))
        u = np.clip((self.mid - t) / self.width, -1.0, 1.0)
        return special.betainc(self.r + 1.0, self.r + 1.0, 0.5 * (u + 1.0))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.dim == 1 and x.ndim <= 1:
            x = x.reshape(-1, 1)
        x = np.atleast_2d(x)
        out = np.ones(x.shape[0])
        for i in range(self.dim):
            out *= self.profile(x[:, i] - self.center[i])
        return out

    def hat1(self, omega) -> np.ndarray:
        """1D Fourier transform of the profile (centred at 0), e^{-i omega t} convention."""
        w = np.asarray(omega, dtype=float)
        box = 2.0 * self.mid * np.sinc(self.mid * w / np.pi)
        return box * bump_hat(self.width * w, self.r)

    def axis_breaks(self, i: int) -> np.ndarray:
        c = self.center[i]
        return np.array([c - self.support, c - self.plateau, c + self.plateau, c + self.support])


def multiplier_M_psi(b: CoeffSeq, psi: CutoffPsi) -> CoeffSeq:
    """Multiply each cube's coefficients by psi at the cube centre."""
    centers = np.array([Q.center for Q in b.cubes])
    w = psi(centers)
    vals = (b.by_member() * w[:, None]).ravel()
    return CoeffSeq(b.s, b.cubes, b.n_members, vals)


# ---------------------------------------------------------------------------
# random inputs


def random_f(
    family: AlpertFamily, moll: Mollifier | None, eta: float, s: int, rng,
    box: tuple = (-0.5, 0.5), unimodular: bool = False,
):
    """f = sum f(J) h_J over standard-grid cubes at scale s inside ``box``.

    Coefficients are i.i.d. complex standard normal (or unit modulus with
    random phases).  Returns the expansion and its coefficient sequence.
    """
    dim = family.dim
    lo, hi = box
    U = Cube(((lo + hi) / 2,) * dim, hi - lo)
    cubes = [Q for Q in cubes_at_scale(Grid.standard(dim), s, U) if np.all(Q.lower >= lo) and np.all(Q.upper <= hi)]
    cfg = FrameConfig(family, moll, eta, (s, s), region=U)
    n = len(cubes) * len(family)
    if unimodular:
        vals = np.exp(2j * np.pi * rng.random(n))
    else:
        vals = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)
    ws = [cfg.wavelet(a, Q) for Q in cubes for a in range(len(family))]
    return Expansion(ws, vals), CoeffSeq(s, cubes, len(family), vals)


def modulated_f(
    family: AlpertFamily, moll: Mollifier | None, eta: float, s: int, omega,
    member: int = 0, box: tuple = (-0.5, 0.5),
):
    """f = sum_J exp(i omega . c_J) h_J for one family member over the cubes of ``box``.

    Unimodular coefficients aligned with a single channel frequency; used as
    the extremal input for uniform channel bounds.
    """
    dim = family.dim
    lo, hi = box
    U = Cube(((lo + hi) / 2,) * dim, hi - lo)
    cubes = [Q for Q in cubes_at_scale(Grid.standard(dim), s, U) if np.all(Q.lower >= lo) and np.all(Q.upper <= hi)]
    cfg = FrameConfig(family, moll, eta, (s, s), region=U)
    c = np.array([Q.center for Q in cubes])
    vals = np.exp(1j * (c @ np.broadcast_to(np.asarray(omega, dtype=float), (dim,))))
    ws = [cfg.wavelet(member, Q) for Q in cubes]
    return Expansion(ws, vals), CoeffSeq(s, cubes, 1, vals)


# ---------------------------------------------------------------------------
# channel model: dual coefficients on every shifted grid


class ChannelModel:
    """Dual coefficients of a fixed f on lattice-labelled shifted grids.

    The frame at offset nu holds the (2N+1+2*margin)^dim lattice-labelled
    cubes; its Gram matrix does not depend on nu.  Channel values use the
    central (2N+1)^dim labels, i.e. the cubes meeting [-1, 1)^dim.
    """

    def __init__(
        self,
        family: AlpertFamily,
        moll: Mollifier | None,
        eta: float,
        s: int,
        f: Expansion,
        psi: CutoffPsi | None = None,
        margin: int = 1,
        normalization: str = "exact",
        neumann_tol: float = 1e-12,
    ):
        if normalization not in ("exact", "dyadic"):
            raise ValueError("normalization must be 'exact' or 'dyadic'")
        self.family, self.moll, self.eta, self.s = family, moll, float(eta), int(s)
        self.dim = family.dim
        self.f = f
        self.psi = psi or CutoffPsi(self.dim, r=(moll.r if moll is not None else family.kappa + 2))
        self.margin = int(margin)
        self.normalization = normalization
        self.neumann_tol = neumann_tol
        self.N = 2**self.s
        self.h = 2.0**-self.s
        self._cache: dict = {}
        self._lock = threading.Lock()
        n_all = 2 * (self.N + self.margin) + 1
        r = np.arange(n_all) - (self.N + self.margin)
        mesh = np.meshgrid(*([r] * self.dim), indexing="ij")
        lab = np.stack([m.ravel() for m in mesh], axis=1)
        self._central = np.flatnonzero(np.all(np.abs(lab) <= self.N, axis=1))

    @property
    def n_members(self) -> int:
        return len(self.family)

    def reduce(self, v) -> np.ndarray:
        """Offset nu in [0, h)^dim of the grid with shift v (round-to-nearest lattice translate)."""
        v = np.atleast_1d(np.asarray(v, dtype=float))
        k = np.floor(v / self.h + 1e-12)
        nu = v - k * self.h
        nu[nu < 0] = 0.0
        nu[nu >= self.h] -= self.h
        return nu

    def config(self, nu) -> FrameConfig:
        return FrameConfig(
            self.family, self.moll, self.eta, (self.s, self.s), Grid(self.dim, tuple(nu)),
            None, self.margin, self.neumann_tol, 500,
        )

    def frame(self, nu) -> Frame:
        return Frame(self.config(self.reduce(nu)))

    def basis(self, nu) -> ModBasis:
        nu = self.reduce(nu)
        return ModBasis(self.s, self.dim, tuple(nu - 0.5 * self.h))

    def coefficients(self, nu) -> np.ndarray:
        """Dual coefficients on the central cubes, shape ((2N+1)^dim, members)."""
        nu = self.reduce(nu)
        key = tuple(np.round(nu / self.h * 2.0**40).astype(np.int64))
        val = self._cache.get(key)
        if val is None:
            fr = self.frame(nu)
            res = fr.solve(fr.analysis(self.f))
            val = res.coeffs.reshape(-1, self.n_members)[self._central]
            with self._lock:
                val = self._cache.setdefault(key, val)
        return val

    def channel_norm(self) -> float:
        if self.normalization == "exact":
            return 1.0
        return ((2 * self.N + 1) / 2.0 ** self.s) ** (self.dim / 2.0)

    def channels(self, nu) -> np.ndarray:
        """A_m(nu) for every channel m (rows) and member (columns)."""
        return self.basis(nu).decompose(self.coefficients(nu))

    def centers(self, nu) -> np.ndarray:
        return self.basis(nu).points()

    def qf(self, nu, with_psi: bool = False) -> Expansion:
        """Q f (or M_psi Q f) on the grid with offset nu, over the central cubes."""
        nu = self.reduce(nu)
        c = self.coefficients(nu)
        centers = self.centers(nu)
        if with_psi:
            c = c * self.psi(centers)[:, None]
        cfg = self.config(nu)
        ws = [cfg.wavelet(a, Cube(ctr, self.h)) for ctr in centers for a in range(self.n_members)]
        return Expansion(ws, c.ravel())


def build_g_m(model: ChannelModel, nu, km, member: int) -> Expansion:
    """g_m = sum_J psi(c_J) phi^m_J h_J for one family member on the grid with offset nu.

    With ``normalization="dyadic"`` the factor (2N+1)^(-dim/2) is replaced
    by 2^(-s dim/2).
    """
    nu = model.reduce(nu)
    B = model.basis(nu)
    centers = B.points()
    coeff = model.psi(centers) * B.phi(km) * model.channel_norm()
    cfg = model.config(nu)
    ws = [cfg.wavelet(member, Cube(c, model.h)) for c in centers]
    return Expansion(ws, coeff)


def A_m(v, model: ChannelModel, km) -> np.ndarray:
    """A_m at grid shift v for every member; v is reduced to its offset nu."""
    idx = _channel_index(model, km)
    return model.channels(v)[idx]


def _channel_index(model: ChannelModel, km) -> int:
    km = np.atleast_1d(np.asarray(km, dtype=int))
    n = 2 * model.N + 1
    idx = 0
    for k in km:
        if abs(k) > model.N:
            raise ValueError("channel label outside {-N..N}")
        idx = idx * n + int(k) + model.N
    return idx
