"""Alpert multiwavelets, the moment-killing mollifier and smooth Alpert wavelets.

Every wavelet is stored on the reference cube Q0 = [0, 1)^dim as a tensor
piecewise polynomial (Legendre coefficients per cell of a product of
breakpoint grids) and placed on a cube Q by the affine covariance

    h_Q(x) = side(Q)^(-dim/2) h_Q0((x - c_Q) / side(Q) + c_Q0).

The smooth wavelet h * phi_eta is computed exactly: both the Alpert piece
indicators times monomials and the mollifier terms are separable, so the
convolution is a finite sum of products of exact 1D convolutions, each a
piecewise polynomial in its variable.
"""

from __future__ import annotations

import itertools
import json
import math
import threading
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from numpy.polynomial import legendre as _leg
from scipy import special

from . import kernels
from .grid import Cube
from .quadrature import QuadratureError, QuadratureSpec, gauss_legendre, composite_rule, tensor_rule

__all__ = [
    "multi_indices",
    "TensorPP",
    "PiecewisePolynomial",
    "AlpertFamily",
    "Mollifier",
    "CubeWavelet",
    "BoxFunction",
    "Expansion",
    "alpert_dimension",
    "build_alpert_family",
    "build_mollifier",
    "plain_wavelet",
    "smooth_wavelet",
    "moment",
    "inner_product",
]

REF_CENTER = 0.5


@lru_cache(maxsize=None)
def multi_indices(dim: int, max_degree: int) -> tuple:
    """Multi-indices of total degree <= max_degree, by degree then lexicographic."""
    out = []
    for deg in range(max_degree + 1):
        for alpha in itertools.product(range(deg + 1), repeat=dim):
            if sum(alpha) == deg:
                out.append(alpha)
    return tuple(sorted(out, key=lambda a: (sum(a), tuple(-c for c in a))))


def _as_points(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if dim == 1 and x.ndim <= 1:
        return x.reshape(-1, 1)
    return np.atleast_2d(x)


# ---------------------------------------------------------------------------
# tensor piecewise polynomials


@dataclass(frozen=True, eq=False)
class TensorPP:
    """Piecewise polynomial on a tensor grid of cells, Legendre basis per cell.

    ``coeffs`` has shape ``(*n_segments, *(degree + 1,) * dim)``; on each
    cell the local coordinate of axis i runs over [-1, 1].  The function is
    zero outside the outermost breakpoints.
    """

    breaks: tuple
    coeffs: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.breaks)

    @property
    def degree(self) -> int:
        return self.coeffs.shape[-1] - 1

    @property
    def lower(self) -> np.ndarray:
        return np.array([b[0] for b in self.breaks])

    @property
    def upper(self) -> np.ndarray:
        return np.array([b[-1] for b in self.breaks])

    def __call__(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        if self.dim == 1:
            return kernels.legendre_pp_eval(self.breaks[0], self.coeffs, pts[:, 0])
        out = np.zeros(pts.shape[0])
        inside = np.all((pts >= self.lower) & (pts < self.upper), axis=1)
        if not inside.any():
            return out
        p = pts[inside]
        segs, bases = [], []
        for i, br in enumerate(self.breaks):
            seg = np.searchsorted(br, p[:, i], side="right") - 1
            a, b = br[seg], br[seg + 1]
            t = (2.0 * p[:, i] - a - b) / (b - a)
            segs.append(seg)
            bases.append(_leg.legvander(t, self.degree))
        c = self.coeffs[tuple(segs)]
        for B in reversed(bases):
            c = np.einsum("p...k,pk->p...", c, B)
        out[inside] = c
        return out

    @classmethod
    def from_values(cls, breaks, degree: int, values: np.ndarray) -> "TensorPP":
        """Build from values at per-cell Gauss nodes (``degree + 1`` per axis).

        ``values`` has shape ``(*n_nodes_total_per_axis,)`` where each axis
        concatenates the nodes of its segments in order.
        """
        dim = len(breaks)
        m = degree + 1
        t, _ = gauss_legendre(m)
        inv = np.linalg.inv(_leg.legvander(t, degree))  # values -> coefficients
        nseg = [len(b) - 1 for b in breaks]
        shape = []
        for n in nseg:
            shape += [n, m]
        v = values.reshape(shape)
        # move to (seg_0, ..., seg_{d-1}, node_0, ..., node_{d-1})
        perm = [2 * i for i in range(dim)] + [2 * i + 1 for i in range(dim)]
        v = np.transpose(v, perm)
        for i in range(dim):
            v = np.moveaxis(np.tensordot(v, inv, axes=([dim + i], [1])), -1, dim + i)
        return cls(tuple(np.asarray(b, dtype=float) for b in breaks), np.ascontiguousarray(v))

    @staticmethod
    def cell_nodes(breaks, degree: int) -> list:
        """Per-axis concatenated Gauss nodes used by :meth:`from_values`."""
        t, _ = gauss_legendre(degree + 1)
        out = []
        for br in breaks:
            br = np.asarray(br, dtype=float)
            a, b = br[:-1], br[1:]
            out.append((0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * t[None, :]).ravel())
        return out

    def key(self) -> tuple:
        return (
            tuple(b.tobytes() for b in self.breaks),
            self.coeffs.shape,
            self.coeffs.tobytes(),
        )


# ---------------------------------------------------------------------------
# Alpert family


def _monomial_values(x: np.ndarray, alphas) -> np.ndarray:
    """Matrix of x^alpha, rows are points and columns multi-indices."""
    return np.stack([np.prod(x ** np.asarray(a), axis=1) for a in alphas], axis=1)


@dataclass(frozen=True, eq=False)
class PiecewisePolynomial:
    """Polynomial of total degree < kappa on each child of Q0.

    ``pieces[c, j]`` is the coefficient of ``x**alphas[j]`` (global
    coordinates on Q0 = [0,1)^dim) on child ``c``; children are ordered as
    in :meth:`Cube.children`.
    """

    dim: int
    kappa: int
    pieces: np.ndarray

    @property
    def alphas(self) -> tuple:
        return multi_indices(self.dim, self.kappa - 1)

    @property
    def support_cube(self) -> Cube:
        return Cube((REF_CENTER,) * self.dim, 1.0)

    def __call__(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        out = np.zeros(pts.shape[0])
        inside = np.all((pts >= 0.0) & (pts < 1.0), axis=1)
        p = pts[inside]
        child = np.zeros(p.shape[0], dtype=int)
        for i in range(self.dim):
            child = 2 * child + (p[:, i] >= 0.5)
        mono = _monomial_values(p, self.alphas)
        out[inside] = np.einsum("pj,pj->p", mono, self.pieces[child])
        return out

    def to_tensor(self) -> TensorPP:
        breaks = [np.array([0.0, 0.5, 1.0])] * self.dim
        deg = max(self.kappa - 1, 0)
        axes = TensorPP.cell_nodes(breaks, deg)
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        vals = self(pts).reshape([a.size for a in axes])
        return TensorPP.from_values(breaks, deg, vals)


@dataclass(frozen=True, eq=False)
class AlpertFamily:
    """Orthonormal Alpert wavelets on Q0 with moments of order < kappa vanishing."""

    dim: int
    kappa: int
    members: tuple
    condition: float = float("nan")

    def __len__(self) -> int:
        return len(self.members)

    def key(self) -> tuple:
        return ("alpert", self.dim, self.kappa, tuple(m.pieces.tobytes() for m in self.members))

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": "alpert-family",
                "dim": self.dim,
                "kappa": self.kappa,
                "condition": self.condition,
                "members": [m.pieces.tolist() for m in self.members],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "AlpertFamily":
        doc = json.loads(text)
        if doc.get("kind") != "alpert-family":
            raise ValueError("not an Alpert family document")
        members = tuple(
            PiecewisePolynomial(doc["dim"], doc["kappa"], np.asarray(p, dtype=float))
            for p in doc["members"]
        )
        return cls(doc["dim"], doc["kappa"], members, doc["condition"])


def _child_moments(dim: int, exps: np.ndarray) -> np.ndarray:
    """Integral of x^e over each child of Q0; exps has shape (..., dim)."""
    out = []
    for bits in itertools.product((0, 1), repeat=dim):
        lo = 0.5 * np.asarray(bits, dtype=float)
        hi = lo + 0.5
        e = exps + 1
        out.append(np.prod((hi**e - lo**e) / e, axis=-1))
    return np.stack(out, axis=0)


def _moment_system(dim: int, kappa: int, constraint_alphas):
    alphas = np.asarray(multi_indices(dim, kappa - 1)).reshape(-1, dim)
    nc = 2**dim
    npoly = alphas.shape[0]
    # Gram of the basis 1_child * x^alpha (block diagonal over children)
    gram = np.zeros((nc * npoly, nc * npoly))
    mom = _child_moments(dim, alphas[:, None, :] + alphas[None, :, :])
    for c in range(nc):
        gram[c * npoly : (c + 1) * npoly, c * npoly : (c + 1) * npoly] = mom[c]
    cons = np.asarray(constraint_alphas).reshape(-1, dim)
    cm = _child_moments(dim, cons[:, None, :] + alphas[None, :, :])  # (nc, ncons, npoly)
    M = np.concatenate([cm[c] for c in range(nc)], axis=1)
    return gram, M


def alpert_dimension(dim: int, kappa: int, constraints: str = "full") -> int:
    """Dimension of the Alpert space under the full or pure-power moment set.

    ``"full"`` imposes every monomial of total degree < kappa; ``"pure"``
    imposes only 1 and the pure powers x_i^l, l < kappa.
    """
    if constraints == "full":
        cons = multi_indices(dim, kappa - 1)
    elif constraints == "pure":
        cons = [(0,) * dim]
        for i in range(dim):
            for l in range(1, kappa):
                e = [0] * dim
                e[i] = l
                cons.append(tuple(e))
    else:
        raise ValueError(f"unknown constraint set {constraints!r}")
    gram, M = _moment_system(dim, kappa, cons)
    return gram.shape[0] - int(np.linalg.matrix_rank(M, tol=1e-10 * np.abs(M).max()))


def _mgs(vectors, gram, keep_tol=1e-8):
    """Modified Gram-Schmidt in the gram inner product, two passes per vector."""
    basis = []
    for v in vectors:
        w = v.copy()
        n0 = math.sqrt(max(w @ gram @ w, 0.0))
        if n0 == 0.0:
            continue
        for _ in range(2):
            for b in basis:
                w = w - (b @ gram @ w) * b
        n = math.sqrt(max(w @ gram @ w, 0.0))
        if n > keep_tol * n0:
            basis.append(w / n)
    return basis


def build_alpert_family(dim: int, kappa: int) -> AlpertFamily:
    """Orthonormal basis of the Alpert space on Q0.

    Candidates 1_child * x^alpha (children, then monomials, in canonical
    order) are mapped into the null space of the moment constraints and
    orthonormalised; the first clearly nonzero coefficient of each member
    is made positive.
    """
    if dim < 1 or kappa < 1:
        raise ValueError("need dim >= 1 and kappa >= 1")
    alphas = multi_indices(dim, kappa - 1)
    gram, M = _moment_system(dim, kappa, alphas)
    # L2-orthogonal projector onto the constraint null space
    npoly = len(alphas)
    B = np.concatenate([np.eye(npoly)] * 2**dim, axis=0)  # global monomials
    small = B.T @ gram @ B
    cond = float(np.linalg.cond(small))
    if not np.isfinite(cond) or cond > 1e13:
        raise ValueError(f"moment system numerically rank deficient (condition {cond:.3e})")
    proj = np.eye(gram.shape[0]) - B @ np.linalg.solve(small, B.T @ gram)
    expected = (2**dim - 1) * npoly
    cands = [proj @ e for e in np.eye(gram.shape[0])]
    basis = _mgs(cands, gram)
    if len(basis) != expected:
        raise ValueError(
            f"constructed {len(basis)} members, expected {expected} (condition {cond:.3e})"
        )
    members = []
    for b in basis:
        pieces = b.reshape(2**dim, npoly)
        flat = pieces.ravel()
        j = np.flatnonzero(np.abs(flat) > 1e-10 * np.abs(flat).max())[0]
        if flat[j] < 0:
            pieces = -pieces
        pieces = np.where(np.abs(pieces) < 1e-14 * np.abs(pieces).max(), 0.0, pieces)
        members.append(PiecewisePolynomial(dim, kappa, np.ascontiguousarray(pieces)))
    return AlpertFamily(dim, kappa, tuple(members), cond)


# ---------------------------------------------------------------------------
# mollifier


def _weight_moment_1d(n: int, r: int) -> float:
    """Integral of x^n (1 - x^2)^r over [-1, 1]."""
    if n % 2:
        return 0.0
    return float(special.beta((n + 1) / 2.0, r + 1.0))


@dataclass(frozen=True, eq=False)
class Mollifier:
    """phi(x) = q(x) prod_i (1 - x_i^2)_+^r with unit mass and killed moments."""

    dim: int
    kappa: int
    r: int
    coeffs: np.ndarray  # q coefficients over multi_indices(dim, kappa - 1)
    condition: float = float("nan")

    @property
    def alphas(self) -> tuple:
        return multi_indices(self.dim, self.kappa - 1)

    def q(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        return _monomial_values(pts, self.alphas) @ self.coeffs

    def __call__(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        w = np.prod(np.clip(1.0 - pts**2, 0.0, None) ** self.r, axis=1)
        return self.q(pts) * w

    def key(self) -> tuple:
        return ("mollifier", self.dim, self.kappa, self.r, self.coeffs.tobytes())

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": "mollifier",
                "dim": self.dim,
                "kappa": self.kappa,
                "r": self.r,
                "condition": self.condition,
                "coeffs": self.coeffs.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "Mollifier":
        doc = json.loads(text)
        if doc.get("kind") != "mollifier":
            raise ValueError("not a mollifier document")
        return cls(doc["dim"], doc["kappa"], doc["r"], np.asarray(doc["coeffs"], float), doc["condition"])


def build_mollifier(dim: int, kappa: int, r: int | None = None) -> Mollifier:
    """Solve the weighted moment system M c = e_0 for the polynomial factor q."""
    if kappa < 1:
        raise ValueError("kappa must be at least 1")
    r = kappa + 2 if r is None else int(r)
    if r < 1:
        raise ValueError("smoothness r must be a positive integer")
    if r < kappa:
        warnings.warn(f"r={r} < kappa={kappa}: moment matrix may be poorly conditioned")
    alphas = np.asarray(multi_indices(dim, kappa - 1)).reshape(-1, dim)
    n = alphas.shape[0]
    M = np.ones((n, n))
    for i in range(dim):
        e = alphas[:, None, i] + alphas[None, :, i]
        M *= np.vectorize(lambda k: _weight_moment_1d(int(k), r))(e)
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > 1e13:
        raise ValueError(f"mollifier moment matrix ill conditioned (condition {cond:.3e})")
    rhs = np.zeros(n)
    rhs[0] = 1.0
    return Mollifier(dim, kappa, r, np.linalg.solve(M, rhs), cond)


# ---------------------------------------------------------------------------
# exact convolution


def _conv_factor(lo: float, hi: float, alpha: int, gamma: int, r: int, eps: float, x):
    """int_lo^hi t^alpha phi_eps(x - t) dt, phi_eps(u) = (u/eps)^gamma (1-(u/eps)^2)^r / eps."""
    x = np.asarray(x, dtype=float)
    a = np.maximum(lo, x - eps)
    b = np.minimum(hi, x + eps)
    ok = b > a
    n = (alpha + gamma + 2 * r) // 2 + 2
    t0, w0 = gauss_legendre(n)
    half = 0.5 * (b - a)
    t = 0.5 * (a + b)[:, None] + half[:, None] * t0[None, :]
    u = (x[:, None] - t) / eps
    f = t**alpha * u**gamma * np.clip(1.0 - u * u, 0.0, None) ** r / eps
    return np.where(ok, half * (f @ w0), 0.0)


def _smooth_reference(member: PiecewisePolynomial, moll: Mollifier, eta: float) -> TensorPP:
    dim, kappa = member.dim, member.kappa
    if eta == 0.0:
        return member.to_tensor()
    pieces = member.pieces
    alphas = member.alphas
    galphas = moll.alphas
    brk = np.unique(np.array([0.0, 0.5, 1.0])[:, None] + np.array([-eta, eta])[None, :])
    breaks = [brk] * dim
    deg = 2 * (kappa - 1) + 2 * moll.r + 1
    axes = TensorPP.cell_nodes(breaks, deg)
    tables = []
    for i in range(dim):
        tab = {}
        for lo in (0.0, 0.5):
            for a in range(kappa):
                for g in range(moll.kappa):
                    tab[(lo, a, g)] = _conv_factor(lo, lo + 0.5, a, g, moll.r, eta, axes[i])
        tables.append(tab)
    vals = np.zeros([a.size for a in axes])
    for c, bits in enumerate(itertools.product((0, 1), repeat=dim)):
        los = [0.5 * b for b in bits]
        for j, alpha in enumerate(alphas):
            ca = pieces[c, j]
            if ca == 0.0:
                continue
            for k, gam in enumerate(galphas):
                cq = moll.coeffs[k]
                if cq == 0.0:
                    continue
                term = tables[0][(los[0], alpha[0], gam[0])]
                for i in range(1, dim):
                    term = np.multiply.outer(term, tables[i][(los[i], alpha[i], gam[i])])
                vals += ca * cq * term
    return TensorPP.from_values(breaks, deg, vals)


_REF_CACHE: dict = {}
_REF_LOCK = threading.Lock()


def _reference(family: AlpertFamily, a: int, moll: Mollifier | None, eta: float) -> TensorPP:
    key = (family.key(), a, None if moll is None else moll.key(), float(eta))
    ref = _REF_CACHE.get(key)
    if ref is None:
        ref = _smooth_reference(family.members[a], moll, float(eta))
        with _REF_LOCK:
            ref = _REF_CACHE.setdefault(key, ref)
    return ref


# ---------------------------------------------------------------------------
# placed wavelets and generic evaluable functions


@dataclass(frozen=True, eq=False)
class CubeWavelet:
    """A (smooth or plain) Alpert wavelet placed on a cube.

    Plain wavelets have ``eta == 0``.  ``member`` is the family index.
    """

    ref: TensorPP
    cube: Cube
    member: int
    eta: float = 0.0

    @property
    def dim(self) -> int:
        return self.cube.dim

    @property
    def degree(self) -> int:
        return self.ref.degree

    def to_reference(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        return (pts - np.asarray(self.cube.center)) / self.cube.side + REF_CENTER

    def __call__(self, x) -> np.ndarray:
        return self.cube.side ** (-0.5 * self.dim) * self.ref(self.to_reference(x))

    def axis_breaks(self, i: int) -> np.ndarray:
        return (self.ref.breaks[i] - REF_CENTER) * self.cube.side + self.cube.center[i]

    @property
    def lower(self) -> np.ndarray:
        return np.array([self.axis_breaks(i)[0] for i in range(self.dim)])

    @property
    def upper(self) -> np.ndarray:
        return np.array([self.axis_breaks(i)[-1] for i in range(self.dim)])


@dataclass(frozen=True, eq=False)
class BoxFunction:
    """A black-box function with a bounding box and optional breakpoints.

    ``fn`` maps an (P, dim) array to P values.  ``breaks`` lists, per axis,
    points where the function may be nonsmooth; quadrature panels honour
    them.  ``degree`` is the polynomial degree on panels when known.
    """

    fn: object
    lower_: tuple
    upper_: tuple
    breaks: tuple | None = None
    degree: int | None = None

    @property
    def dim(self) -> int:
        return len(self.lower_)

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.lower_, dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.upper_, dtype=float)

    def __call__(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        out = np.zeros(pts.shape[0], dtype=complex)
        inside = np.all((pts >= self.lower) & (pts < self.upper), axis=1)
        if inside.any():
            out[inside] = self.fn(pts[inside])
        return out

    def axis_breaks(self, i: int) -> np.ndarray:
        pts = [self.lower[i], self.upper[i]]
        if self.breaks is not None:
            pts += [float(b) for b in self.breaks[i]]
        b = np.unique(np.asarray(pts))
        return b[(b >= self.lower[i]) & (b <= self.upper[i])]


@dataclass(eq=False)
class Expansion:
    """Finite combination sum_j coeffs[j] * wavelets[j]."""

    wavelets: list
    coeffs: np.ndarray
    _boxes: tuple = field(default=None, repr=False)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (len(self.wavelets),):
            raise ValueError("one coefficient per wavelet required")

    @property
    def dim(self) -> int:
        return self.wavelets[0].dim

    @property
    def degree(self) -> int:
        return max(w.degree for w in self.wavelets)

    @property
    def lower(self) -> np.ndarray:
        return np.min([w.lower for w in self.wavelets], axis=0)

    @property
    def upper(self) -> np.ndarray:
        return np.max([w.upper for w in self.wavelets], axis=0)

    def axis_breaks(self, i: int) -> np.ndarray:
        return np.unique(np.concatenate([w.axis_breaks(i) for w in self.wavelets]))

    def _box_arrays(self):
        if self._boxes is None:
            lo = np.array([w.lower for w in self.wavelets])
            hi = np.array([w.upper for w in self.wavelets])
            self._boxes = (lo, hi)
        return self._boxes

    def __call__(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        out = np.zeros(pts.shape[0], dtype=complex)
        lo, hi = self._box_arrays()
        order = np.argsort(pts[:, 0], kind="stable")
        x0 = pts[order, 0]
        start = np.searchsorted(x0, lo[:, 0], side="left")
        stop = np.searchsorted(x0, hi[:, 0], side="left")
        for j, w in enumerate(self.wavelets):
            c = self.coeffs[j]
            if c == 0 or stop[j] <= start[j]:
                continue
            idx = order[start[j] : stop[j]]
            p = pts[idx]
            if self.dim > 1:
                sel = np.all((p[:, 1:] >= lo[j, 1:]) & (p[:, 1:] < hi[j, 1:]), axis=1)
                idx, p = idx[sel], p[sel]
                if idx.size == 0:
                    continue
            out[idx] += c * w(p)
        return out

    def scaled(self, factor) -> "Expansion":
        return Expansion(self.wavelets, self.coeffs * factor)


def plain_wavelet(family: AlpertFamily, a: int, Q: Cube) -> CubeWavelet:
    if Q.dim != family.dim:
        raise ValueError("cube and family dimensions differ")
    return CubeWavelet(_reference(family, a, None, 0.0), Q, a, 0.0)


def smooth_wavelet(
    family: AlpertFamily, a: int, Q: Cube, eta: float, moll: Mollifier
) -> CubeWavelet:
    """The convolution of h^a_Q with the mollifier at width eta * side(Q)."""
    if Q.dim != family.dim or moll.dim != family.dim:
        raise ValueError("cube, family and mollifier dimensions differ")
    if moll.kappa < family.kappa:
        raise ValueError("mollifier must kill at least as many moments as the family")
    if not 0.0 < eta < 0.5:
        raise ValueError("eta must lie in (0, 1/2)")
    return CubeWavelet(_reference(family, a, moll, float(eta)), Q, a, float(eta))


# ---------------------------------------------------------------------------
# quadrature diagnostics


def _nodes_for_degree(deg: int) -> int:
    return deg // 2 + 2


def _degree_of(w, quad: QuadratureSpec) -> int:
    d = getattr(w, "degree", None)
    return quad.order * 2 - 3 if d is None else int(d)


def _box_rule(lower, upper, breaks_per_axis, n):
    axes = []
    for lo, hi, br in zip(lower, upper, breaks_per_axis):
        br = np.unique(np.concatenate([[lo, hi], br[(br > lo) & (br < hi)]]))
        axes.append(composite_rule(br, n))
    return tensor_rule(axes)


def moment(w, beta: Sequence[int], quad: QuadratureSpec | None = None) -> complex:
    """Integral of w(x) x^beta, exact on each polynomial panel."""
    quad = quad or QuadratureSpec()
    beta = tuple(int(b) for b in np.atleast_1d(beta))
    if len(beta) != w.dim:
        raise ValueError("multi-index length must equal the dimension")
    deg = _degree_of(w, quad) + sum(beta)
    br = [w.axis_breaks(i) for i in range(w.dim)]
    vals = []
    for n in (_nodes_for_degree(deg), _nodes_for_degree(deg) + 2):
        x, wt = _box_rule(w.lower, w.upper, br, n)
        vals.append(complex(np.sum(wt * w(x) * np.prod(x ** np.asarray(beta), axis=1))))
    scale = float(np.sum(np.abs(wt * w(x)))) or 1.0
    if abs(vals[0] - vals[1]) > max(quad.tol, 1e-12) * scale:
        raise QuadratureError(f"moment quadrature did not converge: {vals[0]} vs {vals[1]}")
    return vals[1]


def inner_product(w1, w2, quad: QuadratureSpec | None = None) -> complex:
    """L2 pairing int w1 * conj(w2), panels honouring both sets of breakpoints."""
    quad = quad or QuadratureSpec()
    if w1.dim != w2.dim:
        raise ValueError("dimension mismatch")
    lo = np.maximum(w1.lower, w2.lower)
    hi = np.minimum(w1.upper, w2.upper)
    if np.any(hi <= lo):
        return 0j
    br = [np.concatenate([w1.axis_breaks(i), w2.axis_breaks(i)]) for i in range(w1.dim)]
    n = _nodes_for_degree(_degree_of(w1, quad) + _degree_of(w2, quad))
    x, wt = _box_rule(lo, hi, br, n)
    return complex(np.sum(wt * w1(x) * np.conj(w2(x))))
