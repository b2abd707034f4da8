"""Frame operators for smooth Alpert wavelets on a truncated scale window.

All operators act on coefficient vectors.  If f = sum_J c_J h_J with the
active wavelets h_J, then Tf = sum_I (G c)_I h_I where G is the Gram matrix
G_IJ = <h_J, h_I>.  The coefficients <T^-1 f, h_J> of the pseudoprojection
are (G^-1 b)_J with b_J = <f, h_J>; G^-1 is applied by a Neumann series,
which converges because G = I + O(eta).

Because only finitely many wavelets are active, T vanishes on the orthogonal
complement of their span.  The truncated pseudoprojection is therefore the
orthogonal projection onto that span.
"""

from __future__ import annotations

import csv
import math
import threading
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from .grid import Cube, Grid, cubes_at_scale, lattice_centers, nu_of_grid
from .quadrature import QuadratureSpec
from .wavelet import (
    AlpertFamily,
    BoxFunction,
    CubeWavelet,
    Expansion,
    Mollifier,
    inner_product,
    plain_wavelet,
    smooth_wavelet,
)

__all__ = [
    "NeumannDivergence",
    "FrameConfig",
    "CoeffSeq",
    "Frame",
    "InnerProductCache",
    "pair_gram",
    "build_frame",
    "apply_T",
    "apply_T_inverse",
    "pseudoprojection_Q",
    "norm_scaling",
    "lambda_smoothness",
    "lq_norm",
]


class NeumannDivergence(RuntimeError):
    """The Neumann series did not reach tolerance; carries the observed ratio."""

    def __init__(self, message: str, ratio: float, terms: int):
        super().__init__(message)
        self.ratio = ratio
        self.terms = terms


# ---------------------------------------------------------------------------
# memoized pairings


class InnerProductCache:
    """Thread-safe memo of wavelet pairings keyed by relative geometry."""

    def __init__(self, quad: QuadratureSpec | None = None):
        self.quad = quad or QuadratureSpec()
        self._store: dict = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._store)

    def get(self, key, w1, w2) -> float:
        val = self._store.get(key)
        if val is None:
            val = inner_product(w1, w2, self.quad).real
            with self._lock:
                val = self._store.setdefault(key, val)
        return val


_DEFAULT_CACHE = InnerProductCache()

_OFFSET_RES = 1e12


def _support_radius(w: CubeWavelet) -> float:
    return w.cube.side * (0.5 + w.eta)


def pair_gram(ws1, ws2, cache: InnerProductCache | None = None) -> sparse.csr_matrix:
    """Sparse matrix of pairings M[i, j] = <ws1[i], ws2[j]> for real wavelets."""
    cache = cache or _DEFAULT_CACHE
    n1, n2 = len(ws1), len(ws2)
    if n1 == 0 or n2 == 0:
        return sparse.csr_matrix((n1, n2))
    c1 = np.array([w.cube.center for w in ws1])
    c2 = np.array([w.cube.center for w in ws2])
    r1 = np.array([_support_radius(w) for w in ws1])
    r2 = np.array([_support_radius(w) for w in ws2])
    reach = r1.max() + r2.max()
    pairs = cKDTree(c1).sparse_distance_matrix(cKDTree(c2), reach, p=np.inf, output_type="ndarray")
    i = pairs["i"].astype(np.int64)
    j = pairs["j"].astype(np.int64)
    if i.size:
        gap = np.max(np.abs(c1[i] - c2[j]), axis=1)
        keep = gap < r1[i] + r2[j]
        i, j = i[keep], j[keep]
    if i.size == 0:
        return sparse.csr_matrix((n1, n2))
    # group by reference shape, sides and offset
    code1, code2 = _shape_codes(ws1), _shape_codes(ws2)
    side = np.array([w.cube.side for w in ws1])[i]
    off = np.round((c2[j] - c1[i]) / side[:, None] * _OFFSET_RES).astype(np.int64)
    keys = np.concatenate([code1[i, None], code2[j, None], off], axis=1)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = np.asarray(inv).ravel()
    first = np.full(uniq.shape[0], -1, dtype=np.int64)
    first[inv[::-1]] = np.arange(inv.size)[::-1]
    vals_u = np.empty(uniq.shape[0])
    for u, p in enumerate(first):
        w1, w2 = ws1[i[p]], ws2[j[p]]
        key = (id(w1.ref), w1.cube.side, id(w2.ref), w2.cube.side, tuple(uniq[u, 2:]))
        vals_u[u] = cache.get(key, w1, w2)
    vals = vals_u[inv]
    M = sparse.coo_matrix((vals, (i, j)), shape=(n1, n2)).tocsr()
    M.eliminate_zeros()
    return M


def _shape_codes(ws) -> np.ndarray:
    table: dict = {}
    return np.array([table.setdefault((id(w.ref), w.cube.side), len(table)) for w in ws], dtype=np.int64)


# ---------------------------------------------------------------------------
# configuration and coefficient sequences


@dataclass(frozen=True, eq=False)
class FrameConfig:
    """Which wavelets are active and how the Neumann series is run.

    With ``region`` set, the active cubes at each scale are the grid cubes
    meeting it.  With ``region=None`` the cubes are lattice labelled: at
    scale s the (2N+1+2*margin)^dim cubes with centres 2^-s k + nu - 2^-s/2,
    N = 2^s, which cover [-1, 1)^dim.  ``eta = 0`` selects plain wavelets.
    """

    family: AlpertFamily
    moll: Mollifier | None
    eta: float = 2.0**-6
    scales: tuple = (3, 3)
    grid: Grid | None = None
    region: Cube | None = None
    margin: int = 0
    neumann_tol: float = 1e-8
    neumann_max_terms: int = 500

    def __post_init__(self):
        if self.grid is None:
            object.__setattr__(self, "grid", Grid.standard(self.family.dim))
        if self.grid.dim != self.family.dim:
            raise ValueError("grid and family dimensions differ")
        s0, s1 = self.scales
        if not 0 <= s0 <= s1:
            raise ValueError("scale window must satisfy 0 <= s_min <= s_max")
        if self.eta > 0 and self.moll is None:
            raise ValueError("smooth wavelets need a mollifier")
        if self.margin < 0:
            raise ValueError("margin must be nonnegative")

    @property
    def dim(self) -> int:
        return self.family.dim

    def with_grid(self, grid: Grid) -> "FrameConfig":
        return FrameConfig(
            self.family, self.moll, self.eta, self.scales, grid, self.region,
            self.margin, self.neumann_tol, self.neumann_max_terms,
        )

    def cubes(self, s: int) -> list:
        if self.region is not None:
            return cubes_at_scale(self.grid, s, self.region)
        nu = nu_of_grid(self.grid, s)
        h = 2.0**-s
        return [Cube(c, h) for c in lattice_centers(nu, s, self.margin)]

    def wavelet(self, a: int, J: Cube) -> CubeWavelet:
        if self.eta == 0:
            return plain_wavelet(self.family, a, J)
        return smooth_wavelet(self.family, a, J, self.eta, self.moll)


@dataclass(eq=False)
class CoeffSeq:
    """Complex coefficients indexed by (cube, family member), cube-major."""

    s: int
    cubes: list
    n_members: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (len(self.cubes) * self.n_members,):
            raise ValueError("coefficient length must be (#cubes) x (#members)")

    def __len__(self) -> int:
        return self.values.size

    def norm(self, q: float) -> float:
        return lq_seq(self.values, q)

    def by_member(self) -> np.ndarray:
        return self.values.reshape(len(self.cubes), self.n_members)

    def to_csv(self, path) -> None:
        dim = self.cubes[0].dim if self.cubes else 0
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"center_{i}" for i in range(dim)] + ["side", "member", "re", "im"])
            vals = self.by_member()
            for k, Q in enumerate(self.cubes):
                for a in range(self.n_members):
                    v = vals[k, a]
                    w.writerow([repr(float(c)) for c in Q.center] + [repr(float(Q.side)), a, repr(float(v.real)), repr(float(v.imag))])

    @classmethod
    def from_csv(cls, path, s: int) -> "CoeffSeq":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        head, body = rows[0], rows[1:]
        dim = len(head) - 4
        cubes, vals, n_members = [], [], 0
        for row in body:
            a = int(row[dim + 1])
            n_members = max(n_members, a + 1)
            if a == 0:
                cubes.append(Cube(tuple(float(x) for x in row[:dim]), float(row[dim])))
            vals.append(complex(float(row[dim + 2]), float(row[dim + 3])))
        return cls(s, cubes, n_members, np.array(vals))


def lq_seq(values, q: float) -> float:
    v = np.abs(np.asarray(values))
    if math.isinf(q):
        return float(v.max(initial=0.0))
    return float(np.sum(v**q) ** (1.0 / q))


# ---------------------------------------------------------------------------
# frame state


@dataclass(eq=False)
class NeumannResult:
    coeffs: np.ndarray
    terms: int
    ratio: float


class Frame:
    """Active wavelets, their Gram matrix and the Neumann solver."""

    def __init__(self, cfg: FrameConfig, cache: InnerProductCache | None = None):
        self.cfg = cfg
        self.cache = cache or _DEFAULT_CACHE
        self.cubes_by_scale = {s: cfg.cubes(s) for s in range(cfg.scales[0], cfg.scales[1] + 1)}
        self.wavelets = []
        self.index = []  # (s, cube position, member)
        for s, cubes in self.cubes_by_scale.items():
            for k, J in enumerate(cubes):
                for a in range(len(cfg.family)):
                    self.wavelets.append(cfg.wavelet(a, J))
                    self.index.append((s, k, a))
        self.gram = pair_gram(self.wavelets, self.wavelets, self.cache)
        self._contraction = None

    def __len__(self) -> int:
        return len(self.wavelets)

    def contraction_ratio(self) -> float:
        """Spectral norm of I - G, the Neumann contraction factor."""
        if self._contraction is None:
            D = (sparse.identity(len(self)) - self.gram).tocsr()
            if len(self) <= 1500:
                ev = np.linalg.eigvalsh(D.toarray())
                self._contraction = float(np.max(np.abs(ev)))
            else:
                from scipy.sparse.linalg import eigsh

                ev = eigsh(D, k=1, which="LM", return_eigenvectors=False, tol=1e-6)
                self._contraction = float(abs(ev[0]))
        return self._contraction

    # -- coefficient level ------------------------------------------------

    def gram_norm(self, c) -> float:
        c = np.asarray(c)
        return math.sqrt(max(float(np.real(np.vdot(c, self.gram @ c))), 0.0))

    def solve(self, b, tol: float | None = None) -> NeumannResult:
        """G^-1 b by the Neumann series sum_n (I - G)^n b."""
        tol = self.cfg.neumann_tol if tol is None else tol
        b = np.asarray(b, dtype=complex)
        ref = float(np.linalg.norm(b))
        if ref == 0.0:
            return NeumannResult(np.zeros_like(b), 0, 0.0)
        total = b.copy()
        term = b.copy()
        prev = ref
        ratio = 0.0
        for n in range(1, self.cfg.neumann_max_terms + 1):
            term = term - self.gram @ term
            size = float(np.linalg.norm(term))
            ratio = size / prev if prev > 0 else 0.0
            prev = size
            total += term
            if size < tol * ref:
                return NeumannResult(total, n, ratio)
            if not np.isfinite(size) or size > 1e6 * ref:
                break
        raise NeumannDivergence(
            f"Neumann series did not converge (observed contraction ratio {ratio:.3g})", ratio, n
        )

    def inverse_series(self, c, tol: float | None = None) -> NeumannResult:
        """Coefficients of T^-1 f for f = sum c_J h_J, stopping on ||term||_2 in L2."""
        tol = self.cfg.neumann_tol if tol is None else tol
        c = np.asarray(c, dtype=complex)
        ref = self.gram_norm(c)
        if ref == 0.0:
            return NeumannResult(np.zeros_like(c), 0, 0.0)
        total, term, prev, ratio = c.copy(), c.copy(), ref, 0.0
        for n in range(1, self.cfg.neumann_max_terms + 1):
            term = term - self.gram @ term
            size = self.gram_norm(term)
            ratio = size / prev if prev > 0 else 0.0
            prev = size
            total += term
            if size < tol * ref:
                return NeumannResult(total, n, ratio)
            if not np.isfinite(size) or size > 1e6 * ref:
                break
        raise NeumannDivergence(
            f"Neumann series did not converge (observed contraction ratio {ratio:.3g})", ratio, n
        )

    # -- function level ---------------------------------------------------

    def analysis(self, f, quad: QuadratureSpec | None = None) -> np.ndarray:
        """b_J = <f, h_J> for every active wavelet."""
        if isinstance(f, Expansion):
            M = pair_gram(f.wavelets, self.wavelets, self.cache)
            return np.asarray(M.T @ f.coeffs)
        quad = quad or QuadratureSpec()
        out = np.zeros(len(self), dtype=complex)
        for k, w in enumerate(self.wavelets):
            out[k] = inner_product(f, w, quad)
        return out

    def expansion(self, coeffs) -> Expansion:
        return Expansion(self.wavelets, coeffs)

    def span_coefficients(self, f) -> np.ndarray | None:
        """Coefficients of f over the active wavelets when f is built from them."""
        if isinstance(f, Expansion) and len(f.wavelets) == len(self) and all(
            a is b for a, b in zip(f.wavelets, self.wavelets)
        ):
            return f.coeffs
        return None

    def dual_coefficients(self, f, quad: QuadratureSpec | None = None) -> NeumannResult:
        """<T^-1 f, h_J> for all active J."""
        c = self.span_coefficients(f)
        if c is not None:
            # G G^-1 c = c up to the Neumann tolerance; run the series anyway
            res = self.inverse_series(c)
            return NeumannResult(self.gram @ res.coeffs, res.terms, res.ratio)
        return self.solve(self.analysis(f, quad))

    def scale_slice(self, s: int) -> slice:
        starts = [k for k, (ss, _, _) in enumerate(self.index) if ss == s]
        return slice(starts[0], starts[-1] + 1)


_FRAME_CACHE: dict = {}
_FRAME_LOCK = threading.Lock()


def build_frame(cfg: FrameConfig) -> Frame:
    """Frame for ``cfg``, memoized on the configuration object."""
    fr = _FRAME_CACHE.get(id(cfg))
    if fr is None or fr.cfg is not cfg:
        fr = Frame(cfg)
        with _FRAME_LOCK:
            _FRAME_CACHE[id(cfg)] = fr
        if fr.contraction_ratio() >= 0.5:
            warnings.warn(
                f"eta={cfg.eta} gives ||I - T|| = {fr.contraction_ratio():.3f} >= 1/2; "
                "Neumann convergence will be slow or fail"
            )
    return fr


# ---------------------------------------------------------------------------
# operator entry points


def apply_T(f, x, cfg: FrameConfig, quad: QuadratureSpec | None = None) -> np.ndarray:
    """(T f)(x) = sum_I <f, h_I> h_I(x) over the active window."""
    fr = build_frame(cfg)
    return fr.expansion(fr.analysis(f, quad))(x)


def apply_T_inverse(f, x, cfg: FrameConfig, quad: QuadratureSpec | None = None):
    """(T^-1 f)(x) and the number of Neumann terms used.

    f must lie in the span of the active wavelets (an :class:`Expansion`
    over them); elsewhere the truncated T has no inverse.
    """
    fr = build_frame(cfg)
    c = fr.span_coefficients(f)
    if c is None:
        if isinstance(f, Expansion):
            c = fr.solve(fr.analysis(f, quad)).coeffs
        else:
            raise ValueError("T^-1 on a truncated window needs f in the span of the active wavelets")
    res = fr.inverse_series(c)
    return fr.expansion(res.coeffs)(x), res.terms


def pseudoprojection_Q(f, s: int, cfg: FrameConfig, quad: QuadratureSpec | None = None):
    """Coefficients <T^-1 f, h_J> for J at scale s and the function they synthesize."""
    fr = build_frame(cfg)
    if s not in fr.cubes_by_scale:
        raise ValueError(f"scale {s} outside the active window {cfg.scales}")
    res = fr.dual_coefficients(f, quad)
    sl = fr.scale_slice(s)
    coeffs = res.coeffs[sl]
    seq = CoeffSeq(s, fr.cubes_by_scale[s], len(cfg.family), coeffs)
    return seq, Expansion(fr.wavelets[sl], coeffs)


# ---------------------------------------------------------------------------
# norms and diagnostics


def lq_norm(f, q: float, n_per_panel: int | None = None) -> float:
    """L^q norm of a piecewise polynomial expansion by Gauss panels.

    For q not an even integer |f|^q is not polynomial; panels are the
    breakpoint cells, and the default order is high enough for the
    slope-level accuracy used downstream.
    """
    from .quadrature import composite_rule, tensor_rule

    deg = f.degree
    n = n_per_panel or max(deg + 2, 12)
    axes = [composite_rule(f.axis_breaks(i), n) for i in range(f.dim)]
    x, w = tensor_rule(axes)
    v = np.abs(f(x))
    if math.isinf(q):
        return float(v.max())
    return float(np.sum(w * v**q) ** (1.0 / q))


def norm_scaling(fcoeffs_by_s: dict, q: float, cfg: FrameConfig) -> dict:
    """{s: ||Q_s f||_q / (2^{s dim (1/2 - 1/q)} |f coeffs|_q)} for f = sum f(J) h_J.

    ``fcoeffs_by_s[s]`` holds the coefficients over the active wavelets of
    the single-scale configuration ``cfg`` re-scaled to s.
    """
    if not 1 < q < math.inf:
        raise ValueError("q must lie in (1, inf)")
    out = {}
    for s, c in sorted(fcoeffs_by_s.items()):
        c = np.asarray(c, dtype=complex)
        ref = lq_seq(c, q)
        if ref == 0:
            raise ValueError(f"degenerate coefficient sequence at s={s}")
        cs = FrameConfig(
            cfg.family, cfg.moll, cfg.eta, (s, s), cfg.grid, cfg.region,
            cfg.margin, cfg.neumann_tol, cfg.neumann_max_terms,
        )
        fr = build_frame(cs)
        f = fr.expansion(c)
        _, Qf = pseudoprojection_Q(f, s, cs)
        out[s] = lq_norm(Qf, q) / (2.0 ** (s * cfg.dim * (0.5 - 1.0 / q)) * ref)
    return out


def lambda_smoothness(
    f, J: Cube, member: int, s: int, order: int, h: float, cfg: FrameConfig,
    v_samples, axis: int = 0, quad: QuadratureSpec | None = None,
) -> dict:
    """Finite-difference size of d^order/dv^order of Lambda(v) = <T^-1_{D+v} f, h_{J+v}>.

    ``J`` is a standard-grid cube; on the grid D + v it moves to J + v.
    Returns the maximum over ``v_samples`` and the step-halving estimate.
    """
    if order < 0:
        raise ValueError("order must be nonnegative")

    def lam(v):
        grid = Grid(cfg.dim, tuple(v))
        cs = cfg.with_grid(grid)
        cs = FrameConfig(
            cs.family, cs.moll, cs.eta, (s, s), grid, cs.region, cs.margin,
            cs.neumann_tol, cs.neumann_max_terms,
        )
        fr = Frame(cs, _DEFAULT_CACHE)
        target = np.asarray(J.center) + np.asarray(v)
        cubes = fr.cubes_by_scale[s]
        dist = [np.max(np.abs(np.asarray(Q.center) - target)) for Q in cubes]
        k = int(np.argmin(dist))
        if dist[k] > 1e-9 * J.side:
            raise ValueError("cube J is not active on the shifted grid")
        coeff = fr.solve(fr.analysis(f, quad)).coeffs
        return coeff[k * len(cfg.family) + member]

    from scipy.special import comb

    def diff(v, step):
        e = np.zeros(cfg.dim)
        e[axis] = step
        tot = 0j
        for j in range(order + 1):
            tot += (-1) ** j * comb(order, j) * lam(np.asarray(v) + (order / 2 - j) * e)
        return tot / step**order

    vals, halves = [], []
    for v in v_samples:
        d1, d2 = diff(v, h), diff(v, h / 2)
        vals.append(abs(d2))
        halves.append(abs(d1 - d2))
    return {"max": float(max(vals)), "instability": float(max(halves))}
