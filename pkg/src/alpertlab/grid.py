"""Dyadic cubes, translated dyadic grids, lattices and grid averaging.

Cubes are half-open boxes ``prod [lower_i, lower_i + side)`` so that the
children of a cube and the cubes of a grid at one scale tile exactly.
A grid is the standard dyadic grid translated by a shift vector ``v`` in
``[-1, 1]^dim``.  At scale ``s`` its cubes are ``2^-s (k + [0,1)^dim) + v``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "Cube",
    "Grid",
    "Lattice",
    "Sampler",
    "cubes_at_scale",
    "nu_of_grid",
    "lattice_centers",
    "grid_expectation",
    "default_sampler",
]


def _vec(x, dim=None) -> tuple:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise ValueError("expected a vector")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"expected a vector of length {dim}, got {arr.shape[0]}")
    return tuple(float(a) for a in arr)


@dataclass(frozen=True)
class Cube:
    """Half-open cube with the given center and side length."""

    center: tuple
    side: float

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center))
        if not self.side > 0:
            raise ValueError("cube side must be positive")
        object.__setattr__(self, "side", float(self.side))

    @classmethod
    def from_lower(cls, lower, side) -> "Cube":
        lo = np.asarray(_vec(lower))
        return cls(tuple(lo + 0.5 * side), side)

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.center) - 0.5 * self.side

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.center) + 0.5 * self.side

    @property
    def volume(self) -> float:
        return self.side**self.dim

    def children(self) -> list["Cube"]:
        """The 2^dim half-side cubes, ordered with the last axis fastest."""
        h = 0.5 * self.side
        lo = self.lower
        out = []
        for bits in itertools.product((0, 1), repeat=self.dim):
            out.append(Cube.from_lower(lo + h * np.asarray(bits), h))
        return out

    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.all((x >= self.lower) & (x < self.upper), axis=1)

    def intersects(self, other: "Cube") -> bool:
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        return bool(np.all(self.lower < other.upper) and np.all(other.lower < self.upper))

    def translate(self, t) -> "Cube":
        return Cube(tuple(np.asarray(self.center) + np.asarray(_vec(t, self.dim))), self.side)

    def dilate(self, factor: float) -> "Cube":
        return Cube(self.center, self.side * factor)


@dataclass(frozen=True)
class Grid:
    """Standard dyadic grid translated by ``shift`` (componentwise in [-1, 1])."""

    dim: int
    shift: tuple = field(default=None)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("grid dimension must be positive")
        shift = (0.0,) * self.dim if self.shift is None else _vec(self.shift, self.dim)
        if any(abs(c) > 1.0 for c in shift):
            raise ValueError("grid shift must lie in [-1, 1]^dim")
        object.__setattr__(self, "shift", shift)

    @classmethod
    def standard(cls, dim: int) -> "Grid":
        return cls(dim, (0.0,) * dim)

    def cube(self, s: int, k: Sequence[int]) -> Cube:
        h = 2.0**-s
        return Cube.from_lower(h * np.asarray(k, dtype=float) + np.asarray(self.shift), h)


@dataclass(frozen=True)
class Lattice:
    """The lattice 2^-s {-N..N}^dim with N = 2^s."""

    s: int
    dim: int = 1

    def __post_init__(self):
        if self.s < 0:
            raise ValueError("scale must be nonnegative")

    @property
    def N(self) -> int:
        return 2**self.s

    @property
    def integer_points(self) -> np.ndarray:
        r = np.arange(-self.N, self.N + 1)
        mesh = np.meshgrid(*([r] * self.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @property
    def points(self) -> np.ndarray:
        return self.integer_points * 2.0**-self.s

    def __len__(self) -> int:
        return (2 * self.N + 1) ** self.dim


def cubes_at_scale(grid: Grid, s: int, U: Cube) -> list[Cube]:
    """All cubes of ``grid`` with side 2^-s that meet ``U``."""
    if s < 0:
        raise ValueError("scale must be nonnegative")
    if U.dim != grid.dim:
        raise ValueError(f"dimension mismatch: grid {grid.dim}, cube {U.dim}")
    h = 2.0**-s
    v = np.asarray(grid.shift)
    ranges = []
    for i in range(grid.dim):
        lo = math.floor((U.lower[i] - v[i]) / h - 1.0) + 1
        hi = math.ceil((U.upper[i] - v[i]) / h) - 1
        ranges.append(range(lo, hi + 1))
    return [grid.cube(s, k) for k in itertools.product(*ranges)]


def nu_of_grid(grid: Grid, s: int) -> np.ndarray:
    """The offset in [0, 2^-s)^dim of the grid's scale-s cubes from the standard ones."""
    if s < 0:
        raise ValueError("scale must be nonnegative")
    h = 2.0**-s
    nu = np.mod(np.asarray(grid.shift), h)
    nu[nu >= h] = 0.0  # guard against round-up in fmod
    return nu


def lattice_centers(nu, s: int, margin: int = 0) -> np.ndarray:
    """Centers of the lattice-labelled cubes of the grid with offset ``nu``.

    The cube labelled ``k`` in {-N-margin, ..., N+margin}^dim has center
    ``2^-s k + nu - 2^-s / 2``; with margin 0 these are the (2N+1)^dim cubes
    meeting [-1, 1)^dim whenever nu > 0.  Rows are ordered with the last
    axis fastest.
    """
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    h = 2.0**-s
    N = 2**s
    r = np.arange(-N - margin, N + margin + 1, dtype=float)
    mesh = np.meshgrid(*([r] * nu.shape[0]), indexing="ij")
    k = np.stack([m.ravel() for m in mesh], axis=1)
    return h * k + nu[None, :] - 0.5 * h


@dataclass(frozen=True)
class Sampler:
    """How to average over grid shifts.

    ``mode`` is ``"lattice"`` (tensor midpoint rule, ``n`` points per axis)
    or ``"monte-carlo"`` (``n`` seeded uniform draws).  With ``period`` set,
    the average runs over [0, period)^dim instead of [-1, 1]^dim; this is
    only valid for integrands with that period.
    """

    mode: str = "lattice"
    n: int = 64
    seed: int = 0
    period: float | None = None

    def __post_init__(self):
        if self.mode not in ("lattice", "monte-carlo"):
            raise ValueError(f"unknown sampler mode {self.mode!r}")
        if self.n < 1:
            raise ValueError("sampler needs n >= 1")

    def nodes(self, dim: int) -> np.ndarray:
        lo, width = (0.0, self.period) if self.period is not None else (-1.0, 2.0)
        if self.mode == "lattice":
            t = lo + width * (np.arange(self.n) + 0.5) / self.n
            mesh = np.meshgrid(*([t] * dim), indexing="ij")
            return np.stack([m.ravel() for m in mesh], axis=1)
        rng = np.random.default_rng(self.seed)
        return lo + width * rng.random((self.n, dim))


def default_sampler(s: int) -> Sampler:
    """Lattice midpoint rule over one period with 4 * 2^s points per axis."""
    return Sampler("lattice", 4 * 2**s, 0, 2.0**-s)


def _fsum_complex(values: Iterable[complex]) -> complex:
    vals = [complex(v) for v in values]
    return complex(math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals))


def grid_expectation(
    F: Callable[[np.ndarray], complex],
    dim: int,
    sampler: Sampler | None = None,
    map_fn: Callable = map,
) -> complex:
    """Average of ``F`` over grid shifts.

    ``map_fn`` may be any order-preserving parallel map; the reduction is
    an exactly rounded sum in node order, so the result does not depend on
    how the evaluations were scheduled.
    """
    sampler = sampler or Sampler()
    nodes = sampler.nodes(dim)
    return _fsum_complex(map_fn(F, list(nodes))) / nodes.shape[0]
