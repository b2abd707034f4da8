"""Quadrature plumbing shared by the wavelet, extension and oscillatory modules."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "QuadratureSpec",
    "QuadratureError",
    "gauss_legendre",
    "composite_rule",
    "tensor_rule",
    "oscillatory_breaks",
]


class QuadratureError(RuntimeError):
    """Raised when a quadrature budget is exhausted or refinement disagrees."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Resolution contract for oscillatory and piecewise quadrature.

    ``points_per_wavelength`` bounds panel width by the local wavelength of
    the phase; ``order`` is the Gauss-Legendre order used on every panel.
    """

    points_per_wavelength: float = 6.0
    max_panels: int = 2_000_000
    tol: float = 1e-10
    mode: str = "tensor-gauss"
    order: int = 16

    def __post_init__(self):
        if self.points_per_wavelength < 4:
            raise ValueError("points_per_wavelength must be at least 4")
        if self.mode not in ("tensor-gauss", "adaptive"):
            raise ValueError(f"unknown quadrature mode {self.mode!r}")
        if self.order < 2:
            raise ValueError("order must be at least 2")

    def refined(self) -> "QuadratureSpec":
        return QuadratureSpec(
            self.points_per_wavelength * 2, self.max_panels, self.tol, self.mode, self.order
        )


@lru_cache(maxsize=None)
def _gl(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0):
    """Gauss-Legendre nodes and weights on [a, b]."""
    x, w = _gl(int(n))
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def composite_rule(breaks, n: int):
    """Gauss-Legendre rule with ``n`` nodes on every segment of ``breaks``."""
    breaks = np.asarray(breaks, dtype=float)
    x, w = _gl(int(n))
    a, b = breaks[:-1], breaks[1:]
    half = 0.5 * (b - a)
    nodes = (a[:, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def tensor_rule(axes):
    """Tensor product of 1D rules given as ``[(nodes, weights), ...]``."""
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return nodes, weights


def oscillatory_breaks(breaks, max_freq, spec: QuadratureSpec):
    """Subdivide ``breaks`` so each panel holds at most a few local wavelengths.

    ``max_freq(a, b)`` returns an upper bound for the angular frequency of
    the integrand on [a, b].  Panels carry ``spec.order`` nodes, so a panel
    may span ``order / points_per_wavelength`` wavelengths.
    """
    breaks = np.asarray(breaks, dtype=float)
    out = [breaks[:1]]
    span = spec.order / spec.points_per_wavelength
    total = 0
    for a, b in zip(breaks[:-1], breaks[1:]):
        k = max(float(max_freq(a, b)), 0.0)
        waves = k * (b - a) / (2 * np.pi)
        m = max(1, int(np.ceil(waves / span)))
        total += m
        if total > spec.max_panels:
            raise QuadratureError(f"panel budget of {spec.max_panels} exhausted")
        out.append(np.linspace(a, b, m + 1)[1:])
    return np.concatenate(out)
