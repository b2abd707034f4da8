"""Experiment definitions behind the command line runner.

Each experiment takes a :class:`Params` and returns an
:class:`ExperimentReport` whose rows carry the measured value, the bound it
was compared against and their ratio.  Pass/fail is decided per criterion;
thresholds on fitted exponents are conventions of this package and are
labelled as such in the report.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .extension import (
    Freq,
    averaged_extension,
    averaged_gamma_direct,
    averaged_gamma_oscillatory,
    channel_extension,
    extend,
    extension_from_nodes,
)
from .fitting import fit_slope
from .frame import FrameConfig, Frame, lq_norm, norm_scaling, pseudoprojection_Q
from .grid import Cube
from .modulation import ChannelModel, ModBasis, modulated_f, random_f
from .oscillab import PeriodicAmplitude, fourier_coeffs, psp_bound, psp_integral, rapid_decay_scan
from .quadrature import QuadratureSpec, composite_rule
from .wavelet import (
    Expansion,
    build_alpert_family,
    build_mollifier,
    moment,
    multi_indices,
    plain_wavelet,
    smooth_wavelet,
)

SCHEMA_VERSION = "1"
ROW_COLUMNS = (
    "experiment", "label", "d", "s", "kappa", "eta", "q", "m", "xi", "x",
    "value_re", "value_im", "bound", "ratio",
)

EXTENSION_EXPERIMENTS = {
    "gamma-oracle", "zero-case", "nearby-case", "faraway-case",
    "small-large-range", "averaged-testing", "trilinear",
}


class ConfigError(ValueError):
    """Invalid parameters; the message lists every violation."""


# ---------------------------------------------------------------------------
# parameters


@dataclass
class Params:
    """Scalar parameters shared by all experiments (desk-scale defaults)."""

    d: int = 2
    s: int = 4
    s_values: tuple = (3, 4, 5, 6)
    kappa: int = 3
    eta: float = 2.0**-6
    q: float = 4.5
    delta: float = 0.1
    eps: float = 0.1
    theta: float = 0.2
    sigma: float | None = None
    tau: int = 2
    tau_prime: int | None = None
    seed: int = 0
    n_configs: int = 10
    quad_order: int = 16
    points_per_wavelength: float = 6.0
    quad_tol: float = 1e-10
    workers: int = 1

    def __post_init__(self):
        self.s_values = tuple(int(v) for v in self.s_values)
        if self.sigma is None:
            self.sigma = 2.0 * self.delta / (1.0 - self.delta) if self.delta < 1 else 1.0
        if self.tau_prime is None:
            self.tau_prime = self.kappa - 1

    @property
    def dim(self) -> int:
        return self.d - 1

    @property
    def quad(self) -> QuadratureSpec:
        return QuadratureSpec(
            points_per_wavelength=self.points_per_wavelength, tol=self.quad_tol, order=self.quad_order
        )

    def rng(self, *salt) -> np.random.Generator:
        return np.random.default_rng([self.seed, *[int(v) for v in salt]])

    def violations(self, experiment: str | None = None) -> list:
        out = []
        if self.d not in (2, 3):
            out.append(f"d={self.d}: only d in {{2, 3}} is supported")
        elif not self.q > 2.0 * self.d / (self.d - 1):
            out.append(f"q={self.q}: need q > 2d/(d-1) = {2 * self.d / (self.d - 1):g}")
        if not 0 < self.delta <= 0.5:
            out.append(f"delta={self.delta}: need 0 < delta <= 1/2")
        if not 0 < self.eps <= 0.5:
            out.append(f"eps={self.eps}: need 0 < eps <= 1/2")
        if 0 < self.delta < 1 and not self.sigma > self.delta / (1.0 - self.delta):
            out.append(f"sigma={self.sigma}: need sigma > delta/(1-delta) = {self.delta / (1 - self.delta):g}")
        if experiment in EXTENSION_EXPERIMENTS and not self.kappa > self.d:
            out.append(f"kappa={self.kappa}: extension experiments need kappa > d = {self.d}")
        if self.kappa < 1:
            out.append(f"kappa={self.kappa}: need kappa >= 1")
        if not 0 < self.eta < 0.5:
            out.append(f"eta={self.eta}: need 0 < eta < 1/2")
        if not 0 <= self.theta <= 1:
            out.append(f"theta={self.theta}: need 0 <= theta <= 1")
        if self.tau < 1:
            out.append(f"tau={self.tau}: need tau >= 1")
        if self.points_per_wavelength < 4:
            out.append(f"points_per_wavelength={self.points_per_wavelength}: need >= 4")
        if not 1 <= self.s <= 8 or any(not 1 <= v <= 8 for v in self.s_values):
            out.append("s and s_values must lie in [1, 8]")
        if self.n_configs < 1 or self.workers < 1:
            out.append("n_configs and workers must be positive")
        return out

    def validate(self, experiment: str | None = None) -> "Params":
        bad = self.violations(experiment)
        if bad:
            raise ConfigError("; ".join(bad))
        return self

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["s_values"] = list(self.s_values)
        return out

    @classmethod
    def from_mapping(cls, values: dict) -> "Params":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(values) - names)
        if unknown:
            raise ConfigError("unknown parameter(s): " + ", ".join(unknown))
        kw = dict(values)
        if "s_values" in kw:
            kw["s_values"] = tuple(kw["s_values"])
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def resolved_text(self) -> str:
        """The resolved parameters as TOML key = value lines."""
        lines = []
        for k, v in self.to_dict().items():
            if isinstance(v, list):
                v = "[" + ", ".join(repr(x) for x in v) + "]"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# reports


@dataclass
class Criterion:
    name: str
    measured: float
    threshold: float
    comparison: str  # "<", "<=", ">=", "within"
    passed: bool
    note: str = ""


@dataclass
class ExperimentReport:
    experiment: str
    params: dict
    rows: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    criteria: list = field(default_factory=list)
    wall_time: float = 0.0
    schema_version: str = SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    def criterion(self, name: str) -> Criterion:
        for c in self.criteria:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> str:
        d = dataclasses.asdict(self)
        d["columns"] = list(ROW_COLUMNS)
        return json.dumps(d, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        d = json.loads(text)
        d.pop("columns", None)
        d["criteria"] = [Criterion(**c) for c in d["criteria"]]
        return cls(**d)

    def rows_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=ROW_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: _fmt(r.get(k, "")) for k in ROW_COLUMNS})
        return buf.getvalue()

    def write(self, out_dir) -> Path:
        """Write rows.csv, summary.json and config.resolved under out/<experiment>/<timestamp>/."""
        base = Path(out_dir) / self.experiment
        stamp = time.strftime("%Y%m%dT%H%M%S")
        target = base / stamp
        k = 1
        while target.exists():
            target = base / f"{stamp}-{k}"
            k += 1
        target.mkdir(parents=True)
        (target / "rows.csv").write_text(self.rows_csv())
        (target / "summary.json").write_text(self.to_json())
        (target / "config.resolved").write_text(Params.from_mapping(self.params).resolved_text())
        return target


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return ";".join(repr(float(x)) for x in np.ravel(v))
    return v


def _pmap(fn: Callable, items, workers: int) -> list:
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


class _Builder:
    """Accumulates rows, fits and criteria for one experiment."""

    def __init__(self, name: str, p: Params):
        self.name, self.p = name, p
        self.rows, self.fits, self.criteria = [], {}, []
        self.t0 = time.perf_counter()

    def row(self, label, value, bound, *, s=None, m=None, xi=None, x=None, kappa=None, q=None):
        value = complex(value)
        bound = float(bound)
        self.rows.append({
            "experiment": self.name,
            "label": label,
            "d": self.p.d,
            "s": "" if s is None else int(s),
            "kappa": self.p.kappa if kappa is None else int(kappa),
            "eta": float(self.p.eta),
            "q": float(self.p.q if q is None else q),
            "m": [] if m is None else [float(v) for v in np.ravel(m)],
            "xi": [] if xi is None else [float(v) for v in np.ravel(xi)],
            "x": [] if x is None else [float(v) for v in np.ravel(x)],
            "value_re": float(value.real),
            "value_im": float(value.imag),
            "bound": bound,
            "ratio": float(abs(value) / bound) if bound != 0 else float("inf"),
        })

    def fit(self, name, fit):
        self.fits[name] = fit.to_dict()

    def check(self, name, measured, threshold, comparison, note=""):
        m, t = float(measured), float(threshold)
        ok = {
            "<": m < t,
            "<=": m <= t,
            ">=": m >= t,
            "within": abs(m) <= t,
        }[comparison]
        self.criteria.append(Criterion(name, m, t, comparison, bool(ok and math.isfinite(m)), note))

    def report(self) -> ExperimentReport:
        return ExperimentReport(
            self.name, self.p.to_dict(), self.rows, self.fits, self.criteria,
            time.perf_counter() - self.t0,
        )


def _family(dim, kappa):
    return build_alpert_family(dim, kappa), build_mollifier(dim, kappa)


# ---------------------------------------------------------------------------
# wavelets and frames


def run_moments(p: Params) -> ExperimentReport:
    """Vanishing moments of plain and smooth wavelets, and extension decay from them."""
    b = _Builder("moments", p)
    quad = p.quad
    worst = 0.0
    for dim in (1, 2):
        for kappa in (1, 2, 3):
            fam, moll = _family(dim, kappa)
            Q = Cube((0.5,) * dim, 1.0)
            for a in range(len(fam)):
                for kind, w in (("plain", plain_wavelet(fam, a, Q)), ("smooth", smooth_wavelet(fam, a, Q, p.eta, moll))):
                    mx = max(abs(moment(w, beta, quad)) for beta in multi_indices(dim, kappa - 1))
                    worst = max(worst, mx)
                    b.row(f"moment-{kind}-dim{dim}-member{a}", mx, 1e-8, kappa=kappa)
    elapsed = time.perf_counter() - b.t0
    b.check("moment vanishing max |int h x^beta|", worst, 1e-8, "<")
    b.check("moment construction runtime [s]", elapsed, 10.0, "<")

    # decay of E h_J as |xi|/2^s -> 0 along a fixed ray
    s, dim = p.s, p.dim
    top = 2.0 ** (s * (1 - p.delta))
    mags = np.logspace(math.log10(top) - 1.5, math.log10(top), 10)
    direction = np.ones(dim + 1) / math.sqrt(dim + 1)
    for kappa in (2, 3):
        fam, moll = _family(dim, kappa)
        tp = kappa - 1
        J = Cube((0.0,) * dim, 2.0**-s)
        worst_slope = math.inf
        for a in range(len(fam)):
            w = smooth_wavelet(fam, a, J, p.eta, moll)
            vals = []
            for r in mags:
                v = direction * r
                xi = Freq(tuple(v[:dim]), float(v[dim]))
                val = extend(w, xi, quad)
                vals.append(val)
                bound = (r / 2.0**s) ** tp * 2.0 ** (-s * dim / 2.0)
                b.row(f"first-est-k{kappa}-member{a}", val, bound, s=s, xi=v, kappa=kappa)
            fit = fit_slope(mags / 2.0**s, np.abs(vals))
            b.fit(f"first-est-k{kappa}-member{a}", fit)
            worst_slope = min(worst_slope, fit.slope)
        b.check(f"extension decay slope kappa={kappa} (>= tau'-0.3)", worst_slope, tp - 0.3, ">=")
    return b.report()


def _frame_cfg(p: Params, s: int, kappa: int | None = None, region=None):
    fam, moll = _family(p.dim, kappa or p.kappa)
    U = region or Cube((0.5,) * p.dim, 1.0)
    return FrameConfig(fam, moll, p.eta, (s, s), region=U, neumann_tol=1e-12)


def _difference_norm(f1: Expansion, f2: Expansion, q: float = 2.0) -> float:
    diff = Expansion(list(f1.wavelets) + list(f2.wavelets), np.concatenate([f1.coeffs, -np.asarray(f2.coeffs)]))
    return lq_norm(diff, q)


def run_frame(p: Params) -> ExperimentReport:
    """Dual Gram identity and idempotence of the pseudoprojection at scale s."""
    b = _Builder("frame", p)
    s = p.s
    cfg = _frame_cfg(p, s)
    fr = Frame(cfg)
    quad = p.quad
    n = len(fr)
    worst = 0.0
    for i, w in enumerate(fr.wavelets):
        # analysis by quadrature, independent of the stored Gram matrix
        dual = fr.solve(fr.analysis(w, quad)).coeffs
        e = np.zeros(n)
        e[i] = 1.0
        dev = float(np.max(np.abs(dual - e)))
        worst = max(worst, dev)
    b.row("gram-identity-max-deviation", worst, 1e-6, s=s)
    b.check("dual Gram = identity (max deviation)", worst, 1e-6, "<")

    fine = _frame_cfg(p, s + 1)
    worst_q = 0.0
    for t in range(10):
        rng = p.rng(11, t)
        fw = Frame(fine).wavelets
        f = Expansion(fw, rng.standard_normal(len(fw)) + 1j * rng.standard_normal(len(fw)))
        _, Qf = pseudoprojection_Q(f, s, cfg)
        _, QQf = pseudoprojection_Q(Qf, s, cfg)
        rel = _difference_norm(QQf, Qf) / lq_norm(Qf, 2.0)
        worst_q = max(worst_q, rel)
        b.row(f"idempotence-f{t}", rel, 1e-5, s=s)
    b.check("||Q^2 f - Q f|| / ||Q f||", worst_q, 1e-5, "<")
    b.check("frame runtime [s]", time.perf_counter() - b.t0, 120.0, "<")
    return b.report()


def run_norm_scaling(p: Params) -> ExperimentReport:
    """||Q_s f||_q against 2^(s dim (1/2-1/q)) |coefficients|_q over s = 3..7."""
    b = _Builder("norm-scaling", p)
    scales = range(3, 8)
    base = _frame_cfg(p, 3, kappa=2)
    coeffs = {}
    for s in scales:
        n = len(_frame_cfg(p, s, kappa=2).cubes(s)) * len(base.family)
        rng = p.rng(21, s)
        coeffs[s] = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    for q in (2.0, 8.0 / 3.0, 4.0):
        ratios = norm_scaling(coeffs, q, base)
        for s, r in ratios.items():
            b.row("norm-ratio", r, 1.0, s=s, q=q, kappa=2)
        v = np.array(list(ratios.values()))
        b.check(f"norm ratio spread max/min at q={q:.4g}", v.max() / v.min(), 1.5, "<")
    return b.report()


def run_dft(p: Params) -> ExperimentReport:
    """Parseval and reconstruction for the channel basis; channel synthesis of M_psi Q f."""
    b = _Builder("dft", p)
    worst = 0.0
    for s in range(1, 7):
        rng = p.rng(31, s)
        offset = tuple(rng.uniform(-0.5, 0.5, p.dim) * 2.0**-s)
        B = ModBasis(s, p.dim, offset)
        a = rng.standard_normal(B.size) + 1j * rng.standard_normal(B.size)
        c = B.decompose(a)
        pars = abs(np.linalg.norm(c) - np.linalg.norm(a)) / np.linalg.norm(a)
        rec = np.linalg.norm(B.reconstruct(c) - a) / np.linalg.norm(a)
        worst = max(worst, pars, rec)
        b.row("parseval", pars, 1e-10, s=s)
        b.row("reconstruction", rec, 1e-10, s=s)
    b.check("Parseval / reconstruction residual", worst, 1e-10, "<")

    s = p.s
    fam, moll = _family(p.dim, p.kappa)
    rng = p.rng(32)
    f, _ = random_f(fam, moll, p.eta, s, rng)
    model = ChannelModel(fam, moll, p.eta, s, f)
    nu = rng.uniform(0, 2.0**-s, p.dim)
    A = model.channels(nu)
    B = model.basis(nu)
    x = rng.uniform(-1.0, 1.0, (100, p.dim))
    target = model.qf(nu, with_psi=True)(x)
    # sum_m A_m g_m, with g_m = sum_J psi(c_J) phi^m_J h_J
    centers = B.points()
    psi_c = model.psi(centers)
    cfg = model.config(model.reduce(nu))
    synth = np.zeros(x.shape[0], dtype=complex)
    for a in range(model.n_members):
        ws = [cfg.wavelet(a, Cube(c, model.h)) for c in centers]
        vals = np.array([w(x) for w in ws])  # (cubes, points)
        phi = np.array([B.phi(km) for km in B.labels])  # (channels, cubes)
        synth += (A[:, a] @ (phi * psi_c[None, :])) @ vals * model.channel_norm()
    err = float(np.max(np.abs(synth - target)) / max(np.max(np.abs(target)), 1e-300))
    b.row("channel-synthesis", err, 1e-6, s=s)
    b.check("sum_m <a,phi^m> g_m vs M_psi Q f (relative sup)", err, 1e-6, "<")
    return b.report()


# ---------------------------------------------------------------------------
# periodic stationary phase


def run_psp_scan(p: Params) -> ExperimentReport:
    """gamma-slope and plateau of the periodic stationary phase integral."""
    b = _Builder("psp-scan", p)
    N = 32
    gammas = np.logspace(1, 4, 13)
    quad = p.quad
    for dim in (1, 2):
        phi = PeriodicAmplitude.cosine(0.5, dim)
        norm = phi.c_tau_norm(0)

        def one(g, phi=phi):
            return psp_integral(phi, None, N, 0.0, g, 0.0, quad).value

        vals = _pmap(one, gammas, p.workers)
        for g, v in zip(gammas, vals):
            b.row(f"psp-dim{dim}", v, psp_bound(g, N, dim, norm), xi=[g])
        fit = fit_slope(gammas, np.abs(vals))
        b.fit(f"gamma-slope-dim{dim}", fit)
        b.check(f"gamma slope + dim/2, dim={dim}", fit.slope + dim / 2.0, 0.05, "within")
        # plateau: gamma N^2 <= 1e-2 keeps |I| at its gamma = 0 value
        ref = abs(psp_integral(phi, None, N, 0.0, 0.0, 0.0, quad).value)
        small = [abs(psp_integral(phi, None, N, 0.0, g, 0.0, quad).value) for g in np.logspace(-6, -2, 5) / N**2]
        for g, v in zip(np.logspace(-6, -2, 5) / N**2, small):
            b.row(f"plateau-dim{dim}", v, float(N**dim), xi=[g])
        spread = max(abs(v / ref - 1.0) for v in small)
        b.check(f"plateau |I(gamma)|/|I(0)| - 1 for gamma N^2 <= 0.01, dim={dim}", spread, 0.05, "within")
        b.row(f"plateau-level-dim{dim}", ref, float(N**dim))

    # route equivalence on random trigonometric amplitudes
    worst = 0.0
    rng = p.rng(41)
    for t in range(20):
        K = int(rng.integers(1, 17))
        phi = PeriodicAmplitude.random_trig(K, rng, 1)
        Nn, g = int(rng.integers(1, 9)), float(rng.uniform(0.0, 50.0))
        beta, a = float(rng.uniform(-1, 1)), float(rng.uniform(-3, 3))
        r = psp_integral(phi, None, Nn, beta, g, a, quad, route="both")
        worst = max(worst, r.rel_diff)
        b.row("route-equivalence", r.rel_diff, 1e-6, xi=[g], m=[K])
    b.check("Fresnel vs direct route (relative)", worst, 1e-6, "<")

    # beta-insensitivity
    phi = PeriodicAmplitude.cosine(0.5, 1)
    base = abs(psp_integral(phi, None, N, 0.0, 100.0, 0.0, quad).value)
    rs = [abs(psp_integral(phi, None, N, be, 100.0, 0.0, quad).value) / base for be in np.linspace(-1, 1, 9)]
    C = max(max(rs), 1.0 / min(rs))
    b.row("beta-insensitivity", C, 3.0)
    b.check("beta-insensitivity constant", C, 3.0, "<")

    # Fourier decay of a C^3 amplitude (periodic Bernoulli B_5)
    amp = PeriodicAmplitude.bernoulli(5, 1.0)
    K = 64
    tab = fourier_coeffs(amp, K, points_per_axis=4096)
    k = np.arange(2, K + 1)
    ck = np.abs(tab.values[K + 2 :])
    for kk, c in zip(k, ck):
        b.row("fourier-decay-B5", c, (2 * np.pi * kk) ** -3.0 * amp.c_tau_norm(3), m=[kk])
    fit = fit_slope(k, ck)
    b.fit("fourier-decay", fit)
    b.check("Fourier decay slope of a C^3 amplitude (<= -3+0.2)", fit.slope, -2.8, "<=")
    return b.report()


def run_rapid_decay(p: Params) -> ExperimentReport:
    """|I(a)| against the rapid decay envelope for |a| >= 4N."""
    b = _Builder("rapid-decay", p)
    N, gamma = 8, 1.0
    # above |a| ~ 400 the phase gamma a^2 pushes both routes to their rounding floor
    a_values = np.logspace(math.log10(4 * N), math.log10(400.0), 10)
    for tau in (2, 3):
        phi = PeriodicAmplitude.bernoulli(tau + 2, 0.5)
        out = rapid_decay_scan(phi, None, N, gamma, a_values, tau, p.quad)
        for r in out["rows"]:
            b.row(f"rapid-decay-tau{tau}", r["value"], r["bound"], xi=[r["a"]])
        b.fit(f"a-slope-tau{tau}", out["fit"])
        b.check(f"a-slope tau={tau} (<= -(tau-1)+0.3)", out["fit"].slope, -(tau - 1) + 0.3, "<=")
        b.check(f"envelope binding tau={tau}: max |I|/envelope", max(r["ratio"] for r in out["rows"]), 1.0, "<=")
    # degenerate control: constant amplitude, decay from the cutoff alone
    ctrl = rapid_decay_scan(PeriodicAmplitude.constant(), None, N, gamma, a_values[:4], 2, p.quad)
    for r in ctrl["rows"]:
        b.row("control-constant", r["value"], r["bound"], xi=[r["a"]])
    return b.report()


# ---------------------------------------------------------------------------
# grid-averaged extension


def _model(p: Params, s: int, salt: int, kappa: int | None = None, unimodular: bool = False):
    fam, moll = _family(p.dim, kappa or p.kappa)
    f, _ = random_f(fam, moll, p.eta, s, p.rng(salt, s), unimodular=unimodular)
    return ChannelModel(fam, moll, p.eta, s, f), f


def run_gamma_oracle(p: Params) -> ExperimentReport:
    """Direct grid average of A_m Omega against the single oscillatory integral."""
    b = _Builder("gamma-oracle", p)
    worst = 0.0
    for s in (3, 4, 5):
        model, _ = _model(p, s, 51)
        rng = p.rng(52, s)
        N, h = 2**s, 2.0**-s

        def one(t, model=model, rng_state=rng.integers(0, 2**31, size=p.n_configs)):
            r = np.random.default_rng(int(rng_state[t]))
            km = tuple(int(k) for k in r.integers(-N, N + 1, p.dim))
            xi = Freq(tuple(r.uniform(-2.0**s, 2.0**s, p.dim)), float(r.uniform(1.0, 2.0**s) * r.choice([-1, 1])))
            x = r.uniform(-0.5 * h, 0.5 * h, p.dim)
            # the midpoint average converges like n^-2 across kinks of A_m
            d = averaged_gamma_direct(model, km, xi, x, 64 * N)
            o = averaged_gamma_oscillatory(model, km, xi, x, p.quad)
            return km, xi, x, d, o

        for km, xi, x, d, o in _pmap(one, range(p.n_configs), p.workers):
            rel = float(np.max(np.abs(d - o)) / max(np.max(np.abs(d)), 1e-300))
            worst = max(worst, rel)
            b.row("gamma-direct-vs-oscillatory", rel, 1e-3, s=s, m=km, xi=xi.vec.tolist() + [xi.lam], x=x)
    b.check("max relative difference direct vs oscillatory", worst, 1e-3, "<")
    b.check("gamma-oracle runtime [s]", time.perf_counter() - b.t0, 600.0, "<")
    return b.report()


def _zero_label(p: Params) -> tuple:
    return (0,) * p.dim


def run_zero_case(p: Params) -> ExperimentReport:
    """|E_G <a,phi^0> E g_0| on the unit cone xi' = xi_d against xi_d^(-(d-1)/2)."""
    b = _Builder("zero-case", p)
    s = p.s
    model, _ = _model(p, s, 61)
    lo, hi = -p.d * s, (1 - p.delta) * s
    xs = 2.0 ** np.linspace(lo, hi, 25)
    km = _zero_label(p)

    def one(x):
        xi = Freq((x,) * p.dim, x)
        return averaged_extension(model, xi, km=km, quad=p.quad)

    vals = np.array(_pmap(one, xs, p.workers))
    for x, v in zip(xs, vals):
        b.row("zero-case-cone", v, s * x ** (-p.dim / 2.0), s=s, m=km, xi=[x] * p.dim + [x])
    # fit over the upper half of the range, where any decay regime would show
    sel = xs >= 1.0
    fit = fit_slope(xs[sel], np.abs(vals[sel]))
    b.fit("cone-slope", fit)
    b.check("cone slope + (d-1)/2", fit.slope + p.dim / 2.0, 0.15, "within")
    # the bound itself is never exceeded
    b.check("max |value| / (s xi_d^(-(d-1)/2))", max(r["ratio"] for r in b.rows), 1.0, "<=")
    # diagnostic: Gamma(xi, 0) on the same ray
    for x in xs[sel][::2]:
        g = averaged_gamma_oscillatory(model, km, Freq((x,) * p.dim, x), np.zeros(p.dim), p.quad)
        b.row("gamma-at-0", complex(np.max(np.abs(g))), 2.0 ** (s * p.dim) * x ** (-p.dim / 2.0), s=s, m=km, xi=[x] * p.dim + [x])
    return b.report()


def _ball_grid(R: float, spacing: float, dim: int):
    n = max(int(math.ceil(2 * R / spacing)), 2)
    g = np.linspace(-R, R, n + 1)
    step = g[1] - g[0]
    mesh = np.meshgrid(*([g] * (dim + 1)), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    keep = np.sum(pts * pts, axis=1) <= R * R
    return pts[keep], step ** (dim + 1)


def run_nearby_case(p: Params) -> ExperimentReport:
    """L^q norm over the ball of the averaged extension for |2^s m| <= 2^(delta s)."""
    b = _Builder("nearby-case", p)
    s_list = [s for s in p.s_values if s <= 5]
    norms = []
    for s in s_list:
        model, f = _model(p, s, 71)
        B = ModBasis(s, p.dim)
        mm = np.max(np.abs(B.omega(B.labels)), axis=1) / (2 * np.pi)
        near = np.flatnonzero((mm <= 2.0 ** (p.delta * s)) & (mm > 0))
        R = 2.0 ** (s / (1 - p.delta))
        pts, cell = _ball_grid(R, 2 * R / 12, p.dim)
        pts = pts[pts[:, -1] != 0]

        def one(xi_row):
            xi = Freq(tuple(xi_row[:-1]), float(xi_row[-1]))
            return averaged_extension(model, xi, quad=p.quad)[near]

        vals = np.array(_pmap(one, pts, p.workers))  # (points, near channels)
        nf = lq_norm(f, p.q)
        worst = 0.0
        for j, idx in enumerate(near):
            nrm = float(np.sum(np.abs(vals[:, j]) ** p.q) * cell) ** (1.0 / p.q)
            worst = max(worst, nrm)
            b.row("nearby-norm", nrm, nf, s=s, m=B.labels[idx])
        norms.append(worst / nf)
    fit = fit_slope(2.0 ** np.array(s_list), norms, log_base=2.0, trim=0)
    b.fit("nearby-growth", fit)
    b.check("nearby growth exponent (artifact threshold 0.5)", fit.slope, 0.5, "<=")
    return b.report()


def _far_window(p: Params, s: int):
    B = ModBasis(s, p.dim)
    mm = np.max(np.abs(B.omega(B.labels)), axis=1) / (2 * np.pi)  # |2^s m| as |omega|/(2 pi)
    sel = np.flatnonzero((mm >= 2.0 ** (p.sigma * s)) & (mm <= 2.0**s))
    return B, mm, sel


def run_faraway_case(p: Params) -> ExperimentReport:
    """Pointwise size of far-away channels against |2^s m|."""
    b = _Builder("faraway-case", p)
    worst = -math.inf
    for s in (4, 5, 6):
        model, f = _model(p, s, 81)
        nf = lq_norm(f, p.q)
        B, mm, sel = _far_window(p, s)
        R = 2.0 ** (s / (1 - p.delta))
        xis = [
            (xp, xd)
            for xd in (2.0**-s, 1.0, 2.0 ** (s / 2), 2.0 ** ((1 - p.delta) * s))
            for xp in (-R / 2, 0.0, R / 2)
        ]

        def one(t):
            xp, xd = t
            return np.abs(averaged_extension(model, Freq((xp,) * p.dim, xd), quad=p.quad))

        sup = np.max(np.array(_pmap(one, xis, p.workers)), axis=0)
        for idx in sel:
            bound = (2.0**s * mm[idx]) ** (-p.dim) * nf
            b.row("far-away-sup", sup[idx], bound, s=s, m=B.labels[idx])
        fit = fit_slope(mm[sel], sup[sel])
        b.fit(f"far-away-slope-s{s}", fit)
        worst = max(worst, fit.slope)
    b.check("far-away slope in |2^s m| (<= -(d-1)+0.15), worst s", worst, -p.dim + 0.15, "<=")
    return b.report()


def run_small_large_range(p: Params) -> ExperimentReport:
    """Uniform channel bounds for |xi_d| <= 2^(-ds) and for xi_d >= 2^((1-delta)s)."""
    b = _Builder("small-large-range", p)
    qf = 2.0 * p.d / (p.d - 1)
    small, large = [], []
    for s in (3, 4, 5, 6):
        fam, moll = _family(p.dim, p.kappa)
        B = ModBasis(s, p.dim)
        km = (2**s // 4,) * p.dim
        idx = int(np.flatnonzero(np.all(B.labels == np.array(km), axis=1))[0])
        f, _ = modulated_f(fam, moll, p.eta, s, B.omega(km)[0])
        nf = lq_norm(f, qf)
        model = ChannelModel(fam, moll, p.eta, s, f)
        R = 2.0 ** (s / (1 - p.delta))
        xps = np.linspace(-R, R, 41)
        nu0 = np.zeros(p.dim)
        sv = max(
            abs(channel_extension(model, nu0, Freq((xp,) * p.dim, xd), p.quad)[idx])
            for xp in xps for xd in (0.0, 2.0 ** (-p.d * s))
        )
        b.row("small-range-sup", sv, nf, s=s, m=km, q=qf)
        small.append(sv / nf)
        xds = 2.0 ** np.linspace((1 - p.delta) * s, s / (1 - p.delta), 5)
        lv = max(
            abs(averaged_extension(model, Freq((xp,) * p.dim, xd), km=km, quad=p.quad)) * xd ** (p.dim / 2.0)
            for xd in xds for xp in np.linspace(-R, R, 13)
        )
        b.row("large-range-sup-scaled", lv, nf, s=s, m=km, q=qf)
        large.append(lv / nf)
    small, large = np.array(small), np.array(large)
    b.check("small-range ratio spread max/min over s", small.max() / small.min(), 1.5, "<")
    b.check("large-range ratio spread max/min over s", large.max() / large.min(), 1.5, "<")
    return b.report()


def averaged_function_nodes(model: ChannelModel, n_offsets: int, panel: float, order: int = 16):
    """Gauss nodes x, weights and E_nu (M_psi Q_nu f)(x) on [-1-2h, 1+2h]^dim."""
    h = model.h
    lo, hi = -1.0 - 2 * h, 1.0 + 2 * h
    br = np.linspace(lo, hi, int(round((hi - lo) / panel)) + 1)
    x1, w1 = composite_rule(br, order)
    mesh = np.meshgrid(*([x1] * model.dim), indexing="ij")
    x = np.stack([m.ravel() for m in mesh], axis=1)
    wm = np.meshgrid(*([w1] * model.dim), indexing="ij")
    w = np.prod(np.stack([m.ravel() for m in wm], axis=1), axis=1)
    t = h * (np.arange(n_offsets) + 0.5) / n_offsets
    tm = np.meshgrid(*([t] * model.dim), indexing="ij")
    offsets = np.stack([m.ravel() for m in tm], axis=1)
    F = np.zeros(x.shape[0], dtype=complex)
    for nu in offsets:
        F += model.qf(nu, with_psi=True)(x)
    return x, w, F / offsets.shape[0]


def _averaged_testing_ratio(p: Params, s: int, n_scale: int = 4):
    model, f = _model(p, s, 91)
    x, w, F = averaged_function_nodes(model, n_scale * 2**s, 2.0**-s)
    R = 2.0 ** (s / (1 - p.delta))
    pts, cell = _ball_grid(R, 0.5, p.dim)
    E = extension_from_nodes(x, w * F, pts)
    num = float(np.sum(np.abs(E) ** p.q) * cell) ** (1.0 / p.q)
    den = lq_norm(f, p.q)
    return num, den


def run_averaged_testing(p: Params) -> ExperimentReport:
    """Growth in s of ||E E_G M_psi Q_s f||_{L^q(B(0, 2^(s/(1-delta))))} / ||f||_{L^q}."""
    b = _Builder("averaged-testing", p)
    ratios = []
    for s in p.s_values:
        num, den = _averaged_testing_ratio(p, s)
        b.row("tested-ratio", num / den, 2.0 ** (3 * p.eps * s), s=s)
        ratios.append(num / den)
    s0 = min(p.s_values)
    num2, den2 = _averaged_testing_ratio(p, s0, n_scale=8)
    b.row("offset-refinement-change", abs(num2 / den2 - ratios[0]) / ratios[0], 0.1, s=s0)
    fit = fit_slope(2.0 ** np.array(p.s_values), ratios, log_base=2.0, trim=0)
    b.fit("growth-exponent", fit)
    b.check(
        "s-growth exponent <= 3 eps (artifact gate)", fit.slope, 3 * p.eps, "<=",
        note=f"residual {fit.residual:.3g}; the 3*eps gate is a package convention",
    )
    return b.report()


# ---------------------------------------------------------------------------
# trilinear annular experiment


def _separation(patches, nu: float) -> dict:
    """Diameters and pairwise distances of the parabola images of the patches."""
    imgs = []
    for lo, hi in patches:
        t = np.linspace(lo, hi, 201)
        imgs.append(np.stack([t, t * t], axis=1))
    diam = [float(np.max(np.linalg.norm(I[:, None] - I[None], axis=2))) for I in imgs]
    dist = []
    for i in range(len(imgs)):
        for j in range(i + 1, len(imgs)):
            dist.append(float(np.min(np.linalg.norm(imgs[i][:, None] - imgs[j][None], axis=2))))
    return {"diam": diam, "dist": dist, "ok": min(dist) >= nu / 4 and all(nu / 4 <= dd <= 4 * nu for dd in diam)}


def run_trilinear(p: Params, patches=None, r_values=(3, 4, 5), nu: float = 0.25) -> ExperimentReport:
    """Trilinear L^(q/3) quantity over annuli A(0, 2^r) for nu-disjoint patches."""
    b = _Builder("trilinear", p)
    if p.dim != 1:
        raise ConfigError("the trilinear experiment is implemented for d = 2")
    patches = patches or [(-0.5 - nu / 2, -0.5 + nu / 2), (-nu / 2, nu / 2), (0.5 - nu / 2, 0.5 + nu / 2)]
    sep = _separation(patches, nu)
    b.row("separation-min-distance", min(sep["dist"]), nu / 4)
    b.check("patches nu-disjoint on the parabola", 1.0 if sep["ok"] else 0.0, 1.0, ">=")
    if not sep["ok"]:
        raise ConfigError("patches fail the separation check")
    fam, moll = _family(p.dim, p.kappa)
    values = []
    for r in r_values:
        R = 2.0**r
        g = np.linspace(-R, R, int(8 * R) + 1)
        step = g[1] - g[0]
        X, Y = np.meshgrid(g, g, indexing="ij")
        rad = np.hypot(X, Y)
        keep = (rad >= R / 2) & (rad <= R)
        pts = np.stack([X[keep], Y[keep]], axis=1)
        measure = keep.sum() * step * step
        b.row("annulus-measure", measure / (0.75 * np.pi * R * R), 1.0, xi=[R])
        b.check(f"annulus measure ratio r={r}", abs(measure / (0.75 * np.pi * R * R) - 1.0), 0.1, "within")
        scales = [s for s in range(1, 10) if r / (1 + p.delta) < s <= r / (1 - p.delta)]
        best = 0.0
        for s in scales:
            prod = np.ones(pts.shape[0])
            for k, (lo, hi) in enumerate(patches):
                f, _ = random_f(fam, moll, p.eta, s, p.rng(101, r, s, k), box=(lo, hi))
                x1 = [composite_rule(f.axis_breaks(0), p.quad_order)]
                x, w = x1[0]
                E = extension_from_nodes(x[:, None], w * f(x[:, None]), pts)
                prod = prod * np.abs(E)
            val = float(np.sum(prod ** (p.q / 3.0)) * step * step) ** (3.0 / p.q)
            b.row("trilinear", val, 2.0 ** (p.eps * r), s=s, xi=[R])
            best = max(best, val)
        values.append(best)
    if len(r_values) >= 2 and min(values) > 0:
        fit = fit_slope(2.0 ** np.array(r_values), values, log_base=2.0, trim=0)
        b.fit("trilinear-growth", fit)
        b.row("trilinear-growth-exponent", fit.slope, p.eps)
    return b.report()


def case_scans(p: Params) -> dict:
    """Zero, far-away and small/large range reports keyed by experiment name."""
    return {
        "zero-case": run_zero_case(p),
        "faraway-case": run_faraway_case(p),
        "small-large-range": run_small_large_range(p),
    }


EXPERIMENTS: dict = {
    "moments": run_moments,
    "frame": run_frame,
    "norm-scaling": run_norm_scaling,
    "dft": run_dft,
    "psp-scan": run_psp_scan,
    "rapid-decay": run_rapid_decay,
    "gamma-oracle": run_gamma_oracle,
    "zero-case": run_zero_case,
    "nearby-case": run_nearby_case,
    "faraway-case": run_faraway_case,
    "small-large-range": run_small_large_range,
    "averaged-testing": run_averaged_testing,
    "trilinear": run_trilinear,
}


def run(experiment: str, params: Params, out=None) -> ExperimentReport:
    """Validate, run one experiment and optionally write its files under ``out``."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    params.validate(experiment)
    rep = EXPERIMENTS[experiment](params)
    if out is not None:
        rep.write(out)
    return rep
