"""Smooth Alpert wavelet frames and numerical checks of Fourier extension estimates."""

from .kernels import BACKEND
from .grid import Cube, Grid, Lattice, Sampler, grid_expectation
from .quadrature import QuadratureSpec, QuadratureError
from .fitting import SlopeFit, fit_slope
from .wavelet import Expansion, build_alpert_family, build_mollifier, plain_wavelet, smooth_wavelet, moment
from .frame import Frame, FrameConfig, CoeffSeq, pseudoprojection_Q, lq_norm
from .modulation import ModBasis, CutoffPsi, ChannelModel, random_f
from .extension import Freq, extend, averaged_extension, averaged_gamma_direct, averaged_gamma_oscillatory
from .oscillab import PeriodicAmplitude, psp_integral, rapid_decay_scan
from .experiments import EXPERIMENTS, ExperimentReport, Params, run

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "__version__",
    "Cube", "Grid", "Lattice", "Sampler", "grid_expectation",
    "QuadratureSpec", "QuadratureError", "SlopeFit", "fit_slope",
    "Expansion", "build_alpert_family", "build_mollifier", "plain_wavelet", "smooth_wavelet", "moment",
    "Frame", "FrameConfig", "CoeffSeq", "pseudoprojection_Q", "lq_norm",
    "ModBasis", "CutoffPsi", "ChannelModel", "random_f",
    "Freq", "extend", "averaged_extension", "averaged_gamma_direct", "averaged_gamma_oscillatory",
    "PeriodicAmplitude", "psp_integral", "rapid_decay_scan",
    "EXPERIMENTS", "ExperimentReport", "Params", "run",
]
