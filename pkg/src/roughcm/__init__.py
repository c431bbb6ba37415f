"""Center manifolds of parabolic equations driven by rough paths, on spectral Galerkin truncations."""
from .controlled import ControlledPath, crp_norm, cutoff, make_nonlinearity
from .dynamics import RadiusRule, picard_unit, solve_flow
from .manifold import GapParams, LPWindow, gap_k, graph_hc, lp_solve
from .roughpath import RoughPath, lift_piecewise_linear, sample_gaussian_path, shift
from .spectral import SpectralModel, build_space, dichotomy_constants

__all__ = [
    "ControlledPath", "GapParams", "LPWindow", "RadiusRule", "RoughPath", "SpectralModel",
    "build_space", "crp_norm", "cutoff", "dichotomy_constants", "gap_k", "graph_hc", "lift_piecewise_linear", "lp_solve",
    "make_nonlinearity", "picard_unit", "sample_gaussian_path", "shift", "solve_flow",
]
__version__ = "0.1.0"
