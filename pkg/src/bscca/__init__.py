"""Bayesian sparse canonical correlation analysis with factor shrinkage models.

Two samplers are provided: NDFSM, with a graphical-horseshoe specificity
matrix, and DFSM, with a diagonal one. Both put a multiplicative half-Cauchy
process on the columns of the loading matrices.
"""

from .cca import (
    CcaTriple,
    InferenceSummary,
    Model,
    PosteriorDraws,
    align_signs,
    canonical_decomposition,
    combined_select,
    grand_covariance,
    inv_sqrt_spd,
    summarize,
)
from .data import DataViews, standardize
from .diagnostics import TraceSeries, autocorrelation, effective_sample_size, gaussian_loglik
from .errors import InputError, NumericalError, SccaError, StorageError
from .gibbs import ChainConfig, ChainState, run_chain, run_chains
from .pipeline import FitResult, fit_views
from .simulate import SimulationSetting, build_setting, generate, true_cca

__version__ = "0.1.0"

__all__ = [
    "CcaTriple",
    "ChainConfig",
    "ChainState",
    "DataViews",
    "FitResult",
    "InferenceSummary",
    "InputError",
    "Model",
    "NumericalError",
    "PosteriorDraws",
    "SccaError",
    "SimulationSetting",
    "StorageError",
    "TraceSeries",
    "align_signs",
    "autocorrelation",
    "build_setting",
    "canonical_decomposition",
    "combined_select",
    "effective_sample_size",
    "fit_views",
    "gaussian_loglik",
    "generate",
    "grand_covariance",
    "inv_sqrt_spd",
    "run_chain",
    "run_chains",
    "standardize",
    "summarize",
    "true_cca",
]
