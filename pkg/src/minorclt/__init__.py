"""Minor-difference CLT for sample covariance matrices.

For an M x N matrix with i.i.d. entries, ``f_N = Tr f(W~) - Tr f(W)`` compares
the Gram matrix with its minor. The package computes the deterministic limit
and fluctuation variance of ``f_N`` and checks them by seeded Monte Carlo.
"""
from .ensembles import EnsembleSpec, builtin_ensembles, elliptic_gaussian, get_ensemble, sample_matrix
from .functions import AlmostAnalytic, TestFunction, builtin_library, get_function
from .harness import (ExperimentConfig, MCReport, convergence_sweep, gaussian_moment_suite,
                      run_experiment)
from .lab import SamplePair, delta_N_direct, delta_N_rank1, hs_reconstruct, linear_stat, spectra
from .predictor import PredictionReport, omega, predict, v_f1, v_f2, v_sigma2
from .spectral import (DomainError, Ratio, UnsupportedRegime, edges, mp_density, stieltjes_m,
                       w_semicircle)

__all__ = [
    "AlmostAnalytic", "DomainError", "EnsembleSpec", "ExperimentConfig", "MCReport",
    "PredictionReport", "Ratio", "SamplePair", "TestFunction", "UnsupportedRegime",
    "builtin_ensembles", "builtin_library", "convergence_sweep", "delta_N_direct", "delta_N_rank1",
    "edges", "elliptic_gaussian", "gaussian_moment_suite", "get_ensemble", "get_function",
    "hs_reconstruct", "linear_stat", "mp_density", "omega", "predict", "run_experiment",
    "sample_matrix", "spectra", "stieltjes_m", "v_f1", "v_f2", "v_sigma2", "w_semicircle",
]
