"""1-bit phase retrieval: sensing, spectral initialization, gradient solvers and oracles."""
from .errors import DimensionError, NormEstimateUndefined
from .metrics import AnnulusParams, PairCoordinates, dist, dist_d, dist_n, hamming, parameterize_pair, rank1_frob_dist
from .sensing import GaussianEnsemble, gaussian_ensemble, quantize, quantize_linear
from .objective import LossContext, loss, subgradient
from .spectral import SpectralEstimate, norm_estimate, phi, phi_inv, si_1bpr, si_1bspr
from .solvers import SolverConfig, SolverTrace, biht_1bspr, check_ratio_condition, gd_1bpr, nbiht_baseline

__all__ = [
    "DimensionError",
    "NormEstimateUndefined",
    "AnnulusParams",
    "PairCoordinates",
    "dist",
    "dist_d",
    "dist_n",
    "hamming",
    "parameterize_pair",
    "rank1_frob_dist",
    "GaussianEnsemble",
    "gaussian_ensemble",
    "quantize",
    "quantize_linear",
    "LossContext",
    "loss",
    "subgradient",
    "SpectralEstimate",
    "norm_estimate",
    "phi",
    "phi_inv",
    "si_1bpr",
    "si_1bspr",
    "SolverConfig",
    "SolverTrace",
    "biht_1bspr",
    "check_ratio_condition",
    "gd_1bpr",
    "nbiht_baseline",
]

__version__ = "0.1.0"
