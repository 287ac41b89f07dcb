"""Clustering algorithms: the variational Bayesian mixture and comparators."""

from .bayes import bgmm_fit
from .core import (
    FitConfig,
    IterationRecord,
    Priors,
    SufficientStats,
    VariationalState,
    accumulate_stats,
    compute_sigma_init,
    e_step,
    init_from_assignment,
    m_step,
    map_parameters,
    predict,
)
from .kernels import KERNEL_BACKEND
from .kmeans import KmeansResult, kmeans_fit
from .ml import MlMixture, gmm_fit
from .model import load_model, save_model

__all__ = [
    "FitConfig",
    "IterationRecord",
    "KERNEL_BACKEND",
    "KmeansResult",
    "MlMixture",
    "Priors",
    "SufficientStats",
    "VariationalState",
    "accumulate_stats",
    "bgmm_fit",
    "compute_sigma_init",
    "e_step",
    "gmm_fit",
    "init_from_assignment",
    "kmeans_fit",
    "load_model",
    "m_step",
    "map_parameters",
    "predict",
    "save_model",
]
