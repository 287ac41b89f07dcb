"""Maximum-likelihood EM Gaussian mixture, the unregularized comparator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, NumericalError
from .core import (
    COV_MODES,
    LOG_2PI,
    FitConfig,
    IterationRecord,
    SufficientStats,
    accumulate_stats,
    check_row_stochastic,
    chol_with_ridge,
)
from .kernels import cluster_logresp


@dataclass
class MlMixture:
    """Weights, means, and covariance Cholesky factors of an ML-EM fit."""

    weights: np.ndarray    # (K,)
    means: np.ndarray      # (K, d)
    cov_chol: np.ndarray   # (C, d, d) lower factors of Sigma_k; C=1 when tied
    cov_mode: str
    responsibilities: np.ndarray | None = None
    log_likelihood_history: list[float] = field(default_factory=list)

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def n_features(self) -> int:
        return self.means.shape[1]


def _ml_m_step(stats: SufficientStats, cov_mode: str, reg_eps: float) -> MlMixture:
    total = stats.total_count()
    weights = stats.counts / total
    if cov_mode == "tied":
        pooled = (
            np.sort(stats.counts[:, None, None] * stats.scatters, axis=0).sum(axis=0)
            / total
        )
        covariances = pooled[None]
    else:
        covariances = stats.scatters
    cov_chol = chol_with_ridge(covariances, reg_eps)
    return MlMixture(
        weights=weights,
        means=np.ascontiguousarray(stats.means),
        cov_chol=np.ascontiguousarray(cov_chol),
        cov_mode=cov_mode,
    )


def _ml_e_step(X: np.ndarray, mixture: MlMixture) -> tuple[np.ndarray, float]:
    d = mixture.n_features
    diag = np.diagonal(mixture.cov_chol, axis1=1, axis2=2)
    log_det = 2.0 * np.log(diag).sum(axis=1)
    if mixture.cov_chol.shape[0] == 1:
        log_det = np.full(mixture.n_components, log_det[0])
    with np.errstate(divide="ignore"):
        logw = np.log(mixture.weights) - 0.5 * log_det - 0.5 * d * LOG_2PI
    qcoef = np.full(mixture.n_components, 0.5)
    resp = np.empty((X.shape[0], mixture.n_components))
    log_likelihood = cluster_logresp(
        X,
        mixture.means,
        mixture.cov_chol,
        np.ascontiguousarray(logw),
        qcoef,
        resp,
    )
    if not math.isfinite(log_likelihood) or not np.isfinite(resp).all():
        raise NumericalError("non-finite log likelihood during EM")
    return resp, log_likelihood


def gmm_fit(
    X: np.ndarray,
    init: np.ndarray,
    config: FitConfig,
    cov_mode: str = "full",
) -> tuple[MlMixture, np.ndarray, list[IterationRecord]]:
    """Plain EM with the same initialization and stopping rule as the
    Bayesian fit, but no priors; empty or rank-deficient components fail
    through the Cholesky ridge-retry path.
    """
    if cov_mode not in COV_MODES:
        raise ConfigError(f"cov_mode must be one of {COV_MODES}, got {cov_mode!r}")
    X = np.ascontiguousarray(X, dtype=np.float64)
    resp = np.asarray(init, dtype=np.float64)
    check_row_stochastic(resp)
    labels_prev = np.argmax(resp, axis=1)
    log: list[IterationRecord] = []
    mixture: MlMixture | None = None
    labels = labels_prev
    for iteration in range(1, config.max_iter + 1):
        try:
            stats = accumulate_stats(X, resp)
            mixture = _ml_m_step(stats, cov_mode, config.reg_eps)
            resp, log_likelihood = _ml_e_step(X, mixture)
        except NumericalError as exc:
            raise NumericalError(f"iteration {iteration}: {exc}") from exc
        labels = np.argmax(resp, axis=1)
        changes = int(np.count_nonzero(labels != labels_prev))
        log.append(
            IterationRecord(iteration=iteration, objective=log_likelihood, label_changes=changes)
        )
        if changes <= config.label_change_tolerance:
            break
        labels_prev = labels
    assert mixture is not None
    mixture.responsibilities = resp
    mixture.log_likelihood_history = [record.objective for record in log]
    return mixture, labels.astype(np.int64), log
