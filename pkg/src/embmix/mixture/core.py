"""Priors, variational state, and the update steps of the Bayesian mixture.

Parameter names follow the standard Gaussian-Wishart/Dirichlet notation:
alpha for Dirichlet concentrations, beta for mean-precision scales, nu for
Wishart degrees of freedom, and W for the Wishart scale matrix.  Covariance
work is carried as lower Cholesky factors of W^-1 throughout; W itself is
never materialized during fitting.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import digamma

from ..errors import ConfigError, DataError, NumericalError
from ..io import Assignment
from .kernels import cluster_logresp

LOG_2PI = math.log(2.0 * math.pi)

COV_MODES = ("full", "tied")

# Effective count below which a component is treated as empty.
EMPTY_COMPONENT_COUNT = 1e-10

# Scale-relative ridge added when a covariance-like matrix fails Cholesky.
DEFAULT_RIDGE = 1e-6

ROW_SUM_TOLERANCE = 1e-6


def sorted_sum(values: np.ndarray) -> float:
    """Sum in ascending value order, so the result ignores input order."""
    return float(np.sort(np.asarray(values, dtype=np.float64), axis=None).sum())


@dataclass
class Priors:
    """Dirichlet and Gaussian-Wishart prior parameters.

    w0_inv stores the inverse of the Wishart scale matrix; the
    non-informative default W0 = (1/d) * sigma_init^-1 makes
    w0_inv = d * sigma_init, which never requires inverting sigma_init.
    """

    alpha0: float
    beta0: float
    m0: np.ndarray
    w0_inv: np.ndarray
    nu0: float

    def __post_init__(self):
        self.m0 = np.asarray(self.m0, dtype=np.float64)
        self.w0_inv = np.asarray(self.w0_inv, dtype=np.float64)
        d = self.m0.shape[0]
        if self.alpha0 <= 0:
            raise ConfigError(f"alpha0 must be positive, got {self.alpha0}")
        if self.beta0 <= 0:
            raise ConfigError(f"beta0 must be positive, got {self.beta0}")
        if self.nu0 < d:
            raise ConfigError(f"nu0 must be at least the dimension {d}, got {self.nu0}")
        if self.m0.ndim != 1 or self.w0_inv.shape != (d, d):
            raise ConfigError("m0 must be a d-vector and w0_inv a d x d matrix")
        if not np.allclose(self.w0_inv, self.w0_inv.T, rtol=1e-8, atol=1e-12):
            raise ConfigError("w0_inv must be symmetric")
        try:
            np.linalg.cholesky(self.w0_inv)
        except np.linalg.LinAlgError as exc:
            raise ConfigError("w0_inv must be positive definite") from exc

    @classmethod
    def noninformative(
        cls,
        n_samples: int,
        n_components: int,
        sigma_init: np.ndarray,
        alpha0: float | None = None,
        beta0: float = 1e-10,
    ) -> "Priors":
        """Non-informative prior: zero mean, vanishing beta0, W0 from sigma_init.

        alpha0 defaults to N/K, the balance-favouring choice.
        """
        sigma_init = np.asarray(sigma_init, dtype=np.float64)
        d = sigma_init.shape[0]
        if alpha0 is None:
            alpha0 = n_samples / n_components
        return cls(
            alpha0=float(alpha0),
            beta0=float(beta0),
            m0=np.zeros(d),
            w0_inv=float(d) * sigma_init,
            nu0=float(d),
        )


@dataclass
class SufficientStats:
    """Responsibility-weighted counts, means, and normalized scatter matrices."""

    counts: np.ndarray    # (K,) effective counts
    means: np.ndarray     # (K, d) weighted means
    scatters: np.ndarray  # (K, d, d) weighted scatter / count

    @property
    def n_components(self) -> int:
        return self.counts.shape[0]

    def total_count(self) -> float:
        return sorted_sum(self.counts)


@dataclass
class VariationalState:
    """Posterior parameters of the variational Bayesian Gaussian mixture.

    w_inv_chol holds lower Cholesky factors of W_k^-1, one per component in
    full mode and a single shared factor in tied mode.
    """

    alpha: np.ndarray       # (K,)
    beta: np.ndarray        # (K,)
    means: np.ndarray       # (K, d)
    w_inv_chol: np.ndarray  # (C, d, d), C = K or 1
    nu: np.ndarray          # (K,)
    cov_mode: str = "full"
    responsibilities: np.ndarray | None = None
    elbo_history: list[float] = field(default_factory=list)

    @property
    def n_components(self) -> int:
        return self.alpha.shape[0]

    @property
    def n_features(self) -> int:
        return self.means.shape[1]

    def component_chol(self, k: int) -> np.ndarray:
        return self.w_inv_chol[0] if self.w_inv_chol.shape[0] == 1 else self.w_inv_chol[k]

    def expected_log_weights(self) -> np.ndarray:
        """E[ln pi_k] = psi(alpha_k) - psi(sum alpha), order-independent sum."""
        return digamma(self.alpha) - digamma(sorted_sum(self.alpha))

    def log_det_scale(self) -> np.ndarray:
        """ln|W_k| per component, from the stored factors of W_k^-1."""
        diag = np.diagonal(self.w_inv_chol, axis1=1, axis2=2)
        per_matrix = -2.0 * np.log(diag).sum(axis=1)
        if self.w_inv_chol.shape[0] == 1:
            return np.full(self.n_components, per_matrix[0])
        return per_matrix

    def expected_log_det_precision(self) -> np.ndarray:
        """E[ln|Lambda_k|] = sum_i psi((nu_k + 1 - i)/2) + d ln2 + ln|W_k|."""
        d = self.n_features
        offsets = 1.0 - np.arange(1, d + 1)
        psi_sum = digamma((self.nu[:, None] + offsets[None, :]) / 2.0).sum(axis=1)
        return psi_sum + d * math.log(2.0) + self.log_det_scale()


@dataclass
class FitConfig:
    """Iteration budget and stopping threshold for the fitting loops.

    label_change_tolerance -1 disables the early stop entirely so a fit
    always runs max_iter iterations.
    """

    max_iter: int
    label_change_tolerance: int = 0
    reg_eps: float = DEFAULT_RIDGE
    seed: int = 0

    def __post_init__(self):
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be at least 1, got {self.max_iter}")
        if self.label_change_tolerance < -1:
            raise ConfigError(
                "label_change_tolerance must be >= -1, "
                f"got {self.label_change_tolerance}"
            )


@dataclass
class IterationRecord:
    """One fitting iteration: objective value and hard-label churn."""

    iteration: int
    objective: float
    label_changes: int


def compute_sigma_init(X: np.ndarray, ridge: float = DEFAULT_RIDGE) -> np.ndarray:
    """Empirical covariance plus a scale-aware ridge, for the Wishart scale.

    Falls back to the diagonal when the covariance is rank-deficient
    (N - 1 < d) or its condition estimate exceeds 1e12.  A zero-trace
    covariance gets unit ridge scale so the result stays positive definite.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataError("sigma_init needs a 2-d data matrix")
    n, d = X.shape
    if n < 2:
        raise DataError(f"sigma_init needs at least 2 rows, got {n}")
    cov = np.cov(X, rowvar=False, ddof=1).reshape(d, d)
    scale = float(np.trace(cov)) / d
    if scale <= 0.0:
        scale = 1.0
    diagonal_only = n - 1 < d
    if not diagonal_only:
        eigvals = np.linalg.eigvalsh(cov)
        smallest, largest = float(eigvals[0]), float(eigvals[-1])
        diagonal_only = smallest <= 0.0 or largest / smallest > 1e12
    if diagonal_only:
        cov = np.diag(np.diag(cov))
    return cov + (ridge * scale) * np.eye(d)


def init_from_assignment(X: np.ndarray, assignment: Assignment, n_components: int) -> np.ndarray:
    """One-hot responsibilities from hard labels; warns on empty classes."""
    labels = np.asarray(assignment.labels)
    n = np.asarray(X).shape[0]
    if labels.shape[0] != n:
        raise DataError(f"{labels.shape[0]} labels for {n} rows")
    if labels.min() < 0 or labels.max() >= n_components:
        bad = int(labels[(labels < 0) | (labels >= n_components)][0])
        raise DataError(f"label {bad} outside [0, {n_components})")
    resp = np.zeros((n, n_components), dtype=np.float64)
    resp[np.arange(n), labels] = 1.0
    occupancy = np.bincount(labels, minlength=n_components)
    for k in np.flatnonzero(occupancy == 0):
        warnings.warn(f"class {int(k)} received no rows in the initial assignment")
    return resp


def check_row_stochastic(resp: np.ndarray) -> None:
    row_sums = resp.sum(axis=1)
    worst = float(np.abs(row_sums - 1.0).max()) if row_sums.size else 0.0
    if worst > ROW_SUM_TOLERANCE or (resp < 0).any():
        raise DataError(
            f"responsibilities are not row-stochastic (max row-sum error {worst:g})"
        )


def accumulate_stats(
    X: np.ndarray, resp: np.ndarray, m0: np.ndarray | None = None
) -> SufficientStats:
    """Weighted counts, means, and scatter matrices per component.

    Empty components (count below the threshold) take the prior mean and a
    zero scatter.
    """
    X = np.asarray(X, dtype=np.float64)
    resp = np.asarray(resp, dtype=np.float64)
    n, d = X.shape
    if resp.shape[0] != n:
        raise DataError(f"{resp.shape[0]} responsibility rows for {n} data rows")
    check_row_stochastic(resp)
    n_comp = resp.shape[1]
    if m0 is None:
        m0 = np.zeros(d)
    counts = resp.sum(axis=0)
    means = np.empty((n_comp, d))
    scatters = np.zeros((n_comp, d, d))
    for k in range(n_comp):
        if counts[k] < EMPTY_COMPONENT_COUNT:
            means[k] = m0
            continue
        means[k] = resp[:, k] @ X / counts[k]
        diff = X - means[k]
        scatter = (resp[:, k, None] * diff).T @ diff / counts[k]
        scatters[k] = 0.5 * (scatter + scatter.T)
    return SufficientStats(counts=counts, means=means, scatters=scatters)


def chol_with_ridge(matrices: np.ndarray, reg_eps: float = DEFAULT_RIDGE) -> np.ndarray:
    """Lower Cholesky factors with one scale-aware ridge retry per matrix."""
    matrices = np.asarray(matrices, dtype=np.float64)
    out = np.empty_like(matrices)
    d = matrices.shape[-1]
    for idx in range(matrices.shape[0]):
        mat = matrices[idx]
        try:
            out[idx] = np.linalg.cholesky(mat)
            continue
        except np.linalg.LinAlgError:
            pass
        ridge = reg_eps * float(np.trace(mat)) / d
        try:
            out[idx] = np.linalg.cholesky(mat + ridge * np.eye(d))
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                f"covariance matrix {idx} is not positive definite after ridge retry"
            ) from exc
    return out


def m_step(
    stats: SufficientStats,
    priors: Priors,
    cov_mode: str = "full",
    reg_eps: float = DEFAULT_RIDGE,
) -> VariationalState:
    """Conjugate posterior update from sufficient statistics.

    Tied mode pools the per-component scatter terms entrywise in sorted
    order, so the shared posterior is exactly invariant to component order.
    """
    if cov_mode not in COV_MODES:
        raise ConfigError(f"cov_mode must be one of {COV_MODES}, got {cov_mode!r}")
    counts = stats.counts
    alpha = priors.alpha0 + counts
    beta = priors.beta0 + counts
    means = (priors.beta0 * priors.m0 + counts[:, None] * stats.means) / beta[:, None]
    shift = stats.means - priors.m0
    coef = priors.beta0 * counts / beta
    terms = (
        counts[:, None, None] * stats.scatters
        + coef[:, None, None] * np.einsum("ki,kj->kij", shift, shift)
    )
    if cov_mode == "tied":
        pooled = np.sort(terms, axis=0).sum(axis=0)
        w_inv = (priors.w0_inv + pooled)[None]
        nu = np.full(stats.n_components, priors.nu0 + stats.total_count())
    else:
        w_inv = priors.w0_inv[None] + terms
        nu = priors.nu0 + counts
    w_inv_chol = chol_with_ridge(w_inv, reg_eps)
    return VariationalState(
        alpha=alpha,
        beta=beta,
        means=np.ascontiguousarray(means),
        w_inv_chol=np.ascontiguousarray(w_inv_chol),
        nu=nu,
        cov_mode=cov_mode,
    )


def _locate_nonfinite(X, state, logw, qcoef):
    """Cold diagnostic path: find the first non-finite log score."""
    for k in range(state.n_components):
        if not np.isfinite(logw[k]) or not np.isfinite(qcoef[k]):
            return 0, k
    for i in range(X.shape[0]):
        for k in range(state.n_components):
            z = solve_triangular(
                state.component_chol(k),
                X[i] - state.means[k],
                lower=True,
                check_finite=False,
            )
            if not np.isfinite(logw[k] - qcoef[k] * float(z @ z)):
                return i, k
    return 0, 0


def e_step(X: np.ndarray, state: VariationalState) -> tuple[np.ndarray, float]:
    """Responsibilities and the summed per-row log-sum-exp of log scores."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n, d = X.shape
    if d != state.n_features:
        raise DataError(f"data dimension {d} does not match model dimension {state.n_features}")
    logw = np.ascontiguousarray(
        state.expected_log_weights()
        + 0.5 * state.expected_log_det_precision()
        - 0.5 * d * LOG_2PI
        - 0.5 * d / state.beta
    )
    qcoef = np.ascontiguousarray(0.5 * state.nu)
    resp = np.empty((n, state.n_components))
    bound = cluster_logresp(
        X,
        np.ascontiguousarray(state.means),
        np.ascontiguousarray(state.w_inv_chol),
        logw,
        qcoef,
        resp,
    )
    if not np.isfinite(bound) or not np.isfinite(resp).all():
        row, comp = _locate_nonfinite(X, state, logw, qcoef)
        raise NumericalError(
            f"non-finite log responsibility at row {row}, component {comp}"
        )
    return resp, bound


def predict(state: VariationalState, X_new: np.ndarray) -> Assignment:
    """Responsibility argmax on new rows; ties go to the lowest index."""
    resp, _ = e_step(X_new, state)
    labels = np.argmax(resp, axis=1).astype(np.int64)
    return Assignment(labels=labels, scores=resp)


def map_parameters(
    stats: SufficientStats, priors: Priors, sigma_init: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form posterior-mode weights, means, and covariances.

    Diagnostic companion to the variational path: weights are
    (alpha0 - 1 + N_k) / (K(alpha0 - 1) + N), means are the weighted data
    means, covariances are (d sigma_init + N_k S_k) / (N_k - 1).
    """
    sigma_init = np.asarray(sigma_init, dtype=np.float64)
    d = sigma_init.shape[0]
    n_comp = stats.n_components
    total = stats.total_count()
    weights = (priors.alpha0 - 1.0 + stats.counts) / (
        n_comp * (priors.alpha0 - 1.0) + total
    )
    covariances = np.empty((n_comp, d, d))
    for k in range(n_comp):
        if stats.counts[k] < 2:
            raise NumericalError(
                f"component {k}: covariance undefined for effective count "
                f"{stats.counts[k]:g} < 2"
            )
        covariances[k] = (d * sigma_init + stats.counts[k] * stats.scatters[k]) / (
            stats.counts[k] - 1.0
        )
    return weights, stats.means.copy(), covariances
