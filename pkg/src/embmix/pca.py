"""PCA via singular value decomposition, sized by a reconstruction-error target."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError

DEFAULT_TARGET_ERROR = 0.03


@dataclass
class PcaModel:
    """Centering vector, orthonormal principal directions, and their variances."""

    mean: np.ndarray                # (d,)
    components: np.ndarray          # (k, d), orthonormal rows
    explained_variance: np.ndarray  # (k,), non-increasing
    target_error: float

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def n_features(self) -> int:
        return self.components.shape[1]


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Flip each direction so its largest-magnitude entry is positive."""
    fixed = components.copy()
    for row in fixed:
        pivot = int(np.argmax(np.abs(row)))
        if row[pivot] < 0:
            row *= -1.0
    return fixed


def pca_fit(
    X: np.ndarray,
    target_reconstruction_error: float = DEFAULT_TARGET_ERROR,
    n_components: int | None = None,
) -> PcaModel:
    """Keep the fewest directions whose dropped-variance share meets the target.

    The SVD runs on the centered data matrix rather than its covariance,
    which stays stable when the dimension far exceeds the row count.  An
    explicit n_components overrides the target-based choice.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DataError(f"PCA needs at least 2 rows, got shape {X.shape}")
    if not 0.0 < target_reconstruction_error < 1.0:
        raise ConfigError(
            f"target reconstruction error must be in (0, 1), got {target_reconstruction_error}"
        )
    n, d = X.shape
    mean = X.mean(axis=0)
    centered = X - mean
    _, singular_values, vt = np.linalg.svd(centered, full_matrices=False)
    variances = singular_values**2 / (n - 1)
    cumulative = np.cumsum(variances)
    total = cumulative[-1]
    if total <= 0.0:
        raise DataError("PCA is undefined on data with zero variance")
    if n_components is not None:
        if not 1 <= n_components <= variances.shape[0]:
            raise ConfigError(
                f"n_components must be in [1, {variances.shape[0]}], got {n_components}"
            )
        k = n_components
    else:
        dropped_share = 1.0 - cumulative / total
        k = int(np.argmax(dropped_share <= target_reconstruction_error)) + 1
    return PcaModel(
        mean=mean,
        components=_fix_signs(vt[:k]),
        explained_variance=variances[:k],
        target_error=float(target_reconstruction_error),
    )


def pca_transform(model: PcaModel, X: np.ndarray) -> np.ndarray:
    """Project rows onto the principal directions after centering."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DataError(
            f"cannot project shape {X.shape} with a {model.n_features}-feature model"
        )
    return (X - model.mean) @ model.components.T


def pca_inverse_transform(model: PcaModel, reduced: np.ndarray) -> np.ndarray:
    """Map projected rows back into the original space."""
    reduced = np.asarray(reduced, dtype=np.float64)
    if reduced.ndim != 2 or reduced.shape[1] != model.n_components:
        raise DataError(
            f"cannot reconstruct shape {reduced.shape} with a "
            f"{model.n_components}-component model"
        )
    return reduced @ model.components + model.mean


def reconstruction_error(model: PcaModel, X: np.ndarray) -> float:
    """Relative squared reconstruction error of X under the model."""
    X = np.asarray(X, dtype=np.float64)
    centered = X - model.mean
    rebuilt = pca_inverse_transform(model, pca_transform(model, X)) - model.mean
    total = float((centered**2).sum())
    if total == 0.0:
        return 0.0
    return float(((centered - rebuilt) ** 2).sum()) / total
