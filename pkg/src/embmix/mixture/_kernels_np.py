"""Chunked NumPy implementation of the shared responsibility kernel."""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

CHUNK_ROWS = 512


def cluster_logresp(X, means, chols, logw, qcoef, resp_out):
    """Write row-softmax responsibilities, return the summed row log-sum-exp.

    The per-row, per-component log score is
    ``logw[k] - qcoef[k] * ||L_k^{-1} (x - means[k])||^2`` where ``chols``
    holds one lower Cholesky factor per component, or a single shared
    factor.  The softmax denominator sums exponentials in ascending order
    so the result does not depend on component ordering.
    """
    n, _ = X.shape
    n_comp = means.shape[0]
    shared = chols.shape[0] == 1
    total = 0.0
    for start in range(0, n, CHUNK_ROWS):
        block = X[start:start + CHUNK_ROWS]
        rows = block.shape[0]
        logp = np.empty((rows, n_comp))
        for k in range(n_comp):
            factor = chols[0] if shared else chols[k]
            z = solve_triangular(
                factor, (block - means[k]).T, lower=True, check_finite=False
            )
            logp[:, k] = logw[k] - qcoef[k] * np.einsum("ij,ij->j", z, z)
        top = logp.max(axis=1)
        np.exp(logp - top[:, None], out=logp)
        denom = np.sort(logp, axis=1).sum(axis=1)
        resp_out[start:start + rows] = logp / denom[:, None]
        total += float(np.log(denom).sum() + top.sum())
    return total
