"""On-disk container for fitted Bayesian mixture models.

Layout: magic "BMM1", a little-endian u32 header length, a JSON header with
the scalar parameters, then SPTC blocks for the posterior means and the
lower Cholesky factors of each Wishart scale matrix.
"""

from __future__ import annotations

import json
import struct

import numpy as np
from scipy.linalg import solve_triangular

from ..errors import DataError, NumericalError
from ..io import read_embeddings_block, write_embeddings_block
from .core import VariationalState

MODEL_MAGIC = b"BMM1"
MODEL_FORMAT = 1
_LEN = struct.Struct("<I")


def _scale_chol_from_inv_chol(inv_chol: np.ndarray) -> np.ndarray:
    """chol(W) from chol(W^-1): W = L^-T L^-1 for L = chol(W^-1)."""
    d = inv_chol.shape[0]
    inv = solve_triangular(inv_chol, np.eye(d), lower=True, check_finite=False)
    scale = inv.T @ inv
    return np.linalg.cholesky(0.5 * (scale + scale.T))


def _inv_chol_from_scale_chol(scale_chol: np.ndarray) -> np.ndarray:
    """chol(W^-1) from chol(W), the inverse of the conversion above."""
    d = scale_chol.shape[0]
    try:
        inv = solve_triangular(scale_chol, np.eye(d), lower=True, check_finite=False)
        w_inv = inv.T @ inv
        return np.linalg.cholesky(0.5 * (w_inv + w_inv.T))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError("stored scale factor is not positive definite") from exc


def save_model(state: VariationalState, path) -> None:
    header = {
        "format": MODEL_FORMAT,
        "n_components": state.n_components,
        "n_features": state.n_features,
        "cov_mode": state.cov_mode,
        "alpha": state.alpha.tolist(),
        "beta": state.beta.tolist(),
        "nu": state.nu.tolist(),
        "n_scale_matrices": int(state.w_inv_chol.shape[0]),
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    try:
        with open(path, "wb") as fh:
            fh.write(MODEL_MAGIC)
            fh.write(_LEN.pack(len(blob)))
            fh.write(blob)
            write_embeddings_block(fh, state.means)
            for idx in range(state.w_inv_chol.shape[0]):
                write_embeddings_block(fh, _scale_chol_from_inv_chol(state.w_inv_chol[idx]))
    except OSError as exc:
        raise DataError(f"cannot write model to {path}: {exc}") from exc


def load_model(path) -> VariationalState:
    try:
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != MODEL_MAGIC:
                raise DataError(f"bad model magic {magic!r} in {path}")
            (length,) = _LEN.unpack(fh.read(_LEN.size))
            try:
                header = json.loads(fh.read(length).decode("utf-8"))
            except (ValueError, UnicodeDecodeError) as exc:
                raise DataError(f"corrupt model header in {path}: {exc}") from exc
            if header.get("format") != MODEL_FORMAT:
                raise DataError(f"unsupported model format {header.get('format')}")
            means = np.asarray(read_embeddings_block(fh), dtype=np.float64)
            n_matrices = int(header["n_scale_matrices"])
            d = int(header["n_features"])
            inv_chols = np.empty((n_matrices, d, d))
            for idx in range(n_matrices):
                block = np.asarray(read_embeddings_block(fh), dtype=np.float64)
                if block.shape != (d, d):
                    raise DataError(
                        f"scale matrix {idx} has shape {block.shape}, expected {(d, d)}"
                    )
                inv_chols[idx] = _inv_chol_from_scale_chol(np.tril(block))
    except OSError as exc:
        raise DataError(f"cannot read model from {path}: {exc}") from exc
    state = VariationalState(
        alpha=np.asarray(header["alpha"], dtype=np.float64),
        beta=np.asarray(header["beta"], dtype=np.float64),
        means=np.ascontiguousarray(means),
        w_inv_chol=np.ascontiguousarray(inv_chols),
        nu=np.asarray(header["nu"], dtype=np.float64),
        cov_mode=str(header["cov_mode"]),
    )
    if means.shape != (state.n_components, d):
        raise DataError(
            f"means block has shape {means.shape}, expected {(state.n_components, d)}"
        )
    return state
