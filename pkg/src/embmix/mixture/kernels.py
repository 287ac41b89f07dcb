"""Selects the compiled responsibility kernel, falling back to NumPy.

Set EMBMIX_NO_EXT=1 to force the NumPy path (used by the benchmark and the
kernel parity tests).
"""

from __future__ import annotations

import os

if os.environ.get("EMBMIX_NO_EXT"):
    from ._kernels_np import cluster_logresp

    KERNEL_BACKEND = "numpy"
else:
    try:
        from ._kernels import cluster_logresp  # type: ignore[no-redef]

        KERNEL_BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build environment
        from ._kernels_np import cluster_logresp  # type: ignore[no-redef]

        KERNEL_BACKEND = "numpy"

__all__ = ["cluster_logresp", "KERNEL_BACKEND"]
