"""Variational fitting loop for the Bayesian Gaussian mixture."""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..errors import NumericalError
from .core import (
    FitConfig,
    IterationRecord,
    Priors,
    VariationalState,
    accumulate_stats,
    check_row_stochastic,
    e_step,
    m_step,
)


def bgmm_fit(
    X: np.ndarray,
    init: np.ndarray,
    priors: Priors,
    config: FitConfig,
    cov_mode: str = "full",
    iteration_callback: Callable[[int, VariationalState, np.ndarray], None] | None = None,
) -> tuple[VariationalState, list[IterationRecord]]:
    """Alternate posterior updates and responsibility re-estimation.

    Starts with a posterior update on the initial responsibilities.  After
    each re-estimation the hard labels are compared with the previous
    iteration's; the loop stops once the number of changed labels is at
    most config.label_change_tolerance, or after config.max_iter
    iterations.  The returned log has one record per executed iteration.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    resp = np.asarray(init, dtype=np.float64)
    check_row_stochastic(resp)
    labels_prev = np.argmax(resp, axis=1)
    log: list[IterationRecord] = []
    state: VariationalState | None = None
    for iteration in range(1, config.max_iter + 1):
        try:
            stats = accumulate_stats(X, resp, m0=priors.m0)
            state = m_step(stats, priors, cov_mode, reg_eps=config.reg_eps)
            resp, bound = e_step(X, state)
        except NumericalError as exc:
            raise NumericalError(f"iteration {iteration}: {exc}") from exc
        labels = np.argmax(resp, axis=1)
        changes = int(np.count_nonzero(labels != labels_prev))
        log.append(IterationRecord(iteration=iteration, objective=bound, label_changes=changes))
        if iteration_callback is not None:
            iteration_callback(iteration, state, resp)
        if changes <= config.label_change_tolerance:
            break
        labels_prev = labels
    assert state is not None
    state.responsibilities = resp
    state.elbo_history = [record.objective for record in log]
    return state, log
