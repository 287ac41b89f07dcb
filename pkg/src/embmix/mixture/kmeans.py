"""Lloyd's algorithm with class-mean initialization, the simplest comparator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from ..errors import DataError
from .core import FitConfig, IterationRecord


@dataclass
class KmeansResult:
    centroids: np.ndarray
    labels: np.ndarray
    n_iter: int
    log: list[IterationRecord]


def _class_means(X: np.ndarray, labels: np.ndarray, n_clusters: int) -> np.ndarray:
    d = X.shape[1]
    sums = np.zeros((n_clusters, d))
    np.add.at(sums, labels, X)
    counts = np.bincount(labels, minlength=n_clusters)
    centroids = np.empty((n_clusters, d))
    reference = X.mean(axis=0)
    used = np.zeros(X.shape[0], dtype=bool)
    for k in range(n_clusters):
        if counts[k] > 0:
            centroids[k] = sums[k] / counts[k]
    # empty clusters seed from the point farthest from the data mean,
    # each point used at most once, lowest index on ties
    for k in range(n_clusters):
        if counts[k] > 0:
            continue
        distances = np.linalg.norm(X - reference, axis=1)
        distances[used] = -1.0
        pick = int(np.argmax(distances))
        centroids[k] = X[pick]
        used[pick] = True
    return centroids


def kmeans_fit(
    X: np.ndarray,
    init_labels: np.ndarray,
    config: FitConfig,
    n_clusters: int | None = None,
) -> KmeansResult:
    """Lloyd iterations from centroids at the initial class means.

    A cluster left empty by an assignment step gets its centroid relocated
    to the point farthest from its assigned centroid (sequentially, lowest
    index on ties); the relocated point keeps its label until the next
    assignment step.  The loop stops on zero reassignments, but never on
    the first iteration, or after config.max_iter iterations.
    """
    X = np.asarray(X, dtype=np.float64)
    init_labels = np.asarray(init_labels)
    n = X.shape[0]
    if init_labels.shape[0] != n:
        raise DataError(f"{init_labels.shape[0]} labels for {n} rows")
    if n_clusters is None:
        n_clusters = int(init_labels.max()) + 1
    if init_labels.min() < 0 or init_labels.max() >= n_clusters:
        raise DataError(f"labels outside [0, {n_clusters})")
    centroids = _class_means(X, init_labels, n_clusters)
    prev_labels = init_labels.astype(np.int64)
    labels = prev_labels
    log: list[IterationRecord] = []
    iteration = 0
    for iteration in range(1, config.max_iter + 1):
        sq_dist = cdist(X, centroids, "sqeuclidean")
        labels = np.argmin(sq_dist, axis=1).astype(np.int64)
        assigned = sq_dist[np.arange(n), labels].copy()
        inertia = float(assigned.sum())
        changes = int(np.count_nonzero(labels != prev_labels))
        log.append(IterationRecord(iteration=iteration, objective=inertia, label_changes=changes))
        counts = np.bincount(labels, minlength=n_clusters)
        sums = np.zeros((n_clusters, X.shape[1]))
        np.add.at(sums, labels, X)
        for k in range(n_clusters):
            if counts[k] > 0:
                centroids[k] = sums[k] / counts[k]
        for k in np.flatnonzero(counts == 0):
            pick = int(np.argmax(assigned))
            if assigned[pick] < 0:
                continue
            centroids[k] = X[pick]
            assigned[pick] = -1.0
        if iteration >= 2 and changes == 0:
            break
        prev_labels = labels
    return KmeansResult(centroids=centroids, labels=labels, n_iter=iteration, log=log)
