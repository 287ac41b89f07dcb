"""Metrics, cluster-label alignment, unbalanced subsampling, and the
algorithm-comparison harness."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ConfigError, DataError, EmbmixError
from .io import Assignment, LabeledDataset
from .mixture import (
    FitConfig,
    Priors,
    bgmm_fit,
    gmm_fit,
    init_from_assignment,
    kmeans_fit,
)
from .anchors import match_assign

ABLATION_ALGORITHMS = ("kmeans", "gmm", "bgmm")
DEFAULT_RATIO_GRID = (0.01, 0.05, 0.1, 0.3, 0.5, 0.7, 0.9)


@dataclass
class Metrics:
    accuracy: float
    micro_f1: float
    macro_f1: float
    per_class_f1: np.ndarray
    confusion: np.ndarray  # (K, K) counts, rows gold, columns predicted

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "micro_f1": self.micro_f1,
            "macro_f1": self.macro_f1,
            "per_class_f1": [float(v) for v in self.per_class_f1],
            "confusion": self.confusion.tolist(),
        }


@dataclass
class UnbalanceSpec:
    """Which class to thin out, by how much, and with which seed."""

    target_class: int
    keep_ratio: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.keep_ratio <= 1.0:
            raise ConfigError(f"keep_ratio must be in (0, 1], got {self.keep_ratio}")


def _as_labels(pred) -> np.ndarray:
    labels = pred.labels if isinstance(pred, Assignment) else pred
    return np.asarray(labels, dtype=np.int64)


def compute_metrics(pred, gold, n_classes: int) -> Metrics:
    """Accuracy, micro/macro F1, per-class F1, and the confusion matrix.

    All counts stay integral until the final divisions, which makes
    micro F1 equal accuracy exactly.  Classes absent from both prediction
    and gold score F1 = 0 and still enter the macro average; the macro sum
    runs in ascending value order so class order cannot change it.
    """
    pred = _as_labels(pred)
    gold = np.asarray(gold, dtype=np.int64)
    if pred.shape[0] != gold.shape[0]:
        raise DataError(f"{pred.shape[0]} predictions for {gold.shape[0]} gold labels")
    n = pred.shape[0]
    if n == 0:
        raise DataError("cannot score an empty prediction set")
    for name, values in (("pred", pred), ("gold", gold)):
        if values.min() < 0 or values.max() >= n_classes:
            raise DataError(f"{name} labels outside [0, {n_classes})")
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (gold, pred), 1)
    true_pos = np.diag(confusion)
    false_pos = confusion.sum(axis=0) - true_pos
    false_neg = confusion.sum(axis=1) - true_pos
    denom = 2 * true_pos + false_pos + false_neg
    per_class = np.where(denom > 0, 2 * true_pos / np.maximum(denom, 1), 0.0)
    correct = int(true_pos.sum())
    return Metrics(
        accuracy=correct / n,
        micro_f1=(2 * correct) / (2 * n),
        macro_f1=float(np.sort(per_class).sum() / n_classes),
        per_class_f1=per_class,
        confusion=confusion,
    )


def align_labels(pred, gold, n_classes: int) -> Assignment:
    """Relabel clusters by the one-to-one mapping maximizing agreement."""
    labels = _as_labels(pred)
    gold = np.asarray(gold, dtype=np.int64)
    if labels.shape[0] != gold.shape[0]:
        raise DataError(f"{labels.shape[0]} predictions for {gold.shape[0]} gold labels")
    agreement = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(agreement, (labels, gold), 1)
    cluster_idx, class_idx = linear_sum_assignment(agreement, maximize=True)
    mapping = np.empty(n_classes, dtype=np.int64)
    mapping[cluster_idx] = class_idx
    scores = None
    if isinstance(pred, Assignment) and pred.scores is not None:
        scores = np.empty_like(pred.scores)
        scores[:, mapping] = pred.scores
    return Assignment(labels=mapping[labels], scores=scores)


def subsample_unbalanced(dataset: LabeledDataset, spec: UnbalanceSpec) -> LabeledDataset:
    """Keep a seeded uniform fraction of one class, all of the others.

    Row order within the result follows the original dataset, so repeated
    runs with the same seed are bit-identical.
    """
    if dataset.gold_labels is None:
        raise DataError("unbalanced subsampling needs gold labels")
    gold = np.asarray(dataset.gold_labels)
    target_rows = np.flatnonzero(gold == spec.target_class)
    if target_rows.size == 0:
        raise DataError(f"target class {spec.target_class} has no rows")
    keep = int(np.floor(spec.keep_ratio * target_rows.size))
    if keep == 0:
        raise DataError(
            f"keep_ratio {spec.keep_ratio} empties class {spec.target_class} "
            f"({target_rows.size} rows)"
        )
    rng = np.random.default_rng(spec.seed)
    chosen = rng.choice(target_rows, size=keep, replace=False)
    other_rows = np.flatnonzero(gold != spec.target_class)
    index = np.sort(np.concatenate([chosen, other_rows]))
    return dataset.subset(index)


@dataclass
class AblationCell:
    metrics: Metrics | None
    error: str | None = None


def run_ablation(
    dataset: LabeledDataset,
    anchors: np.ndarray,
    priors: Priors,
    config: FitConfig,
    algorithms=ABLATION_ALGORITHMS,
    cov_mode: str = "full",
) -> dict[str, AblationCell]:
    """Fit each algorithm from one shared anchor-match initialization.

    Scores come from the test split.  The Bayesian mixture keeps the
    anchor-induced component identities; the unsupervised comparators get
    their clusters aligned to classes first.  A failing algorithm records
    its error and does not stop the others.
    """
    unknown = set(algorithms) - set(ABLATION_ALGORITHMS)
    if unknown:
        raise ConfigError(f"unknown algorithms: {sorted(unknown)}")
    if dataset.gold_labels is None:
        raise DataError("the comparison harness needs gold labels")
    X = np.ascontiguousarray(dataset.embeddings, dtype=np.float64)
    n_classes = anchors.shape[0]
    init = match_assign(X, anchors)
    init_resp = init_from_assignment(X, init, n_classes)
    test_mask = dataset.test_mask
    if not test_mask.any():
        raise DataError("no test rows to score")
    gold_test = np.asarray(dataset.gold_labels)[test_mask]
    if gold_test.min() < 0:
        raise DataError("some test rows have no gold label")
    results: dict[str, AblationCell] = {}
    for algorithm in algorithms:
        try:
            if algorithm == "bgmm":
                state, _ = bgmm_fit(X, init_resp, priors, config, cov_mode)
                labels = np.argmax(state.responsibilities[test_mask], axis=1)
                scored = Assignment(labels=labels.astype(np.int64))
            elif algorithm == "gmm":
                _, labels, _ = gmm_fit(X, init_resp, config, cov_mode)
                scored = align_labels(labels[test_mask], gold_test, n_classes)
            else:
                fit = kmeans_fit(X, init.labels, config, n_clusters=n_classes)
                scored = align_labels(fit.labels[test_mask], gold_test, n_classes)
            results[algorithm] = AblationCell(
                metrics=compute_metrics(scored, gold_test, n_classes)
            )
        except EmbmixError as exc:
            results[algorithm] = AblationCell(metrics=None, error=str(exc))
    return results
