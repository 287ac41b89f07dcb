"""Zero-shot text classification by clustering sentence embeddings.

Texts and class-anchor sentences are embedded elsewhere; this package
expands class names with a word-vector table, matches each text to its
nearest class anchor by cosine similarity, and refines that assignment
with a variational Bayesian Gaussian mixture.
"""

__version__ = "0.1.0"

from .anchors import AnchorSet, Template, average_anchor, match_assign, render_anchor_sentences
from .errors import ConfigError, DataError, EmbmixError, NumericalError
from .evaluate import (
    Metrics,
    UnbalanceSpec,
    align_labels,
    compute_metrics,
    run_ablation,
    subsample_unbalanced,
)
from .expansion import ExpansionConfig, expand_class_names, rank_neighbors
from .io import (
    Assignment,
    ClassSpec,
    LabeledDataset,
    WordVectorTable,
    load_dataset,
    load_embeddings,
    load_word_vectors,
    save_embeddings,
)
from .mixture import (
    FitConfig,
    Priors,
    VariationalState,
    bgmm_fit,
    compute_sigma_init,
    gmm_fit,
    init_from_assignment,
    kmeans_fit,
    predict,
)
from .pca import PcaModel, pca_fit, pca_transform
from .pipeline import ExperimentConfig, run_pipeline

__all__ = [
    "AnchorSet",
    "Assignment",
    "ClassSpec",
    "ConfigError",
    "DataError",
    "EmbmixError",
    "ExperimentConfig",
    "ExpansionConfig",
    "FitConfig",
    "LabeledDataset",
    "Metrics",
    "NumericalError",
    "PcaModel",
    "Priors",
    "Template",
    "UnbalanceSpec",
    "VariationalState",
    "WordVectorTable",
    "align_labels",
    "average_anchor",
    "bgmm_fit",
    "compute_metrics",
    "compute_sigma_init",
    "expand_class_names",
    "gmm_fit",
    "init_from_assignment",
    "kmeans_fit",
    "load_dataset",
    "load_embeddings",
    "load_word_vectors",
    "match_assign",
    "pca_fit",
    "pca_transform",
    "predict",
    "rank_neighbors",
    "render_anchor_sentences",
    "run_ablation",
    "run_pipeline",
    "save_embeddings",
    "subsample_unbalanced",
]
