"""End-to-end experiment driver: expand, render, match, fit, predict, score.

A run is a pure function of its config file and input files; every stage
writes its output under the run directory so any stage can be re-run or
inspected on its own.
"""

from __future__ import annotations

import contextlib
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np
import scipy

from .anchors import (
    AnchorSet,
    Template,
    load_anchor_manifest,
    match_assign,
    render_anchor_sentences,
)
from .errors import ConfigError, DataError, EmbmixError
from .evaluate import Metrics, compute_metrics
from .expansion import ExpansionConfig, expand_class_names
from .io import Assignment, ClassSpec, LabeledDataset, load_dataset, load_word_vectors, save_embeddings
from .mixture import (
    FitConfig,
    Priors,
    bgmm_fit,
    compute_sigma_init,
    init_from_assignment,
    predict,
)
from .mixture.kernels import KERNEL_BACKEND
from .mixture.model import save_model
from .pca import PcaModel, pca_fit, pca_transform
from .presets import get_preset

_CONFIG_KEYS = {
    "preset",
    "texts",
    "embeddings",
    "anchor_embeddings",
    "output_dir",
    "word_vectors",
    "classes",
    "templates",
    "words_per_class",
    "include_original_names",
    "cov_mode",
    "max_iter",
    "alpha0",
    "label_change_tolerance",
    "pca_target",
    "seed",
}

_PRESET_KEYS = ("classes", "templates", "max_iter", "cov_mode")


@dataclass
class ExperimentConfig:
    """One experiment: inputs, class/template choices, and fitting knobs."""

    texts: str
    embeddings: str
    anchor_embeddings: str
    output_dir: str
    classes: list[list[str]]
    templates: list[str]
    word_vectors: str | None = None
    words_per_class: int = 1000
    include_original_names: bool = True
    cov_mode: str = "full"
    max_iter: int = 50
    alpha0: float | None = None
    label_change_tolerance: int = 0
    pca_target: float | None = None
    seed: int = 0
    raw: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.classes:
            raise ConfigError("at least one class is required")
        for i, names in enumerate(self.classes):
            if not names:
                raise ConfigError(f"class {i} has no names")
        if not self.templates:
            raise ConfigError("at least one template is required")
        if self.cov_mode not in ("full", "tied"):
            raise ConfigError(f"cov_mode must be 'full' or 'tied', got {self.cov_mode!r}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be at least 1, got {self.max_iter}")
        if self.words_per_class < 0:
            raise ConfigError(f"words_per_class must be >= 0, got {self.words_per_class}")
        if self.pca_target is not None and not 0.0 < self.pca_target < 1.0:
            raise ConfigError(f"pca_target must be in (0, 1), got {self.pca_target}")

    @classmethod
    def from_dict(cls, raw: dict, base_dir: str = ".") -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(raw) - _CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        merged: dict = {}
        if raw.get("preset"):
            preset = get_preset(raw["preset"])
            merged.update({k: preset[k] for k in _PRESET_KEYS})
        merged.update({k: v for k, v in raw.items() if k != "preset" and v is not None})
        missing = [
            k
            for k in ("texts", "embeddings", "anchor_embeddings", "output_dir", "classes", "templates")
            if k not in merged
        ]
        if missing:
            raise ConfigError(f"missing config keys: {', '.join(missing)}")
        for key in ("texts", "embeddings", "anchor_embeddings", "output_dir", "word_vectors"):
            if merged.get(key) is not None:
                merged[key] = _resolve(base_dir, merged[key])
        return cls(raw=dict(raw), **merged)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid config {path}: {exc}") from exc
        return cls.from_dict(raw, base_dir=os.path.dirname(os.path.abspath(path)))


def _resolve(base_dir: str, path: str) -> str:
    return path if os.path.isabs(path) else os.path.join(base_dir, path)


def write_json(path, obj) -> None:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2, ensure_ascii=False)
        fh.write("\n")


def write_jsonl(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False))
            fh.write("\n")


@contextlib.contextmanager
def _stage(name: str):
    """Prefix any failure with the pipeline stage it occurred in."""
    try:
        yield
    except EmbmixError as exc:
        raise type(exc)(f"stage {name}: {exc}") from exc


def config_digest(raw: dict) -> str:
    blob = json.dumps(raw, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


@dataclass
class PipelineResult:
    metrics: Metrics | None
    output_dir: str
    test_assignment: Assignment
    n_iterations: int


def run_pipeline(config: ExperimentConfig) -> PipelineResult:
    """Execute every stage, writing artifacts under config.output_dir.

    Halts with an actionable message if the anchor-sentence embeddings are
    missing, since producing them is the embedder's job.
    """
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    n_classes = len(config.classes)
    class_specs = [
        ClassSpec(class_id=i, names=list(names)) for i, names in enumerate(config.classes)
    ]

    with _stage("expand"):
        if config.word_vectors is not None:
            table = load_word_vectors(config.word_vectors)
            class_specs = expand_class_names(
                table,
                class_specs,
                ExpansionConfig(
                    words_per_class=config.words_per_class,
                    include_original_names=config.include_original_names,
                ),
            )
        elif config.words_per_class > 0:
            raise ConfigError(
                "class-name expansion needs word_vectors; set words_per_class "
                "to 0 to use the original names only"
            )
        else:
            for spec in class_specs:
                spec.expanded = list(spec.names) if config.include_original_names else []
        write_json(
            os.path.join(out, "expanded.json"),
            {str(spec.class_id): spec.expanded for spec in class_specs},
        )

    rendered_path = os.path.join(out, "anchors_rendered.jsonl")
    with _stage("render"):
        templates = [Template(text) for text in config.templates]
        rendered = render_anchor_sentences(templates, class_specs)
        write_jsonl(
            rendered_path,
            (
                {"class_id": class_id, "sentence": sentence}
                for class_id in sorted(rendered)
                for sentence in rendered[class_id]
            ),
        )

    with _stage("load"):
        if not os.path.exists(config.anchor_embeddings):
            raise DataError(
                f"anchor embeddings manifest not found at {config.anchor_embeddings}; "
                f"embed the rendered sentences in {rendered_path} with the embedder "
                f"(embed --model <model-id> --anchors {rendered_path} "
                f"--out-dir <dir>) and point anchor_embeddings at the manifest it writes"
            )
        per_class = load_anchor_manifest(config.anchor_embeddings)
        dataset = load_dataset(
            config.texts, config.embeddings, classes=[names[0] for names in config.classes]
        )
        X = np.ascontiguousarray(dataset.embeddings, dtype=np.float64)

    with _stage("match"):
        if sorted(per_class) != list(range(n_classes)):
            raise DataError(
                f"anchor manifest covers classes {sorted(per_class)} but the "
                f"config declares {n_classes} classes"
            )
        anchor_set = AnchorSet.from_embeddings(per_class)
        anchors = anchor_set.anchor_vectors

    pca_model: PcaModel | None = None
    with _stage("pca"):
        if config.pca_target is not None:
            pca_model = pca_fit(X, config.pca_target)
            X = np.ascontiguousarray(pca_transform(pca_model, X))
            anchors = pca_transform(pca_model, anchors)
            save_embeddings(X, os.path.join(out, "embeddings_reduced.sptc"))

    with _stage("match"):
        if anchors.shape[1] != X.shape[1]:
            raise DataError(
                f"anchor dimension {anchors.shape[1]} does not match text "
                f"embedding dimension {X.shape[1]}"
            )
        assignment = match_assign(X, anchors)
        write_jsonl(
            os.path.join(out, "match.jsonl"),
            (
                {
                    "id": dataset.ids[i],
                    "label": int(assignment.labels[i]),
                    "scores": [float(v) for v in assignment.scores[i]],
                }
                for i in range(len(dataset))
            ),
        )

    with _stage("fit"):
        sigma_init = compute_sigma_init(X)
        priors = Priors.noninformative(
            n_samples=X.shape[0],
            n_components=n_classes,
            sigma_init=sigma_init,
            alpha0=config.alpha0,
        )
        fit_config = FitConfig(
            max_iter=config.max_iter,
            label_change_tolerance=config.label_change_tolerance,
            seed=config.seed,
        )
        init_resp = init_from_assignment(X, assignment, n_classes)
        state, fit_log = bgmm_fit(X, init_resp, priors, fit_config, config.cov_mode)
        save_model(state, os.path.join(out, "model.bmm"))

    with _stage("predict"):
        test_mask = dataset.test_mask
        if not test_mask.any():
            raise DataError("no rows tagged 'test'; nothing to predict on")
        test_ids = [dataset.ids[i] for i in np.flatnonzero(test_mask)]
        test_pred = predict(state, X[test_mask])
        write_jsonl(
            os.path.join(out, "assignments.jsonl"),
            (
                {
                    "id": test_ids[i],
                    "label": int(test_pred.labels[i]),
                    "max_responsibility": float(test_pred.scores[i, test_pred.labels[i]]),
                }
                for i in range(len(test_ids))
            ),
        )

    metrics: Metrics | None = None
    with _stage("eval"):
        if dataset.gold_labels is not None:
            gold_test = dataset.gold_labels[test_mask]
            if (gold_test >= 0).all():
                metrics = compute_metrics(test_pred.labels, gold_test, n_classes)
                write_json(os.path.join(out, "metrics.json"), metrics.to_dict())

    with _stage("manifest"):
        import embmix

        write_json(
            os.path.join(out, "manifest.json"),
            {
                "config_sha256": config_digest(config.raw),
                "package_version": embmix.__version__,
                "numpy_version": np.__version__,
                "scipy_version": scipy.__version__,
                "kernel_backend": KERNEL_BACKEND,
                "n_classes": n_classes,
                "n_rows": int(X.shape[0]),
                "n_features": int(X.shape[1]),
                "pca_components": None if pca_model is None else pca_model.n_components,
                "iterations": [
                    {
                        "iteration": rec.iteration,
                        "objective": rec.objective,
                        "label_changes": rec.label_changes,
                    }
                    for rec in fit_log
                ],
            },
        )

    return PipelineResult(
        metrics=metrics,
        output_dir=out,
        test_assignment=test_pred,
        n_iterations=len(fit_log),
    )


def emit_projection(
    dataset: LabeledDataset,
    model: PcaModel,
    dims: int,
    path,
    pred: Assignment | None = None,
) -> None:
    """Write plot-ready JSONL points: id, coords, optional label and pred."""
    if dims not in (2, 3):
        raise ConfigError(f"dims must be 2 or 3, got {dims}")
    if model.n_components < dims:
        raise ConfigError(
            f"projection model has only {model.n_components} components, need {dims}"
        )
    coords = pca_transform(model, dataset.embeddings)[:, :dims]
    records = []
    for i in range(len(dataset)):
        rec: dict = {"id": dataset.ids[i], "coords": [float(v) for v in coords[i]]}
        if dataset.gold_labels is not None and dataset.gold_labels[i] >= 0:
            rec["label"] = int(dataset.gold_labels[i])
        if pred is not None:
            rec["pred"] = int(pred.labels[i])
        records.append(rec)
    write_jsonl(path, records)
