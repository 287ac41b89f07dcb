"""Anchor sentences, anchor vectors, and the cosine-match initial assignment."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .io import Assignment, ClassSpec, load_embeddings

MASK_TOKENS = ("⟨mask⟩", "<mask>")  # unicode angle-bracket form and ASCII alias


@dataclass
class Template:
    """A sentence pattern with exactly one mask placeholder."""

    text: str

    def __post_init__(self):
        if sum(self.text.count(tok) for tok in MASK_TOKENS) != 1:
            raise ConfigError(
                f"template must contain exactly one mask placeholder: {self.text!r}"
            )

    def fill(self, token: str) -> str:
        rendered = token.replace("_", " ")
        for mask in MASK_TOKENS:
            if mask in self.text:
                return self.text.replace(mask, rendered)
        raise AssertionError("unreachable: validated in __post_init__")


@dataclass
class AnchorSet:
    """Per-class anchor-sentence embeddings and their averaged anchor vector."""

    sentence_embeddings: dict[int, np.ndarray] = field(default_factory=dict)
    anchor_vectors: np.ndarray | None = None

    @classmethod
    def from_embeddings(cls, per_class: dict[int, np.ndarray]) -> "AnchorSet":
        if not per_class:
            raise DataError("anchor set needs at least one class")
        n_classes = max(per_class) + 1
        if sorted(per_class) != list(range(n_classes)):
            raise DataError(
                f"anchor classes must be contiguous 0..K-1, got {sorted(per_class)}"
            )
        vectors = np.vstack([average_anchor(per_class[k]) for k in range(n_classes)])
        return cls(sentence_embeddings=per_class, anchor_vectors=vectors)


def render_anchor_sentences(
    templates: list[Template], classes: list[ClassSpec]
) -> dict[int, list[str]]:
    """Cartesian product of templates and expansion tokens for each class.

    Output order is template-major, token-minor; underscores in tokens are
    rendered as spaces.
    """
    rendered: dict[int, list[str]] = {}
    for spec in classes:
        tokens = spec.expanded if spec.expanded else list(spec.names)
        if not tokens:
            raise DataError(f"class {spec.class_id} has no tokens to render")
        rendered[spec.class_id] = [t.fill(tok) for t in templates for tok in tokens]
    return rendered


def average_anchor(sentence_embeddings: np.ndarray) -> np.ndarray:
    """Arithmetic mean over anchor-sentence embedding rows, unnormalized."""
    sentence_embeddings = np.asarray(sentence_embeddings, dtype=np.float64)
    if sentence_embeddings.ndim != 2 or sentence_embeddings.shape[0] == 0:
        raise DataError("cannot average an empty anchor-sentence matrix")
    return sentence_embeddings.mean(axis=0)


def load_anchor_manifest(path) -> dict[int, np.ndarray]:
    """Load per-class anchor-sentence embeddings from a JSON manifest.

    The manifest maps class ids to SPTC files, either directly or under a
    "classes" key; relative paths resolve against the manifest's directory.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read anchor manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid anchor manifest {path}: {exc}") from exc
    entries = manifest.get("classes", manifest) if isinstance(manifest, dict) else None
    if not isinstance(entries, dict) or not entries:
        raise DataError(f"anchor manifest {path} has no class entries")
    base = os.path.dirname(os.path.abspath(path))
    per_class = {}
    for key, rel in entries.items():
        try:
            class_id = int(key)
        except ValueError as exc:
            raise DataError(f"anchor manifest key {key!r} is not a class id") from exc
        file_path = rel if os.path.isabs(rel) else os.path.join(base, rel)
        per_class[class_id] = load_embeddings(file_path)
    return per_class


def match_assign(embeddings: np.ndarray, anchors: np.ndarray) -> Assignment:
    """Assign each row to the anchor with the highest cosine similarity.

    Scores carry the full cosine matrix; ties break to the lowest class
    index.  Zero-norm rows or anchors are rejected.
    """
    X = np.asarray(embeddings, dtype=np.float64)
    A = np.asarray(anchors, dtype=np.float64)
    if X.ndim != 2 or A.ndim != 2:
        raise DataError("embeddings and anchors must be 2-d")
    if X.shape[1] != A.shape[1]:
        raise DataError(
            f"dimension mismatch: embeddings {X.shape[1]} vs anchors {A.shape[1]}"
        )
    x_norm = np.linalg.norm(X, axis=1)
    a_norm = np.linalg.norm(A, axis=1)
    if (x_norm == 0).any():
        row = int(np.argwhere(x_norm == 0)[0])
        raise DataError(f"degenerate zero-norm embedding at row {row}")
    if (a_norm == 0).any():
        row = int(np.argwhere(a_norm == 0)[0])
        raise DataError(f"degenerate zero-norm anchor at row {row}")
    cosine = (X / x_norm[:, None]) @ (A / a_norm[:, None]).T
    labels = np.argmax(cosine, axis=1).astype(np.int64)  # argmax takes the lowest index on ties
    return Assignment(labels=labels, scores=cosine)
