"""Class-name expansion via top-scoring inner products in a word-vector table."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .io import ClassSpec, WordVectorTable, normalize_token


@dataclass
class ExpansionConfig:
    words_per_class: int = 1000
    include_original_names: bool = True

    def __post_init__(self):
        if self.words_per_class < 0:
            raise DataError("words_per_class must be >= 0")


def resolve_name_vector(table: WordVectorTable, name: str) -> np.ndarray:
    """Look a class name up in the table, falling back for multi-word names.

    Out-of-vocabulary multi-word names resolve to the mean of their
    in-vocabulary constituent tokens; if nothing resolves, raises.
    """
    token = normalize_token(name)
    if token in table:
        return table.vector(token)
    parts = [p for p in token.replace("_", " ").split() if p in table]
    if parts:
        return np.mean([table.vector(p) for p in parts], axis=0)
    raise DataError(f"unknown class name {name!r}: not in vocabulary")


def top_tokens_by_inner_product(
    table: WordVectorTable, query_vector: np.ndarray, count: int
) -> list[str]:
    """Vocabulary tokens with the largest inner products against the query.

    Non-increasing score order; equal scores break by ascending vocabulary
    index; ``count`` is clamped to the vocabulary size.
    """
    scores = table.vectors @ np.asarray(query_vector, dtype=table.vectors.dtype)
    # stable sort keeps ascending-index order among equal scores
    order = np.argsort(-scores, kind="stable")[: max(count, 0)]
    index_to_token = {i: t for t, i in table.vocab.items()}
    return [index_to_token[int(i)] for i in order]


def rank_neighbors(table: WordVectorTable, query: str, count: int) -> list[str]:
    """Top tokens by inner product against an in-vocabulary query token."""
    token = normalize_token(query)
    if token not in table:
        raise DataError(f"unknown query token {query!r}: not in vocabulary")
    return top_tokens_by_inner_product(table, table.vector(token), count)


def expand_class_names(
    table: WordVectorTable, classes: list[ClassSpec], config: ExpansionConfig
) -> list[ClassSpec]:
    """Fill in each class's expansion token set.

    Each of a class's m names contributes its floor(words_per_class/m)
    highest-inner-product vocabulary tokens (the name token itself counts as
    a candidate).  Candidates are deduplicated within the class, then any
    token appearing in two or more classes' candidate sets is deleted from
    all of them with no refill.  Original names are kept afterwards when
    configured.
    """
    if config.words_per_class == 0 and not config.include_original_names:
        warnings.warn("words_per_class=0 without original names: all expansions empty")

    candidates: list[list[str]] = []
    for spec in classes:
        per_name = config.words_per_class // len(spec.names)
        seen: set[str] = set()
        merged: list[str] = []
        for name in spec.names:
            vector = resolve_name_vector(table, name)
            for token in top_tokens_by_inner_product(table, vector, per_name):
                if token not in seen:
                    seen.add(token)
                    merged.append(token)
        candidates.append(merged)

    counts: dict[str, int] = {}
    for tokens in candidates:
        for token in tokens:
            counts[token] = counts.get(token, 0) + 1

    expanded_classes = []
    for spec, tokens in zip(classes, candidates):
        kept = [t for t in tokens if counts[t] == 1]
        if config.include_original_names:
            present = {normalize_token(t) for t in kept}
            for name in spec.names:
                if normalize_token(name) not in present:
                    kept.append(name)
                    present.add(normalize_token(name))
        expanded_classes.append(
            ClassSpec(class_id=spec.class_id, names=list(spec.names), expanded=kept)
        )
    return expanded_classes
