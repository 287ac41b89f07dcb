"""Domain types and on-disk formats: embedding matrices, datasets, word vectors.

The binary embedding format ("SPTC") is: 4-byte magic ``SPTC``, u32
version (currently 1), u64 row count, u64 column count, then rows*cols
little-endian float32 values in row-major order.  Round-tripping a float32
matrix through save/load is bit-exact.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

SPTC_MAGIC = b"SPTC"
SPTC_VERSION = 1
_HEADER = struct.Struct("<4sIQQ")

SPLIT_TRAIN = "train"
SPLIT_TEST = "test"


@dataclass
class ClassSpec:
    """One target class: its index, given names, and expansion tokens."""

    class_id: int
    names: list[str]
    expanded: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.names:
            raise DataError(f"class {self.class_id} has no names")


@dataclass
class Assignment:
    """Per-row class labels, optionally with per-class scores."""

    labels: np.ndarray
    scores: np.ndarray | None = None

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.scores is not None:
            self.scores = np.asarray(self.scores, dtype=np.float64)
            if self.scores.shape[0] != self.labels.shape[0]:
                raise DataError(
                    f"scores rows {self.scores.shape[0]} != labels {self.labels.shape[0]}"
                )

    def __len__(self):
        return int(self.labels.shape[0])


@dataclass
class WordVectorTable:
    """Vocabulary mapped to word vectors (one row per token)."""

    vocab: dict[str, int]
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self):
        return len(self.vocab)

    def __contains__(self, token: str) -> bool:
        return token in self.vocab

    def vector(self, token: str) -> np.ndarray:
        return self.vectors[self.vocab[token]]


@dataclass
class LabeledDataset:
    """Embeddings aligned row-for-row with text records.

    ``gold_labels`` uses -1 for rows without a label; it is None when no
    record carried a label at all.
    """

    ids: list[str]
    embeddings: np.ndarray
    gold_labels: np.ndarray | None
    split_tag: np.ndarray
    class_names: list[str] = field(default_factory=list)

    def __len__(self):
        return len(self.ids)

    @property
    def test_mask(self) -> np.ndarray:
        return self.split_tag == SPLIT_TEST

    def subset(self, index: np.ndarray) -> "LabeledDataset":
        """Row subset preserving order; ``index`` is an integer index array."""
        return LabeledDataset(
            ids=[self.ids[i] for i in index],
            embeddings=self.embeddings[index],
            gold_labels=None if self.gold_labels is None else self.gold_labels[index],
            split_tag=self.split_tag[index],
            class_names=list(self.class_names),
        )


def _check_finite(data: np.ndarray) -> None:
    bad = ~np.isfinite(data)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise DataError(f"non-finite value at row {r}, col {c}")


def validate_embeddings(data: np.ndarray) -> np.ndarray:
    """Check the embedding-matrix invariants; returns the array unchanged."""
    data = np.asarray(data)
    if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
        raise DataError(f"embedding matrix must be 2-d and nonempty, got shape {data.shape}")
    _check_finite(data)
    return data


def write_embeddings_block(fh, matrix: np.ndarray) -> None:
    """Write one SPTC block to an open binary stream."""
    matrix = validate_embeddings(matrix)
    payload = np.ascontiguousarray(matrix, dtype="<f4")
    n, d = payload.shape
    fh.write(_HEADER.pack(SPTC_MAGIC, SPTC_VERSION, n, d))
    fh.write(payload.tobytes())


def save_embeddings(matrix: np.ndarray, path) -> None:
    """Write a matrix in the SPTC binary format (float32, row-major)."""
    try:
        with open(path, "wb") as fh:
            write_embeddings_block(fh, matrix)
    except OSError as exc:
        raise DataError(f"cannot write embeddings to {path}: {exc}") from exc


def read_embeddings_block(fh) -> np.ndarray:
    """Read one SPTC block from an open binary stream."""
    header = fh.read(_HEADER.size)
    if len(header) < _HEADER.size:
        raise DataError("truncated header: not an SPTC block")
    magic, version, n, d = _HEADER.unpack(header)
    if magic != SPTC_MAGIC:
        raise DataError(f"bad magic {magic!r}, expected {SPTC_MAGIC!r}")
    if version != SPTC_VERSION:
        raise DataError(f"unsupported SPTC version {version}")
    if n < 1 or d < 1:
        raise DataError(f"invalid dimensions {n}x{d}")
    want = n * d * 4
    raw = fh.read(want)
    if len(raw) < want:
        raise DataError(
            f"truncated payload: header declares {n}x{d} ({want} bytes), got {len(raw)}"
        )
    data = np.frombuffer(raw, dtype="<f4").reshape(n, d)
    _check_finite(data)
    return data


def load_embeddings(path) -> np.ndarray:
    """Load an SPTC file; rejects bad magic, truncation, and non-finite values."""
    try:
        with open(path, "rb") as fh:
            data = read_embeddings_block(fh)
            if fh.read(1):
                raise DataError(f"trailing bytes after payload in {path}")
    except OSError as exc:
        raise DataError(f"cannot read embeddings from {path}: {exc}") from exc
    return data


def load_word_vectors(path) -> WordVectorTable:
    """Parse a text word-vector file ("token v1 ... vd" per line).

    An optional first line "count dim" is accepted.  Duplicate tokens keep
    the first occurrence and emit a warning; dimension mismatches are errors.
    """
    vocab: dict[str, int] = {}
    rows: list[np.ndarray] = []
    dim: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            parts = [p for p in parts if p]
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2:
                try:
                    declared_count, dim = int(parts[0]), int(parts[1])
                    continue
                except ValueError:
                    pass  # not a header line after all
            token, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
                if dim == 0:
                    raise DataError(f"{path}:{lineno}: no vector values")
            elif len(values) != dim:
                raise DataError(
                    f"{path}:{lineno}: expected {dim} values, got {len(values)}"
                )
            if token in vocab:
                warnings.warn(f"duplicate token {token!r} at line {lineno}; keeping first")
                continue
            try:
                vec = np.array(values, dtype=np.float32)
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: bad float value: {exc}") from exc
            if not np.isfinite(vec).all():
                raise DataError(f"{path}:{lineno}: non-finite vector value")
            vocab[token] = len(rows)
            rows.append(vec)
    if not rows:
        raise DataError(f"{path}: no word vectors found")
    return WordVectorTable(vocab=vocab, vectors=np.vstack(rows))


def normalize_token(name: str) -> str:
    """Normalization used to look class names up in a word-vector vocabulary."""
    return name.strip().lower().replace(" ", "_")


def read_dataset_records(path) -> list[dict]:
    """Read JSONL dataset records ({"id", "label"?, "split"?} per line)."""
    records = []
    seen_ids: set = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if "id" not in rec:
                raise DataError(f"{path}:{lineno}: record missing 'id'")
            if rec["id"] in seen_ids:
                raise DataError(f"{path}:{lineno}: duplicate id {rec['id']!r}")
            seen_ids.add(rec["id"])
            split = rec.get("split", SPLIT_TRAIN)
            if split not in (SPLIT_TRAIN, SPLIT_TEST):
                raise DataError(f"{path}:{lineno}: invalid split {split!r}")
            records.append(rec)
    return records


def load_dataset(text_path, embedding_path, classes: list[str] | None = None) -> LabeledDataset:
    """Align JSONL text records with an SPTC embedding file.

    Labels are mapped to indices by position in ``classes``; when ``classes``
    is None they are assigned in order of first appearance.
    """
    records = read_dataset_records(text_path)
    embeddings = load_embeddings(embedding_path)
    if embeddings.shape[0] != len(records):
        raise DataError(
            f"alignment error: {len(records)} records but {embeddings.shape[0]} embedding rows"
        )
    if classes is None:
        classes = []
        for rec in records:
            label = rec.get("label")
            if label is not None and label not in classes:
                classes.append(label)
    label_index = {name: i for i, name in enumerate(classes)}

    ids = []
    labels = np.full(len(records), -1, dtype=np.int64)
    splits = np.empty(len(records), dtype="<U5")
    any_label = False
    for i, rec in enumerate(records):
        ids.append(str(rec["id"]))
        splits[i] = rec.get("split", SPLIT_TRAIN)
        label = rec.get("label")
        if label is not None:
            if label not in label_index:
                raise DataError(f"unknown label {label!r} (classes: {classes})")
            labels[i] = label_index[label]
            any_label = True
    return LabeledDataset(
        ids=ids,
        embeddings=embeddings,
        gold_labels=labels if any_label else None,
        split_tag=splits,
        class_names=list(classes),
    )
