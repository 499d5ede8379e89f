"""Sparse dataset handling.

The on-disk format is plain ASCII: a header line ``N D K`` followed by
one line per example, ``l1,l2,...,lm f1:v1 f2:v2 ...`` with 0-based
feature and label indices. A line with no labels starts with a space.
Examples are stored internally in CSR form (features and labels), which
is what the kernels consume.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels

log = logging.getLogger(__name__)


class DataError(ValueError):
    """Malformed dataset file; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass
class SparseVector:
    """Feature index/value pairs with strictly increasing indices."""

    indices: np.ndarray  # int32
    values: np.ndarray  # float64

    def __post_init__(self):
        self.indices = np.ascontiguousarray(self.indices, dtype=np.int32)
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.indices.shape != self.values.shape:
            raise ValueError("indices and values must have equal length")
        if len(self.indices) > 1 and not (np.diff(self.indices) > 0).all():
            raise ValueError("feature indices must be strictly increasing")
        if len(self.indices) > 0 and self.indices[0] < 0:
            raise ValueError("feature indices must be non-negative")

    def __len__(self) -> int:
        return len(self.indices)

    def to_dense(self, d: int) -> np.ndarray:
        out = np.zeros(d, dtype=np.float64)
        out[self.indices] = self.values
        return out


@dataclass
class Example:
    features: SparseVector
    labels: np.ndarray  # sorted unique int32


@dataclass
class Dataset:
    """Immutable after construction; safe for concurrent readers."""

    n: int
    d: int
    k: int
    f_indptr: np.ndarray  # int64, len n+1
    f_indices: np.ndarray  # int32
    f_values: np.ndarray  # float64
    l_indptr: np.ndarray  # int64, len n+1
    l_labels: np.ndarray  # int32, sorted within each example
    duplicate_label_count: int = 0
    _trainable_ids: np.ndarray | None = field(default=None, repr=False)

    def example(self, i: int) -> Example:
        fs, fe = self.f_indptr[i], self.f_indptr[i + 1]
        ls, le = self.l_indptr[i], self.l_indptr[i + 1]
        return Example(
            features=SparseVector(self.f_indices[fs:fe], self.f_values[fs:fe]),
            labels=self.l_labels[ls:le].copy(),
        )

    def labels_of(self, i: int) -> np.ndarray:
        return self.l_labels[self.l_indptr[i] : self.l_indptr[i + 1]]

    def features_of(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        fs, fe = self.f_indptr[i], self.f_indptr[i + 1]
        return self.f_indices[fs:fe], self.f_values[fs:fe]

    @property
    def examples(self) -> list[Example]:
        return [self.example(i) for i in range(self.n)]

    def trainable_ids(self) -> np.ndarray:
        """Indices of examples with at least one label.

        Zero-label examples cannot inform a split and are skipped during
        tree construction; they still get predictions.
        """
        if self._trainable_ids is None:
            lens = np.diff(self.l_indptr)
            object.__setattr__(self, "_trainable_ids", np.nonzero(lens > 0)[0].astype(np.int64))
        return self._trainable_ids

    def label_counts(self) -> np.ndarray:
        """Number of examples carrying each label, shape (k,)."""
        return np.bincount(self.l_labels, minlength=self.k).astype(np.float64)

    def l2_normalized(self) -> "Dataset":
        """Copy with each example's feature vector scaled to unit L2 norm."""
        values = self.f_values.copy()
        for i in range(self.n):
            fs, fe = self.f_indptr[i], self.f_indptr[i + 1]
            norm = np.sqrt(np.sum(values[fs:fe] ** 2))
            if norm > 0:
                values[fs:fe] /= norm
        return Dataset(self.n, self.d, self.k, self.f_indptr, self.f_indices,
                       values, self.l_indptr, self.l_labels, self.duplicate_label_count)


def dot(x: SparseVector, w: np.ndarray) -> float:
    """x . w plus the bias stored in the final slot of w (len >= d+1)."""
    return kernels.dot_bias(x.indices, x.values, np.ascontiguousarray(w, dtype=np.float64))


def _parse_header(line: str) -> tuple[int, int, int]:
    parts = line.split()
    if len(parts) != 3:
        raise DataError(f"header must be 'N D K', got {line!r}", 1)
    try:
        n, d, k = (int(p) for p in parts)
    except ValueError:
        raise DataError(f"non-integer header field in {line!r}", 1) from None
    if n < 0 or d <= 0 or k <= 0:
        raise DataError(f"header values out of range: N={n} D={d} K={k}", 1)
    return n, d, k


def parse_dataset(source) -> Dataset:
    """Parse a dataset from a path, file object, or bytes.

    Rejects out-of-range indices and duplicate feature indices with the
    offending line number; duplicate labels are dropped with a counter.
    """
    if isinstance(source, (str, bytes)) and not isinstance(source, bytes):
        with open(source, "rb") as fh:
            return _parse_stream(fh)
    if isinstance(source, bytes):
        return _parse_stream(io.BytesIO(source))
    return _parse_stream(source)


def _parse_stream(fh) -> Dataset:
    header = fh.readline()
    if isinstance(header, bytes):
        header = header.decode("ascii", errors="replace")
    if not header:
        raise DataError("empty file", 1)
    n, d, k = _parse_header(header.strip())

    f_indptr = np.zeros(n + 1, dtype=np.int64)
    l_indptr = np.zeros(n + 1, dtype=np.int64)
    f_indices: list[np.ndarray] = []
    f_values: list[np.ndarray] = []
    l_labels: list[np.ndarray] = []
    dup_labels = 0

    lineno = 1
    for i in range(n):
        raw = fh.readline()
        if not raw:
            raise DataError(f"truncated file: expected {n} examples, got {i}", lineno)
        lineno += 1
        if isinstance(raw, bytes):
            raw = raw.decode("ascii", errors="replace")
        line = raw.rstrip("\r\n")

        has_labels = bool(line) and not line[0].isspace()
        tokens = line.split()
        labels = np.empty(0, dtype=np.int32)
        feat_tokens = tokens
        if has_labels:
            if not tokens:
                raise DataError("blank example line", lineno)
            label_tok, feat_tokens = tokens[0], tokens[1:]
            if ":" in label_tok:
                raise DataError(f"expected label list, got feature {label_tok!r}", lineno)
            try:
                raw_labels = [int(p) for p in label_tok.split(",") if p != ""]
            except ValueError:
                raise DataError(f"non-integer label in {label_tok!r}", lineno) from None
            for lab in raw_labels:
                if not 0 <= lab < k:
                    raise DataError(f"label {lab} out of range [0, {k})", lineno)
            labels = np.unique(np.asarray(raw_labels, dtype=np.int32))
            dup_labels += len(raw_labels) - len(labels)

        idx = np.empty(len(feat_tokens), dtype=np.int32)
        val = np.empty(len(feat_tokens), dtype=np.float64)
        for t, tok in enumerate(feat_tokens):
            try:
                pos, _, v = tok.partition(":")
                fi = int(pos)
                fv = float(v)
            except ValueError:
                raise DataError(f"malformed feature token {tok!r}", lineno) from None
            if not 0 <= fi < d:
                raise DataError(f"feature index {fi} out of range [0, {d})", lineno)
            if not np.isfinite(fv):
                raise DataError(f"non-finite feature value in {tok!r}", lineno)
            idx[t] = fi
            val[t] = fv
        if len(idx) > 1:
            order = np.argsort(idx, kind="stable")
            idx = idx[order]
            val = val[order]
            if (np.diff(idx) == 0).any():
                dup = int(idx[np.nonzero(np.diff(idx) == 0)[0][0]])
                raise DataError(f"duplicate feature index {dup}", lineno)

        f_indices.append(idx)
        f_values.append(val)
        l_labels.append(labels)
        f_indptr[i + 1] = f_indptr[i] + len(idx)
        l_indptr[i + 1] = l_indptr[i] + len(labels)

    if dup_labels:
        log.warning("dropped %d duplicate label(s) while parsing", dup_labels)

    return Dataset(
        n=n,
        d=d,
        k=k,
        f_indptr=f_indptr,
        f_indices=np.concatenate(f_indices) if f_indices else np.empty(0, dtype=np.int32),
        f_values=np.concatenate(f_values) if f_values else np.empty(0, dtype=np.float64),
        l_indptr=l_indptr,
        l_labels=np.concatenate(l_labels) if l_labels else np.empty(0, dtype=np.int32),
        duplicate_label_count=dup_labels,
    )


def write_dataset(dataset: Dataset, fh) -> None:
    """Write in the same text format; round-trips exactly through parse."""
    own = False
    if isinstance(fh, str):
        fh = open(fh, "w")
        own = True
    try:
        fh.write(f"{dataset.n} {dataset.d} {dataset.k}\n")
        for i in range(dataset.n):
            labels = dataset.labels_of(i)
            idx, val = dataset.features_of(i)
            feats = " ".join(f"{int(j)}:{repr(float(v))}" for j, v in zip(idx, val))
            if len(labels):
                fh.write(",".join(str(int(l)) for l in labels))
            fh.write(" ")
            fh.write(feats)
            fh.write("\n")
    finally:
        if own:
            fh.close()
