"""Labeled feature-vector datasets.

Two interchange formats:
  - the versioned binary format (magic ``TLDS``): header with T, C and the
    record count, then interleaved records of label u32, group u32 and T
    little-endian float32 values;
  - CSV for hand-authored fixtures, one record per line:
    ``label,group,v0,...,v(T-1)``.

Records sharing a group id are augmented versions of one input; they must be
contiguous and carry the same label.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, UsageError

DATASET_MAGIC = b"TLDS"
DATASET_VERSION = 1


@dataclass
class Dataset:
    dim: int
    classes: int
    labels: np.ndarray   # (count,) int64
    groups: np.ndarray   # (count,) int64
    values: np.ndarray   # (count, dim) float32

    def __post_init__(self):
        count = len(self.labels)
        if self.groups.shape != (count,) or self.values.shape != (count, self.dim):
            raise ConfigurationError("inconsistent dataset arrays")
        if count and (self.labels.min() < 0 or self.labels.max() >= self.classes):
            raise UsageError("dataset labels out of range")
        self._validate_groups()

    def _validate_groups(self):
        if len(self.labels) == 0:
            return
        seen = {}
        prev = None
        for i, g in enumerate(self.groups):
            g = int(g)
            if g in seen and g != prev:
                raise UsageError(f"group {g} is not contiguous (record {i})")
            if g in seen and seen[g] != int(self.labels[i]):
                raise UsageError(f"group {g} mixes labels")
            seen.setdefault(g, int(self.labels[i]))
            prev = g

    def __len__(self):
        return len(self.labels)

    def group_slices(self) -> list[tuple[int, int, int]]:
        """(start, stop, label) per group, in file order."""
        out = []
        i, n = 0, len(self.labels)
        while i < n:
            j = i
            while j < n and self.groups[j] == self.groups[i]:
                j += 1
            out.append((i, j, int(self.labels[i])))
            i = j
        return out

    def examples(self):
        """(values float64, label) pairs in record order (a generator)."""
        for i in range(len(self.labels)):
            yield self.values[i].astype(np.float64), int(self.labels[i])


def _record_dtype(dim: int) -> np.dtype:
    return np.dtype([("label", "<u4"), ("group", "<u4"), ("values", "<f4", (dim,))])


def save_dataset(dataset: Dataset, path) -> None:
    arr = np.empty(len(dataset), dtype=_record_dtype(dataset.dim))
    arr["label"] = dataset.labels
    arr["group"] = dataset.groups
    arr["values"] = dataset.values
    with open(path, "wb") as fh:
        fh.write(DATASET_MAGIC)
        fh.write(struct.pack("<4I", DATASET_VERSION, dataset.dim,
                             dataset.classes, len(dataset)))
        fh.write(arr.tobytes())


def load_binary(path) -> Dataset:
    with open(path, "rb") as fh:
        header = fh.read(20)
        if header[:4] != DATASET_MAGIC:
            raise UsageError(f"bad dataset magic {header[:4]!r}")
        version, dim, classes, count = struct.unpack("<4I", header[4:])
        if version != DATASET_VERSION:
            raise UsageError(f"unsupported dataset version {version}")
        payload = fh.read()
    dtype = _record_dtype(dim)
    if len(payload) != count * dtype.itemsize:
        raise UsageError("truncated dataset file")
    arr = np.frombuffer(payload, dtype=dtype)
    return Dataset(dim=dim, classes=classes,
                   labels=arr["label"].astype(np.int64),
                   groups=arr["group"].astype(np.int64),
                   values=arr["values"].astype(np.float32))


def load_csv(path, classes: int | None = None) -> Dataset:
    labels, groups, rows = [], [], []
    dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split(",")
            if len(fields) < 3:
                raise UsageError(f"{path}:{lineno}: expected label,group,values...")
            try:
                labels.append(int(fields[0]))
                groups.append(int(fields[1]))
                rows.append([float(v) for v in fields[2:]])
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: {exc}") from None
            if dim is None:
                dim = len(fields) - 2
            elif len(fields) - 2 != dim:
                raise UsageError(f"{path}:{lineno}: inconsistent vector length")
    if dim is None:
        raise UsageError(f"{path}: empty dataset")
    if classes is None:
        classes = max(labels) + 1
    return Dataset(dim=dim, classes=classes,
                   labels=np.asarray(labels, dtype=np.int64),
                   groups=np.asarray(groups, dtype=np.int64),
                   values=np.asarray(rows, dtype=np.float32))


def load_dataset(path, classes: int | None = None) -> Dataset:
    """Load either format: binary if the magic matches, CSV otherwise."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == DATASET_MAGIC:
        return load_binary(path)
    return load_csv(path, classes=classes)
