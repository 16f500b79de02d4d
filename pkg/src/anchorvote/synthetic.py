"""Seeded Gaussian-mixture dataset generator.

Desk-scale stand-in for precomputed CNN features: each class owns a few
cluster centers drawn from an isotropic Gaussian; samples are the centers
plus isotropic noise.  Test examples optionally come with jittered copies
(feature-space augmentation) sharing their group id.

Generation order is fixed (centers, train, test, then jitter) so the base
train/test examples are identical for every ``versions`` setting under the
same seed, and generation is a pure function of the spec.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import UsageError


@dataclass(frozen=True)
class SyntheticSpec:
    classes: int = 10
    dim: int = 64
    clusters_per_class: int = 2
    cluster_spread: float = 0.3
    center_scale: float = 1.0
    train_per_class: int = 100
    test_per_class: int = 20
    versions: int = 1
    jitter_frac: float = 0.5  # jitter std as a fraction of cluster_spread
    seed: int = 0

    def __post_init__(self):
        for name in ("classes", "dim", "clusters_per_class",
                     "train_per_class", "test_per_class", "versions"):
            if getattr(self, name) < 1:
                raise UsageError(f"synthetic spec: {name} must be >= 1")
        if self.cluster_spread <= 0 or self.center_scale <= 0:
            raise UsageError("synthetic spec: spreads must be positive")
        if self.jitter_frac < 0:
            raise UsageError("synthetic spec: jitter_frac must be >= 0")


def class_centers(spec: SyntheticSpec) -> np.ndarray:
    """The true generating centers, (classes, clusters_per_class, dim)."""
    rng = np.random.default_rng(spec.seed)
    return rng.standard_normal(
        (spec.classes, spec.clusters_per_class, spec.dim)) * spec.center_scale


def generate_datasets(spec: SyntheticSpec) -> tuple[Dataset, Dataset]:
    """Generate the (train, test) pair; byte-identical for identical specs."""
    rng = np.random.default_rng(spec.seed)
    centers = rng.standard_normal(
        (spec.classes, spec.clusters_per_class, spec.dim)) * spec.center_scale

    def base_samples(per_class):
        labels, rows = [], []
        for c in range(spec.classes):
            clusters = rng.integers(0, spec.clusters_per_class, size=per_class)
            noise = rng.standard_normal((per_class, spec.dim)) * spec.cluster_spread
            rows.append(centers[c, clusters] + noise)
            labels.extend([c] * per_class)
        return np.asarray(labels, dtype=np.int64), np.concatenate(rows, axis=0)

    train_labels, train_rows = base_samples(spec.train_per_class)
    test_labels, test_rows = base_samples(spec.test_per_class)

    train = Dataset(
        dim=spec.dim, classes=spec.classes,
        labels=train_labels,
        groups=np.arange(len(train_labels), dtype=np.int64),
        values=train_rows.astype(np.float32),
    )

    # each test example becomes a group of `versions` records: the base
    # record followed by versions-1 jittered copies
    jitter_std = spec.jitter_frac * spec.cluster_spread
    labels, groups, rows = [], [], []
    for i in range(len(test_labels)):
        labels.append(test_labels[i])
        groups.append(i)
        rows.append(test_rows[i])
        for _ in range(spec.versions - 1):
            labels.append(test_labels[i])
            groups.append(i)
            rows.append(test_rows[i] + rng.standard_normal(spec.dim) * jitter_std)
    test = Dataset(
        dim=spec.dim, classes=spec.classes,
        labels=np.asarray(labels, dtype=np.int64),
        groups=np.asarray(groups, dtype=np.int64),
        values=np.asarray(rows, dtype=np.float32),
    )
    return train, test


def nearest_centroid_accuracy(spec: SyntheticSpec, test: Dataset) -> float:
    """Accuracy ceiling: classify each test group's base record by its
    nearest true generating center."""
    centers = class_centers(spec).reshape(-1, spec.dim)
    center_labels = np.repeat(np.arange(spec.classes), spec.clusters_per_class)
    correct = 0
    slices = test.group_slices()
    for start, _, label in slices:
        x = test.values[start].astype(np.float64)
        d = ((centers - x) ** 2).sum(axis=1)
        if center_labels[int(np.argmin(d))] == label:
            correct += 1
    return correct / len(slices)


_SPEC_KEYS = {
    "C": ("classes", int),
    "T": ("dim", int),
    "clusters_per_class": ("clusters_per_class", int),
    "cluster_spread": ("cluster_spread", float),
    "center_scale": ("center_scale", float),
    "train_per_class": ("train_per_class", int),
    "test_per_class": ("test_per_class", int),
    "R": ("versions", int),
    "jitter_frac": ("jitter_frac", float),
    "seed": ("seed", int),
}


def parse_spec_text(text: str) -> SyntheticSpec:
    """Flat key=value synthetic spec, same style as the run config."""
    kw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise UsageError(f"spec line {lineno}: expected key = value")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _SPEC_KEYS:
            raise UsageError(f"spec line {lineno}: unknown key {key!r}")
        field, cast = _SPEC_KEYS[key]
        try:
            kw[field] = cast(raw.strip())
        except ValueError:
            raise UsageError(f"spec line {lineno}: bad value for {key}") from None
    return SyntheticSpec(**kw)


def parse_spec_file(path) -> SyntheticSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_spec_text(fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read spec file {path}: {exc}") from exc
