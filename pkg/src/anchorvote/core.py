"""Streaming anchor-subvector classifier.

A feature vector of length ``dim`` is split into ``parts`` equal contiguous
subvectors.  For every (class, part) the model keeps ``slots`` anchor
subvectors, each stored as the running mean of the training subvectors
assigned to it, together with an assignment counter.

Learning one example touches exactly one slot per part: the slot minimizing
distance-times-counter (so empty slots fill first), updated as a barycenter
of the old mean (weight = counter) and the incoming subvector (weight 1).
Prediction classifies each part by nearest non-empty anchor, aggregates the
per-part classes with a majority vote, and, when several augmented versions
of one input are available, aggregates the per-version decisions with a
second majority vote.  Ties always break toward the lowest index.

Two arithmetic modes share this module: the float64 reference path, and a
bit-exact 18-bit fixed-point path (``config.quantize=True``) whose primitives
are also the functional core of the hardware simulator.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .config import ModelConfig
from .errors import ConfigurationError, NumericError, UntrainedModelError, UsageError
from .fixedpoint import (
    QFormat,
    ReciprocalTable,
    StageFormats,
    default_reciprocal_table,
    dequantize_array,
    quantize_array,
    rescale_raw_array,
)

BANK_MAGIC = b"TLDB"
BANK_VERSION = 1


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------

def split(values: np.ndarray, config: ModelConfig) -> np.ndarray:
    """Split a feature vector into the (parts, part_dim) array of subvectors.

    Part p is the contiguous slice [p*part_dim, (p+1)*part_dim).
    """
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (config.dim,):
        raise ConfigurationError(
            f"expected a vector of length {config.dim}, got shape {values.shape}"
        )
    return values.reshape(config.parts, config.part_dim)


def join(parts: np.ndarray) -> np.ndarray:
    """Inverse of split: concatenate the subvectors back into one vector."""
    return np.asarray(parts).reshape(-1)


# ---------------------------------------------------------------------------
# Quantized pipeline primitives (shared with the hardware simulator)
# ---------------------------------------------------------------------------

def quantized_distance_raws(x_raw: np.ndarray, rows_raw: np.ndarray,
                            in_fmt: QFormat, out_fmt: QFormat) -> np.ndarray:
    """Squared-distance MAC: exact diff/square/accumulate over the subvector
    dimensions, one rescale+saturate into the distance format at the end."""
    diff = rows_raw - x_raw
    acc = np.einsum("...d,...d->...", diff, diff)
    return rescale_raw_array(acc, 2 * in_fmt.f, out_fmt)


def weighted_distance_raws(d_raws: np.ndarray, counters: np.ndarray,
                           d_fmt: QFormat, out_fmt: QFormat) -> np.ndarray:
    """Distance times counter, rescaled into its stage format."""
    return rescale_raw_array(d_raws * counters, d_fmt.f, out_fmt)


def quantized_slot_update(y_raw: np.ndarray, n: int, x_raw: np.ndarray,
                          formats: StageFormats, table: ReciprocalTable):
    """One barycenter update in fixed point: anchor*counter, +feature,
    divide by the incremented counter via the reciprocal table.

    Returns (new_anchor_raw, new_counter).  A slot whose counter has hit the
    18-bit cap is frozen: both anchor and counter are returned unchanged.
    """
    cap = formats.counter_max
    if n >= cap:
        return y_raw, n
    fa = formats.feature_anchor
    atc = formats.anchor_times_counter
    apf = formats.anchor_plus_feature

    prod = rescale_raw_array(y_raw * n, fa.f, atc)
    f_common = max(atc.f, fa.f)
    total = (prod << (f_common - atc.f)) + (x_raw << (f_common - fa.f))
    summed = rescale_raw_array(total, f_common, apf)

    new_n = n + 1
    recip = table.lookup(new_n)
    new_y = rescale_raw_array(summed * recip, apf.f + table.fmt.f, fa)
    return new_y, new_n


# ---------------------------------------------------------------------------
# The anchor bank
# ---------------------------------------------------------------------------

class AnchorBank:
    """Learned state: per (class, part, slot) anchor means and counters.

    Float mode stores anchors as float64; quantized mode stores raw 18-bit
    integers at the feature/anchor format (the ``anchors`` property always
    yields the real-valued view, which is exact either way).

    Learning mutates the bank and needs exclusive write access per example;
    prediction never mutates and is safe under any number of readers.
    """

    def __init__(self, config: ModelConfig,
                 formats: Optional[StageFormats] = None,
                 table: Optional[ReciprocalTable] = None):
        self.config = config
        self.formats = formats or StageFormats()
        shape = (config.classes, config.parts, config.slots, config.part_dim)
        if config.quantize:
            self.table = table or default_reciprocal_table()
            self._anchors_raw = np.zeros(shape, dtype=np.int64)
        else:
            self.table = table
            self._anchors = np.zeros(shape, dtype=np.float64)
        self.counters = np.zeros(shape[:3], dtype=np.int64)

    @property
    def anchors(self) -> np.ndarray:
        if self.config.quantize:
            return dequantize_array(self._anchors_raw, self.formats.feature_anchor)
        return self._anchors

    @property
    def anchors_raw(self) -> np.ndarray:
        if not self.config.quantize:
            raise ConfigurationError("raw anchors exist only in quantized mode")
        return self._anchors_raw

    @property
    def trained(self) -> bool:
        return bool(self.counters.any())

    def require_vector(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (self.config.dim,):
            raise ConfigurationError(
                f"expected a vector of length {self.config.dim}, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise NumericError("feature vector contains non-finite values")
        return values


def _float_distances(xp: np.ndarray, rows: np.ndarray, metric: str) -> np.ndarray:
    d = ((rows - xp) ** 2).sum(axis=-1)
    if metric == "l2":
        d = np.sqrt(d)
    return d


def select_anchor(bank: AnchorBank, xp: np.ndarray, c: int, p: int) -> int:
    """Slot chosen for a training subvector: argmin of distance*counter,
    lowest index on ties (a fresh class fills slot 0 first)."""
    cfg = bank.config
    if not (0 <= c < cfg.classes and 0 <= p < cfg.parts):
        raise UsageError(f"class {c} / part {p} out of range")
    counters = bank.counters[c, p]
    if cfg.quantize:
        fmts = bank.formats
        x_raw = quantize_array(xp, fmts.feature_anchor)
        d = quantized_distance_raws(x_raw, bank._anchors_raw[c, p],
                                    fmts.feature_anchor, fmts.distance)
        weighted = weighted_distance_raws(d, counters, fmts.distance,
                                          fmts.distance_times_counter)
    else:
        weighted = _float_distances(xp, bank._anchors[c, p], cfg.metric) * counters
    return int(np.argmin(weighted))


def learn_one(bank: AnchorBank, values, label: Optional[int]) -> np.ndarray:
    """Fold one labeled example into the bank (in place); streaming, never
    revisits earlier examples.  Returns the selected slot per part."""
    if label is None:
        raise UsageError("training example has no label")
    if not (0 <= label < bank.config.classes):
        raise UsageError(f"label {label} out of range [0, {bank.config.classes})")
    values = bank.require_vector(values)
    cfg = bank.config
    parts = split(values, cfg)
    slots = np.empty(cfg.parts, dtype=np.int64)

    if cfg.quantize:
        fmts = bank.formats
        parts_raw = quantize_array(parts, fmts.feature_anchor)
        for p in range(cfg.parts):
            x_raw = parts_raw[p]
            d = quantized_distance_raws(x_raw, bank._anchors_raw[label, p],
                                        fmts.feature_anchor, fmts.distance)
            weighted = weighted_distance_raws(d, bank.counters[label, p],
                                              fmts.distance, fmts.distance_times_counter)
            i = int(np.argmin(weighted))
            new_y, new_n = quantized_slot_update(
                bank._anchors_raw[label, p, i], int(bank.counters[label, p, i]),
                x_raw, fmts, bank.table)
            bank._anchors_raw[label, p, i] = new_y
            bank.counters[label, p, i] = new_n
            slots[p] = i
    else:
        for p in range(cfg.parts):
            xp = parts[p]
            i = select_anchor(bank, xp, label, p)
            n = bank.counters[label, p, i]
            bank._anchors[label, p, i] = (bank._anchors[label, p, i] * n + xp) / (n + 1)
            bank.counters[label, p, i] = n + 1
            slots[p] = i
    return slots


def train_stream(bank: AnchorBank, examples: Iterable, log=None) -> int:
    """Consume an iterator of (values, label) pairs exactly once, learning
    each example as it arrives.  Nothing is retained beyond the bank (and
    the optional replay log, which is an explicit opt-in)."""
    count = 0
    for values, label in examples:
        slots = learn_one(bank, values, label)
        if log is not None:
            log.record(label, values, slots)
        count += 1
    return count


# ---------------------------------------------------------------------------
# Classification and votes
# ---------------------------------------------------------------------------

def classify_part(bank: AnchorBank, xp: np.ndarray, p: int) -> int:
    """Class of the nearest non-empty anchor in part p (counters do not
    weight test-time distances; empty slots are skipped).  Ties break to the
    lowest (class, slot)."""
    cfg = bank.config
    counters = bank.counters[:, p].reshape(-1)
    if not counters.any():
        raise UntrainedModelError(f"no trained anchors in part {p}")
    if cfg.quantize:
        fmts = bank.formats
        x_raw = quantize_array(xp, fmts.feature_anchor)
        rows = bank._anchors_raw[:, p].reshape(-1, cfg.part_dim)
        d = quantized_distance_raws(x_raw, rows, fmts.feature_anchor, fmts.distance)
        # one past saturated max: any real anchor beats an empty slot
        d = np.where(counters > 0, d, fmts.distance.raw_max + 1)
    else:
        rows = bank._anchors[:, p].reshape(-1, cfg.part_dim)
        d = _float_distances(xp, rows, cfg.metric)
        d = np.where(counters > 0, d, np.inf)
    return int(np.argmin(d)) // cfg.slots


def parallel_vote(part_classes: Sequence[int], classes: int) -> tuple[int, np.ndarray]:
    """Majority vote over per-part decisions: (winning class, tallies);
    the lowest class index wins ties."""
    tallies = np.bincount(np.asarray(part_classes, dtype=np.int64), minlength=classes)
    return int(np.argmax(tallies)), tallies


def sequential_vote(version_classes: Sequence[int], classes: int) -> tuple[int, np.ndarray]:
    """Majority vote over per-version decisions; same semantics as
    parallel_vote."""
    if len(version_classes) == 0:
        raise UsageError("sequential vote over an empty group")
    tallies = np.bincount(np.asarray(version_classes, dtype=np.int64), minlength=classes)
    return int(np.argmax(tallies)), tallies


@dataclass
class Prediction:
    part_classes: np.ndarray
    part_tallies: np.ndarray
    final_class: int
    votes_over_versions: Optional[np.ndarray] = None


def predict(bank: AnchorBank, values) -> Prediction:
    """Classify one feature vector: per-part nearest anchor, then the
    parallel majority vote."""
    if not bank.trained:
        raise UntrainedModelError("bank has no trained anchors")
    values = bank.require_vector(values)
    parts = split(values, bank.config)
    part_classes = np.array(
        [classify_part(bank, parts[p], p) for p in range(bank.config.parts)],
        dtype=np.int64,
    )
    final, tallies = parallel_vote(part_classes, bank.config.classes)
    return Prediction(part_classes, tallies, final)


def predict_group(bank: AnchorBank, versions: Sequence) -> Prediction:
    """Classify a group of augmented versions of one input: predict each
    version, then aggregate with the sequential majority vote.  Part-level
    fields report the first version's vote."""
    if len(versions) == 0:
        raise UsageError("empty augmentation group")
    predictions = [predict(bank, v) for v in versions]
    decisions = [pr.final_class for pr in predictions]
    final, version_tallies = sequential_vote(decisions, bank.config.classes)
    first = predictions[0]
    return Prediction(first.part_classes, first.part_tallies, final,
                      votes_over_versions=version_tallies)


# ---------------------------------------------------------------------------
# Bank serialization (versioned binary, normative byte layout)
# ---------------------------------------------------------------------------

def dump_bank_bytes(bank: AnchorBank) -> bytes:
    """Magic, version, T/P/C/k, anchors as little-endian float64 in
    (class, part, slot, dim) order, then counters as u64."""
    cfg = bank.config
    header = BANK_MAGIC + struct.pack("<5I", BANK_VERSION, cfg.dim, cfg.parts,
                                      cfg.classes, cfg.slots)
    return header + bank.anchors.astype("<f8").tobytes() + bank.counters.astype("<u8").tobytes()


def parse_bank_bytes(data: bytes, versions: int = 1, metric: str = "l2sq",
                     quantize: bool = False,
                     formats: Optional[StageFormats] = None,
                     table: Optional[ReciprocalTable] = None) -> AnchorBank:
    """Inverse of dump_bank_bytes.  The file carries geometry and state only;
    runtime knobs (versions, metric, quantize) are the caller's."""
    if data[:4] != BANK_MAGIC:
        raise ConfigurationError(f"bad bank magic {data[:4]!r}")
    version, dim, parts, classes, slots = struct.unpack("<5I", data[4:24])
    if version != BANK_VERSION:
        raise ConfigurationError(f"unsupported bank version {version}")
    config = ModelConfig(dim=dim, parts=parts, classes=classes, slots=slots,
                         versions=versions, metric=metric, quantize=quantize)
    n_anchor = classes * parts * slots * config.part_dim
    n_counter = classes * parts * slots
    if len(data) < 24 + 8 * (n_anchor + n_counter):
        raise ConfigurationError("truncated bank file")
    anchors = np.frombuffer(data, dtype="<f8", count=n_anchor, offset=24)
    counters = np.frombuffer(data, dtype="<u8", count=n_counter,
                             offset=24 + 8 * n_anchor)

    bank = AnchorBank(config, formats=formats, table=table)
    shape = (classes, parts, slots, config.part_dim)
    if quantize:
        bank._anchors_raw = quantize_array(anchors.reshape(shape),
                                           bank.formats.feature_anchor)
    else:
        bank._anchors = anchors.reshape(shape).copy()
    bank.counters = counters.reshape(shape[:3]).astype(np.int64)
    return bank


def save_bank(bank: AnchorBank, path) -> None:
    with open(path, "wb") as fh:
        fh.write(dump_bank_bytes(bank))


def load_bank(path, **kw) -> AnchorBank:
    with open(path, "rb") as fh:
        return parse_bank_bytes(fh.read(), **kw)
