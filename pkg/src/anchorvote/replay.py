"""Replay oracle: re-derive anchors independently from an assignment log.

The log captures, for every training example in order, its label, its raw
values and the slot each part was assigned to.  Replaying it reduces every
anchor to a plain mean over its assigned subvectors, which the bank's
incremental barycenter updates must reproduce.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .config import ModelConfig
from .core import AnchorBank, split
from .errors import UsageError


class TrainingLog:
    """Opt-in record of (label, values, selected slots) per example."""

    def __init__(self, config: ModelConfig):
        self.config = config
        self.entries: list[tuple[int, np.ndarray, np.ndarray]] = []

    def record(self, label: int, values, slots):
        self.entries.append((
            int(label),
            np.array(values, dtype=np.float64, copy=True),
            np.array(slots, dtype=np.int64, copy=True),
        ))

    def __len__(self):
        return len(self.entries)

    def save(self, path):
        """JSON lines; float repr round-trips float64 exactly."""
        with open(path, "w", encoding="utf-8") as fh:
            for label, values, slots in self.entries:
                fh.write(json.dumps({
                    "label": label,
                    "slots": slots.tolist(),
                    "values": values.tolist(),
                }) + "\n")

    @classmethod
    def load(cls, path, config: ModelConfig) -> "TrainingLog":
        log = cls(config)
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                log.record(obj["label"], obj["values"], obj["slots"])
        return log


@dataclass
class ReplayReport:
    examples: int
    max_rel_error: float
    counter_mismatches: list = field(default_factory=list)
    worst_slot: tuple | None = None

    def ok(self, tol: float = 1e-9) -> bool:
        return self.max_rel_error <= tol and not self.counter_mismatches


def replay_verify(bank: AnchorBank, log: TrainingLog) -> ReplayReport:
    """Recompute each anchor as the mean of its logged assignments and each
    counter as the assignment count; report the worst relative anchor error
    and any counter mismatch."""
    cfg = bank.config
    if (log.config.dim, log.config.parts, log.config.classes, log.config.slots) != \
            (cfg.dim, cfg.parts, cfg.classes, cfg.slots):
        raise UsageError("log shape does not match the bank")

    sums = np.zeros((cfg.classes, cfg.parts, cfg.slots, cfg.part_dim))
    counts = np.zeros((cfg.classes, cfg.parts, cfg.slots), dtype=np.int64)
    for label, values, slots in log.entries:
        if slots.shape != (cfg.parts,):
            raise UsageError("log entry has wrong slot count")
        parts = split(values, cfg)
        for p in range(cfg.parts):
            sums[label, p, slots[p]] += parts[p]
            counts[label, p, slots[p]] += 1

    mismatches = [tuple(idx) for idx in np.argwhere(counts != bank.counters)]

    max_rel = 0.0
    worst = None
    anchors = bank.anchors
    for c, p, s in np.argwhere(counts > 0):
        mean = sums[c, p, s] / counts[c, p, s]
        denom = np.maximum(np.abs(mean), 1e-12)
        rel = float(np.max(np.abs(mean - anchors[c, p, s]) / denom))
        if rel > max_rel:
            max_rel = rel
            worst = (int(c), int(p), int(s))
    # empty slots must still be all zeros
    for c, p, s in np.argwhere(counts == 0):
        if np.any(anchors[c, p, s] != 0.0):
            mismatches.append((int(c), int(p), int(s)))

    return ReplayReport(
        examples=len(log),
        max_rel_error=max_rel,
        counter_mismatches=mismatches,
        worst_slot=worst,
    )
