"""Experiment orchestration: stream a training set through the requested
model variants, evaluate test groups, and collect accuracy/timing/resource
figures into one result object.

Variants:
  float_reference      float64 pipeline (the semantic ground truth)
  quantized_reference  the same pipeline under 18-bit fixed point
  hwsim                the cycle-stepped machine (bit-identical decisions to
                       the quantized reference, plus exact cycle counts)

Everything is deterministic given (dataset seed, stream seed, config).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .config import RunConfig
from .core import AnchorBank, predict_group, train_stream
from .dataset import Dataset
from .errors import ConfigurationError, UsageError
from .hwsim import (
    LEARN,
    PROCESS,
    CycleReport,
    ResourceReport,
    SimMachine,
    resource_report,
    sim_classify,
    sim_learn,
    timing_report,
)
from .replay import TrainingLog

VARIANT_NAMES = {
    "float": "float_reference",
    "quant": "quantized_reference",
    "sim": "hwsim",
}


@dataclass
class ExperimentResult:
    accuracy: float                      # of the first requested variant
    confusion: np.ndarray                # (C, C) of the first requested variant
    per_variant: dict                    # canonical variant name -> accuracy
    timing: CycleReport
    resources: ResourceReport
    groups: int
    predictions: dict = field(default_factory=dict)   # name -> (groups,) classes
    confusions: dict = field(default_factory=dict)    # name -> (C, C)
    sim_cycles: int = 0                  # classify cycles actually consumed


def canonical_variants(tokens: Sequence[str]) -> list[str]:
    out = []
    for token in tokens:
        token = token.strip()
        name = VARIANT_NAMES.get(token, token if token in VARIANT_NAMES.values() else None)
        if name is None:
            raise UsageError(f"unknown variant {token!r} (expected float, quant or sim)")
        if name not in out:
            out.append(name)
    return out


def stream_order(count: int, stream_seed: int) -> np.ndarray:
    return np.random.default_rng(stream_seed).permutation(count)


def _check_dataset(dataset: Dataset, run: RunConfig, role: str):
    if dataset.dim != run.model.dim or dataset.classes != run.model.classes:
        raise ConfigurationError(
            f"{role} dataset header (T={dataset.dim}, C={dataset.classes}) does not"
            f" match config (T={run.model.dim}, C={run.model.classes})")


def train_bank(run: RunConfig, train: Dataset, quantize: bool,
               log: Optional[TrainingLog] = None) -> AnchorBank:
    """Train a reference bank on the seeded stream order."""
    _check_dataset(train, run, "train")
    model = run.model.with_(quantize=quantize, metric="l2sq" if quantize else run.model.metric)
    bank = AnchorBank(model)
    order = stream_order(len(train), run.stream_seed)
    train_stream(bank, ((train.values[i].astype(np.float64), int(train.labels[i]))
                        for i in order), log=log)
    return bank


def train_machine(run: RunConfig, train: Dataset, trace=None) -> SimMachine:
    """Train a simulator machine on the same seeded stream order."""
    _check_dataset(train, run, "train")
    machine = SimMachine(run.model.with_(metric="l2sq"), trace=trace)
    machine.set_mode(LEARN)
    order = stream_order(len(train), run.stream_seed)
    for i in order:
        parts_raw = machine.quantize_parts(train.values[i].astype(np.float64))
        sim_learn(machine, parts_raw, int(train.labels[i]))
    return machine


def _evaluate_bank(bank: AnchorBank, test: Dataset):
    classes = bank.config.classes
    confusion = np.zeros((classes, classes), dtype=np.int64)
    predictions = []
    for start, stop, label in test.group_slices():
        versions = [test.values[i].astype(np.float64) for i in range(start, stop)]
        pred = predict_group(bank, versions).final_class
        confusion[label, pred] += 1
        predictions.append(pred)
    return confusion, np.asarray(predictions, dtype=np.int64)


def _evaluate_machine(machine: SimMachine, test: Dataset):
    classes = machine.config.classes
    confusion = np.zeros((classes, classes), dtype=np.int64)
    predictions = []
    cycles = 0
    machine.set_mode(PROCESS)
    for start, stop, label in test.group_slices():
        versions = [machine.quantize_parts(test.values[i].astype(np.float64))
                    for i in range(start, stop)]
        pred, used = sim_classify(machine, versions)
        cycles += used
        confusion[label, pred] += 1
        predictions.append(pred)
    return confusion, np.asarray(predictions, dtype=np.int64), cycles


def run_experiment(run: RunConfig, train: Dataset, test: Dataset,
                   variants: Sequence[str], trace=None) -> ExperimentResult:
    """Train and evaluate every requested variant on one dataset pair."""
    names = canonical_variants(variants)
    if not names:
        raise UsageError("no variants requested")
    _check_dataset(train, run, "train")
    _check_dataset(test, run, "test")
    if len(test) == 0:
        raise UsageError("empty test set")

    groups = len(test.group_slices())
    per_variant, predictions, confusions = {}, {}, {}
    sim_cycles = 0
    for name in names:
        if name == "hwsim":
            machine = train_machine(run, train, trace=trace)
            confusion, preds, sim_cycles = _evaluate_machine(machine, test)
        else:
            bank = train_bank(run, train, quantize=(name == "quantized_reference"))
            confusion, preds = _evaluate_bank(bank, test)
        per_variant[name] = float(np.trace(confusion)) / groups
        predictions[name] = preds
        confusions[name] = confusion

    primary = names[0]
    return ExperimentResult(
        accuracy=per_variant[primary],
        confusion=confusions[primary],
        per_variant=per_variant,
        timing=timing_report(run.model, run.frequency_mhz * 1e6),
        resources=resource_report(run.model),
        groups=groups,
        predictions=predictions,
        confusions=confusions,
        sim_cycles=sim_cycles,
    )
