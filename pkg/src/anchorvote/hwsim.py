"""Cycle-stepped simulator of the parallel-subspace classifier datapath.

The machine mirrors the accelerator's block structure: one processing block
per subspace, all fed the same address stream from a shared modulo counter
(modulo ``slots`` while learning, with the class row offset added; modulo
``classes * slots`` while classifying).  Each block owns a slice of anchor
memory and a slice of counter memory, a distance register, and a compare
register holding the best candidate so far.

Timing model, asserted by the cycle counter rather than estimated:
  - learning consumes exactly ``slots + 3`` cycles per vector (one address
    retired per cycle while distances are computed and compared, then one
    cycle each for the counter multiply, the accumulate + counter increment,
    and the reciprocal divide);
  - classifying consumes exactly ``classes * slots * versions`` cycles (the
    vote units run concurrently with the scan and add no cycles).

All arithmetic goes through the fixed-point primitives shared with the
quantized reference path, so simulator predictions are bit-identical to it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .config import ModelConfig
from .core import (
    AnchorBank,
    dump_bank_bytes,
    parallel_vote,
    parse_bank_bytes,
    quantized_distance_raws,
    quantized_slot_update,
    sequential_vote,
    split,
    weighted_distance_raws,
)
from .errors import ConfigurationError, ProtocolError, UntrainedModelError, UsageError
from .fixedpoint import (
    QFormat,
    ReciprocalTable,
    StageFormats,
    default_reciprocal_table,
    quantize_array,
)

import struct

SNAPSHOT_MAGIC = b"TLSM"
SNAPSHOT_VERSION = 1

LEARN = "learn"
PROCESS = "process"


@dataclass
class CycleReport:
    learn_cycles_per_vector: int
    classify_cycles: int
    frequency_hz: float
    learn_latency_ns: float
    classify_latency_ns: float


@dataclass
class ResourceReport:
    anchor_memory_bits: int
    counter_memory_bits: int
    total_memory_bits: int
    dsp_count: int


def timing_report(config: ModelConfig, frequency_hz: float) -> CycleReport:
    """Closed-form latency report: k+3 learn cycles, C*k*R classify cycles."""
    if frequency_hz <= 0:
        raise UsageError(f"frequency must be positive, got {frequency_hz}")
    learn = config.slots + 3
    classify = config.classes * config.slots * config.versions
    return CycleReport(
        learn_cycles_per_vector=learn,
        classify_cycles=classify,
        frequency_hz=frequency_hz,
        learn_latency_ns=learn / frequency_hz * 1e9,
        classify_latency_ns=classify / frequency_hz * 1e9,
    )


def resource_report(config: ModelConfig, formats: Optional[StageFormats] = None) -> ResourceReport:
    """Closed-form resource model: one multiplier per feature dimension for
    distances plus one per subspace for the counter multiply/divide; anchor
    and counter memories sized at the bus width."""
    formats = formats or StageFormats()
    anchor_bits = formats.feature_anchor.n * config.classes * config.slots * config.dim
    counter_bits = formats.address_counter.n * config.classes * config.slots * config.parts
    return ResourceReport(
        anchor_memory_bits=anchor_bits,
        counter_memory_bits=counter_bits,
        total_memory_bits=anchor_bits + counter_bits,
        dsp_count=config.dim + config.parts,
    )


class ProcessingBlock:
    """One subspace's datapath: its anchor/counter memory slice and the
    distance scan registers."""

    def __init__(self, config: ModelConfig):
        rows = config.classes * config.slots
        self.anchor_memory = np.zeros((rows, config.part_dim), dtype=np.int64)
        self.counter_memory = np.zeros(rows, dtype=np.int64)
        self.distance_reg = 0
        self.compare_reg = 0
        self.best_index_reg = 0
        self.val_flag = False
        self.write_read = 1  # 1 = read (scanning), 0 = write (updating)


class AddressGenerator:
    """Modulo counter driving all blocks: modulo ``slots`` when learning
    (the class offset is added outside), ``classes * slots`` when classifying."""

    def __init__(self, config: ModelConfig):
        self._config = config
        self.lp = 1
        self.modulo_in = config.slots
        self.current = 0

    def set_mode(self, mode: str):
        self.lp = 1 if mode == LEARN else 0
        self.modulo_in = (self._config.slots if mode == LEARN
                          else self._config.classes * self._config.slots)
        self.current = 0

    def advance(self) -> int:
        addr = self.current
        self.current = (self.current + 1) % self.modulo_in
        return addr


class _LearnTxn:
    def __init__(self, parts_raw, label):
        self.parts_raw = parts_raw
        self.label = label
        self.t = 0


class _ClassifyTxn:
    def __init__(self, parts_raw):
        self.parts_raw = parts_raw
        self.t = 0


class SimMachine:
    """Cycle-stepped state of the whole accelerator.

    Drive it with ``sim_learn`` / ``sim_classify``, or manually via
    ``begin_learn`` / ``begin_classify_version`` plus ``step`` to observe the
    per-cycle register states.  A machine runs one transaction at a time.
    """

    def __init__(self, config: ModelConfig,
                 formats: Optional[StageFormats] = None,
                 table: Optional[ReciprocalTable] = None,
                 trace=None):
        if config.metric != "l2sq":
            raise ConfigurationError("the datapath computes squared distances only")
        self.config = config
        self.formats = formats or StageFormats()
        rows = config.classes * config.slots
        if rows > self.formats.address_counter.raw_max + 1:
            raise ConfigurationError(
                f"classes*slots = {rows} does not fit the address bus")
        self.table = table or default_reciprocal_table()
        self.blocks = [ProcessingBlock(config) for _ in range(config.parts)]
        self.addr_gen = AddressGenerator(config)
        self.lp_mode = LEARN
        self.cycle_count = 0
        self.trace = trace  # file-like; one line per (cycle, block)
        self._txn = None
        self._last_addr = 0

    # -- mode and state ----------------------------------------------------

    def set_mode(self, mode: str):
        if mode not in (LEARN, PROCESS):
            raise UsageError(f"unknown mode {mode!r}")
        if self._txn is not None:
            raise ProtocolError("cannot switch modes mid-transaction")
        self.lp_mode = mode
        self.addr_gen.set_mode(mode)

    @property
    def trained(self) -> bool:
        return all(block.counter_memory.any() for block in self.blocks)

    def quantize_parts(self, values) -> np.ndarray:
        """Split a float vector and quantize it to the feature format."""
        parts = split(np.asarray(values, dtype=np.float64), self.config)
        return quantize_array(parts, self.formats.feature_anchor)

    # -- transactions ------------------------------------------------------

    def begin_learn(self, parts_raw: np.ndarray, label: int):
        if self.lp_mode != LEARN:
            raise ProtocolError("machine is not in learn mode")
        if self._txn is not None:
            raise ProtocolError("a transaction is already in flight")
        if not (0 <= label < self.config.classes):
            raise UsageError(f"label {label} out of range")
        parts_raw = np.asarray(parts_raw, dtype=np.int64)
        if parts_raw.shape != (self.config.parts, self.config.part_dim):
            raise ConfigurationError(
                f"expected parts of shape {(self.config.parts, self.config.part_dim)},"
                f" got {parts_raw.shape}")
        self._reset_flags()
        self._txn = _LearnTxn(parts_raw, label)

    def begin_classify_version(self, parts_raw: np.ndarray):
        if self.lp_mode != PROCESS:
            raise ProtocolError("machine is not in process mode")
        if self._txn is not None:
            raise ProtocolError("a transaction is already in flight")
        parts_raw = np.asarray(parts_raw, dtype=np.int64)
        if parts_raw.shape != (self.config.parts, self.config.part_dim):
            raise ConfigurationError(
                f"expected parts of shape {(self.config.parts, self.config.part_dim)},"
                f" got {parts_raw.shape}")
        self._reset_flags()
        self._txn = _ClassifyTxn(parts_raw)

    def _reset_flags(self):
        for block in self.blocks:
            block.val_flag = False
            block.write_read = 1

    def step(self):
        """Advance one clock cycle of the in-flight transaction."""
        txn = self._txn
        if txn is None:
            raise ProtocolError("no transaction in flight")
        if isinstance(txn, _ClassifyTxn) and txn.t >= self.config.classes * self.config.slots:
            raise ProtocolError("classify scan complete; collect the result")
        self.cycle_count += 1
        txn.t += 1
        if isinstance(txn, _LearnTxn):
            self._step_learn(txn)
        else:
            self._step_classify(txn)
        self._emit_trace()

    def _step_learn(self, txn: _LearnTxn):
        cfg = self.config
        fmts = self.formats
        k = cfg.slots
        base = txn.label * k
        if txn.t <= k:
            # distance scan: one slot retired per cycle, compare overlapped
            addr = base + self.addr_gen.advance()
            self._last_addr = addr
            for p, block in enumerate(self.blocks):
                d = int(quantized_distance_raws(
                    txn.parts_raw[p], block.anchor_memory[addr],
                    fmts.feature_anchor, fmts.distance))
                w = int(weighted_distance_raws(
                    np.int64(d), block.counter_memory[addr],
                    fmts.distance, fmts.distance_times_counter))
                block.distance_reg = d
                if txn.t == 1 or w < block.compare_reg:
                    block.compare_reg = w
                    block.best_index_reg = addr
                if txn.t == k:
                    block.val_flag = True
        elif txn.t == k + 1:
            # counter multiply cycle; the write phase begins
            for block in self.blocks:
                block.write_read = 0
        elif txn.t == k + 2:
            # accumulate + counter increment cycle
            pass
        elif txn.t == k + 3:
            # reciprocal divide and write-back; transaction retires (flags
            # hold until the next transaction begins)
            for p, block in enumerate(self.blocks):
                addr = block.best_index_reg
                new_y, new_n = quantized_slot_update(
                    block.anchor_memory[addr], int(block.counter_memory[addr]),
                    txn.parts_raw[p], fmts, self.table)
                block.anchor_memory[addr] = new_y
                block.counter_memory[addr] = new_n
            self._txn = None

    def _step_classify(self, txn: _ClassifyTxn):
        cfg = self.config
        fmts = self.formats
        total = cfg.classes * cfg.slots
        addr = self.addr_gen.advance()
        self._last_addr = addr
        sentinel = fmts.distance.raw_max + 1  # empty slots never beat real anchors
        for p, block in enumerate(self.blocks):
            d = int(quantized_distance_raws(
                txn.parts_raw[p], block.anchor_memory[addr],
                fmts.feature_anchor, fmts.distance))
            block.distance_reg = d
            compared = d if block.counter_memory[addr] > 0 else sentinel
            if txn.t == 1 or compared < block.compare_reg:
                block.compare_reg = compared
                block.best_index_reg = addr
        if txn.t == total:
            for block in self.blocks:
                block.val_flag = True

    def finish_classify_version(self) -> np.ndarray:
        """Collect the per-block one-hot classes and retire the transaction."""
        txn = self._txn
        if not isinstance(txn, _ClassifyTxn) or txn.t != self.config.classes * self.config.slots:
            raise ProtocolError("classify transaction has not run to completion")
        part_classes = np.array(
            [block.best_index_reg // self.config.slots for block in self.blocks],
            dtype=np.int64)
        self._txn = None
        return part_classes

    def _emit_trace(self):
        if self.trace is None:
            return
        for p, block in enumerate(self.blocks):
            # during the write phase each block targets its own best row
            addr = self._last_addr if block.write_read else block.best_index_reg
            self.trace.write(
                f"{self.cycle_count} {p} {addr} "
                f"{block.distance_reg} {block.best_index_reg} {int(block.val_flag)}\n")

    # -- bank interchange ----------------------------------------------------

    @classmethod
    def from_bank(cls, bank: AnchorBank, trace=None) -> "SimMachine":
        """Load a quantized bank's state into a fresh machine."""
        if not bank.config.quantize:
            raise ConfigurationError("simulator state requires a quantized bank")
        machine = cls(bank.config, formats=bank.formats, table=bank.table, trace=trace)
        cfg = bank.config
        for p, block in enumerate(machine.blocks):
            block.anchor_memory[:] = bank.anchors_raw[:, p].reshape(
                cfg.classes * cfg.slots, cfg.part_dim)
            block.counter_memory[:] = bank.counters[:, p].reshape(-1)
        return machine

    def to_bank(self) -> AnchorBank:
        """Copy the block memories out into a quantized bank."""
        cfg = self.config
        if not cfg.quantize:
            cfg = cfg.with_(quantize=True)
        bank = AnchorBank(cfg, formats=self.formats, table=self.table)
        for p, block in enumerate(self.blocks):
            bank.anchors_raw[:, p] = block.anchor_memory.reshape(
                cfg.classes, cfg.slots, cfg.part_dim)
            bank.counters[:, p] = block.counter_memory.reshape(cfg.classes, cfg.slots)
        return bank


# ---------------------------------------------------------------------------
# Whole transactions
# ---------------------------------------------------------------------------

def sim_learn(machine: SimMachine, parts_raw: np.ndarray, label: int) -> int:
    """Learn one quantized vector; returns the cycles consumed (slots + 3)."""
    machine.begin_learn(parts_raw, label)
    cycles = machine.config.slots + 3
    for _ in range(cycles):
        machine.step()
    return cycles


def sim_classify(machine: SimMachine, versions_raw: Sequence[np.ndarray]) -> tuple[int, int]:
    """Classify a group of quantized versions; returns (class, cycles) with
    cycles exactly classes * slots * len(versions)."""
    if len(versions_raw) == 0:
        raise UsageError("empty classification group")
    if machine.lp_mode != PROCESS:
        raise ProtocolError("machine is not in process mode")
    if not machine.trained:
        raise UntrainedModelError("machine has no trained anchors")
    scan = machine.config.classes * machine.config.slots
    decisions = []
    cycles = 0
    for parts_raw in versions_raw:
        machine.begin_classify_version(parts_raw)
        for _ in range(scan):
            machine.step()
        cycles += scan
        part_classes = machine.finish_classify_version()
        version_class, _ = parallel_vote(part_classes, machine.config.classes)
        decisions.append(version_class)
    final, _ = sequential_vote(decisions, machine.config.classes)
    return final, cycles


# ---------------------------------------------------------------------------
# Snapshot (TLSM wrapper around the bank format)
# ---------------------------------------------------------------------------

_FORMAT_ORDER = ("feature_anchor", "distance", "address_counter",
                 "distance_times_counter", "anchor_times_counter",
                 "anchor_plus_feature", "reciprocal")


def save_snapshot(machine: SimMachine, path) -> None:
    """Persist mode, cycle count, the format table and the block memories.
    Only an idle machine (no transaction in flight) can be snapshotted."""
    if machine._txn is not None:
        raise ProtocolError("cannot snapshot mid-transaction")
    bank_bytes = dump_bank_bytes(machine.to_bank())
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<II", SNAPSHOT_VERSION,
                             1 if machine.lp_mode == LEARN else 0))
        fh.write(struct.pack("<Q", machine.cycle_count))
        fh.write(struct.pack("<I", len(_FORMAT_ORDER)))
        for name in _FORMAT_ORDER:
            fmt: QFormat = getattr(machine.formats, name)
            fh.write(struct.pack("<III", fmt.n, fmt.m, 1 if fmt.signed else 0))
        fh.write(bank_bytes)


def load_snapshot(path, trace=None) -> SimMachine:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != SNAPSHOT_MAGIC:
        raise ConfigurationError(f"bad snapshot magic {data[:4]!r}")
    version, lp = struct.unpack("<II", data[4:12])
    if version != SNAPSHOT_VERSION:
        raise ConfigurationError(f"unsupported snapshot version {version}")
    (cycle_count,) = struct.unpack("<Q", data[12:20])
    (n_formats,) = struct.unpack("<I", data[20:24])
    if n_formats != len(_FORMAT_ORDER):
        raise ConfigurationError(f"unexpected format-table length {n_formats}")
    offset = 24
    fields = {}
    for name in _FORMAT_ORDER:
        n, m, signed = struct.unpack("<III", data[offset:offset + 12])
        fields[name] = QFormat(n, m, signed=bool(signed))
        offset += 12
    formats = StageFormats(**fields)
    bank = parse_bank_bytes(data[offset:], quantize=True, formats=formats)
    machine = SimMachine.from_bank(bank, trace=trace)
    machine.set_mode(LEARN if lp == 1 else PROCESS)
    machine.cycle_count = cycle_count
    return machine
