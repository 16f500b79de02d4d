"""Bit-exact two's-complement fixed-point arithmetic.

Everything in the quantized datapath is held on 18-bit buses; only the
position of the binary point changes from stage to stage.  A ``QFormat``
names one such bus layout (total bits, integer bits), ``Fixed`` is a raw
integer tagged with its format, and ``StageFormats`` collects the per-stage
formats used by the processing pipeline.

Conventions, fixed globally for reproducibility:
  - rounding is round-half-away-from-zero everywhere;
  - overflow saturates, never wraps;
  - for signed formats the integer-bit count ``m`` includes the sign bit.

Counters, addresses and reciprocals are nonnegative by construction and use
unsigned formats (``signed=False``), so an 18-bit counter tops out at
262143 and the reciprocal of 1 is exactly representable.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CapacityError,
    ConfigurationError,
    DivisionDomainError,
    NumericError,
)

LUT_MAGIC = b"TLUT"


@dataclass(frozen=True)
class QFormat:
    """Fixed-point bus layout: n total bits, m integer bits (sign included)."""

    n: int
    m: int
    signed: bool = True

    def __post_init__(self):
        if not (1 <= self.m <= self.n <= 64):
            raise ConfigurationError(f"invalid format ({self.n},{self.m})")

    @property
    def f(self) -> int:
        return self.n - self.m

    @property
    def raw_min(self) -> int:
        return -(1 << (self.n - 1)) if self.signed else 0

    @property
    def raw_max(self) -> int:
        return (1 << (self.n - 1)) - 1 if self.signed else (1 << self.n) - 1

    @property
    def min_value(self) -> float:
        return self.raw_min * 2.0 ** -self.f

    @property
    def max_value(self) -> float:
        return self.raw_max * 2.0 ** -self.f

    @property
    def resolution(self) -> float:
        return 2.0 ** -self.f


@dataclass(frozen=True)
class Fixed:
    """A raw integer carrying its format.  ``saturated`` records whether the
    producing operation clamped; it does not take part in equality."""

    raw: int
    fmt: QFormat
    saturated: bool = field(default=False, compare=False)

    @property
    def value(self) -> float:
        return self.raw * 2.0 ** -self.fmt.f

    def __repr__(self):
        sat = " sat" if self.saturated else ""
        return f"Fixed({self.raw} @({self.fmt.n},{self.fmt.m}) = {self.value!r}{sat})"


@dataclass(frozen=True)
class StageFormats:
    """Per-stage formats of the 18-bit processing pipeline."""

    feature_anchor: QFormat = QFormat(18, 5)
    distance: QFormat = QFormat(18, 10)
    address_counter: QFormat = QFormat(18, 18, signed=False)
    distance_times_counter: QFormat = QFormat(18, 16)
    anchor_times_counter: QFormat = QFormat(18, 10)
    anchor_plus_feature: QFormat = QFormat(18, 10)
    reciprocal: QFormat = QFormat(18, 1, signed=False)

    @property
    def counter_max(self) -> int:
        return self.address_counter.raw_max


def _round_half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5)) * (-1 if x < 0 else 1)


def _shift_round(v: int, shift: int) -> int:
    """Right-shift with round-half-away-from-zero; shift must be >= 0."""
    if shift == 0:
        return v
    half = 1 << (shift - 1)
    if v < 0:
        return -((-v + half) >> shift)
    return (v + half) >> shift


def _shift_round_array(v: np.ndarray, shift: int) -> np.ndarray:
    if shift == 0:
        return v
    half = 1 << (shift - 1)
    return np.sign(v) * ((np.abs(v) + half) >> shift)


def rescale_raw(v: int, f_in: int, out: QFormat) -> tuple[int, bool]:
    """Re-express an exact integer at fractional scale ``f_in`` in ``out``.

    Returns (raw, saturated).  Upscaling is exact; downscaling rounds
    half away from zero; the result is clamped to the output range.
    """
    if out.f >= f_in:
        raw = v << (out.f - f_in)
    else:
        raw = _shift_round(v, f_in - out.f)
    if raw > out.raw_max:
        return out.raw_max, True
    if raw < out.raw_min:
        return out.raw_min, True
    return raw, False


def rescale_raw_array(v: np.ndarray, f_in: int, out: QFormat) -> np.ndarray:
    """Vectorized ``rescale_raw`` (no saturation flags)."""
    if out.f >= f_in:
        raw = v << (out.f - f_in)
    else:
        raw = _shift_round_array(v, f_in - out.f)
    return np.clip(raw, out.raw_min, out.raw_max)


def quantize(x: float, fmt: QFormat) -> Fixed:
    """Round a real number to the nearest representable value, saturating."""
    if not math.isfinite(x):
        raise NumericError(f"cannot quantize non-finite value {x!r}")
    scaled = x * (1 << fmt.f)
    # range-check before the integer conversion: the scaled value can exceed
    # what floor/int can take (huge inputs overflow the multiply itself)
    if scaled > fmt.raw_max:
        return Fixed(fmt.raw_max, fmt, saturated=True)
    if scaled < fmt.raw_min:
        return Fixed(fmt.raw_min, fmt, saturated=True)
    raw = _round_half_away(scaled)
    if raw > fmt.raw_max:
        return Fixed(fmt.raw_max, fmt, saturated=True)
    if raw < fmt.raw_min:
        return Fixed(fmt.raw_min, fmt, saturated=True)
    return Fixed(raw, fmt)


def quantize_array(xs: np.ndarray, fmt: QFormat) -> np.ndarray:
    """Vectorized quantize: float array -> int64 raw array."""
    xs = np.asarray(xs, dtype=np.float64)
    if not np.all(np.isfinite(xs)):
        raise NumericError("cannot quantize non-finite values")
    scaled = xs * float(1 << fmt.f)
    # clamp in the float domain first so the int64 cast never overflows
    scaled = np.clip(scaled, float(fmt.raw_min), float(fmt.raw_max))
    raw = (np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)).astype(np.int64)
    return np.clip(raw, fmt.raw_min, fmt.raw_max)


def dequantize_array(raw: np.ndarray, fmt: QFormat) -> np.ndarray:
    return np.asarray(raw, dtype=np.float64) * 2.0 ** -fmt.f


def fx_add(a: Fixed, b: Fixed, out: QFormat) -> Fixed:
    """Exact sum (operands aligned to the finer scale), then rescale into out."""
    f_common = max(a.fmt.f, b.fmt.f)
    total = (a.raw << (f_common - a.fmt.f)) + (b.raw << (f_common - b.fmt.f))
    raw, sat = rescale_raw(total, f_common, out)
    return Fixed(raw, out, saturated=sat)


def fx_mul(a: Fixed, b: Fixed, out: QFormat) -> Fixed:
    """Full-precision integer product, then rescale into out."""
    raw, sat = rescale_raw(a.raw * b.raw, a.fmt.f + b.fmt.f, out)
    return Fixed(raw, out, saturated=sat)


class ReciprocalTable:
    """Lookup table of quantized reciprocals 1/n, indexed by the counter value.

    Entry n holds quantize(1/n) at the reciprocal format; entry 0 is a
    placeholder (dividing by zero is a domain error).  The table is immutable
    after construction.
    """

    def __init__(self, depth: int = 1 << 18, fmt: QFormat = QFormat(18, 1, signed=False)):
        if depth < 2:
            raise ConfigurationError("reciprocal table needs depth >= 2")
        self.depth = depth
        self.fmt = fmt
        n = np.arange(depth, dtype=np.int64)
        n[0] = 1  # placeholder; entry 0 is never read
        # round-half-away of 2^f / n for positive integers
        entries = (2 * (1 << fmt.f) + n) // (2 * n)
        entries[0] = 0
        self.entries = np.minimum(entries, fmt.raw_max)
        self.entries.setflags(write=False)

    def lookup(self, n: int) -> int:
        if n == 0:
            raise DivisionDomainError("reciprocal of zero")
        if n >= self.depth:
            raise CapacityError(f"counter {n} beyond table depth {self.depth}")
        return int(self.entries[n])

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(LUT_MAGIC)
            fh.write(struct.pack("<I", self.depth))
            fh.write(self.entries.astype("<i4").tobytes())

    @classmethod
    def load(cls, path, fmt: QFormat = QFormat(18, 1, signed=False)) -> "ReciprocalTable":
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != LUT_MAGIC:
                raise ConfigurationError(f"bad reciprocal table magic {magic!r}")
            (depth,) = struct.unpack("<I", fh.read(4))
            data = fh.read(4 * depth)
            if len(data) != 4 * depth:
                raise ConfigurationError("truncated reciprocal table")
        table = cls.__new__(cls)
        table.depth = depth
        table.fmt = fmt
        table.entries = np.frombuffer(data, dtype="<i4").astype(np.int64)
        table.entries.setflags(write=False)
        return table


_default_table = None


def default_reciprocal_table() -> ReciprocalTable:
    global _default_table
    if _default_table is None:
        _default_table = ReciprocalTable()
    return _default_table


def fx_div_by_counter(a: Fixed, n: int, out: QFormat, table: ReciprocalTable | None = None) -> Fixed:
    """Divide by a counter via reciprocal-LUT multiply (how the datapath divides)."""
    if table is None:
        table = default_reciprocal_table()
    recip = table.lookup(n)
    raw, sat = rescale_raw(a.raw * recip, a.fmt.f + table.fmt.f, out)
    return Fixed(raw, out, saturated=sat)
