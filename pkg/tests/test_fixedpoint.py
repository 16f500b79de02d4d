"""Fixed-point arithmetic: spec examples, exhaustive invariants over the
feature format, and agreement with an exact big-rational oracle."""

from fractions import Fraction

import numpy as np
import pytest

from anchorvote import (
    CapacityError,
    DivisionDomainError,
    Fixed,
    NumericError,
    QFormat,
    ReciprocalTable,
    StageFormats,
    fx_add,
    fx_div_by_counter,
    fx_mul,
    quantize,
)
from anchorvote.errors import ConfigurationError
from anchorvote.fixedpoint import dequantize_array, quantize_array

FA = QFormat(18, 5)        # feature/anchor
DIST = QFormat(18, 10)


# ---------------------------------------------------------------------------
# Oracle: exact rational arithmetic followed by a single quantize-to-out
# ---------------------------------------------------------------------------

def round_half_away(x: Fraction) -> int:
    sign = -1 if x < 0 else 1
    ax = abs(x)
    whole = ax.numerator // ax.denominator
    if ax - whole >= Fraction(1, 2):
        whole += 1
    return sign * whole


def oracle_to_raw(value: Fraction, out: QFormat) -> tuple[int, bool]:
    raw = round_half_away(value * (1 << out.f))
    if raw > out.raw_max:
        return out.raw_max, True
    if raw < out.raw_min:
        return out.raw_min, True
    return raw, False


def as_fraction(fx: Fixed) -> Fraction:
    return Fraction(fx.raw, 1 << fx.fmt.f)


# ---------------------------------------------------------------------------
# QFormat
# ---------------------------------------------------------------------------

def test_stage_format_budget():
    fmts = StageFormats()
    all_fmts = [fmts.feature_anchor, fmts.distance, fmts.address_counter,
                fmts.distance_times_counter, fmts.anchor_times_counter,
                fmts.anchor_plus_feature]
    assert all(f.n == 18 for f in all_fmts)
    assert [f.m for f in all_fmts] == [5, 10, 18, 16, 10, 10]
    assert fmts.counter_max == 2**18 - 1


def test_qformat_range():
    assert FA.f == 13
    assert FA.max_value == 2**4 - 2**-13
    assert FA.min_value == -(2**4)
    assert FA.resolution == 2**-13
    unsigned = QFormat(18, 18, signed=False)
    assert unsigned.raw_min == 0 and unsigned.raw_max == 262143


def test_qformat_validation():
    with pytest.raises(ConfigurationError):
        QFormat(18, 0)
    with pytest.raises(ConfigurationError):
        QFormat(18, 19)
    with pytest.raises(ConfigurationError):
        QFormat(65, 5)


# ---------------------------------------------------------------------------
# quantize
# ---------------------------------------------------------------------------

def test_quantize_one_is_exact():
    fx = quantize(1.0, FA)
    assert fx.raw == 8192 and fx.value == 1.0 and not fx.saturated


@pytest.mark.parametrize("fmt", [FA, DIST, QFormat(18, 16), QFormat(12, 3)])
def test_quantize_zero(fmt):
    assert quantize(0.0, fmt).raw == 0


def test_quantize_saturates_at_range():
    fx = quantize(20.0, FA)
    assert fx.raw == 131071 and fx.saturated
    assert fx.value == 2**4 - 2**-13


def test_quantize_extremes_saturate_with_correct_sign():
    for x, expect in ((1e300, FA.raw_max), (-1e300, FA.raw_min),
                      (1e18, FA.raw_max), (-1e18, FA.raw_min)):
        fx = quantize(x, FA)
        assert fx.raw == expect and fx.saturated
    raws = quantize_array(np.array([1e300, -1e300, 1e18, -1e18]), FA)
    assert raws.tolist() == [FA.raw_max, FA.raw_min, FA.raw_max, FA.raw_min]


def test_quantize_boundary_values_not_flagged():
    assert not quantize(FA.max_value, FA).saturated
    assert not quantize(-16.0, FA).saturated  # the exact negative extreme
    assert quantize(-16.0, FA).raw == FA.raw_min


def test_quantize_non_finite():
    for bad in (float("nan"), float("inf"), float("-inf")):
        with pytest.raises(NumericError):
            quantize(bad, FA)
    with pytest.raises(NumericError):
        quantize_array(np.array([0.0, np.nan]), FA)


def test_quantize_round_trip_bound():
    rng = np.random.default_rng(7)
    xs = rng.uniform(FA.min_value, FA.max_value, size=20000)
    raw = quantize_array(xs, FA)
    back = dequantize_array(raw, FA)
    assert np.max(np.abs(back - xs)) <= 2.0**-14 + 1e-18


def test_quantize_exhaustive_identity_over_format():
    # every representable value must quantize back to its own raw code
    raws = np.arange(FA.raw_min, FA.raw_max + 1, dtype=np.int64)
    values = dequantize_array(raws, FA)
    assert np.array_equal(quantize_array(values, FA), raws)


def test_quantize_monotone_exhaustive():
    raws = np.arange(FA.raw_min, FA.raw_max + 1, dtype=np.int64)
    grid = dequantize_array(raws, FA)
    # representable points, midpoints, and out-of-range extremes, in order
    xs = np.concatenate([[FA.min_value - 1.0], grid, grid + 2.0**-14,
                         [FA.max_value + 1.0]])
    xs.sort()
    out = quantize_array(xs, FA)
    assert np.all(np.diff(out) >= 0)


def test_quantize_symmetry_exhaustive():
    raws = np.arange(FA.raw_min + 1, FA.raw_max + 1, dtype=np.int64)
    values = dequantize_array(raws, FA)
    assert np.array_equal(quantize_array(-values, FA), -raws)
    # the asymmetric two's-complement extreme saturates
    assert quantize(-FA.min_value, FA).raw == FA.raw_max


def test_quantize_scalar_matches_array():
    rng = np.random.default_rng(11)
    xs = np.concatenate([rng.uniform(-40, 40, size=300),
                         rng.uniform(-1e6, 1e6, size=50),
                         [0.0, FA.max_value, FA.min_value, 1e300, -1e300]])
    arr = quantize_array(xs, FA)
    for x, r in zip(xs, arr):
        assert quantize(float(x), FA).raw == r


# ---------------------------------------------------------------------------
# fx_add / fx_mul
# ---------------------------------------------------------------------------

def test_fx_add_identity():
    b = quantize(1.25, FA)
    out = fx_add(Fixed(0, FA), b, DIST)
    assert out.value == 1.25


def test_fx_add_exact():
    one = quantize(1.0, FA)
    assert fx_add(one, one, FA).value == 2.0


def test_fx_add_saturates():
    top = Fixed(FA.raw_max, FA)
    out = fx_add(top, top, FA)
    assert out.raw == FA.raw_max and out.saturated


def test_fx_mul_identity():
    one = quantize(1.0, FA)
    b = quantize(-2.375, FA)
    assert fx_mul(one, b, DIST).value == -2.375


def test_fx_mul_zero():
    z = Fixed(0, FA)
    b = quantize(13.5, FA)
    assert fx_mul(z, b, DIST).raw == 0


def test_fx_mul_exact_product():
    a = quantize(1.5, FA)
    b = quantize(2.5, FA)
    assert fx_mul(a, b, DIST).value == 3.75


def _random_fixed(rng, fmt):
    return Fixed(int(rng.integers(fmt.raw_min, fmt.raw_max + 1)), fmt)


@pytest.mark.parametrize("out_fmt", [FA, DIST, QFormat(18, 16)])
def test_fx_add_against_oracle(out_fmt):
    rng = np.random.default_rng(13)
    for _ in range(4000):
        a = _random_fixed(rng, FA)
        b = _random_fixed(rng, DIST)
        expect, sat = oracle_to_raw(as_fraction(a) + as_fraction(b), out_fmt)
        got = fx_add(a, b, out_fmt)
        assert got.raw == expect and got.saturated == sat


@pytest.mark.parametrize("out_fmt", [FA, DIST, QFormat(18, 16)])
def test_fx_mul_against_oracle(out_fmt):
    rng = np.random.default_rng(17)
    for _ in range(4000):
        a = _random_fixed(rng, FA)
        b = _random_fixed(rng, DIST)
        expect, sat = oracle_to_raw(as_fraction(a) * as_fraction(b), out_fmt)
        got = fx_mul(a, b, out_fmt)
        assert got.raw == expect and got.saturated == sat


# ---------------------------------------------------------------------------
# reciprocal table and division
# ---------------------------------------------------------------------------

def test_reciprocal_of_one_is_exact():
    table = ReciprocalTable(depth=16)
    assert table.lookup(1) == 1 << 17  # exactly 1.0 in the unsigned format
    a = quantize(3.125, DIST)
    assert fx_div_by_counter(a, 1, DIST, table).raw == a.raw


def test_div_by_two():
    table = ReciprocalTable(depth=16)
    a = quantize(4.0, DIST)
    out = fx_div_by_counter(a, 2, DIST, table)
    assert abs(out.value - 2.0) <= DIST.resolution


def test_div_by_three_error_bound():
    table = ReciprocalTable(depth=16)
    a = quantize(1.0, DIST)
    out = fx_div_by_counter(a, 3, DIST, table)
    assert abs(out.value - 1.0 / 3.0) <= DIST.resolution + 2.0**-17


def test_div_domain_and_capacity():
    table = ReciprocalTable(depth=16)
    a = quantize(1.0, DIST)
    with pytest.raises(DivisionDomainError):
        fx_div_by_counter(a, 0, DIST, table)
    with pytest.raises(CapacityError):
        fx_div_by_counter(a, 16, DIST, table)


def test_div_against_oracle():
    table = ReciprocalTable(depth=1024)
    rng = np.random.default_rng(19)
    for _ in range(3000):
        a = _random_fixed(rng, DIST)
        n = int(rng.integers(1, 1024))
        recip_raw = min(round_half_away(Fraction(1 << 17, n)), (1 << 18) - 1)
        expect, sat = oracle_to_raw(as_fraction(a) * Fraction(recip_raw, 1 << 17), FA)
        got = fx_div_by_counter(a, n, FA, table)
        assert got.raw == expect and got.saturated == sat


def test_table_save_load_round_trip(tmp_path):
    table = ReciprocalTable(depth=512)
    path = tmp_path / "recip.tlut"
    table.save(path)
    loaded = ReciprocalTable.load(path)
    assert loaded.depth == 512
    assert np.array_equal(loaded.entries, table.entries)
    assert path.read_bytes()[:4] == b"TLUT"


def test_table_entries_are_quantized_reciprocals():
    table = ReciprocalTable(depth=64)
    for n in range(1, 64):
        assert table.entries[n] == round_half_away(Fraction(1 << 17, n))
