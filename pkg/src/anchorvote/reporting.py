"""Deterministic rendering of experiment results.

All three formats use fixed field order and 6-significant-digit numeric
formatting so rendered reports are byte-stable and safe for golden-file
tests.
"""

from __future__ import annotations

import json

from .errors import UsageError
from .experiment import ExperimentResult

FORMATS = ("text", "csv", "json-lines")

CSV_COLUMNS = (
    "variant", "accuracy", "groups",
    "learn_cycles", "classify_cycles", "frequency_mhz",
    "learn_latency_ns", "classify_latency_ns",
    "anchor_memory_bits", "counter_memory_bits", "total_memory_bits", "dsp_count",
)


def _num(x) -> str:
    return f"{x:.6g}"


def _variant_row(result: ExperimentResult, name: str) -> dict:
    t, r = result.timing, result.resources
    return {
        "variant": name,
        "accuracy": _num(result.per_variant[name]),
        "groups": result.groups,
        "learn_cycles": t.learn_cycles_per_vector,
        "classify_cycles": t.classify_cycles,
        "frequency_mhz": _num(t.frequency_hz / 1e6),
        "learn_latency_ns": _num(t.learn_latency_ns),
        "classify_latency_ns": _num(t.classify_latency_ns),
        "anchor_memory_bits": r.anchor_memory_bits,
        "counter_memory_bits": r.counter_memory_bits,
        "total_memory_bits": r.total_memory_bits,
        "dsp_count": r.dsp_count,
    }


def render_report(result: ExperimentResult, fmt: str = "text") -> str:
    if fmt not in FORMATS:
        raise UsageError(f"unknown report format {fmt!r} (expected one of {FORMATS})")
    names = sorted(result.per_variant)
    if fmt == "csv":
        lines = [",".join(CSV_COLUMNS)]
        for name in names:
            row = _variant_row(result, name)
            lines.append(",".join(str(row[col]) for col in CSV_COLUMNS))
        return "\n".join(lines) + "\n"

    if fmt == "json-lines":
        lines = []
        for name in names:
            lines.append(json.dumps(_variant_row(result, name), sort_keys=True))
        return "\n".join(lines) + "\n"

    # text
    t, r = result.timing, result.resources
    lines = ["experiment result", ""]
    for name in names:
        lines.append(f"  accuracy[{name}] = {_num(result.per_variant[name])}"
                     f"  ({result.groups} test groups)")
    lines += [
        "",
        f"  learn: {t.learn_cycles_per_vector} cycles/vector,"
        f" {_num(t.learn_latency_ns)} ns at {_num(t.frequency_hz / 1e6)} MHz",
        f"  classify: {t.classify_cycles} cycles,"
        f" {_num(t.classify_latency_ns)} ns",
        f"  memory: {r.anchor_memory_bits} anchor bits"
        f" + {r.counter_memory_bits} counter bits"
        f" = {r.total_memory_bits} bits",
        f"  dsp: {r.dsp_count}",
        "",
        "  confusion (rows = true class):",
    ]
    for row in result.confusion:
        lines.append("    " + " ".join(f"{int(v):5d}" for v in row))
    return "\n".join(lines) + "\n"
