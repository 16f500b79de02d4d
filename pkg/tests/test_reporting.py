"""Report rendering: byte determinism, the documented CSV columns, the
header-only empty case, and internal consistency with the confusion matrix."""

import csv
import io
import json

import numpy as np
import pytest

from anchorvote import (
    ModelConfig,
    RunConfig,
    SyntheticSpec,
    UsageError,
    generate_datasets,
    render_report,
    run_experiment,
)
from anchorvote.experiment import ExperimentResult
from anchorvote.hwsim import resource_report, timing_report
from anchorvote.reporting import CSV_COLUMNS


@pytest.fixture(scope="module")
def result():
    spec = SyntheticSpec(classes=3, dim=8, clusters_per_class=1, cluster_spread=0.5,
                         train_per_class=15, test_per_class=8, seed=31)
    run = RunConfig(model=ModelConfig(dim=8, parts=2, classes=3, slots=2))
    train, test = generate_datasets(spec)
    return run_experiment(run, train, test, ["float", "quant"])


def test_rendering_is_deterministic(result):
    for fmt in ("text", "csv", "json-lines"):
        assert render_report(result, fmt) == render_report(result, fmt)


def test_unknown_format_rejected(result):
    with pytest.raises(UsageError):
        render_report(result, "yaml")


def test_csv_columns_and_parse(result):
    rendered = render_report(result, "csv")
    rows = list(csv.DictReader(io.StringIO(rendered)))
    assert tuple(rows[0].keys()) == CSV_COLUMNS
    assert len(rows) == 2
    variants = {row["variant"] for row in rows}
    assert variants == {"float_reference", "quantized_reference"}
    for row in rows:
        assert float(row["accuracy"]) <= 1.0
        assert int(row["dsp_count"]) == 8 + 2


def test_empty_variant_set_renders_header_only_csv():
    model = ModelConfig(dim=8, parts=2, classes=3, slots=2)
    empty = ExperimentResult(
        accuracy=0.0, confusion=np.zeros((3, 3), dtype=np.int64),
        per_variant={}, timing=timing_report(model, 208e6),
        resources=resource_report(model), groups=0)
    assert render_report(empty, "csv") == ",".join(CSV_COLUMNS) + "\n"


def test_json_lines_parse_back(result):
    rendered = render_report(result, "json-lines")
    rows = [json.loads(line) for line in rendered.splitlines()]
    assert len(rows) == 2
    assert {row["variant"] for row in rows} == {"float_reference", "quantized_reference"}


def test_rendered_accuracy_matches_confusion(result):
    recomputed = np.trace(result.confusion) / result.confusion.sum()
    rendered = render_report(result, "csv")
    row = next(r for r in csv.DictReader(io.StringIO(rendered))
               if r["variant"] == "float_reference")
    assert row["accuracy"] == f"{recomputed:.6g}"


def test_text_report_shows_confusion(result):
    text = render_report(result, "text")
    assert "confusion" in text
    assert f"{result.confusion[0].sum():d}" in text.replace(" ", " ")
