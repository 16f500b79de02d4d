"""Run-config file format and model-config validation."""

import pytest

from anchorvote import ConfigurationError, ModelConfig, UsageError
from anchorvote.config import parse_config_file, parse_config_text


def test_full_config_parse():
    run = parse_config_text("""
        # experiment settings
        T = 2048
        P = 16
        C = 10
        k = 30
        R = 5
        metric = l2
        quantize = false
        frequency_mhz = 208
        seed = 42
        stream_seed = 7
    """)
    assert run.model == ModelConfig(dim=2048, parts=16, classes=10, slots=30,
                                    versions=5, metric="l2", quantize=False)
    assert run.frequency_mhz == 208 and run.seed == 42 and run.stream_seed == 7


def test_defaults():
    run = parse_config_text("T = 8\nP = 2\nC = 3\nk = 2\n")
    assert run.model.versions == 1
    assert run.model.metric == "l2sq"
    assert run.model.quantize is False
    assert run.frequency_mhz == 208.0
    assert run.seed == 0 and run.stream_seed == 0


@pytest.mark.parametrize("text,exc", [
    ("T = 8\nP = 2\nC = 3\n", UsageError),                 # missing k
    ("T = 8\nP = 2\nC = 3\nk = 2\nwat = 1\n", UsageError),  # unknown key
    ("T = 8\nT = 9\nP = 2\nC = 3\nk = 2\n", UsageError),    # duplicate
    ("T eight\nP = 2\nC = 3\nk = 2\n", UsageError),         # no equals
    ("T = eight\nP = 2\nC = 3\nk = 2\n", UsageError),       # bad int
    ("T = 8\nP = 2\nC = 3\nk = 2\nquantize = maybe\n", UsageError),
    ("T = 8\nP = 2\nC = 3\nk = 2\nmetric = cosine\n", ConfigurationError),
    ("T = 9\nP = 2\nC = 3\nk = 2\n", ConfigurationError),   # P does not divide T
])
def test_malformed_configs(text, exc):
    with pytest.raises(exc):
        parse_config_text(text)


def test_quantize_requires_squared_metric():
    with pytest.raises(ConfigurationError):
        parse_config_text("T = 8\nP = 2\nC = 3\nk = 2\nmetric = l2\nquantize = yes\n")


def test_part_dim():
    assert ModelConfig(dim=2048, parts=16, classes=10, slots=30).part_dim == 128


def test_missing_file_is_usage_error(tmp_path):
    with pytest.raises(UsageError):
        parse_config_file(tmp_path / "absent.cfg")


def test_bool_spellings():
    for raw, expect in (("true", True), ("YES", True), ("1", True),
                        ("false", False), ("No", False), ("0", False)):
        run = parse_config_text(f"T = 8\nP = 2\nC = 3\nk = 2\nquantize = {raw}\n")
        assert run.model.quantize is expect
