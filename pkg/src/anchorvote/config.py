"""Model hyperparameters and the flat key=value run-config file."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import ConfigurationError, UsageError

METRICS = ("l2sq", "l2")


@dataclass(frozen=True)
class ModelConfig:
    """Shape of the classifier.

    dim       feature-vector length (T)
    parts     number of equal subspaces the vector is split into (P)
    classes   number of classes (C)
    slots     anchor vectors per class per subspace (k)
    versions  augmented versions aggregated per input (R)
    metric    distance used for anchor selection/classification
    quantize  run the 18-bit fixed-point pipeline instead of float64
    """

    dim: int
    parts: int
    classes: int
    slots: int
    versions: int = 1
    metric: str = "l2sq"
    quantize: bool = False

    def __post_init__(self):
        for name in ("dim", "parts", "classes", "slots", "versions"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {v!r}")
        if self.dim % self.parts != 0:
            raise ConfigurationError(
                f"parts ({self.parts}) must divide dim ({self.dim}) exactly"
            )
        if self.metric not in METRICS:
            raise ConfigurationError(f"unknown metric {self.metric!r}")
        if self.quantize and self.metric != "l2sq":
            # the quantized datapath has no square-root unit
            raise ConfigurationError("quantize=True requires metric=l2sq")

    @property
    def part_dim(self) -> int:
        return self.dim // self.parts

    def with_(self, **kw) -> "ModelConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class RunConfig:
    """A model config plus the experiment-level knobs from a config file."""

    model: ModelConfig
    frequency_mhz: float = 208.0
    seed: int = 0
    stream_seed: int = 0


_BOOLS = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _parse_bool(raw: str, key: str) -> bool:
    try:
        return _BOOLS[raw.strip().lower()]
    except KeyError:
        raise UsageError(f"config key {key}: expected a boolean, got {raw!r}") from None


def parse_config_text(text: str) -> RunConfig:
    """Parse the flat ``key = value`` config format.

    Recognised keys: T, P, C, k, R, metric, quantize, frequency_mhz, seed,
    stream_seed.  T, P, C and k are required; the rest have defaults.
    """
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise UsageError(f"config line {lineno}: expected key = value, got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key in values:
            raise UsageError(f"config line {lineno}: duplicate key {key!r}")
        values[key] = raw.strip()

    known = {"T", "P", "C", "k", "R", "metric", "quantize",
             "frequency_mhz", "seed", "stream_seed"}
    unknown = set(values) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    missing = {"T", "P", "C", "k"} - set(values)
    if missing:
        raise UsageError(f"missing required config keys: {sorted(missing)}")

    def as_int(key, default=None):
        raw = values.get(key)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise UsageError(f"config key {key}: expected an integer, got {raw!r}") from None

    def as_float(key, default):
        raw = values.get(key)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            raise UsageError(f"config key {key}: expected a number, got {raw!r}") from None

    model = ModelConfig(
        dim=as_int("T"),
        parts=as_int("P"),
        classes=as_int("C"),
        slots=as_int("k"),
        versions=as_int("R", 1),
        metric=values.get("metric", "l2sq"),
        quantize=_parse_bool(values["quantize"], "quantize") if "quantize" in values else False,
    )
    return RunConfig(
        model=model,
        frequency_mhz=as_float("frequency_mhz", 208.0),
        seed=as_int("seed", 0),
        stream_seed=as_int("stream_seed", 0),
    )


def parse_config_file(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text)
