"""HTTP service wrapping the library.

One endpoint per workflow step (generate data, train, predict, evaluate,
simulate, resource report).  Requests reference files by path on the
server's filesystem; the bundled CLI is a thin client of these endpoints
and by default runs the app in-process, so paths resolve as expected.

Library errors map to HTTP statuses by kind: usage/configuration errors
become 400, runtime errors (untrained model, capacity, protocol) become
409; payloads carry ``{"error": kind, "message": ...}``.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import __version__
from .config import parse_config_file
from .core import load_bank, predict_group, save_bank
from .dataset import Dataset, load_dataset, save_dataset
from .errors import AnchorVoteError, UsageError
from .experiment import run_experiment, train_bank
from .hwsim import resource_report
from .replay import TrainingLog
from .reporting import render_report
from .synthetic import (
    SyntheticSpec,
    generate_datasets,
    nearest_centroid_accuracy,
    parse_spec_file,
)


class SpecModel(BaseModel):
    classes: int = 10
    dim: int = 64
    clusters_per_class: int = 2
    cluster_spread: float = 0.3
    center_scale: float = 1.0
    train_per_class: int = 100
    test_per_class: int = 20
    versions: int = 1
    jitter_frac: float = 0.5
    seed: int = 0


class GenerateRequest(BaseModel):
    out_train: str
    out_test: str
    spec: Optional[SpecModel] = None
    spec_path: Optional[str] = None


class GenerateResponse(BaseModel):
    train_records: int
    test_records: int
    test_groups: int
    centroid_ceiling: float


class TrainRequest(BaseModel):
    config_path: str
    data_path: str
    model_path: str
    log_path: Optional[str] = None


class TrainResponse(BaseModel):
    examples: int
    model_path: str


class PredictRequest(BaseModel):
    model_path: str
    data_path: str
    out_path: str


class PredictResponse(BaseModel):
    groups: int
    accuracy: float


class EvalRequest(BaseModel):
    config_path: str
    train_path: str
    test_path: str
    variants: list[str] = ["float", "quant", "sim"]
    format: str = "text"


class EvalResponse(BaseModel):
    report: str
    accuracy: float
    per_variant: dict[str, float]


class SimulateRequest(BaseModel):
    config_path: str
    train_path: str
    test_path: str
    trace_path: Optional[str] = None


class SimulateResponse(BaseModel):
    accuracy: float
    groups: int
    classify_cycles_consumed: int
    learn_cycles_per_vector: int
    classify_cycles_per_group: int
    learn_latency_ns: float
    classify_latency_ns: float


class ConfigRequest(BaseModel):
    config_path: str


class ResourceResponse(BaseModel):
    anchor_memory_bits: int
    counter_memory_bits: int
    total_memory_bits: int
    dsp_count: int


def _load_dataset(path) -> Dataset:
    try:
        return load_dataset(path)
    except OSError as exc:
        raise UsageError(f"cannot read dataset {path}: {exc}") from exc


def _write_guard(path, action):
    """Run a writing action, mapping filesystem failures to usage errors."""
    try:
        action()
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc


def create_app() -> FastAPI:
    app = FastAPI(title="anchorvote", version=__version__)

    @app.exception_handler(AnchorVoteError)
    async def _handle_library_error(request, exc: AnchorVoteError):
        status = 400 if exc.kind in ("usage", "config") else 409
        return JSONResponse(status_code=status,
                            content={"error": exc.kind, "message": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/datasets/generate", response_model=GenerateResponse)
    def generate(req: GenerateRequest):
        if (req.spec is None) == (req.spec_path is None):
            raise UsageError("provide exactly one of spec or spec_path")
        if req.spec_path is not None:
            spec = parse_spec_file(req.spec_path)
        else:
            spec = SyntheticSpec(**req.spec.model_dump())
        train, test = generate_datasets(spec)
        _write_guard(req.out_train, lambda: save_dataset(train, req.out_train))
        _write_guard(req.out_test, lambda: save_dataset(test, req.out_test))
        return GenerateResponse(
            train_records=len(train),
            test_records=len(test),
            test_groups=len(test.group_slices()),
            centroid_ceiling=nearest_centroid_accuracy(spec, test),
        )

    @app.post("/train", response_model=TrainResponse)
    def train(req: TrainRequest):
        run = parse_config_file(req.config_path)
        data = _load_dataset(req.data_path)
        log = TrainingLog(run.model) if req.log_path else None
        bank = train_bank(run, data, quantize=run.model.quantize, log=log)
        _write_guard(req.model_path, lambda: save_bank(bank, req.model_path))
        if log is not None:
            _write_guard(req.log_path, lambda: log.save(req.log_path))
        return TrainResponse(examples=len(data), model_path=req.model_path)

    @app.post("/predict", response_model=PredictResponse)
    def predict_endpoint(req: PredictRequest):
        try:
            bank = load_bank(req.model_path)
        except OSError as exc:
            raise UsageError(f"cannot read model {req.model_path}: {exc}") from exc
        data = _load_dataset(req.data_path)
        slices = data.group_slices()
        if not slices:
            raise UsageError(f"dataset {req.data_path} has no records")
        correct = 0
        lines = ["group,label,predicted"]
        for start, stop, label in slices:
            versions = [data.values[i].astype("float64") for i in range(start, stop)]
            pred = predict_group(bank, versions).final_class
            correct += int(pred == label)
            lines.append(f"{int(data.groups[start])},{label},{pred}")

        def write_out():
            with open(req.out_path, "w", encoding="utf-8") as fh:
                fh.write("\n".join(lines) + "\n")

        _write_guard(req.out_path, write_out)
        return PredictResponse(groups=len(slices), accuracy=correct / len(slices))

    @app.post("/eval", response_model=EvalResponse)
    def eval_endpoint(req: EvalRequest):
        run = parse_config_file(req.config_path)
        train_data = _load_dataset(req.train_path)
        test_data = _load_dataset(req.test_path)
        result = run_experiment(run, train_data, test_data, req.variants)
        return EvalResponse(
            report=render_report(result, req.format),
            accuracy=result.accuracy,
            per_variant=result.per_variant,
        )

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(req: SimulateRequest):
        run = parse_config_file(req.config_path)
        train_data = _load_dataset(req.train_path)
        test_data = _load_dataset(req.test_path)
        if req.trace_path:
            try:
                with open(req.trace_path, "w", encoding="utf-8") as trace:
                    result = run_experiment(run, train_data, test_data, ["sim"],
                                            trace=trace)
            except OSError as exc:
                raise UsageError(f"cannot write {req.trace_path}: {exc}") from exc
        else:
            result = run_experiment(run, train_data, test_data, ["sim"])
        t = result.timing
        return SimulateResponse(
            accuracy=result.accuracy,
            groups=result.groups,
            classify_cycles_consumed=result.sim_cycles,
            learn_cycles_per_vector=t.learn_cycles_per_vector,
            classify_cycles_per_group=t.classify_cycles,
            learn_latency_ns=t.learn_latency_ns,
            classify_latency_ns=t.classify_latency_ns,
        )

    @app.post("/resources", response_model=ResourceResponse)
    def resources(req: ConfigRequest):
        run = parse_config_file(req.config_path)
        rep = resource_report(run.model)
        return ResourceResponse(
            anchor_memory_bits=rep.anchor_memory_bits,
            counter_memory_bits=rep.counter_memory_bits,
            total_memory_bits=rep.total_memory_bits,
            dsp_count=rep.dsp_count,
        )

    return app
