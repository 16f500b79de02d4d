"""HTTP service: full workflow through the endpoints, error-status mapping,
and response shapes."""

import pytest
from fastapi.testclient import TestClient

from anchorvote.service import create_app

CONFIG_TEXT = """
T = 16
P = 4
C = 4
k = 3
R = 1
metric = l2sq
quantize = false
frequency_mhz = 208
seed = 11
stream_seed = 77
"""

SPEC_TEXT = """
C = 4
T = 16
clusters_per_class = 1
cluster_spread = 0.4
train_per_class = 20
test_per_class = 10
seed = 11
"""


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "run.cfg").write_text(CONFIG_TEXT)
    (tmp_path / "data.spec").write_text(SPEC_TEXT)
    return tmp_path


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json()["status"] == "ok"


def test_generate_via_spec_path(client, workdir):
    resp = client.post("/datasets/generate", json={
        "spec_path": str(workdir / "data.spec"),
        "out_train": str(workdir / "train.tlds"),
        "out_test": str(workdir / "test.tlds"),
    })
    assert resp.status_code == 200
    body = resp.json()
    assert body["train_records"] == 80
    assert body["test_records"] == 40
    assert body["test_groups"] == 40
    assert 0.0 <= body["centroid_ceiling"] <= 1.0
    assert (workdir / "train.tlds").exists()


def test_generate_inline_spec(client, workdir):
    resp = client.post("/datasets/generate", json={
        "spec": {"classes": 3, "dim": 8, "train_per_class": 5,
                 "test_per_class": 2, "versions": 2},
        "out_train": str(workdir / "t.tlds"),
        "out_test": str(workdir / "e.tlds"),
    })
    assert resp.status_code == 200
    assert resp.json()["test_records"] == 12  # 6 groups x 2 versions


def test_generate_requires_exactly_one_spec(client, workdir):
    resp = client.post("/datasets/generate", json={
        "out_train": str(workdir / "x"), "out_test": str(workdir / "y"),
    })
    assert resp.status_code == 400
    assert resp.json()["error"] == "usage"


def _generate(client, workdir):
    client.post("/datasets/generate", json={
        "spec_path": str(workdir / "data.spec"),
        "out_train": str(workdir / "train.tlds"),
        "out_test": str(workdir / "test.tlds"),
    })


def test_train_predict_flow(client, workdir):
    _generate(client, workdir)
    resp = client.post("/train", json={
        "config_path": str(workdir / "run.cfg"),
        "data_path": str(workdir / "train.tlds"),
        "model_path": str(workdir / "model.tldb"),
        "log_path": str(workdir / "train.log"),
    })
    assert resp.status_code == 200
    assert resp.json()["examples"] == 80
    assert (workdir / "model.tldb").exists()
    assert (workdir / "train.log").exists()

    resp = client.post("/predict", json={
        "model_path": str(workdir / "model.tldb"),
        "data_path": str(workdir / "test.tlds"),
        "out_path": str(workdir / "pred.csv"),
    })
    assert resp.status_code == 200
    assert resp.json()["groups"] == 40
    lines = (workdir / "pred.csv").read_text().splitlines()
    assert lines[0] == "group,label,predicted"
    assert len(lines) == 41


def test_eval_endpoint(client, workdir):
    _generate(client, workdir)
    resp = client.post("/eval", json={
        "config_path": str(workdir / "run.cfg"),
        "train_path": str(workdir / "train.tlds"),
        "test_path": str(workdir / "test.tlds"),
        "variants": ["float", "quant", "sim"],
        "format": "csv",
    })
    assert resp.status_code == 200
    body = resp.json()
    assert set(body["per_variant"]) == {
        "float_reference", "quantized_reference", "hwsim"}
    assert body["report"].startswith("variant,accuracy")
    assert body["per_variant"]["quantized_reference"] == body["per_variant"]["hwsim"]


def test_simulate_endpoint_with_trace(client, workdir):
    _generate(client, workdir)
    resp = client.post("/simulate", json={
        "config_path": str(workdir / "run.cfg"),
        "train_path": str(workdir / "train.tlds"),
        "test_path": str(workdir / "test.tlds"),
        "trace_path": str(workdir / "run.trace"),
    })
    assert resp.status_code == 200
    body = resp.json()
    assert body["learn_cycles_per_vector"] == 3 + 3
    assert body["classify_cycles_per_group"] == 4 * 3
    assert body["classify_cycles_consumed"] == 40 * 4 * 3
    trace_lines = (workdir / "run.trace").read_text().splitlines()
    assert len(trace_lines) == (80 * 6 + 40 * 12) * 4  # cycles x blocks


def test_resources_endpoint(client, workdir):
    resp = client.post("/resources", json={"config_path": str(workdir / "run.cfg")})
    assert resp.status_code == 200
    body = resp.json()
    assert body["dsp_count"] == 16 + 4
    assert body["anchor_memory_bits"] == 18 * 4 * 3 * 16


def test_config_error_maps_to_400(client, workdir):
    (workdir / "bad.cfg").write_text("T = 10\nP = 3\nC = 2\nk = 1\n")
    resp = client.post("/resources", json={"config_path": str(workdir / "bad.cfg")})
    assert resp.status_code == 400
    assert resp.json()["error"] == "config"


def test_missing_file_maps_to_400(client, workdir):
    resp = client.post("/resources", json={"config_path": str(workdir / "absent.cfg")})
    assert resp.status_code == 400
    assert resp.json()["error"] == "usage"


def test_unwritable_output_maps_to_400(client, workdir):
    resp = client.post("/datasets/generate", json={
        "spec_path": str(workdir / "data.spec"),
        "out_train": str(workdir / "no" / "such" / "dir" / "train.tlds"),
        "out_test": str(workdir / "test.tlds"),
    })
    assert resp.status_code == 400
    assert resp.json()["error"] == "usage"


def test_empty_dataset_predict_maps_to_400(client, workdir):
    _generate(client, workdir)
    client.post("/train", json={
        "config_path": str(workdir / "run.cfg"),
        "data_path": str(workdir / "train.tlds"),
        "model_path": str(workdir / "model.tldb"),
    })
    import numpy as np

    from anchorvote import Dataset, save_dataset
    empty = Dataset(dim=16, classes=4,
                    labels=np.zeros(0, dtype=np.int64),
                    groups=np.zeros(0, dtype=np.int64),
                    values=np.zeros((0, 16), dtype=np.float32))
    save_dataset(empty, workdir / "empty.tlds")
    resp = client.post("/predict", json={
        "model_path": str(workdir / "model.tldb"),
        "data_path": str(workdir / "empty.tlds"),
        "out_path": str(workdir / "pred.csv"),
    })
    assert resp.status_code == 400


def test_untrained_model_maps_to_409(client, workdir):
    _generate(client, workdir)
    from anchorvote import AnchorBank, ModelConfig, save_bank
    bank = AnchorBank(ModelConfig(dim=16, parts=4, classes=4, slots=3))
    save_bank(bank, workdir / "empty.tldb")
    resp = client.post("/predict", json={
        "model_path": str(workdir / "empty.tldb"),
        "data_path": str(workdir / "test.tlds"),
        "out_path": str(workdir / "pred.csv"),
    })
    assert resp.status_code == 409
    assert resp.json()["error"] == "runtime"
