import json
import time

import pytest
from fastapi.testclient import TestClient

from planforge.dataset import gen_pentagon_set, record_to_dict, save_dataset
from planforge.estimator import FloorplanDiffusion
from planforge.workbench.config import load_config
from planforge.workbench.service import create_app


@pytest.fixture(scope="module")
def records():
    return gen_pentagon_set(seed=51, n=4)


@pytest.fixture(scope="module")
def home(tmp_path_factory, records):
    home = tmp_path_factory.mktemp("home")
    save_dataset(records, home / "pentagon.jsonl")
    est = FloorplanDiffusion(
        d_model=16, num_heads=2, num_blocks=1, coord_bins=32,
        discrete_threshold=2, timesteps=12, steps=8, batch_size=2,
        checkpoint_every=100, seed=5,
    ).fit(records)
    est.save(home / "checkpoints" / "base")
    return home


@pytest.fixture(scope="module")
def client(home):
    cfg = load_config(None, [
        "schedule.timesteps=12",
        "model.d_model=16", "model.num_heads=2", "model.num_blocks=1",
        "model.coord_bins=32", "model.discrete_threshold=2",
        "train.steps=6", "train.batch_size=2", "train.checkpoint_every=3",
        "eval.sample_count=4", "eval.ds_conditions=2", "eval.ds_samples=2",
    ])
    app = create_app(home, cfg)
    with TestClient(app) as c:
        yield c


def sample_body(records, **kw):
    rec = record_to_dict(records[0])
    body = {
        "graph": {
            "room_types": [r["type"] for r in rec["rooms"]],
            "edges": rec["edges"],
        },
        "boundary": rec["boundary"],
        "lambda": 0.8,
        "n": 4,
        "seed": 1,
    }
    body.update(kw)
    return body


class TestHealthAndDiscovery:
    def test_health(self, client):
        r = client.get("/api/health")
        assert r.status_code == 200
        data = r.json()
        assert data["status"] == "ok"
        assert data["checkpoint"]
        assert data["config_digest"].startswith("sha256:")

    def test_checkpoints(self, client):
        r = client.get("/api/checkpoints")
        assert r.status_code == 200
        assert len(r.json()["checkpoints"]) >= 1

    def test_datasets(self, client):
        r = client.get("/api/datasets")
        assert r.status_code == 200
        names = [d["name"] for d in r.json()["datasets"]]
        assert "pentagon" in names


class TestSampleEndpoint:
    def test_returns_plans_and_metric_block(self, client, records):
        r = client.post("/api/sample", json=sample_body(records))
        assert r.status_code == 200, r.text
        data = r.json()
        assert len(data["plans"]) == 4
        assert set(data["metrics"]) == {"ds", "bc", "gc"}
        assert data["metrics"]["ds"] is not None
        # wire schema identical to dataset records
        plan = data["plans"][0]
        assert set(plan) == {"id", "rooms", "boundary", "edges"}

    def test_lambda_out_of_range_400(self, client, records):
        r = client.post("/api/sample", json=sample_body(records, **{"lambda": 1.5}))
        assert r.status_code == 400
        fields = [e["field"] for e in r.json()["errors"]]
        assert "lambda" in fields

    def test_identical_requests_identical_responses(self, client, records):
        body = sample_body(records, n=2)
        a = client.post("/api/sample", json=body).json()
        b = client.post("/api/sample", json=body).json()
        assert a == b

    def test_boundaryless_request(self, client, records):
        body = sample_body(records, n=2)
        body["boundary"] = None
        r = client.post("/api/sample", json=body)
        assert r.status_code == 200
        assert r.json()["metrics"]["bc"] is None


def wait_for_job(client, job_id, timeout=120.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        record = client.get(f"/api/jobs/{job_id}").json()
        if record["status"] in ("done", "failed"):
            return record
        time.sleep(0.2)
    raise TimeoutError(f"job {job_id} did not finish")


class TestJobs:
    def test_train_then_finetune_then_evaluate(self, client):
        r = client.post("/api/jobs/train", json={"dataset": "pentagon.jsonl", "steps": 6})
        assert r.status_code == 200, r.text
        job = wait_for_job(client, r.json()["id"])
        assert job["status"] == "done", job
        ckpt = job["artifacts"]["checkpoint"]

        r2 = client.post(
            "/api/jobs/finetune",
            json={"checkpoint": ckpt, "dataset": "pentagon.jsonl",
                  "shots": 2, "steps": 4},
        )
        assert r2.status_code == 200, r2.text
        job2 = wait_for_job(client, r2.json()["id"])
        assert job2["status"] == "done", job2

        r3 = client.post(
            "/api/evaluate",
            json={"checkpoint": ckpt, "dataset": "pentagon.jsonl",
                  "sample_count": 4, "ds_conditions": 2, "ds_samples": 2},
        )
        assert r3.status_code == 200, r3.text
        job3 = wait_for_job(client, r3.json()["id"])
        assert job3["status"] == "done", job3
        assert "fid" in job3["artifacts"]

        # finished training jobs surface in the checkpoint listing
        paths = [c["path"] for c in client.get("/api/checkpoints").json()["checkpoints"]]
        assert any(ckpt in p or p in ckpt for p in paths)

    def test_missing_dataset_400(self, client):
        r = client.post("/api/jobs/train", json={"dataset": "nope.jsonl"})
        assert r.status_code == 400

    def test_unknown_job_404(self, client):
        assert client.get("/api/jobs/doesnotexist").status_code == 404

    def test_failed_job_surfaces_error(self, client, home):
        bad = home / "bad.jsonl"
        bad.write_text("{not json\n")
        r = client.post("/api/jobs/train", json={"dataset": "bad.jsonl", "steps": 2})
        assert r.status_code == 200
        job = wait_for_job(client, r.json()["id"])
        assert job["status"] == "failed"
        assert job["error"]
