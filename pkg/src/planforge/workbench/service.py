"""HTTP service backing the studio UI.

Sampling is synchronous and shares immutable loaded models across requests;
training, fine-tuning, and evaluation run as queued background jobs under
job-scoped directories. Validation failures come back as 400 responses with
machine-readable field errors.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, ConfigDict, Field

from ..dataset import FloorplanRecord, record_to_dict
from ..denoiser.checkpoint import FORMAT as CHECKPOINT_FORMAT
from ..errors import PlanforgeError, ValidationError
from ..estimator import FloorplanDiffusion
from ..metrics import boundary_violations, diversity_score, graph_compatibility
from ..validation import check_boundary, check_corner_counts, check_graph
from .config import WorkbenchConfig
from .jobs import JobManager
from .runs import run_evaluate, run_finetune, run_training


class GraphBody(BaseModel):
    room_types: list[str] = Field(min_length=1)
    edges: list[tuple[int, int, int]] = Field(default_factory=list)


class SampleBody(BaseModel):
    model_config = ConfigDict(populate_by_name=True)
    checkpoint: Optional[str] = None
    graph: GraphBody
    boundary: Optional[list[tuple[float, float]]] = None
    lam: float = Field(default=1.0, alias="lambda", ge=0.0, le=1.0)
    n: int = Field(default=1, ge=1, le=512)
    seed: int = 0
    corner_counts: Optional[list[int]] = None


class TrainJobBody(BaseModel):
    dataset: str
    steps: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = None


class FinetuneJobBody(BaseModel):
    checkpoint: str
    dataset: str
    shots: int = Field(ge=0)
    steps: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = None


class EvaluateBody(BaseModel):
    checkpoint: str
    dataset: str
    sample_count: Optional[int] = Field(default=None, ge=2)
    ds_conditions: Optional[int] = Field(default=None, ge=1)
    ds_samples: Optional[int] = Field(default=None, ge=2)
    seed: Optional[int] = None


def _field_errors(exc: RequestValidationError) -> list[dict]:
    errors = []
    for err in exc.errors():
        loc = [str(p) for p in err["loc"] if p != "body"]
        errors.append({"field": ".".join(loc) or "body", "message": err["msg"]})
    return errors


class ModelCache:
    def __init__(self):
        self._lock = threading.Lock()
        self._cache: dict[str, FloorplanDiffusion] = {}

    def get(self, path: Path) -> FloorplanDiffusion:
        key = str(Path(path).resolve())
        with self._lock:
            if key not in self._cache:
                self._cache[key] = FloorplanDiffusion.load(key)
            return self._cache[key]


def discover_checkpoints(home: Path) -> list[dict]:
    found = []
    for manifest in sorted(Path(home).rglob("manifest.json")):
        try:
            data = json.loads(manifest.read_text())
        except (OSError, json.JSONDecodeError):
            continue
        if data.get("format") != CHECKPOINT_FORMAT:
            continue
        found.append(
            {
                "path": str(manifest.parent),
                "step": data.get("step"),
                "digest": data.get("digest"),
            }
        )
    return found


def discover_datasets(home: Path) -> list[dict]:
    out = []
    for path in sorted(Path(home).rglob("*.jsonl")):
        entry = {"name": path.stem, "path": str(path)}
        sidecar = path.with_suffix("").with_suffix(".manifest.json")
        if sidecar.exists():
            try:
                entry["record_count"] = json.loads(sidecar.read_text()).get("record_count")
            except (OSError, json.JSONDecodeError):
                pass
        out.append(entry)
    return out


def create_app(
    home, config: Optional[WorkbenchConfig] = None, frontend_dir=None
) -> FastAPI:
    home = Path(home)
    home.mkdir(parents=True, exist_ok=True)
    config = config or WorkbenchConfig()
    app = FastAPI(title="planforge", version="0.1.0")
    app.state.home = home
    app.state.config = config
    app.state.jobs = JobManager(home)
    app.state.models = ModelCache()

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"errors": _field_errors(exc)})

    @app.exception_handler(PlanforgeError)
    async def domain_handler(request: Request, exc: PlanforgeError):
        status = 400 if isinstance(exc, ValidationError) else 500
        return JSONResponse(
            status_code=status,
            content={"errors": [{"field": "request", "message": str(exc)}]},
        )

    def _resolve(path_str: str) -> Path:
        p = Path(path_str)
        return p if p.is_absolute() else home / p

    def _default_checkpoint() -> Optional[str]:
        if config.service.default_checkpoint:
            return str(_resolve(config.service.default_checkpoint))
        found = discover_checkpoints(home)
        return found[-1]["path"] if found else None

    @app.get("/api/health")
    def health():
        return {
            "status": "ok",
            "checkpoint": _default_checkpoint(),
            "config_digest": config.digest(),
        }

    @app.get("/api/checkpoints")
    def checkpoints():
        return {"checkpoints": discover_checkpoints(home)}

    @app.get("/api/datasets")
    def datasets():
        return {"datasets": discover_datasets(home)}

    @app.post("/api/sample")
    def sample_endpoint(body: SampleBody):
        ckpt = body.checkpoint or _default_checkpoint()
        if ckpt is None:
            raise ValidationError("no checkpoint available; train first")
        est = app.state.models.get(_resolve(ckpt))
        graph = check_graph(body.graph.model_dump())
        boundary = check_boundary(body.boundary)
        counts = check_corner_counts(
            body.corner_counts, graph.num_rooms, est.max_corners_per_room
        )
        plans = est.sample(
            graph,
            boundary=boundary,
            n_samples=body.n,
            guidance=body.lam,
            seed=body.seed,
            corner_counts=counts,
        )
        records = [
            record_to_dict(FloorplanRecord(plan=p, graph=graph, id=f"sample-{i:04d}"))
            for i, p in enumerate(plans)
        ]
        extractor = config.eval.protocol().extractor
        gc_values = [graph_compatibility(graph, p) for p in plans]
        metrics = {
            "gc": float(np.mean(gc_values)),
            "bc": (
                float(boundary_violations(plans, boundary, config.eval.tau).mean())
                if boundary is not None
                else None
            ),
            "ds": (
                diversity_score([extractor(p) for p in plans])
                if len(plans) >= 2
                else None
            ),
        }
        return {
            "checkpoint": str(ckpt),
            "lambda": body.lam,
            "seed": body.seed,
            "plans": records,
            "metrics": metrics,
        }

    @app.post("/api/jobs/train")
    def submit_train(body: TrainJobBody):
        dataset = _resolve(body.dataset)
        if not dataset.exists():
            raise ValidationError(f"dataset not found: {dataset}")

        def work(job_dir: Path) -> dict:
            return run_training(config, dataset, job_dir, steps=body.steps, seed=body.seed)

        job_id = app.state.jobs.submit("train", body.model_dump(), work)
        return {"id": job_id, "status": "queued"}

    @app.post("/api/jobs/finetune")
    def submit_finetune(body: FinetuneJobBody):
        dataset = _resolve(body.dataset)
        ckpt = _resolve(body.checkpoint)
        if not dataset.exists():
            raise ValidationError(f"dataset not found: {dataset}")

        def work(job_dir: Path) -> dict:
            return run_finetune(
                config, ckpt, dataset, body.shots, job_dir,
                steps=body.steps, seed=body.seed,
            )

        job_id = app.state.jobs.submit("fine-tune", body.model_dump(), work)
        return {"id": job_id, "status": "queued"}

    @app.post("/api/evaluate")
    def submit_evaluate(body: EvaluateBody):
        dataset = _resolve(body.dataset)
        ckpt = _resolve(body.checkpoint)
        if not dataset.exists():
            raise ValidationError(f"dataset not found: {dataset}")

        def work(job_dir: Path) -> dict:
            return run_evaluate(
                config, ckpt, dataset, job_dir,
                sample_count=body.sample_count,
                ds_conditions=body.ds_conditions,
                ds_samples=body.ds_samples,
                seed=body.seed,
            )

        job_id = app.state.jobs.submit("evaluate", body.model_dump(), work)
        return {"id": job_id, "status": "queued"}

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        record = app.state.jobs.get(job_id)
        if record is None:
            return JSONResponse(
                status_code=404,
                content={"errors": [{"field": "id", "message": f"no job {job_id}"}]},
            )
        return record

    @app.get("/api/jobs")
    def job_list():
        return {"jobs": app.state.jobs.all()}

    if frontend_dir is not None and Path(frontend_dir).exists():
        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="studio")
    return app


def serve(home, config: Optional[WorkbenchConfig] = None, port: Optional[int] = None,
          frontend_dir=None) -> None:
    import uvicorn

    config = config or WorkbenchConfig()
    app = create_app(home, config, frontend_dir=frontend_dir)
    if not discover_checkpoints(Path(home)):
        raise ValidationError(
            f"no checkpoints under {home}; train one before serving"
        )
    uvicorn.run(app, host="127.0.0.1", port=port or config.service.port)
