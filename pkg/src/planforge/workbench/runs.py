"""Shared run logic behind the CLI and the HTTP service: each run writes a
manifest (config digest + seeds + arguments) so results are reproducible."""

from __future__ import annotations

import json
import time
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from ..dataset import load_dataset, record_to_dict, FloorplanRecord
from ..errors import ValidationError
from ..estimator import FloorplanDiffusion
from ..geometry import rasterize
from ..metrics import (
    boundary_violations,
    diversity_score,
    graph_compatibility,
)
from ..validation import check_boundary, check_corner_counts, check_graph, check_guidance
from .config import WorkbenchConfig


def estimator_from_config(config: WorkbenchConfig, steps=None, seed=None) -> FloorplanDiffusion:
    m, t, s = config.model, config.train, config.schedule
    return FloorplanDiffusion(
        d_model=m.d_model,
        num_heads=m.num_heads,
        num_blocks=m.num_blocks,
        max_rooms=m.max_rooms,
        max_corners_per_room=m.max_corners_per_room,
        coord_bins=m.coord_bins,
        discrete_threshold=m.discrete_threshold,
        max_boundary_corners=m.max_boundary_corners,
        timesteps=s.timesteps,
        schedule_offset=s.offset,
        steps=t.steps if steps is None else steps,
        batch_size=t.batch_size,
        lr_start=t.lr_start,
        lr_end=t.lr_end,
        p_drop_boundary=t.p_drop_boundary,
        discrete_loss_weight=t.discrete_loss_weight,
        checkpoint_every=t.checkpoint_every,
        seed=t.seed if seed is None else seed,
    )


def new_run_dir(root: Path, seed: int) -> Path:
    stamp = time.strftime("%Y%m%d-%H%M%S")
    run = Path(root) / f"{stamp}-seed{seed}"
    run.mkdir(parents=True, exist_ok=True)
    return run


def write_run_manifest(run_dir: Path, command: str, config: WorkbenchConfig, **info) -> None:
    manifest = {
        "command": command,
        "config_digest": config.digest(),
        "config": config.to_dict(),
        **info,
    }
    (Path(run_dir) / "run.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def run_training(
    config: WorkbenchConfig,
    dataset_path,
    out_dir: Path,
    steps: Optional[int] = None,
    seed: Optional[int] = None,
) -> dict:
    records, _ = load_dataset(dataset_path)
    est = estimator_from_config(config, steps=steps, seed=seed)
    out_dir = Path(out_dir)
    write_run_manifest(
        out_dir, "train", config,
        dataset=str(dataset_path), seed=est.seed, steps=est.steps,
    )
    est.fit(records, out_dir=out_dir)
    final = out_dir / "checkpoints" / "final"
    est.save(final, step=est.steps)
    return {
        "run_dir": str(out_dir),
        "checkpoint": str(final),
        "loss_log": str(out_dir / "loss.csv"),
    }


def run_finetune(
    config: WorkbenchConfig,
    checkpoint,
    dataset_path,
    shots: int,
    out_dir: Path,
    steps: Optional[int] = None,
    seed: Optional[int] = None,
) -> dict:
    records, _ = load_dataset(dataset_path)
    est = FloorplanDiffusion.load(checkpoint)
    out_dir = Path(out_dir)
    write_run_manifest(
        out_dir, "fine-tune", config,
        dataset=str(dataset_path), checkpoint=str(checkpoint), shots=shots,
        seed=seed if seed is not None else est.seed,
    )
    est.fine_tune(records, shots, steps=steps, seed=seed, out_dir=out_dir)
    final = out_dir / "checkpoints" / "final"
    est.save(final)
    return {"run_dir": str(out_dir), "checkpoint": str(final)}


def run_evaluate(
    config: WorkbenchConfig,
    checkpoint,
    dataset_path,
    out_dir: Path,
    **overrides,
) -> dict:
    from dataclasses import replace

    records, _ = load_dataset(dataset_path)
    est = FloorplanDiffusion.load(checkpoint)
    eval_cfg = replace(config.eval, **{k: v for k, v in overrides.items() if v is not None})
    protocol = eval_cfg.protocol()
    report = est.evaluate(records, protocol)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "report.json"
    report_path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    write_run_manifest(
        out_dir, "evaluate", config,
        dataset=str(dataset_path), checkpoint=str(checkpoint),
        protocol=protocol.to_dict(),
    )
    return {"report": str(report_path), **report.to_dict()}


def render_table(report: dict) -> str:
    """Markdown table mirroring the comparison-table column layout."""
    rows = [
        "| Model | FID (v) | GC (v) | BC (v) | DS (^) |",
        "|-------|---------|--------|--------|--------|",
        "| ours  | {fid:.2f} | {gc_mean:.2f}+/-{gc_std:.2f} "
        "| {bc_mean:.2f}+/-{bc_std:.3f} | {ds_mean:.2f}+/-{ds_std:.2f} |".format(**report),
    ]
    return "\n".join(rows)


def parse_condition(data: dict) -> tuple:
    """Condition file: either {room_types, edges, boundary} or a full record."""
    if "rooms" in data:
        room_types = [r["type"] for r in data["rooms"]]
        graph = check_graph({"room_types": room_types, "edges": data.get("edges", [])})
    else:
        graph = check_graph(data)
    boundary = check_boundary(data.get("boundary"))
    counts = data.get("corner_counts")
    return graph, boundary, counts


def run_sample(
    config: WorkbenchConfig,
    checkpoint,
    condition: dict,
    out_dir: Path,
    guidance: float = 1.0,
    n: int = 1,
    seed: int = 0,
) -> dict:
    est = FloorplanDiffusion.load(checkpoint)
    graph, boundary, counts = parse_condition(condition)
    counts = check_corner_counts(counts, graph.num_rooms, est.max_corners_per_room)
    plans = est.sample(
        graph,
        boundary=boundary,
        n_samples=n,
        guidance=check_guidance(guidance),
        seed=seed,
        corner_counts=counts,
    )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    for i, plan in enumerate(plans):
        rec = FloorplanRecord(plan=plan, graph=graph, id=f"sample-{i:04d}")
        lines.append(json.dumps(record_to_dict(rec)))
        grid = rasterize(plan, 256)
        img = Image.fromarray((grid * 255.0).astype(np.uint8), mode="L")
        img.save(out_dir / f"sample-{i:04d}.png")
    (out_dir / "samples.jsonl").write_text("".join(line + "\n" for line in lines))

    gc_values = [graph_compatibility(graph, p) for p in plans]
    metrics: dict = {"gc": float(np.mean(gc_values))}
    metrics["bc"] = (
        float(boundary_violations(plans, boundary, config.eval.tau).mean())
        if boundary is not None
        else None
    )
    extractor = config.eval.protocol().extractor
    metrics["ds"] = (
        diversity_score([extractor(p) for p in plans]) if len(plans) >= 2 else None
    )
    write_run_manifest(
        out_dir, "sample", config,
        checkpoint=str(checkpoint), guidance=guidance, n=n, seed=seed,
        metrics=metrics,
    )
    return {
        "out_dir": str(out_dir),
        "samples": str(out_dir / "samples.jsonl"),
        "metrics": metrics,
    }
