"""planforge command-line interface.

Exit codes: 1 for configuration/validation problems (message names the
field), 2 for aborted training runs.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from .. import dataset as ds
from ..errors import NumericError, PlanforgeError, ValidationError
from .config import WorkbenchConfig, load_config, preset_path
from .runs import (
    new_run_dir,
    render_table,
    run_evaluate,
    run_sample,
    run_training,
    run_finetune,
)

DEFAULT_HOME = Path(os.environ.get("PLANFORGE_HOME", Path.cwd() / "planforge-home"))


def _load_config(config, overrides) -> WorkbenchConfig:
    path = None
    if config:
        path = Path(config)
        if not path.exists():
            path = preset_path(config)
    return load_config(path, list(overrides))


def _fail(message: str, code: int = 1) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main():
    """Boundary-constrained diffusion workbench for vector floorplans."""


@main.command()
@click.option("--config", default=None, help="TOML config file or preset name.")
@click.option("--set", "overrides", multiple=True, help="Override section.field=value.")
@click.option("--dataset", "dataset_path", default=None, help="Training dataset JSONL.")
@click.option("--steps", type=int, default=None, help="Training step count override.")
@click.option("--seed", type=int, default=None, help="Training seed override.")
@click.option("--out", "out_dir", default=None, help="Run directory (default: timestamp+seed).")
def train(config, overrides, dataset_path, steps, seed, out_dir):
    """Train a model and write checkpoints plus a loss log."""
    try:
        cfg = _load_config(config, overrides)
        data_path = dataset_path or cfg.dataset.train_path
        if not data_path:
            raise ValidationError("missing field dataset.train_path (or --dataset)")
        if not Path(data_path).exists():
            raise ValidationError(f"dataset.train_path does not exist: {data_path}")
        run_seed = seed if seed is not None else cfg.train.seed
        run = Path(out_dir) if out_dir else new_run_dir(DEFAULT_HOME / "runs", run_seed)
        run.mkdir(parents=True, exist_ok=True)
        artifacts = run_training(cfg, data_path, run, steps=steps, seed=seed)
    except (ValidationError, FileNotFoundError) as exc:
        _fail(str(exc), 1)
    except (NumericError,) as exc:
        _fail(f"training aborted: {exc}", 2)
    except PlanforgeError as exc:
        _fail(str(exc), 1)
    else:
        click.echo(json.dumps(artifacts, indent=2))


@main.command()
@click.option("--config", default=None)
@click.option("--set", "overrides", multiple=True)
@click.option("--checkpoint", required=True)
@click.option("--condition", "condition_path", required=True, help="JSON condition file.")
@click.option("--lambda", "guidance", type=float, default=None, help="Guidance scale in [0,1].")
@click.option("--n", type=int, default=1)
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_dir", required=True)
def sample(config, overrides, checkpoint, condition_path, guidance, n, seed, out_dir):
    """Sample floorplans for a condition file; writes JSONL + PNG renders."""
    if guidance is not None and not (0.0 <= guidance <= 1.0):
        raise click.UsageError(f"--lambda must be in [0, 1], got {guidance}")
    try:
        cfg = _load_config(config, overrides)
        condition = json.loads(Path(condition_path).read_text())
        if condition.get("boundary") is None and guidance is not None:
            click.echo(
                "warning: condition has no boundary; guidance scale is inert",
                err=True,
            )
        artifacts = run_sample(
            cfg, checkpoint, condition, Path(out_dir),
            guidance=1.0 if guidance is None else guidance,
            n=n, seed=seed,
        )
    except PlanforgeError as exc:
        _fail(str(exc), 1)
    else:
        metrics = artifacts["metrics"]
        click.echo(
            "batch metrics: gc={gc:.3f} bc={bc} ds={ds}".format(
                gc=metrics["gc"],
                bc="n/a" if metrics["bc"] is None else f"{metrics['bc']:.3f}",
                ds="n/a" if metrics["ds"] is None else f"{metrics['ds']:.4f}",
            )
        )
        click.echo(json.dumps({k: v for k, v in artifacts.items() if k != "metrics"}, indent=2))


@main.command(name="eval")
@click.option("--config", default=None)
@click.option("--set", "overrides", multiple=True)
@click.option("--checkpoint", required=True)
@click.option("--dataset", "dataset_path", required=True)
@click.option("--samples", type=int, default=None, help="FID/GC/BC sample count.")
@click.option("--ds-conditions", type=int, default=None)
@click.option("--ds-samples", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", required=True)
def eval_cmd(config, overrides, checkpoint, dataset_path, samples, ds_conditions,
             ds_samples, seed, out_dir):
    """Run the evaluation protocol; writes report.json and prints a table."""
    try:
        cfg = _load_config(config, overrides)
        artifacts = run_evaluate(
            cfg, checkpoint, dataset_path, Path(out_dir),
            sample_count=samples, ds_conditions=ds_conditions,
            ds_samples=ds_samples, seed=seed,
        )
    except PlanforgeError as exc:
        _fail(str(exc), 1)
    else:
        click.echo(render_table(artifacts))
        click.echo(f"report: {artifacts['report']}")


@main.group(name="dataset")
def dataset_group():
    """Dataset construction and transformation commands."""


@dataset_group.command(name="gen-pentagon")
@click.option("--seed", type=int, required=True)
@click.option("--n", type=int, default=20)
@click.option("--out", "out_path", required=True)
def gen_pentagon(seed, n, out_path):
    """Generate the synthetic pentagon dataset."""
    try:
        records = ds.gen_pentagon_set(seed=seed, n=n)
        manifest = ds.save_dataset(records, out_path)
    except PlanforgeError as exc:
        _fail(str(exc), 1)
    else:
        click.echo(f"wrote {manifest.record_count} records to {out_path}")


@dataset_group.command()
@click.argument("in_path")
@click.argument("out_path")
def drift(in_path, out_path):
    """Swap living/balcony labels (applying twice restores the input)."""
    try:
        records, _ = ds.load_dataset(in_path)
        manifest = ds.save_dataset(ds.apply_drift(records), out_path)
    except PlanforgeError as exc:
        _fail(str(exc), 1)
    else:
        click.echo(f"wrote {manifest.record_count} drifted records to {out_path}")


@dataset_group.command()
@click.argument("in_path")
@click.option("--out", "out_path", default=None)
def histogram(in_path, out_path):
    """Corner-count histogram of a dataset."""
    try:
        records, _ = ds.load_dataset(in_path)
        hist = ds.build_corner_histogram(records)
    except PlanforgeError as exc:
        _fail(str(exc), 1)
    else:
        payload = json.dumps(hist.to_json(), indent=2)
        if out_path:
            Path(out_path).write_text(payload)
            click.echo(f"wrote histogram to {out_path}")
        else:
            click.echo(payload)


@dataset_group.command()
@click.argument("in_path")
@click.option("--k", type=int, required=True)
@click.option("--seed", type=int, required=True)
@click.option("--out", "out_path", required=True)
def subset(in_path, k, seed, out_path):
    """Deterministic k-shot subset without replacement."""
    try:
        records, _ = ds.load_dataset(in_path)
        manifest = ds.save_dataset(ds.few_shot_subset(records, k, seed), out_path)
    except PlanforgeError as exc:
        _fail(str(exc), 1)
    else:
        click.echo(f"wrote {manifest.record_count} records to {out_path}")


@main.command()
@click.option("--config", default=None)
@click.option("--set", "overrides", multiple=True)
@click.option("--checkpoint", required=True)
@click.option("--dataset", "dataset_path", required=True)
@click.option("--shots", type=int, required=True)
@click.option("--steps", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", default=None)
def finetune(config, overrides, checkpoint, dataset_path, shots, steps, seed, out_dir):
    """Few-shot fine-tune from a checkpoint."""
    try:
        cfg = _load_config(config, overrides)
        run_seed = seed if seed is not None else cfg.train.seed
        run = Path(out_dir) if out_dir else new_run_dir(DEFAULT_HOME / "runs", run_seed)
        artifacts = run_finetune(cfg, checkpoint, dataset_path, shots, run,
                                 steps=steps, seed=seed)
    except NumericError as exc:
        _fail(f"training aborted: {exc}", 2)
    except PlanforgeError as exc:
        _fail(str(exc), 1)
    else:
        click.echo(json.dumps(artifacts, indent=2))


@main.command()
@click.option("--config", default=None)
@click.option("--set", "overrides", multiple=True)
@click.option("--home", default=None, help="Artifact root (default $PLANFORGE_HOME).")
@click.option("--port", type=int, default=None)
@click.option("--frontend", default=None, help="Directory of built studio assets.")
def serve(config, overrides, home, port, frontend):
    """Start the HTTP service for the studio UI."""
    from .service import serve as _serve

    try:
        cfg = _load_config(config, overrides)
        _serve(Path(home) if home else DEFAULT_HOME, cfg, port=port, frontend_dir=frontend)
    except PlanforgeError as exc:
        _fail(str(exc), 1)


if __name__ == "__main__":
    main()
