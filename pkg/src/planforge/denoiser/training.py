"""Training loop: noise-prediction MSE plus gated discrete-coordinate loss,
Adam with exponential learning-rate decay, boundary dropout for
classifier-free guidance, and periodic checkpointing."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import torch
import torch.nn.functional as F

from ..dataset import FloorplanRecord, build_corner_histogram, quantize_coords
from ..diffusion import NoiseSchedule, forward_diffuse, LayoutTensor, plan_to_layout
from ..errors import NumericError, ValidationError
from .checkpoint import save_checkpoint
from .config import ModelConfig, TrainConfig
from .masks import build_masks
from .network import Denoiser, boundary_tensors, condition_tensors

log = logging.getLogger(__name__)


def compute_loss(
    eps_hat: torch.Tensor,
    eps_true: torch.Tensor,
    discrete_logits: torch.Tensor,
    x0_bins: torch.Tensor,
    t: torch.Tensor,
    slot_mask: torch.Tensor,
    discrete_threshold: int,
    discrete_weight: float,
) -> tuple[torch.Tensor, dict]:
    """Per-record MSE over real slots plus [t <= threshold]-gated
    cross-entropy of the per-axis bin logits, averaged over the batch."""
    if eps_hat.shape != eps_true.shape:
        raise ValidationError("eps_hat and eps_true shapes differ")
    m = slot_mask.to(eps_hat.dtype)
    denom = m.sum(dim=(1, 2)).clamp_min(1.0) * 2.0
    sq = ((eps_hat - eps_true) ** 2 * m[..., None]).sum(dim=(1, 2, 3))
    mse_b = sq / denom

    B = eps_hat.shape[0]
    bins = discrete_logits.shape[-1]
    ce = F.cross_entropy(
        discrete_logits.reshape(-1, bins), x0_bins.reshape(-1), reduction="none"
    ).reshape(x0_bins.shape)
    ce_b = (ce * m[..., None]).sum(dim=(1, 2, 3)) / denom
    gate = (t <= discrete_threshold).to(eps_hat.dtype)
    total_b = mse_b + discrete_weight * gate * ce_b
    total = total_b.mean()
    return total, {
        "mse": float(mse_b.mean().detach()),
        "discrete": float((gate * ce_b).mean().detach()),
        "total": float(total.detach()),
    }


@dataclass
class _Prepared:
    coords: torch.Tensor      # (N, R, C, 2)
    slot_mask: torch.Tensor   # (N, R, C)
    type_idx: torch.Tensor    # (N, R)
    bins: torch.Tensor        # (N, R, C, 2) long
    attn: dict[str, torch.Tensor]  # each (N, S, S)
    bcoords: torch.Tensor     # (N, L, 2)
    bmask: torch.Tensor       # (N, L)
    has_boundary: torch.Tensor  # (N,)


def prepare_records(
    records: Sequence[FloorplanRecord], cfg: ModelConfig, dtype=torch.float32
) -> _Prepared:
    if not records:
        raise ValidationError("no training records")
    coords, masks, types, bins, attn = [], [], [], [], {"csa": [], "gsa": [], "rca": [], "pad": []}
    b_lens = [
        len(r.plan.boundary.polygon.corners)
        for r in records
        if r.plan.boundary is not None
    ]
    L = max(b_lens) if b_lens else 1
    bcoords = torch.zeros(len(records), L, 2, dtype=dtype)
    bmask = torch.zeros(len(records), L, dtype=torch.bool)
    has_b = torch.zeros(len(records), dtype=torch.bool)
    for n, rec in enumerate(records):
        layout = plan_to_layout(rec.plan, cfg.max_rooms, cfg.max_corners_per_room, dtype=dtype)
        coords.append(layout.coords)
        masks.append(layout.mask)
        types.append(condition_tensors(rec.graph, cfg))
        q = quantize_coords(layout.coords.numpy(), cfg.coord_bins, warn=False)
        bins.append(torch.as_tensor(q, dtype=torch.long))
        counts = [len(r.polygon.corners) for r in rec.plan.rooms]
        am = build_masks(counts, rec.graph, cfg).as_torch()
        for k in attn:
            attn[k].append(am[k])
        if rec.plan.boundary is not None:
            bc, _ = boundary_tensors(rec.plan.boundary, cfg, dtype=dtype)
            bcoords[n, : bc.shape[1]] = bc[0]
            bmask[n, : bc.shape[1]] = True
            has_b[n] = True
    return _Prepared(
        coords=torch.stack(coords),
        slot_mask=torch.stack(masks),
        type_idx=torch.stack(types),
        bins=torch.stack(bins),
        attn={k: torch.stack(v) for k, v in attn.items()},
        bcoords=bcoords,
        bmask=bmask,
        has_boundary=has_b,
    )


def train(
    model: Denoiser,
    records: Sequence[FloorplanRecord],
    sched: NoiseSchedule,
    train_cfg: TrainConfig,
    out_dir: Optional[Path] = None,
) -> tuple[Denoiser, list[dict]]:
    """Optimize the model on records; returns the model and the loss log.

    Deterministic for a fixed seed and thread count. Checkpoints are written
    every ``checkpoint_every`` steps under ``out_dir/checkpoints``; on
    divergence the last good checkpoint is left in place and NumericError
    is raised.
    """
    cfg = model.cfg
    if cfg.discrete_threshold >= sched.T:
        raise ValidationError(
            f"discrete_threshold={cfg.discrete_threshold} must be < schedule T={sched.T}"
        )
    data = prepare_records(records, cfg, dtype=model.dtype)
    N = data.coords.shape[0]
    gen = torch.Generator().manual_seed(train_cfg.seed)
    opt = torch.optim.Adam(
        model.parameters(), lr=train_cfg.lr_start, betas=(0.9, 0.999), eps=1e-8
    )
    hist = build_corner_histogram(records)
    extra = {"corner_histogram": hist.to_json(), "train_config": train_cfg.to_dict()}
    ckpt_dir = Path(out_dir) / "checkpoints" if out_dir is not None else None
    rows: list[dict] = []
    for step in range(train_cfg.steps):
        lr = train_cfg.lr_at(step)
        for group in opt.param_groups:
            group["lr"] = lr
        idx = torch.randint(N, (train_cfg.batch_size,), generator=gen)
        t = torch.randint(1, sched.T + 1, (train_cfg.batch_size,), generator=gen)
        coords = data.coords[idx]
        slot_mask = data.slot_mask[idx]
        eps = torch.randn(coords.shape, generator=gen, dtype=coords.dtype)
        eps = eps * slot_mask[..., None]
        x0 = LayoutTensor(coords, slot_mask)
        x_t = forward_diffuse(x0, t, eps, sched)
        drop = torch.rand(train_cfg.batch_size, generator=gen) < train_cfg.p_drop_boundary
        null_flag = drop | ~data.has_boundary[idx]
        eps_hat, logits = model(
            x_t.coords,
            slot_mask,
            t,
            data.type_idx[idx],
            {k: v[idx] for k, v in data.attn.items()},
            bcoords=data.bcoords[idx],
            bmask=data.bmask[idx],
            null_flag=null_flag,
        )
        total, comps = compute_loss(
            eps_hat,
            eps,
            logits,
            data.bins[idx],
            t,
            slot_mask,
            cfg.discrete_threshold,
            train_cfg.discrete_loss_weight,
        )
        if not torch.isfinite(total):
            _write_log(out_dir, rows)
            raise NumericError(
                f"training diverged at step {step + 1}; last checkpoint retained"
            )
        opt.zero_grad()
        total.backward()
        opt.step()
        rows.append({"step": step + 1, "lr": lr, **comps})
        if ckpt_dir is not None and (step + 1) % train_cfg.checkpoint_every == 0:
            save_checkpoint(model, ckpt_dir / f"step-{step + 1:06d}", step=step + 1, extra=extra)
    if ckpt_dir is not None:
        save_checkpoint(model, ckpt_dir / "final", step=train_cfg.steps, extra=extra)
    _write_log(out_dir, rows)
    return model, rows


def _write_log(out_dir: Optional[Path], rows: list[dict]) -> None:
    if out_dir is None or not rows:
        return
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "loss.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def fine_tune(
    model: Denoiser,
    records: Sequence[FloorplanRecord],
    shots: int,
    sched: NoiseSchedule,
    train_cfg: TrainConfig,
    out_dir: Optional[Path] = None,
) -> tuple[Denoiser, list[dict]]:
    """Continue training on a k-shot subset; k=0 returns the model untouched."""
    from ..dataset import few_shot_subset

    if shots == 0:
        return model, []
    subset = few_shot_subset(records, shots, train_cfg.seed)
    return train(model, subset, sched, train_cfg, out_dir=out_dir)
