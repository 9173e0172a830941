"""Ancestral reverse-diffusion sampling of floorplans.

Each sample in a request runs from its own derived seed (request seed +
sample index) so batches are order-stable; all samples of one request are
advanced together through the step loop.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
import torch

from .dataset import CornerHistogram, dequantize_coords, sample_corner_counts
from .denoiser import Denoiser, boundary_tensors, build_masks, condition_tensors
from .diffusion import NoiseSchedule, SampleRequest, cfg_blend, slot_mask
from .errors import NumericError, ValidationError
from .geometry import Boundary, Floorplan, Point, Polygon, Room

__all__ = ["sample", "layout_to_plan"]


def layout_to_plan(
    coords: np.ndarray,
    corner_counts: Sequence[int],
    room_types: Sequence[str],
    boundary: Optional[Boundary] = None,
) -> Floorplan:
    """Decode a (max_rooms, max_corners, 2) array into a floorplan."""
    rooms = []
    for i, (k, room_type) in enumerate(zip(corner_counts, room_types)):
        pts = tuple(Point(float(x), float(y)) for x, y in coords[i, :k])
        rooms.append(Room(room_type=room_type, polygon=Polygon(pts), index=i))
    return Floorplan(rooms=tuple(rooms), boundary=boundary)


def _resolve_counts(
    req: SampleRequest, hist: Optional[CornerHistogram]
) -> list[list[int]]:
    if req.corner_counts is not None:
        return [list(req.corner_counts)] * req.num_samples
    if hist is None:
        raise ValidationError(
            "corner counts unresolved: request has none and no histogram given"
        )
    return [
        sample_corner_counts(req.graph, hist, seed=req.seed + i)
        for i in range(req.num_samples)
    ]


def sample(
    model: Denoiser,
    req: SampleRequest,
    sched: NoiseSchedule,
    hist: Optional[CornerHistogram] = None,
) -> list[Floorplan]:
    """Generate floorplans by reversing the diffusion chain.

    Guidance blends the boundary-conditional and boundary-unconditional
    noise predictions; for t <= the discrete threshold the continuous x0
    estimate is replaced by the discrete head's argmax coordinates and the
    step is re-derived through the posterior mean. Deterministic for a
    fixed (model, request).
    """
    cfg = model.cfg
    counts_per_sample = _resolve_counts(req, hist)
    B = req.num_samples
    R, C = cfg.max_rooms, cfg.max_corners_per_room
    dtype = model.dtype

    masks_np = [build_masks(c, req.graph, cfg) for c in counts_per_sample]
    attn = {
        key: torch.stack([torch.as_tensor(getattr(m, key)) for m in masks_np])
        for key in ("csa", "gsa", "rca", "pad")
    }
    smask = torch.stack(
        [slot_mask(c, R, C) for c in counts_per_sample]
    )
    type_idx = condition_tensors(req.graph, cfg).expand(B, R)

    has_boundary = req.boundary is not None
    if has_boundary:
        bc, bm = boundary_tensors(req.boundary, cfg, dtype=dtype)
        bcoords, bmask = bc.expand(B, -1, -1), bm.expand(B, -1)
    else:
        bcoords, bmask = None, None
    null_all = torch.ones(B, dtype=torch.bool)
    null_none = torch.zeros(B, dtype=torch.bool)

    lam = req.guidance
    use_cond = has_boundary and lam > 0.0
    use_uncond = (not has_boundary) or lam < 1.0

    gens = [torch.Generator().manual_seed(req.seed + i) for i in range(B)]

    def draw_noise() -> torch.Tensor:
        eps = torch.stack(
            [torch.randn(R, C, 2, generator=g, dtype=dtype) for g in gens]
        )
        return eps * smask[..., None]

    ab = torch.as_tensor(sched.alpha_bar, dtype=dtype)
    beta = torch.as_tensor(sched.beta, dtype=dtype)
    alpha = 1.0 - beta

    x = draw_noise()
    mask_f = smask[..., None].to(dtype)
    with torch.no_grad():
        for t in range(sched.T, 0, -1):
            t_batch = torch.full((B,), t, dtype=torch.long)
            eps_cond = eps_uncond = None
            logits = None
            if use_cond:
                eps_cond, logits = model(
                    x, smask, t_batch, type_idx, attn,
                    bcoords=bcoords, bmask=bmask, null_flag=null_none,
                )
            if use_uncond:
                eps_uncond, logits_u = model(
                    x, smask, t_batch, type_idx, attn,
                    bcoords=None, bmask=None, null_flag=null_all,
                )
                if logits is None:
                    logits = logits_u
            if eps_cond is not None and eps_uncond is not None:
                eps_tilde = cfg_blend(eps_cond, eps_uncond, lam)
            else:
                eps_tilde = eps_cond if eps_cond is not None else eps_uncond

            sigma = float(np.sqrt(sched.posterior_variance(t)))
            z = draw_noise() if t > 1 else torch.zeros_like(x)
            if t <= cfg.discrete_threshold:
                # snap x0 to the coordinate grid via the discrete head
                bins_idx = logits.argmax(dim=-1)
                x0 = torch.as_tensor(
                    dequantize_coords(bins_idx.numpy(), cfg.coord_bins), dtype=dtype
                ) * mask_f
                c1 = torch.sqrt(ab[t - 1]) * beta[t] / (1.0 - ab[t])
                c2 = torch.sqrt(alpha[t]) * (1.0 - ab[t - 1]) / (1.0 - ab[t])
                x = c1 * x0 + c2 * x + sigma * z
            else:
                x = (x - beta[t] / torch.sqrt(1.0 - ab[t]) * eps_tilde) / torch.sqrt(
                    alpha[t]
                ) + sigma * z
            x = x * mask_f
            if not torch.isfinite(x).all():
                raise NumericError(f"non-finite sample values at step {t}")

    plans = []
    arr = x.numpy()
    for i in range(B):
        plans.append(
            layout_to_plan(
                arr[i],
                counts_per_sample[i],
                list(req.graph.room_types),
                boundary=req.boundary,
            )
        )
    return plans
