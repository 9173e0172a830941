"""Noise schedule, forward corruption, and guidance blending.

Corner coordinates are carried as padded layout tensors of shape
(..., max_rooms, max_corners, 2) with a boolean mask marking real slots.
Padded slots stay exactly zero through every operation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import torch

from .errors import ValidationError
from .geometry import Boundary, BubbleGraph, Floorplan

TensorOrInt = Union[int, torch.Tensor]


@dataclass(frozen=True)
class NoiseSchedule:
    """Cosine diffusion schedule.

    ``alpha_bar`` has T+1 entries indexed by timestep t = 0..T with
    ``alpha_bar[0] == 1``; ``beta`` has T+1 entries with ``beta[0]`` unused.
    """

    T: int
    beta: np.ndarray
    alpha_bar: np.ndarray
    s_offset: float

    def __post_init__(self):
        if self.T < 2:
            raise ValidationError(f"schedule needs T >= 2, got {self.T}")
        if len(self.alpha_bar) != self.T + 1 or len(self.beta) != self.T + 1:
            raise ValidationError("schedule arrays must have T+1 entries")
        b = self.beta[1:]
        if np.any(b <= 0.0) or np.any(b >= 1.0):
            raise ValidationError("betas must lie strictly in (0, 1)")
        if np.any(np.diff(self.alpha_bar) >= 0.0):
            raise ValidationError("alpha_bar must be strictly decreasing")
        if self.alpha_bar[0] <= 0.99:
            raise ValidationError("alpha_bar must start above 0.99")
        if self.alpha_bar[-1] >= 0.01:
            raise ValidationError("alpha_bar must end below 0.01")

    def check_step(self, t: TensorOrInt) -> None:
        t_arr = np.atleast_1d(np.asarray(t.cpu() if torch.is_tensor(t) else t))
        if np.any(t_arr < 1) or np.any(t_arr > self.T):
            raise ValidationError(f"timestep out of [1, {self.T}]")

    def _gather(self, values: np.ndarray, t: TensorOrInt, like: torch.Tensor) -> torch.Tensor:
        v = torch.as_tensor(values, dtype=like.dtype, device=like.device)
        if torch.is_tensor(t):
            out = v[t.long()]
            # broadcast over trailing (rooms, corners, xy) dims
            return out.reshape(out.shape + (1,) * (like.dim() - out.dim()))
        return v[int(t)]

    def alpha_bar_at(self, t: TensorOrInt, like: torch.Tensor) -> torch.Tensor:
        return self._gather(self.alpha_bar, t, like)

    def beta_at(self, t: TensorOrInt, like: torch.Tensor) -> torch.Tensor:
        return self._gather(self.beta, t, like)

    def posterior_variance(self, t: int) -> float:
        """Variance of q(x_{t-1} | x_t, x_0)."""
        return float(
            (1.0 - self.alpha_bar[t - 1]) / (1.0 - self.alpha_bar[t]) * self.beta[t]
        )


def cosine_schedule(T: int = 1000, s: float = 0.008) -> NoiseSchedule:
    """Squared-cosine schedule: alpha_bar_t = f(t)/f(0) with
    f(t) = cos^2(((t/T + s)/(1+s)) * pi/2), betas clipped to <= 0.999.

    alpha_bar is rebuilt as the cumulative product of (1 - beta) so the
    clipped tail stays strictly positive.
    """
    if T < 2:
        raise ValidationError(f"schedule needs T >= 2, got {T}")
    t = np.arange(T + 1, dtype=np.float64)
    f = np.cos(((t / T + s) / (1.0 + s)) * np.pi / 2.0) ** 2
    ratios = f[1:] / f[:-1]
    beta = np.concatenate([[0.0], np.clip(1.0 - ratios, 0.0, 0.999)])
    alpha_bar = np.concatenate([[1.0], np.cumprod(1.0 - beta[1:])])
    return NoiseSchedule(T=T, beta=beta, alpha_bar=alpha_bar, s_offset=s)


@dataclass
class LayoutTensor:
    """Padded corner coordinates plus a real-slot mask.

    ``coords``: float tensor (..., max_rooms, max_corners, 2);
    ``mask``: bool tensor (..., max_rooms, max_corners), true on real slots.
    Real slots of a room are contiguous from corner index 0; padded slots
    hold (0, 0).
    """

    coords: torch.Tensor
    mask: torch.Tensor

    def __post_init__(self):
        if self.coords.shape[:-1] != self.mask.shape:
            raise ValidationError(
                f"coords shape {tuple(self.coords.shape)} inconsistent with "
                f"mask shape {tuple(self.mask.shape)}"
            )

    def masked(self, coords: torch.Tensor) -> "LayoutTensor":
        return LayoutTensor(coords * self.mask.unsqueeze(-1), self.mask)

    def clone(self) -> "LayoutTensor":
        return LayoutTensor(self.coords.clone(), self.mask.clone())


def slot_mask(
    corner_counts: Sequence[int],
    max_rooms: int,
    max_corners: int,
    device=None,
) -> torch.Tensor:
    """Boolean (max_rooms, max_corners) mask from per-room corner counts."""
    if len(corner_counts) > max_rooms:
        raise ValidationError(
            f"{len(corner_counts)} rooms exceed max_rooms={max_rooms}"
        )
    mask = torch.zeros(max_rooms, max_corners, dtype=torch.bool, device=device)
    for i, k in enumerate(corner_counts):
        if k > max_corners:
            raise ValidationError(
                f"room {i} has {k} corners, exceeding max_corners={max_corners}"
            )
        if k < 3:
            raise ValidationError(f"room {i} has {k} corners; need at least 3")
        mask[i, :k] = True
    return mask


def plan_to_layout(
    plan: Floorplan,
    max_rooms: int,
    max_corners: int,
    dtype=torch.float32,
    device=None,
) -> LayoutTensor:
    counts = [len(r.polygon.corners) for r in plan.rooms]
    mask = slot_mask(counts, max_rooms, max_corners, device=device)
    coords = torch.zeros(max_rooms, max_corners, 2, dtype=dtype, device=device)
    for i, room in enumerate(plan.rooms):
        arr = torch.as_tensor(room.polygon.as_array(), dtype=dtype, device=device)
        coords[i, : len(arr)] = arr
    return LayoutTensor(coords, mask)


@dataclass(frozen=True)
class SampleRequest:
    graph: BubbleGraph
    boundary: Optional[Boundary] = None
    guidance: float = 1.0
    num_samples: int = 1
    seed: int = 0
    corner_counts: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if not (0.0 <= self.guidance <= 1.0):
            raise ValidationError(f"guidance scale must be in [0, 1], got {self.guidance}")
        if self.num_samples < 1:
            raise ValidationError(f"num_samples must be >= 1, got {self.num_samples}")
        if self.corner_counts is not None and len(self.corner_counts) != self.graph.num_rooms:
            raise ValidationError(
                "corner_counts length must equal the number of graph rooms"
            )


def forward_diffuse(
    x0: LayoutTensor, t: TensorOrInt, eps: torch.Tensor, sched: NoiseSchedule
) -> LayoutTensor:
    """x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps, slot-wise."""
    sched.check_step(t)
    ab = sched.alpha_bar_at(t, x0.coords)
    xt = torch.sqrt(ab) * x0.coords + torch.sqrt(1.0 - ab) * eps
    return x0.masked(xt)


def cfg_blend(
    eps_cond: torch.Tensor, eps_uncond: torch.Tensor, lam: float
) -> torch.Tensor:
    """Elementwise lam * eps_cond + (1 - lam) * eps_uncond."""
    if eps_cond.shape != eps_uncond.shape:
        raise ValidationError(
            f"shape mismatch: {tuple(eps_cond.shape)} vs {tuple(eps_uncond.shape)}"
        )
    if not (0.0 <= lam <= 1.0):
        raise ValidationError(f"guidance scale must be in [0, 1], got {lam}")
    if lam == 1.0:
        return eps_cond.clone()
    if lam == 0.0:
        return eps_uncond.clone()
    return lam * eps_cond + (1.0 - lam) * eps_uncond


def predict_x0(
    x_t: LayoutTensor, eps_hat: torch.Tensor, t: TensorOrInt, sched: NoiseSchedule
) -> LayoutTensor:
    """Invert the forward process: (x_t - sqrt(1-abar) eps)/sqrt(abar), clamped."""
    sched.check_step(t)
    ab = sched.alpha_bar_at(t, x_t.coords)
    x0 = (x_t.coords - torch.sqrt(1.0 - ab) * eps_hat) / torch.sqrt(ab)
    return x_t.masked(x0.clamp(-1.0, 1.0))
