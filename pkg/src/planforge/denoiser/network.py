"""Masked-attention transformer noise predictor with boundary cross-attention.

Every token is a room-corner slot; conditioning enters through three masked
self-attention pathways (same-room, global, graph-linked) plus cross-attention
from room tokens to self-attended boundary-corner tokens. The four pathway
outputs are fused by plain summation inside each block. A learned null token
stands in for the boundary when it is masked out, which is what makes the
unconditional branch of classifier-free guidance a trained pathway.
"""

from __future__ import annotations

import math
from typing import Optional

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import NumericError, ValidationError
from ..geometry import Boundary, BubbleGraph, ROOM_TYPES
from .config import ModelConfig
from .masks import AttentionMasks


def sinusoidal_embedding(t: torch.Tensor, dim: int) -> torch.Tensor:
    """Standard sin/cos timestep embedding; t is a (B,) tensor of steps."""
    half = dim // 2
    device, dtype = t.device, torch.float64
    freqs = torch.exp(
        -math.log(10000.0) * torch.arange(half, device=device, dtype=dtype) / max(half - 1, 1)
    )
    args = t.to(dtype)[:, None] * freqs[None, :]
    emb = torch.cat([torch.sin(args), torch.cos(args)], dim=-1)
    if dim % 2 == 1:
        emb = F.pad(emb, (0, 1))
    return emb


class MaskedAttention(nn.Module):
    """Multi-head attention where a query row with no admissible keys
    contributes an exactly-zero output (softmax over the empty set is 0).

    Projections carry no bias so zeroed value weights null the pathway.
    """

    def __init__(self, d_model: int, num_heads: int, dtype=torch.float32):
        super().__init__()
        self.num_heads = num_heads
        self.d_head = d_model // num_heads
        self.wq = nn.Linear(d_model, d_model, bias=False, dtype=dtype)
        self.wk = nn.Linear(d_model, d_model, bias=False, dtype=dtype)
        self.wv = nn.Linear(d_model, d_model, bias=False, dtype=dtype)
        self.wo = nn.Linear(d_model, d_model, bias=False, dtype=dtype)

    def forward(
        self,
        q_in: torch.Tensor,
        kv_in: torch.Tensor,
        mask: Optional[torch.Tensor] = None,
    ) -> torch.Tensor:
        B, Lq, D = q_in.shape
        Lk = kv_in.shape[1]
        H, Dh = self.num_heads, self.d_head

        def split(x, L):
            return x.view(B, L, H, Dh).transpose(1, 2)

        q = split(self.wq(q_in), Lq)
        k = split(self.wk(kv_in), Lk)
        v = split(self.wv(kv_in), Lk)
        scores = q @ k.transpose(-2, -1) / math.sqrt(Dh)
        if mask is not None:
            scores = scores.masked_fill(~mask[:, None, :, :], float("-inf"))
        m = scores.amax(dim=-1, keepdim=True)
        m = torch.where(torch.isfinite(m), m, torch.zeros_like(m))
        w = torch.exp(scores - m)
        denom = w.sum(dim=-1, keepdim=True).clamp_min(torch.finfo(w.dtype).tiny)
        out = (w / denom) @ v
        out = out.transpose(1, 2).reshape(B, Lq, D)
        return self.wo(out)


class DenoiserBlock(nn.Module):
    def __init__(self, cfg: ModelConfig, dtype=torch.float32):
        super().__init__()
        d, h = cfg.d_model, cfg.num_heads
        self.csa = MaskedAttention(d, h, dtype)
        self.gsa = MaskedAttention(d, h, dtype)
        self.rca = MaskedAttention(d, h, dtype)
        self.bca = MaskedAttention(d, h, dtype)
        self.norm_attn = nn.LayerNorm(d, dtype=dtype)
        self.norm_ff = nn.LayerNorm(d, dtype=dtype)
        self.ff = nn.Sequential(
            nn.Linear(d, cfg.ff_width, dtype=dtype),
            nn.SiLU(),
            nn.Linear(cfg.ff_width, d, dtype=dtype),
        )

    def forward(self, x, boundary_tokens, cross_mask, masks) -> torch.Tensor:
        # pre-norm residual blocks; the stream stays head-readable unscaled
        h = self.norm_attn(x)
        x = x + (
            self.csa(h, h, masks["csa"])
            + self.gsa(h, h, masks["gsa"])
            + self.rca(h, h, masks["rca"])
            + self.bca(h, boundary_tokens, cross_mask)
        )
        x = x + self.ff(self.norm_ff(x))
        return x


class Denoiser(nn.Module):
    """Noise predictor over padded corner slots.

    forward() consumes raw tensors so training can batch heterogeneous
    records; `condition_tensors` / `boundary_tensors` build them from the
    domain objects.
    """

    def __init__(self, cfg: ModelConfig, dtype=torch.float32):
        super().__init__()
        self.cfg = cfg
        d = cfg.d_model
        in_dim = 2 + cfg.num_room_types + cfg.max_rooms + cfg.max_corners_per_room
        self.input_proj = nn.Linear(in_dim, d, dtype=dtype)
        self.time_mlp = nn.Sequential(
            nn.Linear(d, d, dtype=dtype), nn.SiLU(), nn.Linear(d, d, dtype=dtype)
        )
        self.boundary_proj = nn.Linear(2 + cfg.max_boundary_corners, d, dtype=dtype)
        self.boundary_attn = MaskedAttention(d, cfg.num_heads, dtype)
        self.boundary_norm = nn.LayerNorm(d, dtype=dtype)
        self.null_token = nn.Parameter(torch.randn(d, dtype=dtype) * 0.02)
        self.blocks = nn.ModuleList(
            [DenoiserBlock(cfg, dtype) for _ in range(cfg.num_blocks)]
        )
        # noise head in denoised-residual form: eps_hat = s(t) * (x_t - m).
        # The target noise is (x_t - sqrt(abar) x0)/sqrt(1-abar), i.e. an
        # x_t amplification reaching hundreds near t=1; m regresses the
        # bounded signal mean and the log-gain s tracks the smooth per-t
        # scale, starting at exp(0) = 1.
        self.eps_head = nn.Sequential(
            nn.Linear(d, d, dtype=dtype), nn.SiLU(), nn.Linear(d, 2, dtype=dtype)
        )
        self.eps_log_gain = nn.Linear(d, 1, dtype=dtype)
        nn.init.zeros_(self.eps_log_gain.weight)
        nn.init.zeros_(self.eps_log_gain.bias)
        self.discrete_head = nn.Linear(d, 2 * cfg.coord_bins, dtype=dtype)

    @property
    def dtype(self) -> torch.dtype:
        return self.input_proj.weight.dtype

    # ----- embeddings -------------------------------------------------

    def time_embedding(self, t: torch.Tensor) -> torch.Tensor:
        return self.time_mlp(sinusoidal_embedding(t, self.cfg.d_model).to(self.dtype))

    def embed_inputs(
        self,
        coords: torch.Tensor,          # (B, R, C, 2)
        t: torch.Tensor,               # (B,)
        type_idx: torch.Tensor,        # (B, R) int
        room_labels: Optional[torch.Tensor] = None,  # (B, R) int
        temb: Optional[torch.Tensor] = None,
    ) -> torch.Tensor:
        cfg = self.cfg
        B, R, C, _ = coords.shape
        dt = self.dtype
        if room_labels is None:
            room_labels = torch.arange(R, device=coords.device).expand(B, R)
        type_oh = F.one_hot(type_idx.long(), cfg.num_room_types).to(dt)
        room_oh = F.one_hot(room_labels.long(), cfg.max_rooms).to(dt)
        corner_oh = (
            F.one_hot(torch.arange(C, device=coords.device), cfg.max_corners_per_room)
            .to(dt)
            .expand(B, R, C, cfg.max_corners_per_room)
        )
        feat = torch.cat(
            [
                coords.to(dt),
                type_oh[:, :, None, :].expand(B, R, C, cfg.num_room_types),
                room_oh[:, :, None, :].expand(B, R, C, cfg.max_rooms),
                corner_oh,
            ],
            dim=-1,
        ).reshape(B, R * C, -1)
        tokens = self.input_proj(feat)
        if temb is None:
            temb = self.time_embedding(t)
        return tokens + temb[:, None, :]

    def encode_boundary(
        self,
        bcoords: Optional[torch.Tensor],   # (B, L, 2) or None when all null
        bmask: Optional[torch.Tensor],     # (B, L) bool
        null_flag: torch.Tensor,           # (B,) bool
        corner_labels: Optional[torch.Tensor] = None,  # (B, L) int
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Self-attended boundary tokens, with the learned null token
        substituted wherever the boundary is masked out."""
        cfg = self.cfg
        B = null_flag.shape[0]
        dt = self.dtype
        device = null_flag.device
        if bcoords is None or bcoords.shape[1] == 0:
            tokens = self.null_token.to(dt).expand(B, 1, cfg.d_model)
            mask = torch.ones(B, 1, dtype=torch.bool, device=device)
            return tokens, mask
        L = bcoords.shape[1]
        if L > cfg.max_boundary_corners:
            raise ValidationError(
                f"boundary has {L} corners, exceeding max_boundary_corners="
                f"{cfg.max_boundary_corners}"
            )
        if corner_labels is None:
            corner_labels = torch.arange(L, device=device).expand(B, L)
        pos_oh = F.one_hot(corner_labels.long(), cfg.max_boundary_corners).to(dt)
        emb = self.boundary_proj(torch.cat([bcoords.to(dt), pos_oh], dim=-1))
        attn_mask = bmask[:, None, :] & bmask[:, :, None]
        enriched = self.boundary_norm(emb + self.boundary_attn(emb, emb, attn_mask))
        null_tok = self.null_token.to(dt).expand(B, L, cfg.d_model)
        tokens = torch.where(null_flag[:, None, None], null_tok, enriched)
        first_slot = F.one_hot(torch.zeros(B, dtype=torch.long, device=device), L).bool()
        mask = torch.where(null_flag[:, None], first_slot, bmask)
        return tokens, mask

    def bca_forward(
        self,
        room_tokens: torch.Tensor,
        boundary_tokens: torch.Tensor,
        boundary_mask: torch.Tensor,
        block_index: int = 0,
    ) -> torch.Tensor:
        """Cross-attention of room tokens onto enriched boundary tokens."""
        cross = boundary_mask[:, None, :].expand(
            room_tokens.shape[0], room_tokens.shape[1], boundary_mask.shape[1]
        )
        return self.blocks[block_index].bca(room_tokens, boundary_tokens, cross)

    # ----- full forward ------------------------------------------------

    def forward(
        self,
        coords: torch.Tensor,              # (B, R, C, 2)
        slot_mask: torch.Tensor,           # (B, R, C) bool
        t: torch.Tensor,                   # (B,)
        type_idx: torch.Tensor,            # (B, R)
        masks: dict[str, torch.Tensor],    # each (B, S, S) bool
        bcoords: Optional[torch.Tensor] = None,
        bmask: Optional[torch.Tensor] = None,
        null_flag: Optional[torch.Tensor] = None,
        room_labels: Optional[torch.Tensor] = None,
        boundary_corner_labels: Optional[torch.Tensor] = None,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        cfg = self.cfg
        B, R, C, _ = coords.shape
        if null_flag is None:
            null_flag = torch.full((B,), bcoords is None, dtype=torch.bool, device=coords.device)
        temb = self.time_embedding(t)
        x = self.embed_inputs(coords, t, type_idx, room_labels, temb=temb)
        btokens, bm = self.encode_boundary(bcoords, bmask, null_flag, boundary_corner_labels)
        cross = bm[:, None, :].expand(B, R * C, bm.shape[1])
        for block in self.blocks:
            x = block(x, btokens, cross, masks)
        if not torch.isfinite(x).all():
            raise NumericError("non-finite activations in denoiser forward")
        flat_mask = slot_mask.reshape(B, R * C, 1).to(x.dtype)
        gain = torch.exp(self.eps_log_gain(temb).clamp(-8.0, 8.0))[:, :, None]
        flat_coords = coords.to(x.dtype).reshape(B, R * C, 2)
        eps_hat = gain * (flat_coords - self.eps_head(x)) * flat_mask
        logits = self.discrete_head(x).reshape(B, R * C, 2, cfg.coord_bins)
        return eps_hat.reshape(B, R, C, 2), logits.reshape(B, R, C, 2, cfg.coord_bins)


# ---------------------------------------------------------------------------
# condition tensor builders


def condition_tensors(
    graph: BubbleGraph, cfg: ModelConfig, device=None
) -> torch.Tensor:
    """(max_rooms,) room-type indices, padded with 0 beyond the graph."""
    if graph.num_rooms > cfg.max_rooms:
        raise ValidationError(
            f"graph has {graph.num_rooms} rooms, exceeding max_rooms={cfg.max_rooms}"
        )
    idx = torch.zeros(cfg.max_rooms, dtype=torch.long, device=device)
    for i, name in enumerate(graph.room_types):
        if name not in ROOM_TYPES:
            raise ValidationError(f"unknown room type {name!r}")
        idx[i] = ROOM_TYPES.index(name)
    return idx


def boundary_tensors(
    boundary: Optional[Boundary], cfg: ModelConfig, dtype=torch.float32, device=None
) -> tuple[Optional[torch.Tensor], Optional[torch.Tensor]]:
    """(1, L, 2) coords and (1, L) mask, or (None, None) for a null boundary."""
    if boundary is None:
        return None, None
    arr = boundary.polygon.as_array()
    L = len(arr)
    if L > cfg.max_boundary_corners:
        raise ValidationError(
            f"boundary has {L} corners, exceeding max_boundary_corners="
            f"{cfg.max_boundary_corners}"
        )
    coords = torch.as_tensor(arr, dtype=dtype, device=device)[None]
    mask = torch.ones(1, L, dtype=torch.bool, device=device)
    return coords, mask


def build_model(cfg: ModelConfig, seed: int = 0, dtype=torch.float32) -> Denoiser:
    """Deterministically initialized model; leaves global RNG untouched."""
    with torch.random.fork_rng():
        torch.manual_seed(seed)
        model = Denoiser(cfg, dtype=dtype)
    return model
