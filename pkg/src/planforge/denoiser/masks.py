"""Attention mask construction over padded room-corner slots.

Slot a = room_of(a) * max_corners + corner_of(a). Three masks gate the
attention pathways: same-room (csa), all-pairs (gsa), and graph-edge
restricted cross-room (rca). None admits a padded slot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..errors import ValidationError
from ..geometry import BubbleGraph
from .config import ModelConfig


@dataclass(frozen=True)
class AttentionMasks:
    csa: np.ndarray
    gsa: np.ndarray
    rca: np.ndarray
    pad: np.ndarray

    def as_torch(self, device=None) -> dict[str, torch.Tensor]:
        return {
            name: torch.as_tensor(getattr(self, name), device=device)
            for name in ("csa", "gsa", "rca", "pad")
        }


def build_masks(
    corner_counts, graph: BubbleGraph, cfg: ModelConfig
) -> AttentionMasks:
    """Boolean (S, S) masks for a single plan's corner counts and graph."""
    counts = list(corner_counts)
    if len(counts) != graph.num_rooms:
        raise ValidationError(
            f"{len(counts)} corner counts for a {graph.num_rooms}-room graph"
        )
    if len(counts) > cfg.max_rooms:
        raise ValidationError(
            f"{len(counts)} rooms exceed max_rooms={cfg.max_rooms}"
        )
    R, C = cfg.max_rooms, cfg.max_corners_per_room
    real = np.zeros(R * C, dtype=bool)
    for i, k in enumerate(counts):
        if k > C:
            raise ValidationError(
                f"room {i} has {k} corners, exceeding max_corners_per_room={C}"
            )
        real[i * C : i * C + k] = True

    room_of = np.repeat(np.arange(R), C)
    pad = np.outer(real, real)
    same_room = room_of[:, None] == room_of[None, :]

    linked = np.zeros((R, R), dtype=bool)
    for i, c, j in graph.edges:
        if c == 1:
            linked[i, j] = linked[j, i] = True

    csa = pad & same_room
    gsa = pad.copy()
    rca = pad & ~same_room & linked[room_of[:, None], room_of[None, :]]
    return AttentionMasks(csa=csa, gsa=gsa, rca=rca, pad=pad)
