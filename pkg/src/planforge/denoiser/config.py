"""Model and training hyperparameter bundles."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from ..errors import ValidationError
from ..geometry import ROOM_TYPES


@dataclass(frozen=True)
class ModelConfig:
    d_model: int = 64
    num_heads: int = 4
    num_blocks: int = 2
    max_rooms: int = 8
    max_corners_per_room: int = 12
    coord_bins: int = 256
    discrete_threshold: int = 32
    ff_width: int = 0  # 0 means 4 * d_model
    num_room_types: int = len(ROOM_TYPES)
    max_boundary_corners: int = 32

    def __post_init__(self):
        if self.d_model % self.num_heads != 0:
            raise ValidationError(
                f"d_model={self.d_model} not divisible by num_heads={self.num_heads}"
            )
        if self.ff_width == 0:
            object.__setattr__(self, "ff_width", 4 * self.d_model)
        for name in ("d_model", "num_heads", "num_blocks", "max_rooms",
                     "max_corners_per_room", "coord_bins", "discrete_threshold",
                     "max_boundary_corners"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")

    @property
    def num_slots(self) -> int:
        return self.max_rooms * self.max_corners_per_room

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        return cls(**data)


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 2000
    batch_size: int = 8
    lr_start: float = 1e-3
    lr_end: float = 1e-5
    p_drop_boundary: float = 0.1
    discrete_loss_weight: float = 0.1
    seed: int = 0
    checkpoint_every: int = 500

    def __post_init__(self):
        if not (0.0 <= self.p_drop_boundary <= 1.0):
            raise ValidationError(
                f"p_drop_boundary must be in [0, 1], got {self.p_drop_boundary}"
            )
        if not (self.lr_start >= self.lr_end > 0.0):
            raise ValidationError(
                f"need lr_start >= lr_end > 0, got {self.lr_start}, {self.lr_end}"
            )
        if self.steps < 1:
            raise ValidationError(f"steps must be >= 1, got {self.steps}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.checkpoint_every < 1:
            raise ValidationError("checkpoint_every must be >= 1")

    def lr_at(self, step: int) -> float:
        """Exponential decay hitting lr_end exactly at the final step."""
        if self.steps == 1:
            return self.lr_start
        frac = step / (self.steps - 1)
        return self.lr_start * (self.lr_end / self.lr_start) ** frac

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        return cls(**data)
