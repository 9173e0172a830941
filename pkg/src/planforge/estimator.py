"""Scikit-learn style facade over the diffusion pipeline.

``FloorplanDiffusion`` follows estimator conventions: constructor arguments
are stored verbatim, learned state lives in trailing-underscore attributes
set by ``fit``, and ``get_params``/``set_params`` come from BaseEstimator,
so the model drops into sklearn-shaped tooling.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .dataset import (
    CornerHistogram,
    FloorplanRecord,
    build_corner_histogram,
    few_shot_subset,
)
from .denoiser import (
    ModelConfig,
    TrainConfig,
    build_model,
    fine_tune,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .diffusion import SampleRequest, cosine_schedule
from .errors import ValidationError
from .geometry import Floorplan
from .metrics import EvalProtocol, MetricsReport, evaluate
from .sampler import sample as _sample
from .validation import (
    check_boundary,
    check_corner_counts,
    check_graph,
    check_guidance,
    check_records,
)


class FloorplanDiffusion(BaseEstimator):
    """Boundary-conditioned diffusion generator for vector floorplans."""

    def __init__(
        self,
        d_model: int = 64,
        num_heads: int = 4,
        num_blocks: int = 2,
        max_rooms: int = 8,
        max_corners_per_room: int = 12,
        coord_bins: int = 256,
        discrete_threshold: int = 32,
        max_boundary_corners: int = 32,
        timesteps: int = 1000,
        schedule_offset: float = 0.008,
        steps: int = 2000,
        batch_size: int = 8,
        lr_start: float = 1e-3,
        lr_end: float = 1e-5,
        p_drop_boundary: float = 0.1,
        discrete_loss_weight: float = 0.1,
        checkpoint_every: int = 500,
        seed: int = 0,
    ):
        self.d_model = d_model
        self.num_heads = num_heads
        self.num_blocks = num_blocks
        self.max_rooms = max_rooms
        self.max_corners_per_room = max_corners_per_room
        self.coord_bins = coord_bins
        self.discrete_threshold = discrete_threshold
        self.max_boundary_corners = max_boundary_corners
        self.timesteps = timesteps
        self.schedule_offset = schedule_offset
        self.steps = steps
        self.batch_size = batch_size
        self.lr_start = lr_start
        self.lr_end = lr_end
        self.p_drop_boundary = p_drop_boundary
        self.discrete_loss_weight = discrete_loss_weight
        self.checkpoint_every = checkpoint_every
        self.seed = seed

    # ----- configuration ------------------------------------------------

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            d_model=self.d_model,
            num_heads=self.num_heads,
            num_blocks=self.num_blocks,
            max_rooms=self.max_rooms,
            max_corners_per_room=self.max_corners_per_room,
            coord_bins=self.coord_bins,
            discrete_threshold=self.discrete_threshold,
            max_boundary_corners=self.max_boundary_corners,
        )

    def train_config(self, steps: Optional[int] = None, seed: Optional[int] = None) -> TrainConfig:
        return TrainConfig(
            steps=self.steps if steps is None else steps,
            batch_size=self.batch_size,
            lr_start=self.lr_start,
            lr_end=self.lr_end,
            p_drop_boundary=self.p_drop_boundary,
            discrete_loss_weight=self.discrete_loss_weight,
            seed=self.seed if seed is None else seed,
            checkpoint_every=self.checkpoint_every,
        )

    def _check_fitted(self) -> None:
        if not hasattr(self, "model_"):
            raise NotFittedError(
                "This FloorplanDiffusion instance is not fitted yet; "
                "call fit() or load() first."
            )

    # ----- training -----------------------------------------------------

    def fit(self, records: Sequence[FloorplanRecord], out_dir=None) -> "FloorplanDiffusion":
        records = check_records(records)
        self.schedule_ = cosine_schedule(self.timesteps, self.schedule_offset)
        self.model_ = build_model(self.model_config(), seed=self.seed)
        self.model_, self.loss_log_ = train(
            self.model_, records, self.schedule_, self.train_config(),
            out_dir=Path(out_dir) if out_dir else None,
        )
        self.histogram_ = build_corner_histogram(records)
        return self

    def fine_tune(
        self,
        records: Sequence[FloorplanRecord],
        shots: int,
        steps: Optional[int] = None,
        seed: Optional[int] = None,
        out_dir=None,
    ) -> "FloorplanDiffusion":
        self._check_fitted()
        if shots:
            records = check_records(records)
        cfg = self.train_config(steps=steps, seed=seed)
        self.model_, log = fine_tune(
            self.model_, records, shots, self.schedule_, cfg,
            out_dir=Path(out_dir) if out_dir else None,
        )
        if shots:
            # corner counts now come from the adaptation data
            subset = few_shot_subset(records, shots, cfg.seed)
            self.histogram_ = build_corner_histogram(subset)
            self.loss_log_ = list(getattr(self, "loss_log_", [])) + log
        return self

    # ----- inference ----------------------------------------------------

    def sample(
        self,
        graph,
        boundary=None,
        n_samples: int = 1,
        guidance: float = 1.0,
        seed: int = 0,
        corner_counts=None,
    ) -> list[Floorplan]:
        self._check_fitted()
        graph = check_graph(graph)
        req = SampleRequest(
            graph=graph,
            boundary=check_boundary(boundary),
            guidance=check_guidance(guidance),
            num_samples=int(n_samples),
            seed=int(seed),
            corner_counts=check_corner_counts(
                corner_counts, graph.num_rooms, self.max_corners_per_room
            ),
        )
        return _sample(self.model_, req, self.schedule_, hist=self.histogram_)

    def evaluate(
        self,
        records: Sequence[FloorplanRecord],
        protocol: Optional[EvalProtocol] = None,
    ) -> MetricsReport:
        self._check_fitted()
        return evaluate(
            self.model_,
            self.schedule_,
            check_records(records),
            protocol or EvalProtocol(),
            hist=self.histogram_,
        )

    # ----- persistence ----------------------------------------------------

    def save(self, path, step: int = 0) -> Path:
        self._check_fitted()
        extra = {
            "corner_histogram": self.histogram_.to_json(),
            "estimator_params": self.get_params(),
        }
        return save_checkpoint(self.model_, path, step=step, extra=extra)

    @classmethod
    def load(cls, path) -> "FloorplanDiffusion":
        model, manifest = load_checkpoint(path)
        params = manifest.get("extra", {}).get("estimator_params")
        est = cls(**params) if params else cls(**_params_from_config(manifest["config"]))
        est.model_ = model
        est.schedule_ = cosine_schedule(est.timesteps, est.schedule_offset)
        hist_json = manifest.get("extra", {}).get("corner_histogram")
        if hist_json is None:
            raise ValidationError("checkpoint carries no corner histogram")
        est.histogram_ = CornerHistogram.from_json(hist_json)
        est.loss_log_ = []
        return est


def _params_from_config(config: dict) -> dict:
    keys = (
        "d_model", "num_heads", "num_blocks", "max_rooms",
        "max_corners_per_room", "coord_bins", "discrete_threshold",
        "max_boundary_corners",
    )
    return {k: config[k] for k in keys if k in config}
