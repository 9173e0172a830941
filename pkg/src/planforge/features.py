"""Deterministic feature extractors standing in for a pretrained image
network. Reports built on these are comparable across runs of this package
but not to scores computed with learned features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .geometry import (
    ROOM_TYPES,
    ROOM_TYPE_INDEX,
    Floorplan,
    extract_adjacency,
    rasterize,
    signed_area,
)

GEOMETRIC_DIM = 32


@dataclass(frozen=True)
class FeatureExtractor:
    kind: str = "geometric"  # "geometric" | "raster-projection"
    dim: int = GEOMETRIC_DIM
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("geometric", "raster-projection"):
            raise ValidationError(f"unknown extractor kind {self.kind!r}")
        if self.dim < 2:
            raise ValidationError(f"feature dim must be >= 2, got {self.dim}")

    def __call__(self, plan: Floorplan) -> np.ndarray:
        if self.kind == "geometric":
            return geometric_features(plan)
        return raster_projection_features(plan, self)


def geometric_features(plan: Floorplan) -> np.ndarray:
    """Fixed 32-dim structural descriptor of a plan.

    Total over generated output: degenerate polygons contribute zero area
    rather than failing validation.
    """
    if not plan.rooms:
        raise ValidationError("cannot extract features from an empty plan")
    v = np.zeros(GEOMETRIC_DIM)
    areas = np.array([abs(signed_area(r.polygon)) for r in plan.rooms])
    total = float(areas.sum())
    if total > 0:
        for room, a in zip(plan.rooms, areas):
            v[ROOM_TYPE_INDEX.get(room.room_type, len(ROOM_TYPES) - 1)] += a / total
    v[8] = len(plan.rooms)

    aspects, corners, perims = [], [], []
    pts = []
    for room in plan.rooms:
        arr = room.polygon.as_array()
        pts.append(arr)
        w, h = arr.max(axis=0) - arr.min(axis=0)
        lo, hi = min(w, h), max(w, h)
        aspects.append(hi / lo if lo > 1e-9 else 1.0)
        corners.append(len(arr))
        perims.append(float(np.hypot(*(np.roll(arr, -1, axis=0) - arr).T).sum()))
    v[9], v[10] = float(np.mean(aspects)), float(np.std(aspects))
    v[11], v[12] = float(np.mean(corners)), float(np.std(corners))

    degrees = np.zeros(len(plan.rooms), dtype=int)
    for i, j in extract_adjacency(plan).positive_pairs():
        degrees[i] += 1
        degrees[j] += 1
    for d in degrees:
        v[13 + min(int(d), 4)] += 1.0 / len(plan.rooms)

    if plan.boundary is not None:
        barea = abs(signed_area(plan.boundary.polygon))
        v[18] = total / barea if barea > 1e-9 else 0.0
    v[19] = float(np.sum(perims))
    allpts = np.concatenate(pts)
    w, h = allpts.max(axis=0) - allpts.min(axis=0)
    lo, hi = min(w, h), max(w, h)
    v[20] = hi / lo if lo > 1e-9 else 1.0
    return v


def _avg_pool(x: np.ndarray, k: int) -> np.ndarray:
    c, h, w = x.shape
    h2, w2 = h // k, w // k
    return x[:, : h2 * k, : w2 * k].reshape(c, h2, k, w2, k).mean(axis=(2, 4))


def _conv_valid(x: np.ndarray, kernels: np.ndarray) -> np.ndarray:
    """x: (c_in, H, W); kernels: (c_out, c_in, 3, 3) -> (c_out, H-2, W-2)."""
    c_in, H, W = x.shape
    windows = np.lib.stride_tricks.sliding_window_view(x, (3, 3), axis=(1, 2))
    out = np.einsum("cijhw,ochw->oij", windows, kernels)
    return out


def raster_projection_features(plan: Floorplan, extractor: FeatureExtractor) -> np.ndarray:
    """Seeded random-convolution stack over a 64x64 render, then a seeded
    random projection down to the extractor dimension."""
    if extractor.kind != "raster-projection":
        raise ValidationError("extractor kind must be raster-projection")
    rng = np.random.default_rng(extractor.seed)
    k1 = rng.standard_normal((4, 1, 3, 3)) / 3.0
    k2 = rng.standard_normal((8, 4, 3, 3)) / 6.0
    grid = rasterize(plan, 64)[None] if plan.rooms else np.zeros((1, 64, 64))
    h = np.tanh(_conv_valid(grid, k1))
    h = _avg_pool(h, 2)
    h = np.tanh(_conv_valid(h, k2))
    h = _avg_pool(h, 4)
    flat = h.ravel()
    proj = rng.standard_normal((extractor.dim, flat.size)) / np.sqrt(flat.size)
    return proj @ flat
