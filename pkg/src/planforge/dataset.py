"""Floorplan dataset ingestion, normalization, and procedural constructions.

On-disk format is UTF-8 JSON lines, one record per line:

    {"id": str,
     "rooms": [{"type": str, "corners": [[x, y], ...]}, ...],
     "boundary": [[x, y], ...] | null,
     "edges": [[i, c, j], ...]}

with a sidecar manifest ``<name>.manifest.json``. Coordinates are normalized
floats in [-0.9, 0.9]^2, y axis up.
"""

from __future__ import annotations

import hashlib
import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ParseError, ValidationError
from .geometry import (
    ROOM_TYPES,
    Boundary,
    BubbleGraph,
    Floorplan,
    Point,
    Polygon,
    Room,
    ensure_ccw,
    make_polygon,
    signed_area,
    validate_polygon,
)

log = logging.getLogger(__name__)

COORDINATE_CONVENTION = "normalized-xy-in-[-0.9,0.9]-y-up"
NORM_EXTENT = 0.9
DEFAULT_BINS = 256


@dataclass(frozen=True)
class FloorplanRecord:
    plan: Floorplan
    graph: BubbleGraph
    id: str

    def __post_init__(self):
        if self.graph.num_rooms != len(self.plan.rooms):
            raise ValidationError(
                f"record {self.id!r}: graph has {self.graph.num_rooms} rooms, "
                f"plan has {len(self.plan.rooms)}"
            )
        plan_types = tuple(r.room_type for r in self.plan.rooms)
        if plan_types != tuple(self.graph.room_types):
            raise ValidationError(
                f"record {self.id!r}: graph room_types do not match plan room labels"
            )


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    record_count: int
    coordinate_convention: str
    room_type_vocabulary: tuple[str, ...]
    source_hash: str

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "record_count": self.record_count,
            "coordinate_convention": self.coordinate_convention,
            "room_type_vocabulary": list(self.room_type_vocabulary),
            "source_hash": self.source_hash,
        }


@dataclass(frozen=True)
class CornerHistogram:
    """Occurrence counts of (room_type, corner_count) over a dataset."""

    counts: dict[tuple[str, int], int]

    def __post_init__(self):
        for (room_type, k), c in self.counts.items():
            if k < 3:
                raise ValidationError(f"corner count {k} < 3 for type {room_type!r}")
            if c < 1:
                raise ValidationError(f"non-positive count for ({room_type!r},{k})")

    def to_json(self) -> list:
        return [[t, k, c] for (t, k), c in sorted(self.counts.items())]

    @classmethod
    def from_json(cls, data: list) -> "CornerHistogram":
        return cls({(t, int(k)): int(c) for t, k, c in data})


# ---------------------------------------------------------------------------
# wire <-> object


def record_to_dict(rec: FloorplanRecord) -> dict:
    return {
        "id": rec.id,
        "rooms": [
            {"type": r.room_type, "corners": [[p.x, p.y] for p in r.polygon.corners]}
            for r in rec.plan.rooms
        ],
        "boundary": (
            [[p.x, p.y] for p in rec.plan.boundary.polygon.corners]
            if rec.plan.boundary is not None
            else None
        ),
        "edges": [list(e) for e in rec.graph.edges],
    }


def record_from_dict(data: dict) -> FloorplanRecord:
    try:
        rec_id = str(data["id"])
        rooms_raw = data["rooms"]
        edges_raw = data.get("edges", [])
        boundary_raw = data.get("boundary")
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"record missing required field: {exc}") from exc
    rooms = tuple(
        Room(room_type=str(r["type"]), polygon=make_polygon(r["corners"]), index=i)
        for i, r in enumerate(rooms_raw)
    )
    boundary = Boundary(make_polygon(boundary_raw)) if boundary_raw else None
    graph = BubbleGraph(
        num_rooms=len(rooms),
        room_types=tuple(r.room_type for r in rooms),
        edges=tuple((int(i), int(c), int(j)) for i, c, j in edges_raw),
    )
    return FloorplanRecord(plan=Floorplan(rooms=rooms, boundary=boundary), graph=graph, id=rec_id)


# ---------------------------------------------------------------------------
# validation + normalization


def validate_record_geometry(rec: FloorplanRecord, vocabulary: Sequence[str] = ROOM_TYPES) -> None:
    for room in rec.plan.rooms:
        if room.room_type not in vocabulary:
            raise ValidationError(
                f"record {rec.id!r}: unknown room type {room.room_type!r}"
            )
        validate_polygon(room.polygon)
    if rec.plan.boundary is not None:
        validate_polygon(rec.plan.boundary.polygon)
    indices = [r.index for r in rec.plan.rooms]
    if indices != list(range(len(indices))):
        raise ValidationError(f"record {rec.id!r}: room indices are not 0..N-1")


def _plan_bbox(plan: Floorplan) -> tuple[np.ndarray, np.ndarray]:
    pts = [p for room in plan.rooms for p in room.polygon.corners]
    if plan.boundary is not None:
        pts.extend(plan.boundary.polygon.corners)
    arr = np.array([(p.x, p.y) for p in pts])
    return arr.min(axis=0), arr.max(axis=0)


def normalize_record(rec: FloorplanRecord) -> FloorplanRecord:
    """Center the plan bbox and scale it into [-0.9, 0.9]^2 (aspect preserved).

    A no-op (bit-exact) when the record is already normalized, so that
    load -> serialize -> load round-trips exactly.
    """
    lo, hi = _plan_bbox(rec.plan)
    center = (lo + hi) / 2.0
    half = float(max((hi - lo) / 2.0))
    if half <= 0:
        raise ValidationError(f"record {rec.id!r}: degenerate bounding box")
    scale = NORM_EXTENT / half
    if abs(center[0]) < 1e-12 and abs(center[1]) < 1e-12 and abs(scale - 1.0) < 1e-12:
        plan = rec.plan
        if plan.boundary is not None and signed_area(plan.boundary.polygon) < 0:
            plan = Floorplan(plan.rooms, Boundary(ensure_ccw(plan.boundary.polygon)))
            return FloorplanRecord(plan=plan, graph=rec.graph, id=rec.id)
        return rec

    def tx(poly: Polygon) -> Polygon:
        return Polygon(
            tuple(
                Point((p.x - center[0]) * scale, (p.y - center[1]) * scale)
                for p in poly.corners
            )
        )

    rooms = tuple(
        Room(r.room_type, tx(r.polygon), r.index) for r in rec.plan.rooms
    )
    boundary = None
    if rec.plan.boundary is not None:
        boundary = Boundary(ensure_ccw(tx(rec.plan.boundary.polygon)))
    return FloorplanRecord(
        plan=Floorplan(rooms=rooms, boundary=boundary), graph=rec.graph, id=rec.id
    )


# ---------------------------------------------------------------------------
# load / save


def load_dataset(
    path, strict: bool = True, vocabulary: Sequence[str] = ROOM_TYPES
) -> tuple[list[FloorplanRecord], DatasetManifest]:
    """Parse, validate, and normalize a JSONL dataset.

    Invalid records raise in strict mode; otherwise they are logged with
    their line number and skipped.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"dataset file not found: {path}")
    raw = path.read_bytes()
    records: list[FloorplanRecord] = []
    for lineno, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            err = ParseError(f"malformed JSON: {exc.msg}", line=lineno)
            if strict:
                raise err from exc
            log.warning("skipping %s: %s", path.name, err)
            continue
        try:
            rec = record_from_dict(data)
            validate_record_geometry(rec, vocabulary)
            records.append(normalize_record(rec))
        except ValidationError as exc:
            if strict:
                raise ValidationError(f"line {lineno}: {exc}") from exc
            log.warning("skipping %s line %d: %s", path.name, lineno, exc)
    manifest = DatasetManifest(
        name=path.stem,
        record_count=len(records),
        coordinate_convention=COORDINATE_CONVENTION,
        room_type_vocabulary=tuple(vocabulary),
        source_hash=hashlib.sha256(raw).hexdigest(),
    )
    return records, manifest


def save_dataset(records: Sequence[FloorplanRecord], path, name: Optional[str] = None) -> DatasetManifest:
    """Write records as JSON lines plus a ``<name>.manifest.json`` sidecar."""
    path = Path(path)
    payload = "".join(json.dumps(record_to_dict(r)) + "\n" for r in records)
    path.write_text(payload, encoding="utf-8")
    manifest = DatasetManifest(
        name=name or path.stem,
        record_count=len(records),
        coordinate_convention=COORDINATE_CONVENTION,
        room_type_vocabulary=ROOM_TYPES,
        source_hash=hashlib.sha256(payload.encode("utf-8")).hexdigest(),
    )
    sidecar = path.with_suffix("").with_suffix(".manifest.json")
    sidecar.write_text(json.dumps(manifest.to_dict(), indent=2), encoding="utf-8")
    return manifest


# ---------------------------------------------------------------------------
# OOD constructions


_DRIFT_SWAP = {"living": "balcony", "balcony": "living"}


def apply_drift(records: Sequence[FloorplanRecord]) -> list[FloorplanRecord]:
    """Swap living and balcony labels everywhere; geometry untouched."""
    out = []
    for rec in records:
        rooms = tuple(
            Room(_DRIFT_SWAP.get(r.room_type, r.room_type), r.polygon, r.index)
            for r in rec.plan.rooms
        )
        graph = BubbleGraph(
            num_rooms=rec.graph.num_rooms,
            room_types=tuple(_DRIFT_SWAP.get(t, t) for t in rec.graph.room_types),
            edges=rec.graph.edges,
        )
        out.append(
            FloorplanRecord(
                plan=Floorplan(rooms=rooms, boundary=rec.plan.boundary),
                graph=graph,
                id=rec.id,
            )
        )
    return out


def _convex_hull(points: np.ndarray) -> np.ndarray:
    """Andrew monotone chain; returns hull vertices counter-clockwise."""
    pts = sorted({(float(x), float(y)) for x, y in points})
    if len(pts) < 3:
        raise ValidationError("hull needs at least 3 distinct points")

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


PENTAGON_CENTER_TYPE = "living"
_PENTAGON_RING_TYPES = ("kitchen", "bedroom", "bathroom", "balcony", "corridor")


def gen_pentagon_set(seed: int, n: int = 20) -> list[FloorplanRecord]:
    """Plans with a central pentagonal room and five surrounding rooms.

    The central room is a regular pentagon with seed-jittered radius in
    [0.25, 0.4] and rotation; each surrounding quad shares one pentagon edge
    and extends outward to the enclosing square of half-extent 0.9. The
    boundary is the convex hull of all rooms.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    records = []
    for idx in range(n):
        radius = float(rng.uniform(0.25, 0.4))
        rot = float(rng.uniform(0.0, 2.0 * np.pi))
        angles = rot + 2.0 * np.pi * np.arange(5) / 5.0
        v = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        t = NORM_EXTENT / np.abs(v).max(axis=1)
        w = v * t[:, None]

        ring_types = list(_PENTAGON_RING_TYPES)
        rng.shuffle(ring_types)

        rooms = [Room(PENTAGON_CENTER_TYPE, ensure_ccw(make_polygon(v)), 0)]
        for k in range(5):
            k1 = (k + 1) % 5
            quad = make_polygon([v[k], w[k], w[k1], v[k1]])
            rooms.append(Room(ring_types[k], ensure_ccw(quad), k + 1))

        all_corners = np.concatenate([v, w])
        boundary = Boundary(ensure_ccw(make_polygon(_convex_hull(all_corners))))

        edges = [(0, 1, k) for k in range(1, 6)]
        edges += [(1, 1, 2), (2, 1, 3), (3, 1, 4), (4, 1, 5), (1, 1, 5)]
        graph = BubbleGraph(
            num_rooms=6,
            room_types=tuple(r.room_type for r in rooms),
            edges=tuple(edges),
        )
        rec = FloorplanRecord(
            plan=Floorplan(rooms=tuple(rooms), boundary=boundary),
            graph=graph,
            id=f"pentagon-{seed}-{idx:03d}",
        )
        validate_record_geometry(rec)
        records.append(rec)
    return records


# ---------------------------------------------------------------------------
# corner-count histogram


def build_corner_histogram(records: Sequence[FloorplanRecord]) -> CornerHistogram:
    if not records:
        raise ValidationError("cannot build a histogram from an empty dataset")
    counts: dict[tuple[str, int], int] = {}
    for rec in records:
        for room in rec.plan.rooms:
            key = (room.room_type, len(room.polygon.corners))
            counts[key] = counts.get(key, 0) + 1
    return CornerHistogram(counts)


def sample_corner_counts(
    graph: BubbleGraph, hist: CornerHistogram, seed: int
) -> list[int]:
    """Per-room corner counts drawn from the type-conditional empirical
    distribution, falling back to the marginal for unseen types."""
    if not hist.counts:
        raise ValidationError("empty corner histogram")
    rng = np.random.default_rng(seed)
    marginal: dict[int, int] = {}
    by_type: dict[str, dict[int, int]] = {}
    for (room_type, k), c in sorted(hist.counts.items()):
        marginal[k] = marginal.get(k, 0) + c
        by_type.setdefault(room_type, {})[k] = c
    out = []
    for room_type in graph.room_types:
        dist = by_type.get(room_type, marginal)
        ks = sorted(dist)
        weights = np.array([dist[k] for k in ks], dtype=np.float64)
        out.append(int(rng.choice(ks, p=weights / weights.sum())))
    return out


def few_shot_subset(
    records: Sequence[FloorplanRecord], k: int, seed: int
) -> list[FloorplanRecord]:
    """Uniform sample of k records without replacement; k=0 gives []."""
    if k < 0:
        raise ValidationError(f"shot count must be >= 0, got {k}")
    if k > len(records):
        raise ValidationError(f"shot count {k} exceeds dataset size {len(records)}")
    if k == 0:
        return []
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(records), size=k, replace=False)
    return [records[i] for i in idx]


# ---------------------------------------------------------------------------
# coordinate quantization


def quantize_coords(coords: np.ndarray, bins: int = DEFAULT_BINS, warn: bool = True) -> np.ndarray:
    """Map coordinates in [-1, 1] to bin indices; boundary values round up."""
    coords = np.asarray(coords, dtype=np.float64)
    if warn and (np.any(coords < -1.0) or np.any(coords > 1.0)):
        warnings.warn("coordinates outside [-1, 1] clamped during quantization")
    clamped = np.clip(coords, -1.0, 1.0)
    return np.clip(np.floor((clamped + 1.0) / 2.0 * bins).astype(np.int64), 0, bins - 1)


def dequantize_coords(indices: np.ndarray, bins: int = DEFAULT_BINS) -> np.ndarray:
    """Bin indices back to cell-center coordinates."""
    return -1.0 + (np.asarray(indices, dtype=np.float64) + 0.5) * 2.0 / bins


@dataclass(frozen=True)
class QuantizedPlan:
    bins: int
    room_types: tuple[str, ...]
    room_corners: tuple[tuple[tuple[int, int], ...], ...]
    boundary_corners: Optional[tuple[tuple[int, int], ...]] = None


def quantize(plan: Floorplan, bins: int = DEFAULT_BINS) -> QuantizedPlan:
    """Snap every plan coordinate to the uniform grid over [-1, 1]."""

    def q(poly: Polygon) -> tuple[tuple[int, int], ...]:
        idx = quantize_coords(poly.as_array(), bins)
        return tuple((int(a), int(b)) for a, b in idx)

    return QuantizedPlan(
        bins=bins,
        room_types=tuple(r.room_type for r in plan.rooms),
        room_corners=tuple(q(r.polygon) for r in plan.rooms),
        boundary_corners=q(plan.boundary.polygon) if plan.boundary is not None else None,
    )


def dequantize(qplan: QuantizedPlan) -> Floorplan:
    def poly(corners) -> Polygon:
        arr = dequantize_coords(np.array(corners, dtype=np.int64), qplan.bins)
        return make_polygon(arr)

    rooms = tuple(
        Room(t, poly(cs), i)
        for i, (t, cs) in enumerate(zip(qplan.room_types, qplan.room_corners))
    )
    boundary = (
        Boundary(poly(qplan.boundary_corners))
        if qplan.boundary_corners is not None
        else None
    )
    return Floorplan(rooms=rooms, boundary=boundary)
