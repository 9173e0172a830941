"""Exact 2-D polygon mathematics and floorplan structural analysis.

Everything here is a pure function over immutable inputs. Coordinates live
in normalized [-1, 1] space with the y axis pointing up.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError

ROOM_TYPES = (
    "living",
    "kitchen",
    "bedroom",
    "bathroom",
    "balcony",
    "corridor",
    "storage",
    "other",
)
ROOM_TYPE_INDEX = {name: i for i, name in enumerate(ROOM_TYPES)}

EDGE_TOL = 1e-9
ADJACENCY_GAP = 0.02
ADJACENCY_MIN_SHARED = 0.05
OOB_SEED = 0xB0DA
OOB_SAMPLES = 65536


@dataclass(frozen=True)
class Point:
    x: float
    y: float


@dataclass(frozen=True)
class Polygon:
    """Closed polygonal loop; the last corner connects back to the first."""

    corners: tuple[Point, ...]

    def as_array(self) -> np.ndarray:
        return np.array([(p.x, p.y) for p in self.corners], dtype=np.float64)

    def __len__(self) -> int:
        return len(self.corners)


@dataclass(frozen=True)
class Room:
    room_type: str
    polygon: Polygon
    index: int


@dataclass(frozen=True)
class Boundary:
    polygon: Polygon


@dataclass(frozen=True)
class Floorplan:
    rooms: tuple[Room, ...]
    boundary: Optional[Boundary] = None


def make_polygon(coords: Sequence[Sequence[float]]) -> Polygon:
    return Polygon(tuple(Point(float(x), float(y)) for x, y in coords))


def make_floorplan(room_specs, boundary_coords=None) -> Floorplan:
    """Build a floorplan from (room_type, coords) pairs plus optional boundary."""
    rooms = tuple(
        Room(room_type=rt, polygon=make_polygon(cs), index=i)
        for i, (rt, cs) in enumerate(room_specs)
    )
    boundary = None
    if boundary_coords is not None:
        boundary = Boundary(make_polygon(boundary_coords))
    return Floorplan(rooms=rooms, boundary=boundary)


def signed_area(p: Polygon) -> float:
    """Shoelace signed area: positive for counter-clockwise loops."""
    a = p.as_array()
    x, y = a[:, 0], a[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_area(p: Polygon) -> float:
    """Absolute shoelace area, independent of winding."""
    _check_distinct(p)
    return abs(signed_area(p))


def ensure_ccw(p: Polygon) -> Polygon:
    if signed_area(p) < 0:
        return Polygon(tuple(reversed(p.corners)))
    return p


def _check_distinct(p: Polygon) -> None:
    if len(p.corners) < 3:
        raise ValidationError(f"polygon needs >= 3 corners, got {len(p.corners)}")
    a = p.as_array()
    keys = {(round(x / EDGE_TOL), round(y / EDGE_TOL)) for x, y in a}
    if len(keys) < 3:
        raise ValidationError("degenerate polygon: fewer than 3 distinct corners")


def validate_polygon(p: Polygon) -> None:
    """Ingestion-time validation: corner count, duplicates, simplicity.

    Generated output is intentionally not run through this check.
    """
    if not all(np.isfinite(v) for c in p.corners for v in (c.x, c.y)):
        raise ValidationError("polygon has non-finite coordinates")
    _check_distinct(p)
    a = p.as_array()
    nxt = np.roll(a, -1, axis=0)
    gaps = np.hypot(*(nxt - a).T)
    if np.any(gaps <= EDGE_TOL):
        raise ValidationError("polygon has consecutive duplicate corners")
    if not _is_simple(a):
        raise ValidationError("polygon is self-intersecting")


def _is_simple(a: np.ndarray) -> bool:
    n = len(a)
    segs = [(a[i], a[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # adjacent edges share an endpoint by construction
            if _segments_intersect(*segs[i], *segs[j]):
                return False
    return True


def _segments_intersect(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if v > EDGE_TOL:
            return 1
        if v < -EDGE_TOL:
            return -1
        return 0

    def on_seg(a, b, c):
        return (
            min(a[0], b[0]) - EDGE_TOL <= c[0] <= max(a[0], b[0]) + EDGE_TOL
            and min(a[1], b[1]) - EDGE_TOL <= c[1] <= max(a[1], b[1]) + EDGE_TOL
        )

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and on_seg(p1, p2, q1):
        return True
    if o2 == 0 and on_seg(p1, p2, q2):
        return True
    if o3 == 0 and on_seg(q1, q2, p1):
        return True
    if o4 == 0 and on_seg(q1, q2, p2):
        return True
    return False


def points_in_polygon(pts: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Vectorized even-odd containment; points on an edge count as inside."""
    pts = np.asarray(pts, dtype=np.float64)
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    on_edge = np.zeros(len(pts), dtype=bool)
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        # even-odd ray crossing (ray towards +x)
        crosses = (y1 > y) != (y2 > y)
        if np.any(crosses):
            xint = (x2 - x1) * (y - y1) / (y2 - y1 + np.where(y2 == y1, 1.0, 0.0)) + x1
            inside ^= crosses & (x < xint)
        # edge-inclusive tolerance
        dx, dy = x2 - x1, y2 - y1
        L2 = dx * dx + dy * dy
        if L2 == 0.0:
            d2 = (x - x1) ** 2 + (y - y1) ** 2
        else:
            t = np.clip(((x - x1) * dx + (y - y1) * dy) / L2, 0.0, 1.0)
            d2 = (x - (x1 + t * dx)) ** 2 + (y - (y1 + t * dy)) ** 2
        on_edge |= d2 <= EDGE_TOL * EDGE_TOL
    return inside | on_edge


def point_in_polygon(pt: Point, p: Polygon) -> bool:
    """Even-odd rule; points on edges count as inside (tolerance 1e-9)."""
    return bool(points_in_polygon(np.array([[pt.x, pt.y]]), p.as_array())[0])


def _stratified_bbox_samples(poly: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    lo = poly.min(axis=0)
    hi = poly.max(axis=0)
    g = max(1, int(np.sqrt(n)))
    jitter = rng.random((g * g, 2))
    cells = np.stack(
        np.meshgrid(np.arange(g), np.arange(g), indexing="ij"), axis=-1
    ).reshape(-1, 2)
    unit = (cells + jitter) / g
    return lo + unit * (hi - lo)


def out_of_boundary_ratio(
    plan: Floorplan,
    b: Boundary,
    samples: int = OOB_SAMPLES,
    seed: int = OOB_SEED,
) -> float:
    """Fraction of total room area lying outside the boundary.

    Seeded stratified Monte-Carlo over room bounding boxes; total even for
    self-intersecting generated polygons, where exact clipping is not.
    """
    if not plan.rooms:
        raise ValidationError("plan has no rooms")
    polys = [r.polygon.as_array() for r in plan.rooms]
    bbox_areas = np.array([np.prod(p.max(axis=0) - p.min(axis=0)) for p in polys])
    total_bbox = bbox_areas.sum()
    if total_bbox <= 0:
        raise ValidationError("zero total room area")
    rng = np.random.default_rng(seed)
    bpoly = b.polygon.as_array()
    inside_mass = 0.0
    outside_mass = 0.0
    for poly, bbox_area in zip(polys, bbox_areas):
        if bbox_area <= 0:
            continue
        n = max(16, int(round(samples * bbox_area / total_bbox)))
        pts = _stratified_bbox_samples(poly, n, rng)
        in_room = points_in_polygon(pts, poly)
        if not np.any(in_room):
            continue
        w = bbox_area / len(pts)
        in_boundary = points_in_polygon(pts[in_room], bpoly)
        inside_mass += w * int(in_room.sum())
        outside_mass += w * int((~in_boundary).sum())
    if inside_mass <= 0:
        raise ValidationError("zero total room area")
    return float(outside_mass / inside_mass)


def _min_dist_to_loop(pts: np.ndarray, poly: np.ndarray) -> np.ndarray:
    n = len(poly)
    d2 = np.full(len(pts), np.inf)
    for i in range(n):
        a, b2 = poly[i], poly[(i + 1) % n]
        ab = b2 - a
        L2 = float(ab @ ab)
        if L2 == 0:
            d = pts - a
        else:
            t = np.clip(((pts - a) @ ab) / L2, 0.0, 1.0)
            d = pts - (a + t[:, None] * ab)
        d2 = np.minimum(d2, np.einsum("ij,ij->i", d, d))
    return np.sqrt(d2)


def rooms_adjacent(
    a: Polygon,
    b: Polygon,
    gap: float = ADJACENCY_GAP,
    min_shared: float = ADJACENCY_MIN_SHARED,
) -> bool:
    """True when some single wall segment of one room runs within `gap` of
    the other room's loop for at least `min_shared` of its length."""
    pa, pb = a.as_array(), b.as_array()
    # cheap bbox rejection
    if np.any(pa.min(axis=0) > pb.max(axis=0) + gap) or np.any(
        pb.min(axis=0) > pa.max(axis=0) + gap
    ):
        return False
    step = min(gap / 4.0, min_shared / 10.0)
    for src, dst in ((pa, pb), (pb, pa)):
        n = len(src)
        for i in range(n):
            p1, p2 = src[i], src[(i + 1) % n]
            L = float(np.hypot(*(p2 - p1)))
            if L <= 0:
                continue
            k = max(1, int(np.ceil(L / step)))
            t = (np.arange(k) + 0.5) / k
            pts = p1 + t[:, None] * (p2 - p1)
            near = _min_dist_to_loop(pts, dst) <= gap
            if (L / k) * float(near.sum()) >= min_shared:
                return True
    return False


@dataclass(frozen=True)
class BubbleGraph:
    """Room adjacency constraints: (i, c, j) triplets with c in {-1, +1}."""

    num_rooms: int
    room_types: tuple[str, ...]
    edges: tuple[tuple[int, int, int], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.num_rooms <= 0:
            raise ValidationError("graph needs at least one room")
        if len(self.room_types) != self.num_rooms:
            raise ValidationError(
                f"room_types length {len(self.room_types)} != num_rooms {self.num_rooms}"
            )
        seen = set()
        for i, c, j in self.edges:
            if not (0 <= i < j < self.num_rooms):
                raise ValidationError(f"edge ({i},{c},{j}) violates 0 <= i < j < num_rooms")
            if c not in (-1, 1):
                raise ValidationError(f"edge flag must be -1 or +1, got {c}")
            if (i, j) in seen:
                raise ValidationError(f"duplicate edge pair ({i},{j})")
            seen.add((i, j))

    def connectivity(self, i: int, j: int) -> int:
        """Flag for an unordered pair; pairs not listed count as disconnected."""
        a, b = min(i, j), max(i, j)
        for x, c, y in self.edges:
            if x == a and y == b:
                return c
        return -1

    def positive_pairs(self) -> set[tuple[int, int]]:
        return {(i, j) for i, c, j in self.edges if c == 1}


def extract_adjacency(
    plan: Floorplan,
    gap: float = ADJACENCY_GAP,
    min_shared: float = ADJACENCY_MIN_SHARED,
) -> BubbleGraph:
    """Realized adjacency graph of a plan, one +/-1 triplet per room pair."""
    rooms = plan.rooms
    edges = []
    for i in range(len(rooms)):
        for j in range(i + 1, len(rooms)):
            c = 1 if rooms_adjacent(rooms[i].polygon, rooms[j].polygon, gap, min_shared) else -1
            edges.append((i, c, j))
    return BubbleGraph(
        num_rooms=len(rooms),
        room_types=tuple(r.room_type for r in rooms),
        edges=tuple(edges),
    )


def rasterize(plan: Floorplan, resolution: int) -> np.ndarray:
    """Grayscale (resolution x resolution) render of a plan.

    Background 0, room interiors at (type_index+1)/9, walls at 1.0 with
    one-cell thickness. Row 0 is the top of the plan (y = +1).
    """
    if resolution < 16:
        raise ValidationError(f"resolution must be >= 16, got {resolution}")
    grid = np.zeros((resolution, resolution), dtype=np.float64)
    cell = 2.0 / resolution

    def to_rc(xy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        col = np.clip(((xy[:, 0] + 1.0) / cell).astype(int), 0, resolution - 1)
        row = np.clip(((1.0 - xy[:, 1]) / cell).astype(int), 0, resolution - 1)
        return row, col

    # room fills, in index order
    for room in plan.rooms:
        poly = room.polygon.as_array()
        lo, hi = poly.min(axis=0), poly.max(axis=0)
        c0 = max(0, int((lo[0] + 1.0) / cell) - 1)
        c1 = min(resolution - 1, int((hi[0] + 1.0) / cell) + 1)
        r0 = max(0, int((1.0 - hi[1]) / cell) - 1)
        r1 = min(resolution - 1, int((1.0 - lo[1]) / cell) + 1)
        if c1 < c0 or r1 < r0:
            continue
        rows = np.arange(r0, r1 + 1)
        cols = np.arange(c0, c1 + 1)
        cx = -1.0 + (cols + 0.5) * cell
        cy = 1.0 - (rows + 0.5) * cell
        xx, yy = np.meshgrid(cx, cy)
        centers = np.stack([xx.ravel(), yy.ravel()], axis=1)
        mask = points_in_polygon(centers, poly).reshape(len(rows), len(cols))
        intensity = (ROOM_TYPE_INDEX.get(room.room_type, len(ROOM_TYPES) - 1) + 1) / 9.0
        sub = grid[r0 : r1 + 1, c0 : c1 + 1]
        sub[mask] = intensity

    # walls win over fills
    for room in plan.rooms:
        poly = room.polygon.as_array()
        n = len(poly)
        for i in range(n):
            p1, p2 = poly[i], poly[(i + 1) % n]
            L = float(np.hypot(*(p2 - p1)))
            k = max(2, int(np.ceil(L / (cell / 2.0))) + 1)
            t = np.linspace(0.0, 1.0, k)
            pts = p1 + t[:, None] * (p2 - p1)
            row, col = to_rc(pts)
            grid[row, col] = 1.0
    return grid
