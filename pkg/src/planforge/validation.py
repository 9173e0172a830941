"""Input validation helpers shared by the estimator, CLI, and service."""

from __future__ import annotations

from typing import Optional, Sequence, Union

from .dataset import FloorplanRecord
from .errors import ValidationError
from .geometry import Boundary, BubbleGraph, ensure_ccw, make_polygon, validate_polygon


def check_guidance(value: float) -> float:
    value = float(value)
    if not (0.0 <= value <= 1.0):
        raise ValidationError(f"guidance scale must be in [0, 1], got {value}")
    return value


def check_graph(graph: Union[BubbleGraph, dict]) -> BubbleGraph:
    """Accept a BubbleGraph or its wire form {room_types, edges}."""
    if isinstance(graph, BubbleGraph):
        return graph
    try:
        room_types = tuple(str(t) for t in graph["room_types"])
        edges = tuple((int(i), int(c), int(j)) for i, c, j in graph.get("edges", []))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed graph: {exc}") from exc
    return BubbleGraph(num_rooms=len(room_types), room_types=room_types, edges=edges)


def check_boundary(
    boundary: Union[Boundary, Sequence[Sequence[float]], None]
) -> Optional[Boundary]:
    """Accept a Boundary, raw coordinate list, or None; validates and
    canonicalizes to counter-clockwise orientation."""
    if boundary is None:
        return None
    if isinstance(boundary, Boundary):
        poly = boundary.polygon
    else:
        poly = make_polygon(boundary)
    validate_polygon(poly)
    return Boundary(ensure_ccw(poly))


def check_records(records: Sequence[FloorplanRecord]) -> list[FloorplanRecord]:
    records = list(records)
    if not records:
        raise ValidationError("need at least one record")
    for rec in records:
        if not isinstance(rec, FloorplanRecord):
            raise ValidationError(f"expected FloorplanRecord, got {type(rec).__name__}")
    return records


def check_corner_counts(
    counts: Optional[Sequence[int]], num_rooms: int, max_corners: int
) -> Optional[tuple[int, ...]]:
    if counts is None:
        return None
    counts = tuple(int(c) for c in counts)
    if len(counts) != num_rooms:
        raise ValidationError(
            f"corner_counts has {len(counts)} entries for {num_rooms} rooms"
        )
    for c in counts:
        if not (3 <= c <= max_corners):
            raise ValidationError(
                f"corner count {c} outside [3, {max_corners}]"
            )
    return counts
