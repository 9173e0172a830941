/** Client-side polygon checks and coordinate normalization. The studio does
 * no metric math; this is only what submit-time validation needs. */

export interface Pt {
  x: number;
  y: number;
}

const EPS = 1e-9;

function orient(a: Pt, b: Pt, c: Pt): number {
  const v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  if (v > EPS) return 1;
  if (v < -EPS) return -1;
  return 0;
}

function onSegment(a: Pt, b: Pt, c: Pt): boolean {
  return (
    Math.min(a.x, b.x) - EPS <= c.x &&
    c.x <= Math.max(a.x, b.x) + EPS &&
    Math.min(a.y, b.y) - EPS <= c.y &&
    c.y <= Math.max(a.y, b.y) + EPS
  );
}

export function segmentsIntersect(p1: Pt, p2: Pt, q1: Pt, q2: Pt): boolean {
  const o1 = orient(p1, p2, q1);
  const o2 = orient(p1, p2, q2);
  const o3 = orient(q1, q2, p1);
  const o4 = orient(q1, q2, p2);
  if (o1 !== o2 && o3 !== o4) return true;
  if (o1 === 0 && onSegment(p1, p2, q1)) return true;
  if (o2 === 0 && onSegment(p1, p2, q2)) return true;
  if (o3 === 0 && onSegment(q1, q2, p1)) return true;
  if (o4 === 0 && onSegment(q1, q2, p2)) return true;
  return false;
}

/** Returns the first pair of non-adjacent edge indices that cross, or null
 * when the closed polygon is simple. */
export function findSelfIntersection(
  vertices: readonly Pt[],
): [number, number] | null {
  const n = vertices.length;
  for (let i = 0; i < n; i++) {
    for (let j = i + 1; j < n; j++) {
      if (j === i || (j + 1) % n === i || (i + 1) % n === j) continue;
      const a = vertices[i]!;
      const b = vertices[(i + 1) % n]!;
      const c = vertices[j]!;
      const d = vertices[(j + 1) % n]!;
      if (segmentsIntersect(a, b, c, d)) return [i, j];
    }
  }
  return null;
}

/**
 * Map canvas-pixel vertices into the dataset's normalized convention:
 * bbox centered at the origin, uniformly scaled into [-0.9, 0.9]^2, y up
 * (canvas y grows downward, so it flips).
 */
export function normalizeToWire(
  vertices: readonly Pt[],
  extent = 0.9,
): [number, number][] {
  if (vertices.length === 0) return [];
  let minX = Infinity;
  let maxX = -Infinity;
  let minY = Infinity;
  let maxY = -Infinity;
  for (const v of vertices) {
    minX = Math.min(minX, v.x);
    maxX = Math.max(maxX, v.x);
    minY = Math.min(minY, v.y);
    maxY = Math.max(maxY, v.y);
  }
  const cx = (minX + maxX) / 2;
  const cy = (minY + maxY) / 2;
  const half = Math.max((maxX - minX) / 2, (maxY - minY) / 2);
  const scale = half > 0 ? extent / half : 1;
  return vertices.map((v) => [
    (v.x - cx) * scale,
    -(v.y - cy) * scale,
  ]);
}
