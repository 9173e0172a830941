/** Canvas rendering of wire-format plans and the boundary being drawn. */

import { Pt } from "./geometry";
import { PlanRecord, ROOM_TYPES } from "./wire";

const ROOM_COLORS: Record<string, string> = {
  living: "#e8b04c",
  kitchen: "#cc6a4e",
  bedroom: "#7b9e6b",
  bathroom: "#6b8fb3",
  balcony: "#9a7bb0",
  corridor: "#b9b09a",
  storage: "#8a8f98",
  other: "#708090",
};

export function roomColor(roomType: string): string {
  return ROOM_COLORS[roomType] ?? ROOM_COLORS["other"]!;
}

function toCanvas(
  [x, y]: [number, number],
  width: number,
  height: number,
): [number, number] {
  // normalized [-1,1] y-up -> pixels y-down
  const s = Math.min(width, height) / 2.2;
  return [width / 2 + x * s, height / 2 - y * s];
}

export function drawPlan(
  ctx: CanvasRenderingContext2D,
  plan: PlanRecord,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  if (plan.boundary) {
    ctx.beginPath();
    plan.boundary.forEach((p, i) => {
      const [px, py] = toCanvas(p, width, height);
      i === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
    });
    ctx.closePath();
    ctx.strokeStyle = "#233";
    ctx.setLineDash([6, 4]);
    ctx.lineWidth = 2;
    ctx.stroke();
    ctx.setLineDash([]);
  }
  for (const room of plan.rooms) {
    ctx.beginPath();
    room.corners.forEach((p, i) => {
      const [px, py] = toCanvas(p, width, height);
      i === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
    });
    ctx.closePath();
    ctx.fillStyle = roomColor(room.type) + "99";
    ctx.fill();
    ctx.strokeStyle = "#1c2733";
    ctx.lineWidth = 1.5;
    ctx.stroke();
  }
}

export function drawBoundaryDraft(
  ctx: CanvasRenderingContext2D,
  vertices: readonly Pt[],
  closed: boolean,
  width: number,
  height: number,
  offending?: [number, number],
): void {
  ctx.clearRect(0, 0, width, height);
  if (vertices.length === 0) return;
  ctx.beginPath();
  vertices.forEach((v, i) => (i === 0 ? ctx.moveTo(v.x, v.y) : ctx.lineTo(v.x, v.y)));
  if (closed) ctx.closePath();
  ctx.strokeStyle = "#2a6f97";
  ctx.lineWidth = 2;
  ctx.stroke();
  for (const v of vertices) {
    ctx.beginPath();
    ctx.arc(v.x, v.y, 4, 0, Math.PI * 2);
    ctx.fillStyle = "#2a6f97";
    ctx.fill();
  }
  if (offending) {
    ctx.strokeStyle = "#c1121f";
    ctx.lineWidth = 3;
    for (const e of offending) {
      const a = vertices[e]!;
      const b = vertices[(e + 1) % vertices.length]!;
      ctx.beginPath();
      ctx.moveTo(a.x, a.y);
      ctx.lineTo(b.x, b.y);
      ctx.stroke();
    }
  }
}

export function legend(): { type: string; color: string }[] {
  return ROOM_TYPES.map((type) => ({ type, color: roomColor(type) }));
}
