/** Boundary polygon editor model: click to add vertices, drag to move,
 * close with client-side simplicity validation. DOM-free so it is testable;
 * the canvas layer feeds it gestures. */

import { findSelfIntersection, normalizeToWire, Pt } from "./geometry";

export type CloseResult =
  | { ok: true }
  | { ok: false; reason: string; offendingEdges?: [number, number] };

export class BoundaryEditor {
  private vertices: Pt[] = [];
  private _closed = false;

  get closed(): boolean {
    return this._closed;
  }

  get vertexCount(): number {
    return this.vertices.length;
  }

  snapshot(): Pt[] {
    return this.vertices.map((v) => ({ ...v }));
  }

  addVertex(p: Pt): void {
    if (this._closed) return;
    this.vertices.push({ ...p });
  }

  moveVertex(index: number, p: Pt): void {
    const v = this.vertices[index];
    if (!v) return;
    v.x = p.x;
    v.y = p.y;
  }

  /** Undo the last added vertex while the loop is open. */
  undo(): void {
    if (this._closed) return;
    this.vertices.pop();
  }

  clear(): void {
    this.vertices = [];
    this._closed = false;
  }

  close(): CloseResult {
    if (this._closed) return { ok: true };
    if (this.vertices.length < 3) {
      return { ok: false, reason: "a boundary needs at least 3 vertices" };
    }
    const crossing = findSelfIntersection(this.vertices);
    if (crossing) {
      return {
        ok: false,
        reason: `edges ${crossing[0]} and ${crossing[1]} cross`,
        offendingEdges: crossing,
      };
    }
    this._closed = true;
    return { ok: true };
  }

  reopen(): void {
    this._closed = false;
  }

  /** Normalized mirror in the wire convention; null while the loop is open. */
  normalized(): [number, number][] | null {
    if (!this._closed) return null;
    return normalizeToWire(this.vertices);
  }
}
