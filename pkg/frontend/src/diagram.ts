/** Bubble-diagram editor model: typed room nodes plus connectivity edges,
 * mirroring the service-side graph invariants (unique unordered pairs,
 * indices within range). */

import { RoomType, WireGraph } from "./wire";

export interface DiagramNode {
  id: number;
  roomType: RoomType;
  x: number;
  y: number;
}

export interface DiagramEdge {
  a: number; // node id
  b: number; // node id
  connected: boolean;
}

export class DiagramEditor {
  private nodes: DiagramNode[] = [];
  private edges: DiagramEdge[] = [];
  private nextId = 0;

  nodeList(): DiagramNode[] {
    return this.nodes.map((n) => ({ ...n }));
  }

  edgeList(): DiagramEdge[] {
    return this.edges.map((e) => ({ ...e }));
  }

  addNode(roomType: RoomType, x: number, y: number): number {
    const id = this.nextId++;
    this.nodes.push({ id, roomType, x, y });
    return id;
  }

  moveNode(id: number, x: number, y: number): void {
    const node = this.nodes.find((n) => n.id === id);
    if (node) {
      node.x = x;
      node.y = y;
    }
  }

  setNodeType(id: number, roomType: RoomType): void {
    const node = this.nodes.find((n) => n.id === id);
    if (node) node.roomType = roomType;
  }

  removeNode(id: number): void {
    this.nodes = this.nodes.filter((n) => n.id !== id);
    this.edges = this.edges.filter((e) => e.a !== id && e.b !== id);
  }

  /** Set or replace the unordered pair's connectivity; pairs stay unique. */
  setEdge(a: number, b: number, connected: boolean): void {
    if (a === b) throw new Error("an edge needs two distinct rooms");
    if (!this.hasNode(a) || !this.hasNode(b)) {
      throw new Error("both edge endpoints must exist");
    }
    const existing = this.edges.find(
      (e) => (e.a === a && e.b === b) || (e.a === b && e.b === a),
    );
    if (existing) {
      existing.connected = connected;
    } else {
      this.edges.push({ a, b, connected });
    }
  }

  toggleEdge(a: number, b: number): void {
    const existing = this.edges.find(
      (e) => (e.a === a && e.b === b) || (e.a === b && e.b === a),
    );
    if (existing) {
      existing.connected = !existing.connected;
    } else {
      this.setEdge(a, b, true);
    }
  }

  removeEdge(a: number, b: number): void {
    this.edges = this.edges.filter(
      (e) => !((e.a === a && e.b === b) || (e.a === b && e.b === a)),
    );
  }

  private hasNode(id: number): boolean {
    return this.nodes.some((n) => n.id === id);
  }

  /** Wire-format graph: node ids map to indices in insertion order. */
  toGraph(): WireGraph {
    const index = new Map<number, number>();
    this.nodes.forEach((n, i) => index.set(n.id, i));
    const edges = this.edges
      .map((e) => {
        const i = index.get(e.a)!;
        const j = index.get(e.b)!;
        const [lo, hi] = i < j ? [i, j] : [j, i];
        return [lo, e.connected ? 1 : -1, hi] as [number, 1 | -1, number];
      })
      .sort((x, y) => x[0] - y[0] || x[2] - y[2]);
    return {
      room_types: this.nodes.map((n) => n.roomType),
      edges,
    };
  }
}
