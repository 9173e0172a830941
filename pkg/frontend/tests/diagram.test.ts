import { describe, expect, it } from "vitest";

import { DiagramEditor } from "../src/diagram";
import { graphSchema } from "../src/wire";

describe("DiagramEditor", () => {
  it("builds a wire graph with i < j edges", () => {
    const d = new DiagramEditor();
    const living = d.addNode("living", 10, 10);
    const kitchen = d.addNode("kitchen", 50, 10);
    const bedroom = d.addNode("bedroom", 30, 50);
    d.setEdge(kitchen, living, true);
    d.setEdge(bedroom, living, false);
    const graph = d.toGraph();
    expect(graph.room_types).toEqual(["living", "kitchen", "bedroom"]);
    expect(graph.edges).toEqual([
      [0, 1, 1],
      [0, -1, 2],
    ]);
    expect(() => graphSchema.parse(graph)).not.toThrow();
  });

  it("keeps edge pairs unique", () => {
    const d = new DiagramEditor();
    const a = d.addNode("living", 0, 0);
    const b = d.addNode("kitchen", 1, 1);
    d.setEdge(a, b, true);
    d.setEdge(b, a, false); // same unordered pair, replaces
    expect(d.edgeList()).toHaveLength(1);
    expect(d.toGraph().edges).toEqual([[0, -1, 1]]);
  });

  it("toggles connectivity", () => {
    const d = new DiagramEditor();
    const a = d.addNode("living", 0, 0);
    const b = d.addNode("kitchen", 1, 1);
    d.toggleEdge(a, b);
    expect(d.toGraph().edges).toEqual([[0, 1, 1]]);
    d.toggleEdge(a, b);
    expect(d.toGraph().edges).toEqual([[0, -1, 1]]);
  });

  it("rejects self edges and unknown endpoints", () => {
    const d = new DiagramEditor();
    const a = d.addNode("living", 0, 0);
    expect(() => d.setEdge(a, a, true)).toThrow();
    expect(() => d.setEdge(a, 99, true)).toThrow();
  });

  it("removing a node removes its edges", () => {
    const d = new DiagramEditor();
    const a = d.addNode("living", 0, 0);
    const b = d.addNode("kitchen", 1, 1);
    const c = d.addNode("bedroom", 2, 2);
    d.setEdge(a, b, true);
    d.setEdge(b, c, true);
    d.removeNode(b);
    expect(d.edgeList()).toHaveLength(0);
    expect(d.toGraph().room_types).toEqual(["living", "bedroom"]);
  });
});
