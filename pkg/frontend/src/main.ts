/** DOM wiring for the studio: boundary canvas, diagram editor, steering
 * controls, gallery, and the job dashboard. All logic lives in the models. */

import { ApiClient, ApiError } from "./api";
import { BoundaryEditor } from "./boundary";
import { DiagramEditor } from "./diagram";
import { buildGallery, GalleryModel } from "./gallery";
import { Pt } from "./geometry";
import { finetuneBody, JobPoller, SHOT_PRESETS, ShotPreset } from "./jobs";
import { drawBoundaryDraft, drawPlan, legend, roomColor } from "./render";
import { Session } from "./session";
import { ROOM_TYPES, RoomType } from "./wire";

const api = new ApiClient("");
const session = new Session();
const boundary = new BoundaryEditor();
const diagram = new DiagramEditor();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setStatus(message: string, isError = false): void {
  const bar = el<HTMLDivElement>("status");
  bar.textContent = message;
  bar.className = isError ? "status error" : "status";
}

// ---------------------------------------------------------------- boundary

const boundaryCanvas = el<HTMLCanvasElement>("boundary-canvas");
const bctx = boundaryCanvas.getContext("2d")!;
let offending: [number, number] | undefined;
let dragIndex: number | null = null;

function redrawBoundary(): void {
  drawBoundaryDraft(
    bctx,
    boundary.snapshot(),
    boundary.closed,
    boundaryCanvas.width,
    boundaryCanvas.height,
    offending,
  );
}

function canvasPoint(event: MouseEvent): Pt {
  const rect = boundaryCanvas.getBoundingClientRect();
  return { x: event.clientX - rect.left, y: event.clientY - rect.top };
}

boundaryCanvas.addEventListener("mousedown", (event) => {
  const p = canvasPoint(event);
  const vertices = boundary.snapshot();
  dragIndex = null;
  vertices.forEach((v, i) => {
    if (Math.hypot(v.x - p.x, v.y - p.y) < 8) dragIndex = i;
  });
  if (dragIndex === null && !boundary.closed) {
    boundary.addVertex(p);
    offending = undefined;
    redrawBoundary();
  }
});
boundaryCanvas.addEventListener("mousemove", (event) => {
  if (dragIndex !== null) {
    boundary.moveVertex(dragIndex, canvasPoint(event));
    redrawBoundary();
  }
});
boundaryCanvas.addEventListener("mouseup", () => (dragIndex = null));

el<HTMLButtonElement>("boundary-close").addEventListener("click", () => {
  const result = boundary.close();
  if (!result.ok) {
    offending = result.offendingEdges;
    setStatus(`boundary rejected: ${result.reason}`, true);
  } else {
    offending = undefined;
    setStatus("boundary closed");
  }
  redrawBoundary();
});
el<HTMLButtonElement>("boundary-undo").addEventListener("click", () => {
  boundary.undo();
  redrawBoundary();
});
el<HTMLButtonElement>("boundary-clear").addEventListener("click", () => {
  boundary.clear();
  offending = undefined;
  redrawBoundary();
});

// ----------------------------------------------------------------- diagram

const diagramCanvas = el<HTMLCanvasElement>("diagram-canvas");
const dctx = diagramCanvas.getContext("2d")!;
let edgeStart: number | null = null;

function redrawDiagram(): void {
  dctx.clearRect(0, 0, diagramCanvas.width, diagramCanvas.height);
  const nodes = diagram.nodeList();
  const byId = new Map(nodes.map((n) => [n.id, n]));
  for (const edge of diagram.edgeList()) {
    const a = byId.get(edge.a)!;
    const b = byId.get(edge.b)!;
    dctx.beginPath();
    dctx.moveTo(a.x, a.y);
    dctx.lineTo(b.x, b.y);
    dctx.strokeStyle = edge.connected ? "#2a6f97" : "#c1121f";
    dctx.setLineDash(edge.connected ? [] : [4, 4]);
    dctx.lineWidth = 2;
    dctx.stroke();
    dctx.setLineDash([]);
  }
  for (const node of nodes) {
    dctx.beginPath();
    dctx.arc(node.x, node.y, 14, 0, Math.PI * 2);
    dctx.fillStyle = roomColor(node.roomType);
    dctx.fill();
    dctx.strokeStyle = edgeStart === node.id ? "#000" : "#344";
    dctx.lineWidth = edgeStart === node.id ? 3 : 1.5;
    dctx.stroke();
    dctx.fillStyle = "#102030";
    dctx.font = "10px sans-serif";
    dctx.textAlign = "center";
    dctx.fillText(node.roomType.slice(0, 4), node.x, node.y + 26);
  }
}

diagramCanvas.addEventListener("click", (event) => {
  const rect = diagramCanvas.getBoundingClientRect();
  const x = event.clientX - rect.left;
  const y = event.clientY - rect.top;
  const hit = diagram.nodeList().find((n) => Math.hypot(n.x - x, n.y - y) < 16);
  if (!hit) {
    const type = el<HTMLSelectElement>("room-type").value as RoomType;
    diagram.addNode(type, x, y);
    edgeStart = null;
  } else if (edgeStart === null) {
    edgeStart = hit.id;
  } else if (edgeStart !== hit.id) {
    diagram.toggleEdge(edgeStart, hit.id);
    edgeStart = null;
  } else {
    edgeStart = null;
  }
  redrawDiagram();
});

const typeSelect = el<HTMLSelectElement>("room-type");
for (const t of ROOM_TYPES) {
  const option = document.createElement("option");
  option.value = t;
  option.textContent = t;
  typeSelect.appendChild(option);
}

// ----------------------------------------------------------------- steering

const lambdaSlider = el<HTMLInputElement>("lambda");
const lambdaValue = el<HTMLSpanElement>("lambda-value");
lambdaSlider.addEventListener("input", () => {
  session.settings.lambda = Number(lambdaSlider.value);
  lambdaValue.textContent = lambdaSlider.value;
});

function renderGallery(model: GalleryModel, target: HTMLElement): void {
  target.innerHTML = "";
  const badges = document.createElement("div");
  badges.className = "badges";
  for (const badge of model.badges) {
    const span = document.createElement("span");
    span.className = "badge";
    span.textContent = badge;
    badges.appendChild(span);
  }
  target.appendChild(badges);
  const grid = document.createElement("div");
  grid.className = "grid";
  for (const item of model.items) {
    const canvas = document.createElement("canvas");
    canvas.width = 220;
    canvas.height = 220;
    drawPlan(canvas.getContext("2d")!, item.plan, 220, 220);
    grid.appendChild(canvas);
  }
  target.appendChild(grid);
}

el<HTMLButtonElement>("generate").addEventListener("click", async () => {
  try {
    session.settings.n = Number(el<HTMLInputElement>("n-samples").value);
    session.settings.seed = Number(el<HTMLInputElement>("seed").value);
    const request = session.buildRequest(diagram.toGraph(), boundary.normalized());
    setStatus("sampling...");
    const response = await api.sample(request);
    session.record(request, response);
    renderGallery(buildGallery(response), el("gallery"));
    renderHistory();
    setStatus(`received ${response.plans.length} samples`);
  } catch (error) {
    if (error instanceof ApiError) {
      setStatus(error.message, true);
    } else {
      setStatus(String(error), true);
    }
  }
});

function renderHistory(): void {
  const list = el<HTMLUListElement>("history");
  list.innerHTML = "";
  session.entries().forEach((entry, i) => {
    const li = document.createElement("li");
    const label = `#${i} λ=${entry.request.lambda} seed=${entry.request.seed}`;
    const button = document.createElement("button");
    button.textContent = label;
    button.addEventListener("click", () =>
      renderGallery(buildGallery(entry.response), el("gallery")),
    );
    li.appendChild(button);
    list.appendChild(li);
  });
}

// --------------------------------------------------------------------- jobs

const poller = new JobPoller(
  api,
  (job) => setStatus(`job ${job.id}: ${job.status}`),
  (job) => {
    setStatus(
      `job ${job.id} ${job.status}${job.message ? ": " + job.message : ""}`,
      job.status === "failed",
    );
    void refreshCheckpoints();
  },
);
poller.start(1000);

const shotSelect = el<HTMLSelectElement>("shot-preset");
for (const preset of SHOT_PRESETS) {
  const option = document.createElement("option");
  option.value = String(preset);
  option.textContent = `${preset} shots`;
  shotSelect.appendChild(option);
}

el<HTMLButtonElement>("finetune").addEventListener("click", async () => {
  try {
    const checkpoint = el<HTMLSelectElement>("checkpoint").value;
    const dataset = el<HTMLInputElement>("dataset").value;
    const shots = Number(shotSelect.value) as ShotPreset;
    const { id } = await api.submitFinetune(finetuneBody(checkpoint, dataset, shots));
    poller.watch(id);
    setStatus(`fine-tune job ${id} submitted (${shots} shots)`);
  } catch (error) {
    setStatus(String(error), true);
  }
});

async function refreshCheckpoints(): Promise<void> {
  try {
    const checkpoints = await api.checkpoints();
    const select = el<HTMLSelectElement>("checkpoint");
    select.innerHTML = "";
    for (const c of checkpoints) {
      const option = document.createElement("option");
      option.value = c.path;
      option.textContent = `${c.path} (step ${c.step ?? "?"})`;
      select.appendChild(option);
    }
    session.settings.checkpoint = select.value || null;
    select.addEventListener("change", () => {
      session.settings.checkpoint = select.value || null;
    });
  } catch {
    setStatus("service unreachable; controls disabled", true);
  }
}

// ------------------------------------------------------------------- legend

const legendBox = el<HTMLDivElement>("legend");
for (const { type, color } of legend()) {
  const chip = document.createElement("span");
  chip.className = "chip";
  chip.style.background = color;
  chip.textContent = type;
  legendBox.appendChild(chip);
}

void refreshCheckpoints();
redrawBoundary();
redrawDiagram();
