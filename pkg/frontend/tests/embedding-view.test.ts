// @vitest-environment jsdom
import { describe, expect, it } from "vitest";
import { EmbeddingView } from "../src/views/embedding.js";
import { firePointer, makeStatePayload } from "./helpers.js";

interface GestureRecord {
  type: string;
  payload: { group: number; x?: number; y?: number; factor?: number };
}

function setup() {
  const gestures: GestureRecord[] = [];
  const axes: [number, number][] = [];
  const view = new EmbeddingView(
    {
      sendGesture: (type, payload) => gestures.push({ type, payload }),
      drawAxis: (vx, vy) => axes.push([vx, vy]),
    },
    { animationMs: 0 },
  );
  document.body.appendChild(view.el);
  const payload = makeStatePayload();
  view.update(payload);
  return { view, gestures, axes, payload };
}

describe("rendering", () => {
  it("draws every point, one ellipse group per group, and the gizmo", () => {
    const { view } = setup();
    expect(view.svg.querySelectorAll(".pt")).toHaveLength(8);
    expect(view.svg.querySelectorAll("g.ell")).toHaveLength(2);
    expect(view.svg.querySelectorAll(".ell-center")).toHaveLength(2);
    expect(view.svg.querySelectorAll(".axis-gizmo")).toHaveLength(1);
  });

  it("places circles at the mapped coordinates", () => {
    const { view, payload } = setup();
    const first = view.svg.querySelector(".pt") as SVGCircleElement;
    const [px, py] = view.dataToScreen(...payload.points![0]);
    expect(Number(first.getAttribute("cx"))).toBeCloseTo(px, 1);
    expect(Number(first.getAttribute("cy"))).toBeCloseTo(py, 1);
  });

  it("renders drawn axes as lines", () => {
    const { view } = setup();
    const payload = makeStatePayload({
      drawn_axes: [{ v: [1, 0], loading: [0.5, 0.5, 0.5] }],
    });
    view.update(payload);
    expect(view.svg.querySelectorAll(".drawn-axis")).toHaveLength(1);
  });
});

describe("center drag", () => {
  it("sends gesture_move with the drop point in data coordinates", () => {
    const { view, gestures, payload } = setup();
    const center = view.svg.querySelector('.ell-center[data-group="2"]') as SVGElement;
    const e2 = payload.ellipses![1];
    const from = view.dataToScreen(...e2.center);
    const to = view.dataToScreen(-1.075, 0.025); // onto group 1's center

    firePointer(center, "pointerdown", { x: from[0], y: from[1] });
    firePointer(document, "pointermove", { x: (from[0] + to[0]) / 2, y: (from[1] + to[1]) / 2 });
    firePointer(document, "pointermove", { x: to[0], y: to[1] });
    firePointer(document, "pointerup", { x: to[0], y: to[1] });

    expect(gestures).toHaveLength(1);
    expect(gestures[0].type).toBe("gesture_move");
    expect(gestures[0].payload.group).toBe(2);
    expect(gestures[0].payload.x).toBeCloseTo(-1.075, 3);
    expect(gestures[0].payload.y).toBeCloseTo(0.025, 3);
  });

  it("treats a sub-threshold drag as a click, not a gesture", () => {
    const { view, gestures, payload } = setup();
    const center = view.svg.querySelector('.ell-center[data-group="1"]') as SVGElement;
    const at = view.dataToScreen(...payload.ellipses![0].center);
    firePointer(center, "pointerdown", { x: at[0], y: at[1] });
    firePointer(document, "pointermove", { x: at[0] + 1, y: at[1] });
    firePointer(document, "pointerup", { x: at[0] + 1, y: at[1] });
    expect(gestures).toHaveLength(0);
  });
});

describe("outline drag", () => {
  it("grabbing the outline and doubling the radius sends factor 2", () => {
    const { view, gestures, payload } = setup();
    const outline = view.svg.querySelector('.ell-outline[data-group="1"]') as SVGElement;
    const c = view.dataToScreen(...payload.ellipses![0].center);
    firePointer(outline, "pointerdown", { x: c[0] + 40, y: c[1] });
    firePointer(document, "pointermove", { x: c[0] + 60, y: c[1] });
    firePointer(document, "pointerup", { x: c[0] + 80, y: c[1] });
    expect(gestures).toHaveLength(1);
    expect(gestures[0].type).toBe("gesture_scale");
    expect(gestures[0].payload.group).toBe(1);
    expect(gestures[0].payload.factor).toBeCloseTo(2.0, 6);
  });

  it("returning to the original radius sends nothing", () => {
    const { view, gestures, payload } = setup();
    const outline = view.svg.querySelector('.ell-outline[data-group="1"]') as SVGElement;
    const c = view.dataToScreen(...payload.ellipses![0].center);
    firePointer(outline, "pointerdown", { x: c[0] + 40, y: c[1] });
    firePointer(document, "pointermove", { x: c[0] + 70, y: c[1] });
    firePointer(document, "pointerup", { x: c[0], y: c[1] + 40 });
    expect(gestures).toHaveLength(0); // same radius → factor 1
  });
});

describe("axis drawing", () => {
  it("dragging from the gizmo emits the vector in data units", () => {
    const { view, axes } = setup();
    const gizmo = view.svg.querySelector(".axis-gizmo") as SVGElement;
    const o = view.dataToScreen(0, 0);
    firePointer(gizmo, "pointerdown", { x: o[0], y: o[1] });
    firePointer(document, "pointermove", { x: o[0] + 50, y: o[1] - 30 });
    firePointer(document, "pointerup", { x: o[0] + 50, y: o[1] - 30 });
    expect(axes).toHaveLength(1);
    const [vx, vy] = axes[0];
    // Screen dx=+50 → data +50/k; screen dy=−30 → data +30/k (y flips).
    expect(vy / vx).toBeCloseTo(30 / 50, 6);
    expect(vx).toBeGreaterThan(0);
  });

  it("ignores a zero-length draw", () => {
    const { view, axes } = setup();
    const gizmo = view.svg.querySelector(".axis-gizmo") as SVGElement;
    const o = view.dataToScreen(0, 0);
    firePointer(gizmo, "pointerdown", { x: o[0], y: o[1] });
    firePointer(document, "pointerup", { x: o[0], y: o[1] });
    expect(axes).toHaveLength(0);
  });
});

describe("attribute size encoding", () => {
  it("maps the hovered attribute to radii in [2, 8]", () => {
    const { view } = setup();
    view.setSizeAttribute(0);
    const radii = [...view.svg.querySelectorAll(".pt")].map((c) =>
      Number((c as SVGCircleElement).getAttribute("r")),
    );
    expect(Math.min(...radii)).toBeGreaterThanOrEqual(2);
    expect(Math.max(...radii)).toBeLessThanOrEqual(8);
    expect(new Set(radii).size).toBeGreaterThan(1); // actually encodes
  });

  it("restores uniform radii when the hover ends", () => {
    const { view } = setup();
    view.setSizeAttribute(0);
    view.setSizeAttribute(null);
    const radii = [...view.svg.querySelectorAll(".pt")].map((c) =>
      Number((c as SVGCircleElement).getAttribute("r")),
    );
    expect(new Set(radii)).toEqual(new Set([3.5]));
  });
});
