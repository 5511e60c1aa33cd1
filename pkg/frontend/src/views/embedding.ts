import { Animator, lerpInto } from "../animate.js";
import { ELLIPSE_SAMPLES, closedPath, sampleEllipse } from "../ellipse.js";
import { EllipseWire, StatePayload } from "../protocol.js";
import { PlaneMapping, clamp, extent, groupColor, planeMapping } from "../scales.js";

export interface EmbeddingDelegate {
  sendGesture(
    type: "gesture_move" | "gesture_scale",
    payload: { group: number; x?: number; y?: number; factor?: number },
  ): void;
  drawAxis(vx: number, vy: number): void;
}

export interface EmbeddingOptions {
  width?: number;
  height?: number;
  animationMs?: number;
  now?: () => number;
}

/** Drags shorter than this (screen px) are treated as accidental clicks. */
const DRAG_THRESHOLD_PX = 3;
/** Scale factors within this of 1 are identity gestures. */
const SCALE_EPSILON = 0.01;
const POINT_RADIUS = 3.5;
const SIZE_RANGE: [number, number] = [2, 8];

const SVG_NS = "http://www.w3.org/2000/svg";

interface Frame {
  pts: Float64Array; // n * 2 screen coords
  ell: Float64Array; // c * ELLIPSE_SAMPLES * 2
  centers: Float64Array; // c * 2
  axes: Float64Array; // k * 4 (x1, y1, x2, y2)
}

/**
 * Embedding view: scatterplot with group confidence ellipses. The ellipse
 * center is the handle for merge/separate gestures, the outline for
 * uniform scaling, and the origin gizmo starts an axis drawing. All
 * geometry renders from server pushes; drags only show a local ghost.
 */
export class EmbeddingView {
  readonly el = document.createElement("div");
  readonly svg: SVGSVGElement;

  readonly width: number;
  readonly height: number;
  private readonly pad = 30;
  private readonly animator: Animator;

  private mapping: PlaneMapping | null = null;
  private payload: StatePayload | null = null;
  private sizeAttr: number | null = null;

  private displayed: Frame | null = null;
  private scratch: Frame | null = null;
  private target: Frame | null = null;

  private circles: SVGCircleElement[] = [];
  private ellipseGroups: SVGGElement[] = [];
  private axisLines: SVGLineElement[] = [];
  private gizmo: SVGCircleElement | null = null;

  constructor(
    private readonly delegate: EmbeddingDelegate,
    options: EmbeddingOptions = {},
  ) {
    this.width = options.width ?? 520;
    this.height = options.height ?? 420;
    this.animator = new Animator(options.animationMs ?? 400, options.now);
    this.el.className = "embedding-view";
    this.svg = document.createElementNS(SVG_NS, "svg");
    this.svg.setAttribute("width", String(this.width));
    this.svg.setAttribute("height", String(this.height));
    this.svg.setAttribute("class", "embedding-svg");
    this.el.appendChild(this.svg);
  }

  update(payload: StatePayload): void {
    if (!payload.ready || !payload.points) return;
    this.payload = payload;
    this.mapping = this.buildMapping(payload);
    const target = this.buildFrame(payload);
    const shapesMatch =
      this.displayed !== null &&
      this.displayed.pts.length === target.pts.length &&
      this.displayed.ell.length === target.ell.length &&
      this.displayed.axes.length === target.axes.length;

    this.ensureElements(payload);
    if (!shapesMatch) {
      this.animator.cancel();
      this.displayed = target;
      this.drawFrame(target);
      return;
    }
    // Tween from whatever is currently on screen; a mid-flight push simply
    // restarts from there (interruptible, purely cosmetic).
    const from = cloneFrame(this.displayed as Frame);
    this.target = target;
    this.scratch = cloneFrame(target);
    this.animator.start(
      (t) => {
        const buf = this.scratch as Frame;
        lerpInto(buf.pts, from.pts, target.pts, t);
        lerpInto(buf.ell, from.ell, target.ell, t);
        lerpInto(buf.centers, from.centers, target.centers, t);
        lerpInto(buf.axes, from.axes, target.axes, t);
        this.displayed = buf;
        this.drawFrame(buf);
      },
      () => {
        this.displayed = target;
        this.drawFrame(target);
      },
    );
  }

  dataToScreen(x: number, y: number): [number, number] {
    if (!this.mapping) throw new Error("no state rendered yet");
    return this.mapping.toScreen(x, y);
  }

  screenToData(px: number, py: number): [number, number] {
    if (!this.mapping) throw new Error("no state rendered yet");
    return this.mapping.toData(px, py);
  }

  /** Encode one attribute (by index) as point size, or null for uniform.
   * The wire carries embeddings and loadings but not the data matrix, so
   * sizes encode the reconstruction Σ_axis point·loading — exact for
   * attributes inside the projection span. */
  setSizeAttribute(attr: number | null): void {
    this.sizeAttr = attr;
    this.applyRadii();
  }

  private buildMapping(payload: StatePayload): PlaneMapping {
    const xs: number[] = [];
    const ys: number[] = [];
    for (const [x, y] of payload.points ?? []) {
      xs.push(x);
      ys.push(y);
    }
    for (const e of payload.ellipses ?? []) {
      for (const [x, y] of sampleEllipse(e, 16)) {
        xs.push(x);
        ys.push(y);
      }
    }
    return planeMapping(extent(xs), extent(ys), this.width, this.height, this.pad);
  }

  private buildFrame(payload: StatePayload): Frame {
    const m = this.mapping as PlaneMapping;
    const points = payload.points ?? [];
    const pts = new Float64Array(points.length * 2);
    points.forEach(([x, y], i) => {
      const [px, py] = m.toScreen(x, y ?? 0);
      pts[2 * i] = px;
      pts[2 * i + 1] = py;
    });

    const ellipses = payload.ellipses ?? [];
    const ell = new Float64Array(ellipses.length * ELLIPSE_SAMPLES * 2);
    const centers = new Float64Array(ellipses.length * 2);
    ellipses.forEach((e, j) => {
      sampleEllipse(e).forEach(([x, y], i) => {
        const [px, py] = m.toScreen(x, y);
        ell[(j * ELLIPSE_SAMPLES + i) * 2] = px;
        ell[(j * ELLIPSE_SAMPLES + i) * 2 + 1] = py;
      });
      const [cx, cy] = m.toScreen(e.center[0], e.center[1]);
      centers[2 * j] = cx;
      centers[2 * j + 1] = cy;
    });

    const drawn = payload.drawn_axes ?? [];
    const axes = new Float64Array(drawn.length * 4);
    const span = this.axisDisplayLength(payload);
    drawn.forEach((a, i) => {
      const [x1, y1] = m.toScreen(0, 0);
      const [x2, y2] = m.toScreen(a.v[0] * span, a.v[1] * span);
      axes[4 * i] = x1;
      axes[4 * i + 1] = y1;
      axes[4 * i + 2] = x2;
      axes[4 * i + 3] = y2;
    });

    return { pts, ell, centers, axes };
  }

  private axisDisplayLength(payload: StatePayload): number {
    const xs = (payload.points ?? []).map((p) => p[0]);
    const ys = (payload.points ?? []).map((p) => p[1] ?? 0);
    const [x0, x1] = extent(xs);
    const [y0, y1] = extent(ys);
    return Math.max(x1 - x0, y1 - y0, 1e-12) * 0.3;
  }

  /** (Re)create DOM elements when counts change; attributes that vary per
   * frame are set in drawFrame. */
  private ensureElements(payload: StatePayload): void {
    const n = (payload.points ?? []).length;
    const groups = payload.ellipses ?? [];
    const nAxes = (payload.drawn_axes ?? []).length;

    if (this.circles.length !== n) {
      for (const c of this.circles) c.remove();
      this.circles = [];
      for (let i = 0; i < n; i++) {
        const c = document.createElementNS(SVG_NS, "circle");
        c.setAttribute("class", "pt");
        c.setAttribute("r", String(POINT_RADIUS));
        this.svg.appendChild(c);
        this.circles.push(c);
      }
    }
    const labels = payload.labels ?? [];
    this.circles.forEach((c, i) => {
      c.setAttribute("fill", groupColor(labels[i] ?? 1));
    });
    this.applyRadii();

    if (this.ellipseGroups.length !== groups.length) {
      for (const g of this.ellipseGroups) g.remove();
      this.ellipseGroups = [];
      for (const e of groups) {
        this.ellipseGroups.push(this.buildEllipseGroup(e));
      }
    }

    if (this.axisLines.length !== nAxes) {
      for (const l of this.axisLines) l.remove();
      this.axisLines = [];
      for (let i = 0; i < nAxes; i++) {
        const l = document.createElementNS(SVG_NS, "line");
        l.setAttribute("class", "drawn-axis");
        l.dataset.axis = String(i + 1);
        this.svg.appendChild(l);
        this.axisLines.push(l);
      }
    }

    if (!this.gizmo) {
      const g = document.createElementNS(SVG_NS, "circle");
      g.setAttribute("class", "axis-gizmo");
      g.setAttribute("r", "6");
      this.svg.appendChild(g);
      this.gizmo = g;
      this.attachGizmoDrag(g);
    }
  }

  private buildEllipseGroup(e: EllipseWire): SVGGElement {
    const g = document.createElementNS(SVG_NS, "g");
    g.setAttribute("class", "ell");
    g.dataset.group = String(e.group);
    const color = groupColor(e.group);

    const outline = document.createElementNS(SVG_NS, "path");
    outline.setAttribute("class", "ell-outline");
    outline.dataset.group = String(e.group);
    outline.setAttribute("fill", color);
    outline.setAttribute("fill-opacity", "0.07");
    outline.setAttribute("stroke", color);

    // Wide transparent twin of the outline so the stroke is easy to grab.
    const hit = document.createElementNS(SVG_NS, "path");
    hit.setAttribute("class", "ell-hit");
    hit.dataset.group = String(e.group);
    hit.setAttribute("fill", "none");
    hit.setAttribute("stroke", "transparent");
    hit.setAttribute("stroke-width", "12");

    const center = document.createElementNS(SVG_NS, "circle");
    center.setAttribute("class", "ell-center");
    center.dataset.group = String(e.group);
    center.setAttribute("r", "5");
    center.setAttribute("fill", color);

    g.appendChild(outline);
    g.appendChild(hit);
    g.appendChild(center);
    this.svg.appendChild(g);

    this.attachCenterDrag(center, g, e.group);
    for (const grabber of [outline, hit]) {
      this.attachScaleDrag(grabber, g, e.group);
    }
    return g;
  }

  private drawFrame(frame: Frame): void {
    this.circles.forEach((c, i) => {
      c.setAttribute("cx", frame.pts[2 * i].toFixed(2));
      c.setAttribute("cy", frame.pts[2 * i + 1].toFixed(2));
    });
    this.ellipseGroups.forEach((g, j) => {
      const d = closedPath(
        frame.ell.subarray(j * ELLIPSE_SAMPLES * 2, (j + 1) * ELLIPSE_SAMPLES * 2),
      );
      (g.querySelector(".ell-outline") as SVGPathElement).setAttribute("d", d);
      (g.querySelector(".ell-hit") as SVGPathElement).setAttribute("d", d);
      const center = g.querySelector(".ell-center") as SVGCircleElement;
      center.setAttribute("cx", frame.centers[2 * j].toFixed(2));
      center.setAttribute("cy", frame.centers[2 * j + 1].toFixed(2));
    });
    this.axisLines.forEach((l, i) => {
      l.setAttribute("x1", frame.axes[4 * i].toFixed(2));
      l.setAttribute("y1", frame.axes[4 * i + 1].toFixed(2));
      l.setAttribute("x2", frame.axes[4 * i + 2].toFixed(2));
      l.setAttribute("y2", frame.axes[4 * i + 3].toFixed(2));
    });
    if (this.gizmo && this.mapping) {
      const [gx, gy] = this.mapping.toScreen(0, 0);
      this.gizmo.setAttribute("cx", gx.toFixed(2));
      this.gizmo.setAttribute("cy", gy.toFixed(2));
    }
  }

  private applyRadii(): void {
    const payload = this.payload;
    if (!payload || !payload.points) return;
    if (this.sizeAttr === null || !payload.loadings) {
      for (const c of this.circles) c.setAttribute("r", String(POINT_RADIUS));
      return;
    }
    const attr = this.sizeAttr;
    const axes = payload.loadings.axes;
    const recon = payload.points.map((p) => {
      let v = 0;
      for (let a = 0; a < axes.length; a++) v += (p[a] ?? 0) * axes[a][attr];
      return v;
    });
    const [lo, hi] = extent(recon);
    const span = Math.max(hi - lo, 1e-12);
    this.circles.forEach((c, i) => {
      const t = (recon[i] - lo) / span;
      c.setAttribute("r", (SIZE_RANGE[0] + t * (SIZE_RANGE[1] - SIZE_RANGE[0])).toFixed(2));
    });
  }

  // -- interactions --------------------------------------------------------

  private toLocal(ev: { clientX: number; clientY: number }): [number, number] {
    const rect = this.svg.getBoundingClientRect();
    return [ev.clientX - rect.left, ev.clientY - rect.top];
  }

  private attachCenterDrag(handle: SVGElement, group: SVGGElement, groupId: number): void {
    handle.addEventListener("pointerdown", (ev) => {
      const down = ev as PointerEvent;
      down.preventDefault?.();
      down.stopPropagation?.();
      const start = this.toLocal(down);
      let last = start;
      const move = (e: Event) => {
        last = this.toLocal(e as PointerEvent);
        group.setAttribute(
          "transform",
          `translate(${(last[0] - start[0]).toFixed(2)},${(last[1] - start[1]).toFixed(2)})`,
        );
      };
      const up = (e: Event) => {
        document.removeEventListener("pointermove", move);
        document.removeEventListener("pointerup", up);
        last = this.toLocal(e as PointerEvent);
        group.removeAttribute("transform");
        const dx = last[0] - start[0];
        const dy = last[1] - start[1];
        if (Math.hypot(dx, dy) < DRAG_THRESHOLD_PX || !this.mapping) return;
        // New center = old center shifted by the drag, in data coords.
        const j = this.ellipseIndex(groupId);
        const frame = this.displayed as Frame;
        const cx = frame.centers[2 * j] + dx;
        const cy = frame.centers[2 * j + 1] + dy;
        const [x, y] = this.mapping.toData(cx, cy);
        this.delegate.sendGesture("gesture_move", { group: groupId, x, y });
      };
      document.addEventListener("pointermove", move);
      document.addEventListener("pointerup", up);
    });
  }

  private attachScaleDrag(handle: SVGElement, group: SVGGElement, groupId: number): void {
    handle.addEventListener("pointerdown", (ev) => {
      const down = ev as PointerEvent;
      down.preventDefault?.();
      const j = this.ellipseIndex(groupId);
      const frame = this.displayed as Frame | null;
      if (!frame) return;
      const cx = frame.centers[2 * j];
      const cy = frame.centers[2 * j + 1];
      const start = this.toLocal(down);
      const r0 = Math.hypot(start[0] - cx, start[1] - cy);
      if (r0 < 1e-6) return;
      let factor = 1;
      const move = (e: Event) => {
        const p = this.toLocal(e as PointerEvent);
        factor = Math.hypot(p[0] - cx, p[1] - cy) / r0;
        group.setAttribute(
          "transform",
          `translate(${cx.toFixed(2)},${cy.toFixed(2)}) scale(${factor.toFixed(4)}) ` +
            `translate(${(-cx).toFixed(2)},${(-cy).toFixed(2)})`,
        );
      };
      const up = (e: Event) => {
        document.removeEventListener("pointermove", move);
        document.removeEventListener("pointerup", up);
        const p = this.toLocal(e as PointerEvent);
        factor = Math.hypot(p[0] - cx, p[1] - cy) / r0;
        group.removeAttribute("transform");
        if (Math.abs(factor - 1) <= SCALE_EPSILON) return;
        this.delegate.sendGesture("gesture_scale", { group: groupId, factor });
      };
      document.addEventListener("pointermove", move);
      document.addEventListener("pointerup", up);
    });
  }

  private attachGizmoDrag(gizmo: SVGElement): void {
    gizmo.addEventListener("pointerdown", (ev) => {
      const down = ev as PointerEvent;
      down.preventDefault?.();
      const start = this.toLocal(down);
      const line = document.createElementNS(SVG_NS, "line");
      line.setAttribute("class", "axis-ghost");
      line.setAttribute("x1", String(start[0]));
      line.setAttribute("y1", String(start[1]));
      this.svg.appendChild(line);
      const move = (e: Event) => {
        const p = this.toLocal(e as PointerEvent);
        line.setAttribute("x2", String(p[0]));
        line.setAttribute("y2", String(p[1]));
      };
      const up = (e: Event) => {
        document.removeEventListener("pointermove", move);
        document.removeEventListener("pointerup", up);
        line.remove();
        const p = this.toLocal(e as PointerEvent);
        const dx = p[0] - start[0];
        const dy = p[1] - start[1];
        if (Math.hypot(dx, dy) < DRAG_THRESHOLD_PX || !this.mapping) return;
        const a = this.mapping.toData(start[0], start[1]);
        const b = this.mapping.toData(p[0], p[1]);
        this.delegate.drawAxis(b[0] - a[0], b[1] - a[1]);
      };
      document.addEventListener("pointermove", move);
      document.addEventListener("pointerup", up);
    });
  }

  private ellipseIndex(groupId: number): number {
    const ellipses = this.payload?.ellipses ?? [];
    const j = ellipses.findIndex((e) => e.group === groupId);
    return j >= 0 ? j : clamp(groupId - 1, 0, Math.max(ellipses.length - 1, 0));
  }
}

function cloneFrame(f: Frame): Frame {
  return {
    pts: new Float64Array(f.pts),
    ell: new Float64Array(f.ell),
    centers: new Float64Array(f.centers),
    axes: new Float64Array(f.axes),
  };
}
