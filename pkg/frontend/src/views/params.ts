import { ParamsWire, StatePayload } from "../protocol.js";
import { clamp, groupColor } from "../scales.js";

export interface ParamsDelegate {
  queueParams(partial: Partial<ParamsWire>): void;
  flushParams(): void;
}

const WEIGHT_KINDS = ["w_tg", "w_bg", "w_bw"] as const;
type WeightKind = (typeof WEIGHT_KINDS)[number];

const KIND_LABELS: Record<WeightKind, string> = {
  w_tg: "target",
  w_bg: "background",
  w_bw: "between",
};

/** Weight bars snap to this step. */
export const WEIGHT_STEP = 0.01;
/** α slider range, in log10 units, stepped at 0.01. */
export const ALPHA_LOG_RANGE: [number, number] = [-2, 2];

/** Fallback track width when layout hasn't run (zero-size rects). */
const TRACK_FALLBACK_PX = 160;

/**
 * Parameter view: one row of draggable weight bars per group plus the
 * contrast slider. Bars render only from server pushes; a drag shows a
 * local ghost and the coalesced set_params channel carries the edits.
 */
export class ParamsView {
  readonly el = document.createElement("div");

  private params: ParamsWire | null = null;
  private groupNames: string[] = [];
  private dragging = false;
  private deferred: StatePayload | null = null;
  /** Unacknowledged edits, overlaid when composing the next message so a
   * second bar drag doesn't clobber one still in flight. */
  private pendingEdits: Partial<Record<WeightKind, number[]>> = {};

  constructor(private readonly delegate: ParamsDelegate) {
    this.el.className = "params-view";
  }

  update(payload: StatePayload): void {
    if (!payload.params) return;
    if (this.dragging) {
      this.deferred = payload;
      return;
    }
    this.params = payload.params;
    this.groupNames = payload.group_names ?? [];
    this.pendingEdits = {};
    this.render();
  }

  private render(): void {
    const p = this.params;
    this.el.textContent = "";
    if (!p) return;

    const title = document.createElement("h3");
    title.textContent = "Parameters";
    this.el.appendChild(title);

    p.w_tg.forEach((_, j) => {
      const row = document.createElement("div");
      row.className = "param-group";
      const name = document.createElement("div");
      name.className = "param-group-name";
      name.textContent = this.groupNames[j] ?? `group ${j + 1}`;
      name.style.color = groupColor(j + 1);
      row.appendChild(name);
      for (const kind of WEIGHT_KINDS) {
        row.appendChild(this.buildBar(kind, j, p[kind][j]));
      }
      this.el.appendChild(row);
    });

    this.el.appendChild(this.buildAlphaRow(p.alpha));
  }

  private buildBar(kind: WeightKind, group: number, value: number): HTMLElement {
    const wrap = document.createElement("div");
    wrap.className = "wbar-row";

    const label = document.createElement("span");
    label.className = "wbar-label";
    label.textContent = KIND_LABELS[kind];
    wrap.appendChild(label);

    const track = document.createElement("div");
    track.className = "wbar";
    track.dataset.kind = kind;
    track.dataset.group = String(group + 1);
    const fill = document.createElement("div");
    fill.className = "wbar-fill";
    fill.style.width = `${value * 100}%`;
    track.appendChild(fill);
    wrap.appendChild(track);

    const readout = document.createElement("span");
    readout.className = "wbar-val";
    readout.textContent = value.toFixed(2);
    wrap.appendChild(readout);

    track.addEventListener("pointerdown", (ev) => {
      ev.preventDefault();
      this.dragging = true;
      const startValue = value;
      let lastQueued = value;
      const apply = (e: { clientX: number }) => {
        const rect = track.getBoundingClientRect();
        const width = rect.width || TRACK_FALLBACK_PX;
        const frac = clamp((e.clientX - rect.left) / width, 0, 1);
        const snapped = Math.round(frac / WEIGHT_STEP) * WEIGHT_STEP;
        fill.style.width = `${snapped * 100}%`;
        readout.textContent = snapped.toFixed(2);
        if (snapped !== lastQueued) {
          lastQueued = snapped;
          this.delegate.queueParams({ [kind]: this.composeWeights(kind, group, snapped) });
        }
        return snapped;
      };
      apply(ev);
      const move = (e: PointerEvent | MouseEvent) => apply(e);
      const up = (e: PointerEvent | MouseEvent) => {
        document.removeEventListener("pointermove", move);
        document.removeEventListener("pointerup", up);
        const final = apply(e);
        this.dragging = false;
        if (final !== startValue) this.delegate.flushParams();
        if (this.deferred) {
          const payload = this.deferred;
          this.deferred = null;
          this.update(payload);
        }
      };
      document.addEventListener("pointermove", move);
      document.addEventListener("pointerup", up);
    });

    return wrap;
  }

  /** Full weight array for one kind with one slot replaced, overlaying any
   * edits already queued but not yet confirmed by a push. */
  private composeWeights(kind: WeightKind, group: number, value: number): number[] {
    const base = this.pendingEdits[kind] ?? [...(this.params as ParamsWire)[kind]];
    base[group] = Number(value.toFixed(2));
    this.pendingEdits[kind] = base;
    return [...base];
  }

  private buildAlphaRow(alpha: number | null): HTMLElement {
    const row = document.createElement("div");
    row.className = "alpha-row";

    const label = document.createElement("label");
    label.textContent = "α";
    row.appendChild(label);

    const slider = document.createElement("input");
    slider.type = "range";
    slider.className = "alpha-slider";
    slider.min = String(ALPHA_LOG_RANGE[0]);
    slider.max = String(ALPHA_LOG_RANGE[1]);
    slider.step = "0.01";
    const readout = document.createElement("span");
    readout.className = "alpha-val";

    if (alpha === null) {
      slider.disabled = true;
      readout.textContent = "–";
    } else {
      const pos = clamp(Math.log10(Math.max(alpha, 1e-12)), ...ALPHA_LOG_RANGE);
      slider.value = pos.toFixed(2);
      readout.textContent = alpha.toPrecision(4);
      slider.addEventListener("input", () => {
        const a = alphaFromSlider(slider.value);
        readout.textContent = a.toPrecision(4);
        this.delegate.queueParams({ alpha: a });
      });
      slider.addEventListener("change", () => this.delegate.flushParams());
    }

    row.appendChild(slider);
    row.appendChild(readout);
    return row;
  }
}

export function alphaFromSlider(sliderValue: string): number {
  return Number((10 ** Number(sliderValue)).toPrecision(6));
}
