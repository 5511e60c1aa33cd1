import { StatePayload } from "../protocol.js";

/**
 * Component view: one signed bar chart of attribute loadings per embedding
 * axis (plus one per drawn axis). Hovering an attribute row asks the
 * embedding view to encode that attribute as point size; the sort toggle
 * orders rows by |loading| within each chart.
 */
export class ComponentsView {
  readonly el = document.createElement("div");

  private attributes: string[] = [];
  private charts: { title: string; loadings: number[] }[] = [];
  private sorted = false;

  constructor(private readonly onHover: (attr: number | null) => void) {
    this.el.className = "components-view";
  }

  update(payload: StatePayload): void {
    if (!payload.loadings) return;
    this.attributes = payload.loadings.attributes;
    this.charts = payload.loadings.axes.map((loadings, a) => ({
      title: `Axis ${a + 1}`,
      loadings,
    }));
    (payload.drawn_axes ?? []).forEach((axis, i) => {
      this.charts.push({ title: `Drawn ${i + 1}`, loadings: axis.loading });
    });
    this.render();
  }

  private render(): void {
    this.el.textContent = "";

    const head = document.createElement("div");
    head.className = "components-head";
    const title = document.createElement("h3");
    title.textContent = "Components";
    head.appendChild(title);

    const toggle = document.createElement("button");
    toggle.className = "sort-toggle";
    toggle.textContent = this.sorted ? "original order" : "sort by |loading|";
    toggle.addEventListener("click", () => {
      this.sorted = !this.sorted;
      this.render();
    });
    head.appendChild(toggle);
    this.el.appendChild(head);

    for (const chart of this.charts) {
      this.el.appendChild(this.buildChart(chart));
    }
  }

  private buildChart(chart: { title: string; loadings: number[] }): HTMLElement {
    const box = document.createElement("div");
    box.className = "axis-chart";

    const sumSq = chart.loadings.reduce((s, v) => s + v * v, 0);
    const h = document.createElement("h4");
    h.textContent = chart.title;
    h.title = `Σ loading² = ${sumSq.toFixed(3)}`;
    box.appendChild(h);

    const maxAbs = Math.max(...chart.loadings.map(Math.abs), 1e-12);
    const order = this.attributes.map((_, i) => i);
    if (this.sorted) {
      order.sort((a, b) => Math.abs(chart.loadings[b]) - Math.abs(chart.loadings[a]));
    }

    for (const i of order) {
      const v = chart.loadings[i];
      const row = document.createElement("div");
      row.className = "ld-row";
      row.dataset.attr = String(i);

      const name = document.createElement("span");
      name.className = "ld-name";
      name.textContent = this.attributes[i];
      row.appendChild(name);

      // Signed bar: grows right from the midline for positive loadings,
      // left for negative ones.
      const wrap = document.createElement("span");
      wrap.className = "ld-bar-wrap";
      const bar = document.createElement("span");
      bar.className = `ld-bar ${v >= 0 ? "pos" : "neg"}`;
      const half = (Math.abs(v) / maxAbs) * 50;
      bar.style.width = `${half.toFixed(1)}%`;
      bar.style.marginLeft = v >= 0 ? "50%" : `${(50 - half).toFixed(1)}%`;
      wrap.appendChild(bar);
      row.appendChild(wrap);

      const val = document.createElement("span");
      val.className = "ld-val";
      val.textContent = v.toFixed(3);
      row.appendChild(val);

      row.addEventListener("pointerenter", () => this.onHover(i));
      row.addEventListener("pointerleave", () => this.onHover(null));
      box.appendChild(row);
    }
    return box;
  }
}
