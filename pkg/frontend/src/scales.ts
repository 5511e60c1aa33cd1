export function clamp(x: number, lo: number, hi: number): number {
  return x < lo ? lo : x > hi ? hi : x;
}

export function extent(values: Iterable<number>): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo > hi) return [0, 1];
  return [lo, hi];
}

/**
 * Aspect-preserving map from data space to a pixel viewport: one shared
 * pixels-per-unit factor for both dimensions (so screen distances are
 * proportional to embedding distances) with the data box centered and the
 * y axis flipped to screen orientation.
 */
export interface PlaneMapping {
  toScreen(x: number, y: number): [number, number];
  toData(px: number, py: number): [number, number];
  readonly pxPerUnit: number;
}

export function planeMapping(
  xExtent: [number, number],
  yExtent: [number, number],
  width: number,
  height: number,
  pad: number,
): PlaneMapping {
  const spanX = Math.max(xExtent[1] - xExtent[0], 1e-12);
  const spanY = Math.max(yExtent[1] - yExtent[0], 1e-12);
  const k = Math.min((width - 2 * pad) / spanX, (height - 2 * pad) / spanY);
  const midX = (xExtent[0] + xExtent[1]) / 2;
  const midY = (yExtent[0] + yExtent[1]) / 2;
  const cx = width / 2;
  const cy = height / 2;
  return {
    pxPerUnit: k,
    toScreen(x, y) {
      return [cx + k * (x - midX), cy - k * (y - midY)];
    },
    toData(px, py) {
      return [midX + (px - cx) / k, midY - (py - cy) / k];
    },
  };
}

/** Group colors; index with (group - 1) % palette.length. */
export const PALETTE = [
  "#4e79a7",
  "#f28e2b",
  "#59a14f",
  "#e15759",
  "#b07aa1",
  "#76b7b2",
  "#edc948",
  "#ff9da7",
  "#9c755f",
  "#bab0ac",
];

export function groupColor(group: number): string {
  return PALETTE[(group - 1) % PALETTE.length];
}
