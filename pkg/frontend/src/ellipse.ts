import { EllipseWire } from "./protocol.js";

/** Points per sampled ellipse outline. */
export const ELLIPSE_SAMPLES = 48;

/**
 * Sample the outline in data space: center + cosθ·a₀ + sinθ·a₁ where the
 * rows of `axes` are the principal directions scaled by their semi-axes.
 * Sampling (rather than an <ellipse> element) keeps the outline exact
 * under any affine data→screen map and makes frames easy to interpolate.
 */
export function sampleEllipse(
  ellipse: Pick<EllipseWire, "center" | "axes">,
  samples: number = ELLIPSE_SAMPLES,
): [number, number][] {
  const [cx, cy] = ellipse.center;
  const [a0, a1] = ellipse.axes;
  const out: [number, number][] = [];
  for (let i = 0; i < samples; i++) {
    const t = (2 * Math.PI * i) / samples;
    const c = Math.cos(t);
    const s = Math.sin(t);
    out.push([cx + c * a0[0] + s * a1[0], cy + c * a0[1] + s * a1[1]]);
  }
  return out;
}

/** Closed SVG path through the given screen points. */
export function closedPath(points: ArrayLike<number>): string {
  const n = Math.floor(points.length / 2);
  if (n === 0) return "";
  let d = `M${fmt(points[0])},${fmt(points[1])}`;
  for (let i = 1; i < n; i++) {
    d += `L${fmt(points[2 * i])},${fmt(points[2 * i + 1])}`;
  }
  return d + "Z";
}

function fmt(v: number): string {
  return Number(v.toFixed(2)).toString();
}
