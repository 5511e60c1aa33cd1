/**
 * One interruptible tween: start() cancels whatever was running, so a new
 * state push takes over mid-flight from the currently displayed frame.
 * Purely cosmetic — a duration of 0 applies the final frame synchronously.
 */
export class Animator {
  private handle: number | ReturnType<typeof setTimeout> | null = null;
  private usedRaf = false;

  constructor(
    public durationMs = 400,
    private readonly now: () => number = defaultNow,
  ) {}

  start(onFrame: (t: number) => void, onDone?: () => void): void {
    this.cancel();
    if (this.durationMs <= 0) {
      onFrame(1);
      onDone?.();
      return;
    }
    const t0 = this.now();
    const tick = () => {
      this.handle = null;
      const t = Math.min(1, (this.now() - t0) / this.durationMs);
      onFrame(easeInOut(t));
      if (t >= 1) {
        onDone?.();
        return;
      }
      this.schedule(tick);
    };
    this.schedule(tick);
  }

  cancel(): void {
    if (this.handle === null) return;
    if (this.usedRaf) {
      cancelAnimationFrame(this.handle as number);
    } else {
      clearTimeout(this.handle as ReturnType<typeof setTimeout>);
    }
    this.handle = null;
  }

  private schedule(fn: () => void): void {
    if (typeof requestAnimationFrame === "function") {
      this.usedRaf = true;
      this.handle = requestAnimationFrame(fn);
    } else {
      this.usedRaf = false;
      this.handle = setTimeout(fn, 16);
    }
  }
}

export function easeInOut(t: number): number {
  return t < 0.5 ? 2 * t * t : 1 - (-2 * t + 2) ** 2 / 2;
}

export function lerpInto(
  out: Float64Array,
  from: Float64Array,
  to: Float64Array,
  t: number,
): void {
  for (let i = 0; i < out.length; i++) {
    out[i] = from[i] + (to[i] - from[i]) * t;
  }
}

function defaultNow(): number {
  return typeof performance !== "undefined" ? performance.now() : Date.now();
}
