import { StatePayload, WebSocketLike } from "../src/protocol.js";

type Listener = (event: { data?: unknown }) => void;

/** In-memory stand-in for a WebSocket: records sends, replays frames. */
export class FakeSocket implements WebSocketLike {
  sent: { type: string; seq: number | null; payload?: Record<string, unknown> }[] = [];
  closed = false;

  private listeners = new Map<string, Listener[]>();

  send(data: string): void {
    this.sent.push(JSON.parse(data));
  }

  close(): void {
    this.closed = true;
  }

  addEventListener(type: string, listener: Listener): void {
    const list = this.listeners.get(type) ?? [];
    list.push(listener);
    this.listeners.set(type, list);
  }

  emit(type: string, event: { data?: unknown } = {}): void {
    for (const fn of this.listeners.get(type) ?? []) fn(event);
  }

  serverSend(message: object): void {
    this.emit("message", { data: JSON.stringify(message) });
  }

  sentOfType(type: string) {
    return this.sent.filter((m) => m.type === type);
  }
}

/** A small two-group state payload in the server's wire shape. */
export function makeStatePayload(overrides: Partial<StatePayload> = {}): StatePayload {
  const base: StatePayload = {
    ready: true,
    rev: 1,
    points: [
      [-1.4, -0.2],
      [-1.1, 0.3],
      [-0.8, -0.1],
      [-1.0, 0.1],
      [0.9, 0.4],
      [1.2, 0.7],
      [1.0, 0.3],
      [1.3, 0.6],
    ],
    labels: [1, 1, 1, 1, 2, 2, 2, 2],
    group_names: ["a", "b"],
    ellipses: [
      {
        group: 1,
        center: [-1.075, 0.025],
        axes: [
          [0.5, 0.0],
          [0.0, 0.25],
        ],
        area: Math.PI * 0.5 * 0.25,
        confidence: 0.5,
      },
      {
        group: 2,
        center: [1.1, 0.5],
        axes: [
          [0.4, 0.1],
          [-0.05, 0.2],
        ],
        area: 0.26,
        confidence: 0.5,
      },
    ],
    loadings: {
      attributes: ["alcohol", "malic_acid", "ash"],
      axes: [
        [0.8, -0.6, 0.0],
        [0.6, 0.8, 0.0],
      ],
    },
    drawn_axes: [],
    params: {
      w_tg: [0.0, 0.0],
      w_bg: [1.0, 1.0],
      w_bw: [1.0, 1.0],
      alpha: 1.0,
      gamma0: 0.0,
      gamma1: 0.0,
      dprime: 2,
    },
    objective: 3.2,
    converged: true,
    warning: null,
    cost: null,
    snapshots: [],
    busy: false,
  };
  return { ...base, ...overrides };
}

/** Dispatch a pointer-named mouse event (jsdom lacks PointerEvent). */
export function firePointer(
  target: EventTarget,
  type: "pointerdown" | "pointermove" | "pointerup" | "pointerenter" | "pointerleave",
  at: { x: number; y: number } = { x: 0, y: 0 },
): void {
  const doc =
    target instanceof Document
      ? target
      : ((target as Node).ownerDocument ?? document);
  const win = doc.defaultView ?? window;
  const ev = new win.MouseEvent(type, {
    bubbles: true,
    cancelable: true,
    clientX: at.x,
    clientY: at.y,
  });
  target.dispatchEvent(ev);
}
