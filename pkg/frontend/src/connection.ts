import {
  PROTOCOL_VERSION,
  ParamsWire,
  ProgressPayload,
  ServerError,
  StatePayload,
  WebSocketLike,
} from "./protocol.js";

export interface ConnectionEvents {
  onState(payload: StatePayload, seq: number | null): void;
  onProgress?(payload: ProgressPayload): void;
  onServerError?(error: ServerError): void;
  onOpen?(): void;
  onClose?(): void;
  onProtocolMismatch?(got: unknown): void;
}

/** Minimum spacing between coalesced set_params sends (≤ 10 messages/s). */
export const PARAMS_MIN_INTERVAL_MS = 100;

/**
 * Client side of the steering protocol: seq allocation, stale-push
 * discarding, the coalesced parameter channel, and cancel-before-gesture
 * when an optimization is in flight.
 */
export class Connection {
  /** Latest known busy flag (from pushes, or optimistic after a gesture). */
  busy = false;

  private seqCounter = 0;
  private lastRev = Number.NEGATIVE_INFINITY;
  private pendingParams: Partial<ParamsWire> | null = null;
  private paramsTimer: ReturnType<typeof setTimeout> | null = null;
  private lastParamsSendAt = Number.NEGATIVE_INFINITY;

  constructor(
    private readonly ws: WebSocketLike,
    private readonly events: ConnectionEvents,
    private readonly now: () => number = () => Date.now(),
  ) {
    ws.addEventListener("message", (ev) => this.handleMessage(String(ev.data)));
    ws.addEventListener("open", () => this.events.onOpen?.());
    ws.addEventListener("close", () => this.events.onClose?.());
    ws.addEventListener("error", () => this.events.onClose?.());
  }

  send(type: string, payload: object): number {
    const seq = ++this.seqCounter;
    this.ws.send(JSON.stringify({ type, seq, payload }));
    return seq;
  }

  /**
   * Queue a partial parameter update. Rapid calls are merged and sent at
   * most once per PARAMS_MIN_INTERVAL_MS; call flushParams() at drag end.
   */
  queueParams(partial: Partial<ParamsWire>): void {
    this.pendingParams = { ...this.pendingParams, ...partial };
    if (this.paramsTimer !== null) return; // merged into the scheduled send
    const wait = Math.max(
      PARAMS_MIN_INTERVAL_MS,
      this.lastParamsSendAt + PARAMS_MIN_INTERVAL_MS - this.now(),
    );
    this.paramsTimer = setTimeout(() => this.firePendingParams(), wait);
  }

  /** Send any pending parameter update immediately (drag end). */
  flushParams(): void {
    if (this.paramsTimer !== null) {
      clearTimeout(this.paramsTimer);
      this.paramsTimer = null;
    }
    this.firePendingParams();
  }

  /**
   * Send a gesture; if an optimization is already running, ask the server
   * to cancel it first so the new gesture starts from a settled state.
   */
  sendGesture(
    type: "gesture_move" | "gesture_scale",
    payload: { group: number; x?: number; y?: number; factor?: number },
  ): number {
    if (this.busy) this.send("cancel", {});
    this.busy = true;
    return this.send(type, payload);
  }

  drawAxis(vx: number, vy: number): number {
    return this.send("draw_axis", { vx, vy });
  }

  saveSnapshot(name: string, overwrite: boolean): number {
    return this.send("save", { name, overwrite });
  }

  restoreSnapshot(name: string): number {
    return this.send("restore", { name });
  }

  private firePendingParams(): void {
    this.paramsTimer = null;
    if (this.pendingParams === null) return;
    const partial = this.pendingParams;
    this.pendingParams = null;
    this.lastParamsSendAt = this.now();
    this.send("set_params", partial);
  }

  private handleMessage(text: string): void {
    let msg: { type?: string; seq?: number | null; payload?: unknown; code?: string; message?: string };
    try {
      msg = JSON.parse(text);
    } catch {
      return; // not ours to diagnose; the server validates its own output
    }
    switch (msg.type) {
      case "hello": {
        const proto = (msg.payload as { protocol?: unknown } | undefined)?.protocol;
        if (proto !== PROTOCOL_VERSION) this.events.onProtocolMismatch?.(proto);
        break;
      }
      case "state": {
        const payload = msg.payload as StatePayload;
        if (typeof payload.rev === "number") {
          // A broadcast that raced a newer reply would roll the view back;
          // equal revs are fine (snapshot-list updates reuse the rev).
          if (payload.rev < this.lastRev) return;
          this.lastRev = payload.rev;
        }
        this.busy = Boolean(payload.busy);
        this.events.onState(payload, msg.seq ?? null);
        break;
      }
      case "progress":
        this.busy = true;
        this.events.onProgress?.(msg.payload as ProgressPayload);
        break;
      case "error":
        this.events.onServerError?.({
          code: msg.code ?? "UNKNOWN",
          message: msg.message ?? "",
          seq: msg.seq ?? null,
        });
        break;
    }
  }
}
