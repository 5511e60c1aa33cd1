import { Connection } from "./connection.js";
import { StatePayload, WebSocketLike } from "./protocol.js";
import { ComponentsView } from "./views/components.js";
import { EmbeddingView } from "./views/embedding.js";
import { ParamsView } from "./views/params.js";
import { SnapshotsView } from "./views/snapshots.js";

export interface AppOptions {
  root: HTMLElement;
  socket: WebSocketLike;
  animationMs?: number;
  confirmFn?: (message: string) => boolean;
  now?: () => number;
}

/**
 * Wires the three linked views and the snapshot bar to one connection.
 * Every accepted state push re-renders all views from the same payload, so
 * no view can lag behind another; gestures and drags only ever show local
 * ghosts until the server answers.
 */
export class App {
  readonly connection: Connection;
  readonly params: ParamsView;
  readonly embedding: EmbeddingView;
  readonly components: ComponentsView;
  readonly snapshots: SnapshotsView;

  lastPayload: StatePayload | null = null;
  renderCount = 0;

  private readonly statusEl: HTMLElement;
  private readonly objectiveEl: HTMLElement;
  private readonly busyEl: HTMLElement;
  private readonly bannerEl: HTMLElement;
  private renderWaiters: {
    predicate: (p: StatePayload) => boolean;
    resolve: (p: StatePayload) => void;
  }[] = [];

  constructor(options: AppOptions) {
    const root = options.root;
    root.classList.add("ulca-app");

    const header = document.createElement("header");
    const h1 = document.createElement("h1");
    h1.textContent = "ulca";
    this.objectiveEl = document.createElement("span");
    this.objectiveEl.className = "objective";
    this.busyEl = document.createElement("span");
    this.busyEl.className = "busy-dot";
    this.busyEl.title = "optimization in flight";
    this.statusEl = document.createElement("span");
    this.statusEl.className = "status";
    header.append(h1, this.objectiveEl, this.busyEl, this.statusEl);

    this.bannerEl = document.createElement("div");
    this.bannerEl.className = "banner";
    this.bannerEl.hidden = true;

    this.params = new ParamsView({
      queueParams: (partial) => this.connection.queueParams(partial),
      flushParams: () => this.connection.flushParams(),
    });
    this.embedding = new EmbeddingView(
      {
        sendGesture: (type, payload) => this.connection.sendGesture(type, payload),
        drawAxis: (vx, vy) => this.connection.drawAxis(vx, vy),
      },
      { animationMs: options.animationMs ?? 400, now: options.now },
    );
    this.components = new ComponentsView((attr) => this.embedding.setSizeAttribute(attr));
    this.snapshots = new SnapshotsView(
      {
        saveSnapshot: (name, overwrite) => this.connection.saveSnapshot(name, overwrite),
        restoreSnapshot: (name) => this.connection.restoreSnapshot(name),
      },
      options.confirmFn,
    );

    const main = document.createElement("main");
    main.append(this.params.el, this.embedding.el, this.components.el);
    root.append(header, this.bannerEl, main, this.snapshots.el);

    this.connection = new Connection(
      options.socket,
      {
        onState: (payload) => this.render(payload),
        onProgress: (p) => {
          this.busyEl.classList.add("on");
          this.statusEl.textContent = `optimizing… ${p.evaluations} evals, cost ${p.best_cost.toFixed(4)}`;
          this.statusEl.className = "status";
        },
        onServerError: (err) => {
          this.statusEl.textContent = `${err.code}: ${err.message}`;
          this.statusEl.className = "status error";
        },
        onClose: () => {
          this.bannerEl.hidden = false;
          this.bannerEl.textContent = "Connection lost — reload to reconnect.";
        },
        onProtocolMismatch: (got) => {
          this.bannerEl.hidden = false;
          this.bannerEl.textContent = `Protocol mismatch (server speaks ${String(got)}).`;
        },
      },
      options.now,
    );
  }

  /** Resolves on the next accepted state push matching the predicate. */
  nextRender(predicate: (p: StatePayload) => boolean = () => true): Promise<StatePayload> {
    return new Promise((resolve) => {
      this.renderWaiters.push({ predicate, resolve });
    });
  }

  private render(payload: StatePayload): void {
    this.lastPayload = payload;
    this.renderCount += 1;

    if (!payload.ready) {
      this.statusEl.textContent = "no dataset loaded";
      return;
    }
    // View linkage: all views consume this one payload, in one pass.
    this.params.update(payload);
    this.embedding.update(payload);
    this.components.update(payload);
    this.snapshots.update(payload);

    if (typeof payload.objective === "number") {
      this.objectiveEl.textContent = `objective ${payload.objective.toFixed(4)}`;
    }
    this.busyEl.classList.toggle("on", Boolean(payload.busy));
    if (payload.warning) {
      this.statusEl.textContent = payload.warning;
      this.statusEl.className = "status warn";
    } else if (!this.statusEl.classList.contains("error")) {
      this.statusEl.textContent = "";
      this.statusEl.className = "status";
    }

    const waiters = this.renderWaiters;
    this.renderWaiters = waiters.filter((w) => {
      if (!w.predicate(payload)) return true;
      w.resolve(payload);
      return false;
    });
  }
}

export function mountApp(options: AppOptions): App {
  return new App(options);
}
