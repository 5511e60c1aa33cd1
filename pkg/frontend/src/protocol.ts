// Wire types for the ulca server protocol (version 1).
//
// Every client message is {type, seq, payload}; the server replies with a
// `state` push echoing the seq (broadcast copies carry seq: null) or an
// `error` frame with `code`/`message` at the top level. Gestures reply
// asynchronously: zero or more `progress` frames, then the seq-echoed state.

export const PROTOCOL_VERSION = 1;

export interface EllipseWire {
  /** 1-based group id, matching the label values in `labels`. */
  group: number;
  center: [number, number];
  /** Row i is principal direction i scaled by its semi-axis length. */
  axes: [[number, number], [number, number]];
  area: number;
  confidence: number;
}

export interface LoadingsWire {
  attributes: string[];
  /** One row per embedding axis: the projection column for that axis. */
  axes: number[][];
}

export interface DrawnAxisWire {
  v: [number, number];
  loading: number[];
}

export interface ParamsWire {
  w_tg: number[];
  w_bg: number[];
  w_bw: number[];
  alpha: number | null;
  gamma0: number;
  gamma1: number;
  dprime: number;
}

export interface CostWire {
  cost: number;
  cost_init: number;
  iterations: number;
  cancelled: boolean;
}

export interface StatePayload {
  ready: boolean;
  rev: number;
  points?: [number, number][];
  labels?: number[];
  group_names?: string[];
  ellipses?: EllipseWire[] | null;
  loadings?: LoadingsWire;
  drawn_axes?: DrawnAxisWire[];
  params?: ParamsWire;
  objective?: number;
  alpha?: number | null;
  converged?: boolean;
  warning?: string | null;
  cost?: CostWire | null;
  snapshots?: string[];
  busy?: boolean;
}

export interface ProgressPayload {
  evaluations: number;
  best_cost: number;
}

export interface ServerError {
  code: string;
  message: string;
  seq: number | null;
}

/** The subset of the WebSocket API this client uses; satisfied by the
 * browser's WebSocket and by the `ws` package in Node. */
export interface WebSocketLike {
  send(data: string): void;
  close(code?: number): void;
  addEventListener(
    type: "open" | "message" | "close" | "error",
    listener: (event: { data?: unknown }) => void,
  ): void;
}
