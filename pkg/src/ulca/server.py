"""HTTP + WebSocket service exposing one steering session.

Protocol (version 1). On connect the server sends
``hello {protocol: 1}`` followed by a full ``state`` push.  Client
messages are JSON objects ``{type, seq, payload}``; every one is
answered either by a ``state`` push echoing its seq or by an
``error {seq, code, message}``.  State pushes also fan out to all
other connected clients (with a null seq), carrying a session revision
counter ``rev`` so clients can discard stale pushes.

Message types: ``set_params`` (partial parameter update),
``gesture_move`` {group, x, y}, ``gesture_scale`` {group, factor},
``draw_axis`` {vx, vy}, ``save`` {name, overwrite?}, ``restore``
{name}, ``list_snapshots``, ``cancel``.

Backward selection runs off the event loop; ``progress``
{evaluations, best_cost} is pushed every few evaluations, and a
gesture arriving while one is in flight cancels and supersedes it.
Slow consumers are disconnected once their outgoing queue backlog
exceeds a bound, so one stuck client cannot stall the rest.
"""

from __future__ import annotations

import asyncio
import contextlib
import json
import re
import socket
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Query, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from . import errors
from .backward import GestureKind
from .dataio import load_csv_dataset, parse_csv_text
from .group_stats import Dataset
from .session import Gesture, Session

__all__ = ["PROTOCOL_VERSION", "ServerState", "create_app", "serve"]

PROTOCOL_VERSION = 1
QUEUE_LIMIT = 64

_ERROR_CODES = {
    errors.DataFormatError: "BAD_DATA",
    errors.DimensionMismatchError: "DIMENSION_MISMATCH",
    errors.NonFiniteInputError: "NON_FINITE_INPUT",
    errors.EmptyGroupError: "EMPTY_GROUP",
    errors.EigenFailureError: "EIGEN_FAILURE",
    errors.ZeroVectorError: "ZERO_VECTOR",
    errors.NonPositiveAreaError: "NON_POSITIVE_AREA",
    errors.UnknownSnapshotError: "UNKNOWN_SNAPSHOT",
    errors.DuplicateNameError: "DUPLICATE_NAME",
}


def _error_code(exc: Exception) -> str:
    for cls, code in _ERROR_CODES.items():
        if isinstance(exc, cls):
            return code
    if isinstance(exc, errors.UlcaError):
        return "ULCA_ERROR"
    if isinstance(exc, (ValueError, KeyError, TypeError)):
        return "BAD_PARAMS"
    return "INTERNAL"


class ServerState:
    """Everything one served session needs beyond the Session itself."""

    def __init__(self, session: Session | None, snapshot_dir: Path | None = None):
        self.session = session
        self.snapshot_dir = snapshot_dir
        self.rev = 0
        self.last_cost: dict | None = None
        self.write_lock = asyncio.Lock()
        self.opt_cancel: threading.Event | None = None
        self.clients: dict[WebSocket, asyncio.Queue] = {}

    # -- payloads ---------------------------------------------------------

    def state_payload(self) -> dict:
        if self.session is None:
            return {"ready": False, "rev": self.rev}
        s = self.session
        proj = s.fit.projection
        ellipses = None
        if s.geometry is not None:
            ellipses = [
                {
                    "group": j + 1,
                    "center": e.center.tolist(),
                    "axes": e.axes.tolist(),
                    "area": e.area,
                    "confidence": e.confidence,
                }
                for j, e in enumerate(s.geometry.ellipses)
            ]
        return {
            "ready": True,
            "rev": self.rev,
            "points": s.fit.embedding.tolist(),
            "labels": s.dataset.y.tolist(),
            "group_names": list(s.dataset.group_names),
            "ellipses": ellipses,
            "loadings": {
                "attributes": list(s.dataset.feature_names),
                "axes": proj.M.T.tolist(),  # column-major: one list per axis
            },
            "drawn_axes": [
                {"v": v.tolist(), "loading": loading.tolist()}
                for v, loading in s.drawn_axes
            ],
            "params": s.params_dict(),
            "objective": proj.objective,
            "alpha": s.fit.params_used.alpha,
            "converged": proj.converged,
            "warning": proj.warning,
            "cost": self.last_cost,
            "snapshots": s.list_snapshots(),
            "busy": self.opt_cancel is not None,
        }

    # -- fan-out ----------------------------------------------------------

    def _enqueue(self, ws: WebSocket, message: dict) -> None:
        queue = self.clients.get(ws)
        if queue is None:
            return
        try:
            queue.put_nowait(message)
        except asyncio.QueueFull:
            # Slow consumer: stop feeding it rather than stall the session.
            self.clients.pop(ws, None)

    def push_state(self, reply_ws: WebSocket | None = None, seq=None) -> None:
        payload = self.state_payload()
        for ws in list(self.clients):
            msg = {
                "type": "state",
                "seq": seq if ws is reply_ws else None,
                "payload": payload,
            }
            self._enqueue(ws, msg)

    def push_to(self, ws: WebSocket, message: dict) -> None:
        self._enqueue(ws, message)

    def broadcast(self, message: dict) -> None:
        for ws in list(self.clients):
            self._enqueue(ws, message)

    # -- snapshot persistence ----------------------------------------------

    def flush_snapshots(self) -> None:
        if self.snapshot_dir is None or self.session is None:
            return
        self.snapshot_dir.mkdir(parents=True, exist_ok=True)
        for name, doc in self.session.snapshots.items():
            safe = re.sub(r"[^A-Za-z0-9._-]", "_", name)
            (self.snapshot_dir / f"{safe}.json").write_text(doc, encoding="utf-8")

    def load_snapshots(self) -> None:
        if self.snapshot_dir is None or self.session is None:
            return
        if not self.snapshot_dir.is_dir():
            return
        for path in sorted(self.snapshot_dir.glob("*.json")):
            try:
                doc = json.loads(path.read_text(encoding="utf-8"))
                current = self.session.dataset.content_hash()
                if doc.get("dataset", {}).get("hash") == current:
                    self.session.snapshots[path.stem] = json.dumps(
                        doc, sort_keys=True, separators=(",", ":")
                    )
            except (OSError, json.JSONDecodeError):
                continue


def _parse_params(session: Session, payload: dict):
    """Merge a partial params payload over the session's current params."""
    current = session.params_dict()
    unknown = set(payload) - set(current)
    if unknown:
        raise ValueError(f"unknown parameter fields: {sorted(unknown)}")
    current.update(payload)
    return Session._params_from_dict(current)


def create_app(
    state: ServerState, static_dir: str | Path | None = None
) -> FastAPI:
    """Build the FastAPI app around a server state holder."""

    @contextlib.asynccontextmanager
    async def lifespan(_: FastAPI):
        yield
        state.flush_snapshots()

    app = FastAPI(title="ulca", docs_url=None, redoc_url=None, lifespan=lifespan)
    app.state.ulca = state

    # -- HTTP ---------------------------------------------------------------

    @app.get("/api/state")
    async def api_state() -> JSONResponse:
        return JSONResponse(state.state_payload())

    @app.post("/api/dataset")
    async def api_dataset(
        request: Request, label_col: str = Query(...)
    ) -> JSONResponse:
        body = (await request.body()).decode("utf-8")
        try:
            dataset = parse_csv_text(body, label_col, source="<upload>")
            async with state.write_lock:
                state.session = Session(dataset)
                state.last_cost = None
                state.rev += 1
        except Exception as exc:  # reported, not raised: hand clients a code
            return JSONResponse(
                {"error": {"code": _error_code(exc), "message": str(exc)}},
                status_code=400,
            )
        state.push_state()
        return JSONResponse(
            {
                "ok": True,
                "rows": dataset.n_rows,
                "attributes": dataset.n_features,
                "groups": dataset.n_groups,
            }
        )

    @app.get("/api/snapshots")
    async def api_snapshots() -> JSONResponse:
        names = state.session.list_snapshots() if state.session else []
        return JSONResponse({"snapshots": names})

    @app.post("/api/snapshots")
    async def api_save_snapshot(request: Request) -> JSONResponse:
        doc = await request.json()
        try:
            if state.session is None:
                raise errors.UlcaError("no dataset loaded")
            async with state.write_lock:
                state.session.save_snapshot(
                    doc.get("name", ""), overwrite=bool(doc.get("overwrite"))
                )
            state.flush_snapshots()
        except Exception as exc:
            return JSONResponse(
                {"error": {"code": _error_code(exc), "message": str(exc)}},
                status_code=400,
            )
        return JSONResponse({"ok": True, "snapshots": state.session.list_snapshots()})

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    else:

        @app.get("/")
        async def index() -> HTMLResponse:
            return HTMLResponse(
                "<!doctype html><title>ulca</title>"
                "<p>ulca server is running. No UI bundle found; "
                "connect over the WebSocket at <code>/ws</code>.</p>"
            )

    # -- WebSocket ----------------------------------------------------------

    async def run_gesture(ws: WebSocket, seq, gesture: Gesture) -> None:
        if state.opt_cancel is not None:
            state.opt_cancel.set()
        async with state.write_lock:
            if state.session is None:
                state.push_to(
                    ws,
                    {
                        "type": "error",
                        "seq": seq,
                        "code": "NO_DATASET",
                        "message": "no dataset loaded",
                    },
                )
                return
            cancel_event = threading.Event()
            state.opt_cancel = cancel_event
            loop = asyncio.get_running_loop()

            def progress(evaluations: int, best_cost: float) -> None:
                loop.call_soon_threadsafe(
                    state.broadcast,
                    {
                        "type": "progress",
                        "seq": None,
                        "payload": {
                            "evaluations": evaluations,
                            "best_cost": best_cost,
                        },
                    },
                )

            try:
                summary = await asyncio.to_thread(
                    state.session.apply_gesture,
                    gesture,
                    None,
                    cancel_event.is_set,
                    progress,
                )
            except Exception as exc:
                state.push_to(
                    ws,
                    {
                        "type": "error",
                        "seq": seq,
                        "code": _error_code(exc),
                        "message": str(exc),
                    },
                )
                return
            finally:
                state.opt_cancel = None
            state.last_cost = {
                "cost": summary["cost"],
                "cost_init": summary["cost_init"],
                "iterations": summary["iterations"],
                "cancelled": summary["cancelled"],
            }
            if not summary["cancelled"]:
                state.rev += 1
            state.push_state(reply_ws=ws, seq=seq)

    async def handle_message(ws: WebSocket, msg: dict) -> None:
        seq = msg.get("seq")
        mtype = msg.get("type")
        payload = msg.get("payload") or {}
        try:
            if mtype in ("gesture_move", "gesture_scale"):
                if mtype == "gesture_move":
                    gesture = Gesture(
                        kind=GestureKind.MOVE_CENTROID,
                        group=int(payload["group"]),
                        x=float(payload["x"]),
                        y=float(payload["y"]),
                    )
                else:
                    gesture = Gesture(
                        kind=GestureKind.SCALE_ELLIPSE,
                        group=int(payload["group"]),
                        factor=float(payload["factor"]),
                    )
                asyncio.create_task(run_gesture(ws, seq, gesture))
                return

            if state.session is None:
                raise errors.UlcaError("no dataset loaded")

            if mtype == "set_params":
                new_params = _parse_params(state.session, payload)
                async with state.write_lock:
                    await asyncio.to_thread(state.session.update_params, new_params)
                    state.rev += 1
            elif mtype == "draw_axis":
                async with state.write_lock:
                    state.session.draw_axis(
                        np.array([float(payload["vx"]), float(payload["vy"])])
                    )
                    state.rev += 1
            elif mtype == "save":
                async with state.write_lock:
                    state.session.save_snapshot(
                        payload.get("name", ""),
                        overwrite=bool(payload.get("overwrite")),
                    )
                state.flush_snapshots()
            elif mtype == "restore":
                async with state.write_lock:
                    state.session.restore_snapshot(payload.get("name", ""))
                    state.rev += 1
            elif mtype == "list_snapshots":
                pass  # the state push below carries the list
            elif mtype == "cancel":
                if state.opt_cancel is not None:
                    state.opt_cancel.set()
            else:
                raise ValueError(f"unknown message type {mtype!r}")
        except Exception as exc:
            state.push_to(
                ws,
                {
                    "type": "error",
                    "seq": seq,
                    "code": _error_code(exc),
                    "message": str(exc),
                },
            )
            return
        state.push_state(reply_ws=ws, seq=seq)

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        queue: asyncio.Queue = asyncio.Queue(maxsize=QUEUE_LIMIT)
        state.clients[ws] = queue

        async def sender() -> None:
            while True:
                message = await queue.get()
                if message is None:
                    break
                await ws.send_text(json.dumps(message))

        send_task = asyncio.create_task(sender())
        state.push_to(
            ws, {"type": "hello", "seq": None, "payload": {"protocol": PROTOCOL_VERSION}}
        )
        state.push_to(
            ws, {"type": "state", "seq": None, "payload": state.state_payload()}
        )
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                    if not isinstance(msg, dict):
                        raise ValueError("message must be a JSON object")
                except ValueError as exc:
                    state.push_to(
                        ws,
                        {
                            "type": "error",
                            "seq": None,
                            "code": "BAD_MESSAGE",
                            "message": f"malformed message: {exc}",
                        },
                    )
                    continue
                await handle_message(ws, msg)
        except WebSocketDisconnect:
            pass
        finally:
            state.clients.pop(ws, None)
            send_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await send_task

    return app


def port_available(host: str, port: int) -> bool:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as probe:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            probe.bind((host, port))
        except OSError:
            return False
    return True


def serve(
    port: int = 8040,
    data: str | None = None,
    host: str = "127.0.0.1",
    label_col: str | None = None,
    snapshot_dir: str | None = None,
    static_dir: str | None = None,
) -> None:
    """Run the service until interrupted; loads the dataset if given."""
    import uvicorn

    session = None
    if data is not None:
        if label_col is None:
            raise errors.DataFormatError("--label-col is required with --data")
        session = Session(load_csv_dataset(data, label_col))
    state = ServerState(
        session, Path(snapshot_dir) if snapshot_dir else None
    )
    state.load_snapshots()
    if not port_available(host, port):
        raise OSError(f"port {port} on {host} is already in use")
    app = create_app(state, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
