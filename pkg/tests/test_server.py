"""Wire protocol: handshake, pushes, error codes, broadcast, upload.

Runs the real ASGI app through the test client, WebSocket included.
"""
import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from ulca.server import PROTOCOL_VERSION, ServerState, create_app
from ulca.session import Session

from conftest import make_mixture

CSV_TEXT = "a,b,label\n" + "\n".join(
    f"{x},{y},g{1 + (i % 2)}"
    for i, (x, y) in enumerate(
        (i * 0.37 % 3.0, (i * i) % 5.0) for i in range(40)
    )
)


@pytest.fixture
def server_state():
    return ServerState(Session(make_mixture(120, 5, 2, seed=41)))


@pytest.fixture
def client(server_state):
    app = create_app(server_state)
    with TestClient(app) as c:
        yield c


def drain_until(ws, mtype, limit=200):
    """Read frames until one of the wanted type arrives."""
    seen = []
    for _ in range(limit):
        msg = ws.receive_json()
        if msg["type"] == mtype:
            return msg, seen
        seen.append(msg)
    raise AssertionError(f"no {mtype!r} message in {limit} frames: {seen[-3:]}")


class TestHandshake:
    def test_hello_then_state(self, client):
        with client.websocket_connect("/ws") as ws:
            hello = ws.receive_json()
            assert hello["type"] == "hello"
            assert hello["payload"]["protocol"] == PROTOCOL_VERSION
            state = ws.receive_json()
            assert state["type"] == "state"
            assert state["payload"]["ready"] is True
            assert len(state["payload"]["points"]) == 120

    def test_state_payload_shape(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.receive_json()
            payload = ws.receive_json()["payload"]
            assert payload["loadings"]["attributes"] == [
                "x1", "x2", "x3", "x4", "x5",
            ]
            axes = payload["loadings"]["axes"]
            assert len(axes) == 2 and all(len(a) == 5 for a in axes)
            assert len(payload["ellipses"]) == 2
            assert payload["params"]["dprime"] == 2
            assert payload["busy"] is False


class TestSetParams:
    def test_unchanged_params_embedding_stable(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.receive_json()
            before = np.array(ws.receive_json()["payload"]["points"])
            ws.send_text(json.dumps({"type": "set_params", "seq": 7, "payload": {}}))
            msg, _ = drain_until(ws, "state")
            assert msg["seq"] == 7
            after = np.array(msg["payload"]["points"])
            assert np.abs(after - before).max() < 1e-9

    def test_partial_update_applies(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.receive_json(); ws.receive_json()
            ws.send_text(
                json.dumps(
                    {"type": "set_params", "seq": 1, "payload": {"alpha": 3.0}}
                )
            )
            msg, _ = drain_until(ws, "state")
            assert msg["payload"]["params"]["alpha"] == 3.0

    def test_rev_increases(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.receive_json()
            rev0 = ws.receive_json()["payload"]["rev"]
            ws.send_text(
                json.dumps(
                    {"type": "set_params", "seq": 2, "payload": {"alpha": 1.0}}
                )
            )
            msg, _ = drain_until(ws, "state")
            assert msg["payload"]["rev"] > rev0

    def test_unknown_field_rejected(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.receive_json(); ws.receive_json()
            ws.send_text(
                json.dumps(
                    {"type": "set_params", "seq": 3, "payload": {"beta": 1.0}}
                )
            )
            msg, _ = drain_until(ws, "error")
            assert msg["code"] == "BAD_PARAMS"
            assert msg["seq"] == 3


class TestGestures:
    def test_identity_scale_costs_nothing(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.receive_json(); ws.receive_json()
            ws.send_text(
                json.dumps(
                    {
                        "type": "gesture_scale",
                        "seq": 9,
                        "payload": {"group": 1, "factor": 1.0},
                    }
                )
            )
            msg, _ = drain_until(ws, "state")
            assert msg["seq"] == 9
            assert msg["payload"]["cost"]["cost"] < 1e-6
            assert msg["payload"]["busy"] is False

    def test_scale_gesture_reports_progress(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.receive_json(); ws.receive_json()
            ws.send_text(
                json.dumps(
                    {
                        "type": "gesture_scale",
                        "seq": 10,
                        "payload": {"group": 2, "factor": 1.8},
                    }
                )
            )
            msg, earlier = drain_until(ws, "state")
            kinds = {m["type"] for m in earlier}
            assert "progress" in kinds
            assert msg["payload"]["cost"]["cost"] <= msg["payload"]["cost"]["cost_init"]

    def test_two_gestures_each_get_a_reply(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.receive_json(); ws.receive_json()
            for seq, factor in ((11, 1.5), (12, 0.7)):
                ws.send_text(
                    json.dumps(
                        {
                            "type": "gesture_scale",
                            "seq": seq,
                            "payload": {"group": 1, "factor": factor},
                        }
                    )
                )
            seqs = set()
            for _ in range(400):
                msg = ws.receive_json()
                if msg["type"] == "state" and msg["seq"] is not None:
                    seqs.add(msg["seq"])
                if seqs == {11, 12}:
                    break
            assert seqs == {11, 12}

    def test_move_gesture_round_trip(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.receive_json()
            state0 = ws.receive_json()["payload"]
            center = state0["ellipses"][0]["center"]
            ws.send_text(
                json.dumps(
                    {
                        "type": "gesture_move",
                        "seq": 13,
                        "payload": {
                            "group": 2,
                            "x": center[0],
                            "y": center[1],
                        },
                    }
                )
            )
            msg, _ = drain_until(ws, "state")
            assert msg["seq"] == 13
            assert msg["payload"]["cost"] is not None


class TestErrors:
    def test_malformed_json(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.receive_json(); ws.receive_json()
            ws.send_text("{not json")
            msg, _ = drain_until(ws, "error")
            assert msg["code"] == "BAD_MESSAGE"

    def test_unknown_type(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.receive_json(); ws.receive_json()
            ws.send_text(json.dumps({"type": "explode", "seq": 4}))
            msg, _ = drain_until(ws, "error")
            assert msg["code"] == "BAD_PARAMS"

    def test_unknown_snapshot(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.receive_json(); ws.receive_json()
            ws.send_text(
                json.dumps(
                    {"type": "restore", "seq": 5, "payload": {"name": "ghost"}}
                )
            )
            msg, _ = drain_until(ws, "error")
            assert msg["code"] == "UNKNOWN_SNAPSHOT"

    def test_duplicate_snapshot_name(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.receive_json(); ws.receive_json()
            for seq in (6, 7):
                ws.send_text(
                    json.dumps(
                        {"type": "save", "seq": seq, "payload": {"name": "s"}}
                    )
                )
            msg, _ = drain_until(ws, "error")
            assert msg["code"] == "DUPLICATE_NAME"

    def test_zero_axis_vector(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.receive_json(); ws.receive_json()
            ws.send_text(
                json.dumps(
                    {"type": "draw_axis", "seq": 8, "payload": {"vx": 0, "vy": 0}}
                )
            )
            msg, _ = drain_until(ws, "error")
            assert msg["code"] == "ZERO_VECTOR"


class TestBroadcast:
    def test_second_client_sees_update(self, client):
        with client.websocket_connect("/ws") as a, client.websocket_connect(
            "/ws"
        ) as b:
            a.receive_json(); a.receive_json()
            b.receive_json(); b.receive_json()
            a.send_text(
                json.dumps(
                    {"type": "set_params", "seq": 20, "payload": {"alpha": 2.0}}
                )
            )
            mine, _ = drain_until(a, "state")
            theirs, _ = drain_until(b, "state")
            assert mine["seq"] == 20
            assert theirs["seq"] is None
            assert mine["payload"]["rev"] == theirs["payload"]["rev"]


class TestHttp:
    def test_state_probe(self, client):
        resp = client.get("/api/state")
        assert resp.status_code == 200
        body = resp.json()
        assert body["ready"] is True
        assert "params" in body

    def test_upload_round_trip(self):
        state = ServerState(None)
        app = create_app(state)
        with TestClient(app) as c:
            before = c.get("/api/state").json()
            assert before["ready"] is False
            resp = c.post("/api/dataset?label_col=label", content=CSV_TEXT)
            assert resp.status_code == 200
            body = resp.json()
            assert body == {"ok": True, "rows": 40, "attributes": 2, "groups": 2}
            after = c.get("/api/state").json()
            assert after["ready"] is True
            assert after["group_names"] == ["g1", "g2"]

    def test_upload_bad_column(self):
        state = ServerState(None)
        app = create_app(state)
        with TestClient(app) as c:
            resp = c.post("/api/dataset?label_col=missing", content=CSV_TEXT)
            assert resp.status_code == 400
            assert resp.json()["error"]["code"] == "BAD_DATA"

    def test_snapshot_endpoints(self, client):
        resp = client.post("/api/snapshots", json={"name": "first"})
        assert resp.status_code == 200
        assert client.get("/api/snapshots").json() == {"snapshots": ["first"]}
        dup = client.post("/api/snapshots", json={"name": "first"})
        assert dup.status_code == 400
        assert dup.json()["error"]["code"] == "DUPLICATE_NAME"

    def test_placeholder_index(self, client):
        resp = client.get("/")
        assert resp.status_code == 200
        assert "ulca" in resp.text


class TestSnapshotPersistence:
    def test_flush_and_reload(self, tmp_path):
        data = make_mixture(60, 4, 2, seed=43)
        state = ServerState(Session(data), snapshot_dir=tmp_path)
        state.session.save_snapshot("keeper")
        state.flush_snapshots()
        assert (tmp_path / "keeper.json").is_file()

        fresh = ServerState(Session(data), snapshot_dir=tmp_path)
        fresh.load_snapshots()
        assert fresh.session.list_snapshots() == ["keeper"]
        # restoring from disk round-trips
        fresh.session.restore_snapshot("keeper")

    def test_reload_filters_foreign_dataset(self, tmp_path):
        state = ServerState(
            Session(make_mixture(60, 4, 2, seed=43)), snapshot_dir=tmp_path
        )
        state.session.save_snapshot("keeper")
        state.flush_snapshots()

        other = ServerState(
            Session(make_mixture(60, 4, 2, seed=44)), snapshot_dir=tmp_path
        )
        other.load_snapshots()
        assert other.session.list_snapshots() == []

    def test_unsafe_names_sanitized(self, tmp_path):
        data = make_mixture(60, 4, 2, seed=43)
        state = ServerState(Session(data), snapshot_dir=tmp_path)
        state.session.save_snapshot("a/b c")
        state.flush_snapshots()
        assert (tmp_path / "a_b_c.json").is_file()
