"""Backend service: ground-truth distribution, report ingestion, event log.

State lives in an append-only line-delimited JSON event log (one file per
UTC day) and is fully rebuilt by replay at startup. The topic/payload
contract is transport-agnostic: an in-process client, a line-delimited
JSON TCP server, and an HTTP API all route into the same core.
"""

from __future__ import annotations

import json
import socket
import socketserver
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from .sensor import BackendUnavailable, GroundTruthMsg

ESTIMATE_FIELDS = {
    "room": str,
    "window_start": (int, float),
    "window_duration_s": (int, float),
    "estimate_raw": (int, float),
    "estimate": int,
    "alpha": (int, float),
    "beta": (int, float),
    "theta_dbm": (int, float),
    "n_valid": list,
    "n_random": list,
}

ENVIRONMENT_FIELDS = {
    "room": str,
    "temperature_c": (int, float),
    "humidity_pct": (int, float),
    "pressure_hpa": (int, float),
    "light_lux": (int, float),
}


class BackendError(Exception):
    pass


class RoomNotRegisteredError(BackendError):
    pass


class SchemaError(BackendError):
    """Malformed payload; message names the offending field path."""


def topic_for(room: str, kind: str) -> str:
    if not room or "/" in room:
        raise ValueError(f"invalid room token {room!r}")
    if kind not in ("estimate", "groundtruth", "environment"):
        raise ValueError(f"unknown topic kind {kind!r}")
    return f"occupancy/{room}/{kind}"


def parse_topic(topic: str) -> tuple[str, str]:
    parts = topic.split("/")
    if len(parts) != 3 or parts[0] != "occupancy" or not parts[1]:
        raise ValueError(f"unrecognized topic {topic!r}")
    return parts[1], parts[2]


def _check_schema(payload: dict, fields: dict, where: str) -> None:
    if not isinstance(payload, dict):
        raise SchemaError(f"{where}: payload must be an object")
    for name, types in fields.items():
        if name not in payload:
            raise SchemaError(f"{where}.{name}: missing")
        if not isinstance(payload[name], types) or isinstance(payload[name], bool):
            raise SchemaError(f"{where}.{name}: wrong type")


class BackendCore:
    """In-memory state plus the durable event log."""

    def __init__(self, data_dir, rooms: Optional[list[str]] = None):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self.rooms: set[str] = set()
        self.retained_groundtruth: dict[str, GroundTruthMsg] = {}
        self._events: dict[str, list[dict]] = {}
        self._seen_reports: dict[str, set[float]] = {}
        self._latest_estimate: dict[str, dict] = {}
        self._latest_environment: dict[str, dict] = {}
        self._replay()
        for room in rooms or []:
            self.register_room(room)

    # -- persistence ---------------------------------------------------

    def _log_path(self, ts: float) -> Path:
        day = datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y%m%d")
        return self.data_dir / f"events-{day}.jsonl"

    def _append_event(self, event: dict) -> None:
        with open(self._log_path(event["ts"]), "a") as f:
            f.write(json.dumps(event) + "\n")
        self._apply_event(event)

    def _replay(self) -> None:
        for path in sorted(self.data_dir.glob("events-*.jsonl")):
            with open(path) as f:
                for line in f:
                    line = line.strip()
                    if line:
                        self._apply_event(json.loads(line))

    def _apply_event(self, event: dict) -> None:
        kind = event["kind"]
        room = event["room"]
        self.rooms.add(room)
        self._events.setdefault(room, []).append(event)
        payload = event["payload"]
        if kind == "groundtruth":
            self.retained_groundtruth[room] = GroundTruthMsg.from_dict(payload)
        elif kind == "estimate":
            self._seen_reports.setdefault(room, set()).add(payload["window_start"])
            self._latest_estimate[room] = payload
        elif kind == "environment":
            self._latest_environment[room] = payload
        elif kind == "room-registered":
            pass

    # -- operations ----------------------------------------------------

    def register_room(self, room: str, now: Optional[float] = None) -> None:
        if not room or "/" in room:
            raise ValueError(f"invalid room token {room!r}")
        with self._lock:
            if room in self.rooms:
                return
            self._append_event(
                {
                    "ts": now if now is not None else time.time(),
                    "kind": "room-registered",
                    "room": room,
                    "payload": {},
                }
            )

    def _require_room(self, room: str) -> None:
        if room not in self.rooms:
            raise RoomNotRegisteredError(f"room {room!r} is not registered")

    def set_groundtruth(
        self, room: str, count: int, ttl_s: float, now: Optional[float] = None
    ) -> GroundTruthMsg:
        """Retain the latest ground truth for the room and log it."""
        with self._lock:
            self._require_room(room)
            if count < 0:
                raise SchemaError("groundtruth.count: must be >= 0")
            if ttl_s <= 0:
                raise SchemaError("groundtruth.ttl_s: must be positive")
            now = now if now is not None else time.time()
            msg = GroundTruthMsg(room, count, issued_at=now, ttl_s=ttl_s)
            self._append_event(
                {"ts": now, "kind": "groundtruth", "room": room, "payload": msg.to_dict()}
            )
            return msg

    def get_groundtruth(self, room: str) -> Optional[GroundTruthMsg]:
        with self._lock:
            self._require_room(room)
            return self.retained_groundtruth.get(room)

    def ingest_report(self, payload: dict, now: Optional[float] = None) -> dict:
        """Idempotent on (room, window_start)."""
        _check_schema(payload, ESTIMATE_FIELDS, "estimate")
        with self._lock:
            room = payload["room"]
            self._require_room(room)
            seen = self._seen_reports.setdefault(room, set())
            if payload["window_start"] in seen:
                return {"ok": True, "duplicate": True}
            self._append_event(
                {
                    "ts": now if now is not None else time.time(),
                    "kind": "estimate",
                    "room": room,
                    "payload": payload,
                }
            )
            return {"ok": True, "duplicate": False}

    def ingest_environment(self, payload: dict, now: Optional[float] = None) -> dict:
        _check_schema(payload, ENVIRONMENT_FIELDS, "environment")
        with self._lock:
            self._require_room(payload["room"])
            self._append_event(
                {
                    "ts": now if now is not None else time.time(),
                    "kind": "environment",
                    "room": payload["room"],
                    "payload": payload,
                }
            )
            return {"ok": True}

    def ingest_params(
        self, room: str, payload: dict, now: Optional[float] = None
    ) -> dict:
        with self._lock:
            self._require_room(room)
            self._append_event(
                {
                    "ts": now if now is not None else time.time(),
                    "kind": "params-update",
                    "room": room,
                    "payload": payload,
                }
            )
            return {"ok": True}

    _SERIES_KINDS = {
        "occupancy": "estimate",
        "environment": "environment",
        "params": "params-update",
    }

    def query_timeseries(
        self,
        room: str,
        start: float = float("-inf"),
        end: float = float("inf"),
        kind: str = "occupancy",
    ) -> list[dict]:
        if kind not in self._SERIES_KINDS:
            raise ValueError(f"unknown series kind {kind!r}")
        event_kind = self._SERIES_KINDS[kind]
        with self._lock:
            self._require_room(room)
            out = [
                {"ts": e["ts"], **e["payload"]}
                for e in self._events.get(room, [])
                if e["kind"] == event_kind and start <= e["ts"] <= end
            ]
        out.sort(key=lambda e: e["ts"])
        return out

    def latest(self, room: str) -> dict:
        with self._lock:
            self._require_room(room)
            return {
                "room": room,
                "estimate": self._latest_estimate.get(room),
                "environment": self._latest_environment.get(room),
            }

    def room_list(self) -> list[str]:
        with self._lock:
            return sorted(self.rooms)


class LocalClient:
    """In-process BackendClient wired straight into a BackendCore."""

    def __init__(self, core: BackendCore):
        self.core = core

    def fetch_groundtruth(self, room_id: str) -> Optional[GroundTruthMsg]:
        return self.core.get_groundtruth(room_id)

    def publish_report(self, payload: dict) -> None:
        self.core.ingest_report(payload)

    def publish_environment(self, payload: dict) -> None:
        self.core.ingest_environment(payload)

    def publish_params(self, room_id: str, payload: dict) -> None:
        self.core.ingest_params(room_id, payload)


# -- line-delimited JSON over TCP ---------------------------------------


class _LineHandler(socketserver.StreamRequestHandler):
    def handle(self):
        while True:
            line = self.rfile.readline()
            if not line:
                return
            try:
                response = self.server.core_dispatch(json.loads(line))
            except Exception as exc:  # report, never kill the connection
                response = {"ok": False, "error": str(exc)}
            self.wfile.write((json.dumps(response) + "\n").encode())


class TcpBackendServer(socketserver.ThreadingTCPServer):
    """Reference sensor transport: one JSON message per line."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, core: BackendCore, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _LineHandler)
        self.core = core

    @property
    def address(self) -> tuple[str, int]:
        return self.server_address

    def core_dispatch(self, msg: dict) -> dict:
        op = msg.get("op")
        if op == "publish":
            room, kind = parse_topic(msg["topic"])
            payload = msg["payload"]
            if kind == "estimate":
                return self.core.ingest_report(payload)
            if kind == "environment":
                return self.core.ingest_environment(payload)
            if kind == "groundtruth":
                m = self.core.set_groundtruth(room, payload["count"], payload["ttl_s"])
                return {"ok": True, "payload": m.to_dict()}
            if kind == "params":
                return self.core.ingest_params(room, payload)
            return {"ok": False, "error": f"unknown topic kind {kind!r}"}
        if op == "get":
            room, kind = parse_topic(msg["topic"])
            if kind != "groundtruth":
                return {"ok": False, "error": "only groundtruth is retained"}
            m = self.core.get_groundtruth(room)
            return {"ok": True, "payload": m.to_dict() if m else None}
        return {"ok": False, "error": f"unknown op {op!r}"}

    def serve_background(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread


class TcpClient:
    """BackendClient over the line-delimited JSON TCP transport."""

    def __init__(self, host: str, port: int, timeout: float = 5.0):
        self.host, self.port, self.timeout = host, port, timeout
        self._sock: Optional[socket.socket] = None
        self._file = None

    def _request(self, msg: dict) -> dict:
        try:
            if self._sock is None:
                self._sock = socket.create_connection(
                    (self.host, self.port), timeout=self.timeout
                )
                self._file = self._sock.makefile("rwb")
            self._file.write((json.dumps(msg) + "\n").encode())
            self._file.flush()
            line = self._file.readline()
            if not line:
                raise ConnectionError("backend closed the connection")
        except OSError as exc:
            self.close()
            raise BackendUnavailable(str(exc)) from exc
        response = json.loads(line)
        if not response.get("ok", False):
            raise BackendError(response.get("error", "backend error"))
        return response

    def close(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            finally:
                self._sock = None
                self._file = None

    def fetch_groundtruth(self, room_id: str) -> Optional[GroundTruthMsg]:
        resp = self._request({"op": "get", "topic": topic_for(room_id, "groundtruth")})
        payload = resp.get("payload")
        return GroundTruthMsg.from_dict(payload) if payload else None

    def publish_report(self, payload: dict) -> None:
        self._request(
            {"op": "publish", "topic": topic_for(payload["room"], "estimate"), "payload": payload}
        )

    def publish_environment(self, payload: dict) -> None:
        self._request(
            {"op": "publish", "topic": topic_for(payload["room"], "environment"), "payload": payload}
        )

    def publish_params(self, room_id: str, payload: dict) -> None:
        self._request(
            {"op": "publish", "topic": f"occupancy/{room_id}/params", "payload": payload}
        )


# -- HTTP API ------------------------------------------------------------


def create_app(core: BackendCore, static_dir=None):
    """FastAPI app exposing the dashboard-facing HTTP API."""
    from fastapi import Body, FastAPI, HTTPException, Query
    from fastapi.responses import FileResponse

    app = FastAPI(title="wifi-occupancy backend")

    @app.get("/rooms")
    def rooms():
        return {"rooms": core.room_list()}

    @app.get("/rooms/{room}/latest")
    def latest(room: str):
        try:
            return core.latest(room)
        except RoomNotRegisteredError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.get("/rooms/{room}/series")
    def series(
        room: str,
        kind: str = Query("occupancy"),
        start: float = Query(float("-inf")),
        end: float = Query(float("inf")),
    ):
        try:
            return {"room": room, "kind": kind, "records": core.query_timeseries(room, start, end, kind)}
        except RoomNotRegisteredError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.post("/rooms/{room}/groundtruth")
    def post_groundtruth(room: str, body: dict = Body(...)):
        count, ttl_s = body.get("count"), body.get("ttl_s")
        if not isinstance(count, int) or isinstance(count, bool) or count < 0:
            raise HTTPException(status_code=422, detail="count: non-negative integer required")
        if not isinstance(ttl_s, (int, float)) or isinstance(ttl_s, bool) or ttl_s <= 0:
            raise HTTPException(status_code=422, detail="ttl_s: positive number required")
        try:
            msg = core.set_groundtruth(room, count, float(ttl_s))
        except RoomNotRegisteredError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except SchemaError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return msg.to_dict()

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        static_path = Path(static_dir)
        if static_path.is_dir():
            index = static_path / "index.html"
            if index.is_file():
                @app.get("/")
                def root():
                    return FileResponse(index)
            app.mount("/ui", StaticFiles(directory=static_path), name="ui")

    return app
