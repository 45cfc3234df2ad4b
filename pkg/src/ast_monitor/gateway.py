"""Network bridge between the engine loop and the cockpit.

Broadcasts one telemetry frame per second over a WebSocket and feeds
operator commands back through a queue. The gateway never touches the
engine itself: all it shares with the engine loop are a read-only
telemetry hub and the command queue, so a stalled or dead client can
never stall the session.
"""

import asyncio
import json
import queue
import threading
from typing import Optional

import uvicorn
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .session import COMMANDS, TelemetryFrame

DEFAULT_PORT = 8765
PORT_ENV_VAR = "AST_MONITOR_PORT"

# frames a client may leave unread (~seconds at 1 Hz) before it is dropped
CLIENT_BUFFER_FRAMES = 3


def receive_command(message) -> Optional[str]:
    """Validate one wire message; returns the action or None to reject."""
    if not isinstance(message, dict):
        return None
    if message.get("type") != "command":
        return None
    action = message.get("action")
    if action not in COMMANDS:
        return None
    return action


class TelemetryHub:
    """Thread-safe snapshot of session state the gateway may read."""

    def __init__(self, plan_payload: dict):
        self.plan_payload = plan_payload
        self._lock = threading.Lock()
        self._latest: Optional[dict] = None
        self._records: list = []
        self._phase = "idle"

    def update_frame(self, frame: TelemetryFrame) -> None:
        with self._lock:
            self._latest = frame.to_dict()
            self._phase = frame.phase

    def update_phase(self, phase: str) -> None:
        with self._lock:
            self._phase = phase

    def add_record(self, record) -> None:
        with self._lock:
            self._records.append(record.to_dict())

    def latest_frame(self) -> Optional[dict]:
        with self._lock:
            return self._latest

    def session_snapshot(self) -> dict:
        with self._lock:
            return {
                "type": "session",
                "phase": self._phase,
                "plan": self.plan_payload,
                "records": list(self._records),
                "latest": self._latest,
            }


# sentinel telling a client's sender task it was dropped for stalling
DROPPED = object()


class _FanOut:
    """Single-producer frame distribution with per-client bounded queues."""

    def __init__(self, buffer_frames: int = CLIENT_BUFFER_FRAMES):
        self.buffer_frames = buffer_frames
        self._clients: dict = {}
        self._next_id = 0
        self._lock = threading.Lock()

    def register(self) -> "tuple[int, asyncio.Queue]":
        q: asyncio.Queue = asyncio.Queue(maxsize=self.buffer_frames + 1)
        with self._lock:
            cid = self._next_id
            self._next_id += 1
            self._clients[cid] = q
        return cid, q

    def unregister(self, cid: int) -> None:
        with self._lock:
            self._clients.pop(cid, None)

    def publish(self, payload: dict) -> "list[int]":
        """Queue payload for every client; clients whose buffer already
        holds ``buffer_frames`` unread frames are dropped instead."""
        dropped = []
        with self._lock:
            for cid, q in list(self._clients.items()):
                if q.qsize() >= self.buffer_frames:
                    dropped.append(cid)
                    del self._clients[cid]
                    q.put_nowait(DROPPED)  # room reserved by maxsize + 1
                else:
                    q.put_nowait(payload)
        return dropped

    @property
    def client_count(self) -> int:
        with self._lock:
            return len(self._clients)


class Gateway:
    """Hosts the WebSocket + HTTP endpoints around a command queue and hub."""

    def __init__(self, command_queue: "queue.Queue[str]", hub: TelemetryHub,
                 host: str = "127.0.0.1", port: int = DEFAULT_PORT,
                 static_dir=None, buffer_frames: int = CLIENT_BUFFER_FRAMES):
        self.command_queue = command_queue
        self.hub = hub
        self.host = host
        self.port = port
        self.fanout = _FanOut(buffer_frames)
        self._loop: Optional[asyncio.AbstractEventLoop] = None
        self._server: Optional[uvicorn.Server] = None
        self._thread: Optional[threading.Thread] = None
        self.app = self._build_app(static_dir)

    def _build_app(self, static_dir) -> FastAPI:
        app = FastAPI(title="head-unit gateway")
        gateway = self

        @app.get("/status")
        def status():
            return {"type": "status", "frame": gateway.hub.latest_frame()}

        @app.get("/session")
        def session():
            return JSONResponse(gateway.hub.session_snapshot())

        @app.websocket("/ws")
        async def ws_endpoint(ws: WebSocket):
            await ws.accept()
            gateway._loop = asyncio.get_running_loop()
            await ws.send_json({"type": "hello", "plan": gateway.hub.plan_payload})
            cid, frames = gateway.fanout.register()
            sender = asyncio.create_task(gateway._pump(ws, cid, frames))
            try:
                while True:
                    raw = await ws.receive_text()
                    try:
                        message = json.loads(raw)
                    except json.JSONDecodeError:
                        await ws.send_json({"type": "error",
                                            "error": "invalid JSON"})
                        continue
                    action = receive_command(message)
                    if action is None:
                        await ws.send_json({"type": "error",
                                            "error": f"rejected: {raw[:120]}"})
                        continue
                    gateway.command_queue.put(action)
            except WebSocketDisconnect:
                pass
            finally:
                gateway.fanout.unregister(cid)
                sender.cancel()

        if static_dir is not None:
            app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                      name="cockpit")
        return app

    async def _pump(self, ws: WebSocket, cid: int, frames: asyncio.Queue):
        try:
            while True:
                payload = await frames.get()
                if payload is DROPPED:
                    await ws.close(code=1011, reason="client too slow")
                    return
                await ws.send_json(payload)
        except Exception:
            self.fanout.unregister(cid)

    def broadcast(self, frame: TelemetryFrame) -> None:
        """Called from the engine thread; never blocks on clients."""
        self.hub.update_frame(frame)
        payload = {"type": "telemetry", **frame.to_dict()}
        loop = self._loop
        if loop is not None and loop.is_running():
            loop.call_soon_threadsafe(self.fanout.publish, payload)
        else:
            self.fanout.publish(payload)

    def serve_background(self) -> None:
        config = uvicorn.Config(self.app, host=self.host, port=self.port,
                                log_level="warning")
        self._server = uvicorn.Server(config)
        self._thread = threading.Thread(target=self._server.run, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        if self._server is not None:
            self._server.should_exit = True
        if self._thread is not None:
            self._thread.join(timeout=5.0)


def plan_payload(plan) -> dict:
    """Plan as sent in the hello message: the cockpit's interval list."""
    return {
        "name": plan.name,
        "exercises": [
            {"id": ex.id, "target_hr": ex.target_hr, "duration_s": ex.duration_s}
            for ex in plan.exercises
        ],
    }
