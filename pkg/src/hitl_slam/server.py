"""WebSocket service around a Session.

One session per server; connections share it. Corrections are processed
one at a time in arrival order (an asyncio lock serializes the pipeline).

Message schema (JSON text frames, schema version 1):

  client -> server:
    {"type": "hello", "schema": 1}
    {"type": "submit_correction", "mode": "<mode>",
     "a": [[x,y],[x,y]], "b": [[x,y],[x,y]]}
    {"type": "request_snapshot"}
    {"type": "undo_last"}

  server -> client:
    {"type": "map_update", ...}   # see MapUpdate.to_payload
    {"type": "ack", "for": "<client message type>"}
    {"type": "error", "message": "..."}
"""

import asyncio
import json

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .errors import HitlError
from .geometry import Segment
from .graph import CorrectionMode
from .interpret import RawCorrection
from .session import Session

SCHEMA_VERSION = 1


def parse_correction(msg) -> RawCorrection:
    try:
        mode = CorrectionMode(msg["mode"])
        a, b = msg["a"], msg["b"]
        return RawCorrection(Segment(a[0], a[1]), Segment(b[0], b[1]), mode)
    except (KeyError, ValueError, TypeError, IndexError) as exc:
        raise HitlError(f"malformed submit_correction: {exc}") from exc


def create_app(session: Session) -> FastAPI:
    app = FastAPI(title="hitl-slam session")
    lock = asyncio.Lock()

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        try:
            while True:
                text = await ws.receive_text()
                try:
                    msg = json.loads(text)
                    kind = msg.get("type")
                except (json.JSONDecodeError, AttributeError):
                    await ws.send_json({"type": "error", "message": "not a JSON object"})
                    continue
                if kind == "hello":
                    if msg.get("schema") not in (None, SCHEMA_VERSION):
                        await ws.send_json({"type": "error",
                                            "message": f"unsupported schema {msg.get('schema')}"})
                        continue
                    await ws.send_json({"type": "ack", "for": "hello",
                                        "schema": SCHEMA_VERSION})
                    async with lock:
                        await ws.send_json(session.snapshot_update().to_payload())
                elif kind == "request_snapshot":
                    async with lock:
                        await ws.send_json(session.snapshot_update().to_payload())
                elif kind == "submit_correction":
                    try:
                        raw = parse_correction(msg)
                    except HitlError as exc:
                        await ws.send_json({"type": "error", "message": str(exc)})
                        continue
                    await ws.send_json({"type": "ack", "for": "submit_correction"})
                    async with lock:
                        update = await asyncio.to_thread(session.submit_correction, raw)
                    payload = update.to_payload()
                    if update.error:
                        await ws.send_json({"type": "error", "message": update.error})
                    await ws.send_json(payload)
                elif kind == "undo_last":
                    async with lock:
                        try:
                            session.undo_last()
                        except HitlError as exc:
                            await ws.send_json({"type": "error", "message": str(exc)})
                            continue
                        await ws.send_json({"type": "ack", "for": "undo_last"})
                        await ws.send_json(session.snapshot_update().to_payload())
                else:
                    await ws.send_json({"type": "error",
                                        "message": f"unknown message type {kind!r}"})
        except WebSocketDisconnect:
            pass

    return app


def serve(graph_path, bind="127.0.0.1:8765", config=None):
    """Blocking entry point used by the CLI."""
    import uvicorn

    from . import dataset
    from .session import SessionConfig

    graph, meta = dataset.load_graph(graph_path)
    cfg = config or SessionConfig()
    if "max_range" in meta and cfg.max_range == float("inf"):
        cfg = SessionConfig(cfg.interpretation, cfg.weights, cfg.solver,
                            cfg.resolution, float(meta["max_range"]),
                            cfg.compute_inconsistency)
    session = Session(graph, cfg)
    host, _, port = bind.rpartition(":")
    uvicorn.run(create_app(session), host=host or "127.0.0.1", port=int(port))
