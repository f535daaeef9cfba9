/** Browser entry point: wires canvas, keyboard, pointer, and socket. */

import { SessionClient } from "./client.js";
import type { MapUpdate } from "./messages.js";
import { Renderer } from "./render.js";
import { StrokeMachine } from "./strokes.js";
import { ViewTransform } from "./transform.js";

function statusLine(text: string): void {
  const el = document.getElementById("status");
  if (el) el.textContent = text;
}

export function start(): void {
  const canvas = document.getElementById("map") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("2d canvas context unavailable");

  const view = new ViewTransform();
  const renderer = new Renderer(ctx, view, canvas.width, canvas.height);
  let lastUpdate: MapUpdate | null = null;
  let fitted = false;

  const redraw = () => {
    if (lastUpdate) renderer.draw(lastUpdate);
  };

  const resize = () => {
    canvas.width = window.innerWidth;
    canvas.height = window.innerHeight - 40;
    renderer.resize(canvas.width, canvas.height);
    redraw();
  };
  window.addEventListener("resize", resize);

  const socket = new WebSocket(`ws://${location.host}/ws`);
  const client = new SessionClient(socket, {
    onServerMessage: (msg) => {
      if (msg.type === "map_update") {
        lastUpdate = msg;
        if (!fitted && msg.points.length > 0) {
          fitted = true;
          const xs = msg.points.map((p) => p[0]);
          const ys = msg.points.map((p) => p[1]);
          view.fit(
            [Math.min(...xs), Math.min(...ys)],
            [Math.max(...xs), Math.max(...ys)],
            canvas.width,
            canvas.height,
          );
        }
        strokes.notifyResolved();
        statusLine(msg.error ? `solver: ${msg.error}` : "ready");
        redraw();
      } else if (msg.type === "error") {
        strokes.notifyResolved();
        statusLine(`error: ${msg.message}`);
      }
    },
    onProtocolError: (text) => statusLine(`protocol: ${text}`),
    onClose: () => statusLine("disconnected"),
  });

  const strokes = new StrokeMachine(view, {
    submit: (msg) => {
      client.send(msg);
      statusLine("solving...");
    },
    warning: (text) => statusLine(text),
  });

  window.addEventListener("keydown", (ev) => {
    if (strokes.keyPress(ev.key)) {
      statusLine(
        strokes.active
          ? "correction mode: drag two strokes (CTRL/SHIFT/ALT/CTRL+SHIFT)"
          : "ready",
      );
      ev.preventDefault();
    }
  });

  let panning: [number, number] | null = null;
  canvas.addEventListener("pointerdown", (ev) => {
    if (strokes.active) {
      strokes.pointerDown(ev.offsetX, ev.offsetY, {
        ctrl: ev.ctrlKey,
        shift: ev.shiftKey,
        alt: ev.altKey,
      });
    } else {
      panning = [ev.offsetX, ev.offsetY];
    }
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (panning) {
      view.panBy(ev.offsetX - panning[0], ev.offsetY - panning[1]);
      panning = [ev.offsetX, ev.offsetY];
      redraw();
    }
  });
  canvas.addEventListener("pointerup", (ev) => {
    if (strokes.active) {
      strokes.pointerUp(ev.offsetX, ev.offsetY);
    }
    panning = null;
  });
  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    view.zoomAt([ev.offsetX, ev.offsetY], ev.deltaY < 0 ? 1.2 : 1 / 1.2);
    redraw();
  });

  document.getElementById("undo")?.addEventListener("click", () => {
    client.send({ type: "undo_last" });
  });

  resize();
  statusLine("connecting...");
}

start();
