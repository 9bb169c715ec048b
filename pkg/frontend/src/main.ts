/**
 * Browser wiring: WebSocket connection, canvas heatmap, status panel and
 * scene controls. All protocol and state logic lives in the DOM-free
 * modules; this file only moves data between them and the document.
 */

import {
  ActivityState,
  ControlAction,
  controlMessage,
  parseServerMessage,
  ProtocolError,
} from "./protocol.js";
import { initialState, reduce, OperatorState } from "./state.js";
import { gridToRgba, sparklinePath } from "./render.js";

const SPARK_WINDOW_S = 10.0;
const SPARK_W = 300;
const SPARK_H = 60;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

function wsUrl(): string {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  return `${proto}://${location.host}/ws`;
}

function fmt(x: number | null | undefined, digits: number, unit: string): string {
  return x === null || x === undefined ? "—" : `${x.toFixed(digits)} ${unit}`;
}

class App {
  state: OperatorState = initialState();
  ws: WebSocket | null = null;
  rgba: Uint8ClampedArray<ArrayBuffer> | null = null;
  dirty = false;
  renderedFrames = 0;
  fpsWindowStart = performance.now();

  readonly canvas = el<HTMLCanvasElement>("heatmap");
  readonly ctx = this.canvas.getContext("2d")!;
  readonly badge = el<HTMLSpanElement>("badge");
  readonly truth = el<HTMLSpanElement>("truth");
  readonly status = el<HTMLSpanElement>("status");
  readonly trackInfo = el<HTMLSpanElement>("track");
  readonly vmdInfo = el<HTMLSpanElement>("vmd");
  readonly fpsInfo = el<HTMLSpanElement>("fps");
  readonly spark = el<HTMLElement>("spark-path");
  readonly log = el<HTMLDivElement>("log");

  connect(): void {
    this.status.textContent = "connecting";
    const ws = new WebSocket(wsUrl());
    this.ws = ws;
    ws.onopen = () => {
      this.status.textContent = "connected";
    };
    ws.onclose = () => {
      this.status.textContent = "disconnected, retrying";
      this.ws = null;
      setTimeout(() => this.connect(), 1000);
    };
    ws.onmessage = (ev) => {
      try {
        const msg = parseServerMessage(ev.data as string);
        this.state = reduce(this.state, msg, SPARK_WINDOW_S);
        if (msg.type === "frame") this.dirty = true;
        if (msg.type === "error") this.logLine(`server: ${msg.message}`);
      } catch (e) {
        if (e instanceof ProtocolError) this.logLine(`protocol: ${e.message}`);
        else throw e;
      }
    };
  }

  send(action: ControlAction, value?: string | number): void {
    if (this.ws === null || this.ws.readyState !== WebSocket.OPEN) {
      this.logLine("not connected");
      return;
    }
    try {
      this.ws.send(controlMessage(action, value));
    } catch (e) {
      this.logLine((e as Error).message);
    }
  }

  logLine(text: string): void {
    const line = document.createElement("div");
    line.textContent = text;
    this.log.prepend(line);
    while (this.log.childElementCount > 6) this.log.lastElementChild!.remove();
  }

  draw(): void {
    const { frame, grid, metadata } = this.state;
    if (frame === null || grid === null) return;
    const { rows, cols } = frame.rd;
    if (this.canvas.width !== cols || this.canvas.height !== rows) {
      this.canvas.width = cols;
      this.canvas.height = rows;
      this.rgba = new Uint8ClampedArray(rows * cols * 4);
    }
    this.rgba = gridToRgba(grid, rows, cols, this.rgba ?? undefined) as Uint8ClampedArray<ArrayBuffer>;
    this.ctx.putImageData(new ImageData(this.rgba, cols, rows), 0, 0);

    this.badge.textContent = frame.state;
    this.badge.className = `badge badge-${frame.state}`;
    this.truth.textContent = frame.truth;
    this.trackInfo.textContent =
      frame.track === null
        ? "—"
        : `${fmt(frame.track.range_m, 2, "m")} @ ${fmt(frame.track.velocity_mps, 2, "m/s")}`;
    this.vmdInfo.textContent = fmt(frame.v_md, 3, "m/s");
    const vMax = metadata === null ? 2.0 : metadata.max_velocity_mps;
    this.spark.setAttribute(
      "d",
      sparklinePath(this.state.vmdHistory, SPARK_W, SPARK_H, SPARK_WINDOW_S, vMax),
    );
    this.renderedFrames += 1;
  }

  loop = (): void => {
    if (this.dirty) {
      this.dirty = false;
      this.draw();
    }
    const now = performance.now();
    if (now - this.fpsWindowStart >= 2000) {
      const fps = (1000 * this.renderedFrames) / (now - this.fpsWindowStart);
      this.fpsInfo.textContent = `${fps.toFixed(1)} fps`;
      this.renderedFrames = 0;
      this.fpsWindowStart = now;
    }
    requestAnimationFrame(this.loop);
  };
}

function bindControls(app: App): void {
  for (const activity of ["absent", "standing", "walking", "waving"]) {
    el<HTMLButtonElement>(`act-${activity}`).onclick = () =>
      app.send("set_activity", activity as ActivityState);
  }
  const bindNumber = (buttonId: string, inputId: string, action: ControlAction) => {
    el<HTMLButtonElement>(buttonId).onclick = () => {
      const v = Number(el<HTMLInputElement>(inputId).value);
      app.send(action, v);
    };
  };
  bindNumber("set-range", "range-input", "set_range");
  bindNumber("set-speed", "speed-input", "set_speed");
  bindNumber("set-snr", "snr-input", "set_snr");
  el<HTMLButtonElement>("pause").onclick = () => app.send("pause");
  el<HTMLButtonElement>("resume").onclick = () => app.send("resume");
}

const app = new App();
bindControls(app);
app.connect();
requestAnimationFrame(app.loop);
