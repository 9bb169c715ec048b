"""Live WebSocket gateway: streams per-frame telemetry and thumbnails to any
number of viewer clients and feeds their scene-control commands back into the
running simulator.

The sensing loop is the hard-real-time part: frame hand-off to clients is
latest-wins per client (a slow viewer only drops its own frames), and control
messages are applied atomically at the next frame boundary.
"""

from __future__ import annotations

import asyncio
import base64
import contextlib
import json
import math
import queue
import threading
import time
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .config import AppConfig
from .pipeline import SensingPipeline, truth_state_at
from .rdmap import RangeDopplerMap
from .scene import ScenarioScript, Segment, synthesize_cpi, ACTIVITIES

THUMB_MAX = 256
DB_MIN = -60.0
DB_MAX = 0.0
HEARTBEAT_S = 2.0

CONTROL_ACTIONS = ("set_activity", "set_range", "set_speed", "set_snr", "pause", "resume")


def quantize_db(power_db: np.ndarray) -> np.ndarray:
    """Monotone uint8 quantization of [-60, 0] dB to 0..255."""
    g = np.clip((power_db - DB_MIN) / (DB_MAX - DB_MIN), 0.0, 1.0)
    return np.round(g * 255.0).astype(np.uint8)


def max_pool_decimate(grid: np.ndarray, max_side: int = THUMB_MAX) -> tuple[np.ndarray, int, int]:
    """Decimate by max-pooling so narrow spectral streaks survive.

    Returns (pooled, row_factor, col_factor); input is padded with the grid
    minimum when a dimension is not a multiple of its factor.
    """
    rows, cols = grid.shape
    rf = max(1, math.ceil(rows / max_side))
    cf = max(1, math.ceil(cols / max_side))
    pr = (-rows) % rf
    pc = (-cols) % cf
    if pr or pc:
        grid = np.pad(grid, ((0, pr), (0, pc)), constant_values=grid.min())
    pooled = grid.reshape(grid.shape[0] // rf, rf, grid.shape[1] // cf, cf).max(axis=(1, 3))
    return pooled, rf, cf


class LiveScene:
    """Mutable single-target scene steered by control messages.

    Controls mutate the scene only through :meth:`apply`, which the pipeline
    thread calls at frame boundaries, so no frame mixes pre- and post-control
    parameters. A walking target reflects off the scope bounds.
    """

    def __init__(self, script: ScenarioScript | None, min_range: float, max_range: float):
        if script is not None and script.segments:
            seg = script.segments[0]
            self.activity = seg.activity
            self.range_m = seg.start_range
            self.speed = seg.walk_speed
            self.wave_amplitude = seg.wave_amplitude
            self.wave_frequency = seg.wave_frequency
        else:
            self.activity = "absent"
            self.range_m = 5.0
            self.speed = 0.5
            self.wave_amplitude = 0.15
            self.wave_frequency = 1.3
        self.snr_db = script.snr_db if script is not None else 20.0
        self.clutter = list(script.clutter) if script is not None else []
        self.seed = script.seed if script is not None else 0
        self.paused = False
        self.min_range = min_range
        self.max_range = max_range
        self.t0 = 0.0

    def _range_at(self, t: float) -> float:
        if self.activity == "walking":
            return self.range_m + self.speed * (t - self.t0)
        return self.range_m

    def _rebase(self, t: float) -> None:
        self.range_m = float(np.clip(self._range_at(t), self.min_range, self.max_range))
        self.t0 = t

    def advance(self, t: float) -> None:
        """Reflect a walking target off the range bounds."""
        if self.activity != "walking":
            return
        r = self._range_at(t)
        if r <= self.min_range or r >= self.max_range:
            self._rebase(t)
            self.speed = -self.speed

    def apply(self, action: str, value, t: float) -> None:
        if action == "set_activity":
            if value not in ACTIVITIES:
                raise ValueError(f"set_activity value must be one of {ACTIVITIES}")
            self._rebase(t)
            self.activity = value
        elif action == "set_range":
            v = float(value)
            if not (self.min_range <= v <= self.max_range):
                raise ValueError(f"set_range value outside [{self.min_range}, {self.max_range}] m")
            self.range_m = v
            self.t0 = t
        elif action == "set_speed":
            self._rebase(t)
            self.speed = float(value)
        elif action == "set_snr":
            self.snr_db = float(value)
        elif action == "pause":
            self._rebase(t)
            self.paused = True
        elif action == "resume":
            self.t0 = t  # keep the scene where it was while paused
            self.paused = False
        else:
            raise ValueError(f"unknown control action {action!r}")

    def script(self) -> ScenarioScript:
        return ScenarioScript(
            segments=[Segment(
                start_time=self.t0, activity=self.activity, start_range=self.range_m,
                walk_speed=self.speed, wave_amplitude=self.wave_amplitude,
                wave_frequency=self.wave_frequency,
            )],
            duration=1e9,
            snr_db=self.snr_db,
            clutter=self.clutter,
            seed=self.seed,
        )


@dataclass
class _Client:
    loop: asyncio.AbstractEventLoop
    frames: asyncio.Queue


class Hub:
    """Single-producer broadcast of frame messages plus one control queue."""

    def __init__(self):
        self._clients: dict[int, _Client] = {}
        self._next_id = 0
        self._lock = threading.Lock()
        self.commands: queue.Queue = queue.Queue()
        self.metadata: dict | None = None
        self.metadata_ready = threading.Event()

    def register(self, loop) -> tuple[int, asyncio.Queue]:
        q: asyncio.Queue = asyncio.Queue(maxsize=1)
        with self._lock:
            cid = self._next_id
            self._next_id += 1
            self._clients[cid] = _Client(loop, q)
        return cid, q

    def unregister(self, cid: int) -> None:
        with self._lock:
            self._clients.pop(cid, None)

    @property
    def n_clients(self) -> int:
        with self._lock:
            return len(self._clients)

    def broadcast(self, message: dict) -> None:
        """Called from the pipeline thread; drops the stale frame when a
        client queue is full (latest-wins)."""
        with self._lock:
            clients = list(self._clients.values())
        for c in clients:
            c.loop.call_soon_threadsafe(self._offer, c.frames, message)

    @staticmethod
    def _offer(q: asyncio.Queue, message: dict) -> None:
        if q.full():
            with contextlib.suppress(asyncio.QueueEmpty):
                q.get_nowait()
        with contextlib.suppress(asyncio.QueueFull):
            q.put_nowait(message)


def frame_message(event, rd: RangeDopplerMap, truth: str) -> dict:
    from .rdmap import to_db

    pooled, rf, cf = max_pool_decimate(rd.power)
    data = quantize_db(to_db(pooled))
    track = None
    if event.track_range is not None:
        track = {"range_m": event.track_range, "velocity_mps": event.track_velocity}
    return {
        "type": "frame",
        "frame_index": event.frame_index,
        "frame_time": event.frame_time,
        "detected": event.detected,
        "power_db": event.power_db,
        "track": track,
        "state": event.state.value,
        "v_md": event.v_md,
        "truth": truth,
        "rd": {
            "rows": int(data.shape[0]),
            "cols": int(data.shape[1]),
            "row_factor": rf,
            "col_factor": cf,
            "db_min": DB_MIN,
            "db_max": DB_MAX,
            "data_b64": base64.b64encode(data.tobytes()).decode("ascii"),
        },
    }


def _pipeline_worker(pipe: SensingPipeline, scene: LiveScene, hub: Hub,
                     stop: threading.Event, pace: bool) -> None:
    p = pipe.cfg.system.cpi_pulses
    floor = pipe.calibrate(scene.script())
    ncols = pipe.map_range_bins
    thumb_rows = math.ceil(p / max(1, math.ceil(p / THUMB_MAX)))
    thumb_cols = math.ceil(ncols / max(1, math.ceil(ncols / THUMB_MAX)))
    hub.metadata = {
        "type": "metadata",
        "sequence_length": pipe.cfg.system.sequence_length,
        "cpi_pulses": p,
        "range_bin_m": pipe.params.range_bin,
        "velocity_bin_mps": pipe.params.velocity_bin,
        "max_velocity_mps": pipe.params.max_unambiguous_velocity,
        "max_range_m": pipe.params.max_unambiguous_range,
        "frame_rate_hz": pipe.params.frame_rate,
        "noise_floor_db": floor,
        "thresholds_db": {"upper": pipe.detector.upper_db_, "lower": pipe.detector.lower_db_},
        "scope": {"min_range_m": pipe.cfg.processing.scope_min_m,
                  "max_range_m": pipe.cfg.processing.scope_max_m},
        "thumbnail": {"rows": thumb_rows, "cols": thumb_cols, "db_min": DB_MIN, "db_max": DB_MAX},
    }
    hub.metadata_ready.set()

    frame = 0
    next_deadline = time.perf_counter()
    while not stop.is_set():
        # frame boundary: apply queued controls atomically
        boundary_t = pipe.frame_time(frame) - pipe.params.cpi / 2.0
        scene.advance(boundary_t)
        while True:
            try:
                action, value = hub.commands.get_nowait()
            except queue.Empty:
                break
            with contextlib.suppress(ValueError):
                scene.apply(action, value, boundary_t)
        if scene.paused:
            time.sleep(min(0.05, pipe.params.cpi))
            next_deadline = time.perf_counter()
            continue
        script = scene.script()
        blocks = synthesize_cpi(pipe.reference, script, pipe.params, p,
                                first_pulse_index=frame * p)
        truth = truth_state_at(script, pipe.frame_time(frame)).value
        event, rd = pipe.process_frame(blocks, frame, truth_state_at(script, pipe.frame_time(frame)))
        hub.broadcast(frame_message(event, rd, truth))
        frame += 1
        if pace:
            next_deadline += pipe.params.cpi
            delay = next_deadline - time.perf_counter()
            if delay > 0:
                stop.wait(delay)
            else:
                next_deadline = time.perf_counter()


def build_app(cfg: AppConfig, script: ScenarioScript | None = None,
              ui_dir: str | None = None, max_clients: int = 8,
              pace: bool = True) -> FastAPI:
    cfg.validate()
    pipe = SensingPipeline(cfg)
    scene = LiveScene(script, min_range=max(1.0, cfg.processing.scope_min_m + 0.5),
                      max_range=cfg.processing.scope_max_m - 0.5)
    hub = Hub()
    stop = threading.Event()

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        stop.clear()  # the app object may be started more than once
        worker = threading.Thread(
            target=_pipeline_worker, args=(pipe, scene, hub, stop, pace), daemon=True)
        worker.start()
        yield
        stop.set()
        worker.join(timeout=10.0)

    app = FastAPI(lifespan=lifespan)
    app.state.hub = hub

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        if hub.n_clients >= max_clients:
            await ws.send_json({"type": "error", "message": "too many clients"})
            await ws.close()
            return
        await asyncio.get_running_loop().run_in_executor(None, hub.metadata_ready.wait)
        cid, frames = hub.register(asyncio.get_running_loop())
        await ws.send_json(hub.metadata)

        async def sender():
            while True:
                await ws.send_json(await frames.get())

        async def heartbeat():
            while True:
                await asyncio.sleep(HEARTBEAT_S)
                await ws.send_json({"type": "heartbeat", "time": time.time()})

        async def receiver():
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                    if msg.get("type") != "control":
                        raise ValueError("expected a control message")
                    action = msg.get("action")
                    if action not in CONTROL_ACTIONS:
                        raise ValueError(f"unknown action {action!r}")
                    if action in ("set_activity", "set_range", "set_speed", "set_snr") \
                            and "value" not in msg:
                        raise ValueError(f"{action} requires a value")
                    hub.commands.put((action, msg.get("value")))
                except (json.JSONDecodeError, ValueError) as e:
                    await ws.send_json({"type": "error", "message": str(e)})

        tasks = [asyncio.ensure_future(t()) for t in (sender, heartbeat, receiver)]
        try:
            await asyncio.wait(tasks, return_when=asyncio.FIRST_COMPLETED)
        except WebSocketDisconnect:
            pass
        finally:
            for t in tasks:
                t.cancel()
            hub.unregister(cid)

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
