import base64
import json

import numpy as np
import pytest
from starlette.testclient import TestClient

from rdsense.activity import ActivityState
from rdsense.config import AppConfig
from rdsense.gateway import (
    LiveScene,
    build_app,
    frame_message,
    max_pool_decimate,
    quantize_db,
)
from rdsense.pipeline import FrameEvent
from rdsense.rdmap import RangeDopplerMap
from rdsense.scene import ScenarioScript, Segment


class TestQuantize:
    def test_endpoints_and_monotonicity(self):
        db = np.array([-100.0, -60.0, -30.0, 0.0, 10.0])
        q = quantize_db(db)
        assert q.dtype == np.uint8
        assert q[0] == 0 and q[1] == 0 and q[3] == 255 and q[4] == 255
        assert np.all(np.diff(q.astype(int)) >= 0)

    def test_midpoint(self):
        assert quantize_db(np.array([-30.0]))[0] == round(0.5 * 255)


class TestMaxPool:
    def test_small_grid_unchanged(self):
        g = np.arange(12.0).reshape(3, 4)
        pooled, rf, cf = max_pool_decimate(g, max_side=8)
        assert (rf, cf) == (1, 1)
        np.testing.assert_array_equal(pooled, g)

    def test_peak_survives_pooling(self):
        g = np.zeros((512, 512))
        g[300, 77] = 5.0
        pooled, rf, cf = max_pool_decimate(g, max_side=256)
        assert (rf, cf) == (2, 2)
        assert pooled.shape == (256, 256)
        assert pooled.max() == 5.0
        assert pooled[300 // rf, 77 // cf] == 5.0

    def test_ragged_padding(self):
        g = np.random.default_rng(1).standard_normal((300, 500))
        pooled, rf, cf = max_pool_decimate(g, max_side=256)
        assert pooled.shape[0] <= 256 and pooled.shape[1] <= 256
        assert pooled.max() == pytest.approx(g.max())


class TestLiveScene:
    def make(self):
        return LiveScene(None, min_range=1.0, max_range=10.0)

    def test_defaults(self):
        scene = self.make()
        assert scene.activity == "absent"
        assert scene.snr_db == 20.0

    def test_apply_controls(self):
        scene = self.make()
        scene.apply("set_activity", "waving", 0.0)
        assert scene.activity == "waving"
        scene.apply("set_range", 7.0, 1.0)
        assert scene.range_m == 7.0
        scene.apply("set_snr", 15.0, 1.0)
        assert scene.snr_db == 15.0
        scene.apply("pause", None, 2.0)
        assert scene.paused
        scene.apply("resume", None, 3.0)
        assert not scene.paused

    def test_invalid_controls(self):
        scene = self.make()
        with pytest.raises(ValueError):
            scene.apply("set_activity", "flying", 0.0)
        with pytest.raises(ValueError):
            scene.apply("set_range", 99.0, 0.0)
        with pytest.raises(ValueError):
            scene.apply("warp", 1.0, 0.0)

    def test_walking_reflects_at_bounds(self):
        scene = self.make()
        scene.apply("set_activity", "walking", 0.0)
        scene.apply("set_speed", 1.0, 0.0)
        scene.range_m = 9.5
        scene.advance(1.0)  # would be at 10.5: clamp and reverse
        assert scene.speed == -1.0
        assert scene.range_m == 10.0

    def test_script_single_segment(self):
        scene = self.make()
        scene.apply("set_activity", "standing", 2.0)
        script = scene.script()
        assert len(script.segments) == 1
        assert script.segments[0].activity == "standing"
        assert script.segments[0].start_time == 2.0

    def test_seeded_from_script(self):
        base = ScenarioScript(segments=[Segment(0.0, "waving", 6.5)],
                              duration=5.0, snr_db=17.0, seed=9)
        scene = LiveScene(base, 1.0, 10.0)
        assert scene.activity == "waving"
        assert scene.range_m == 6.5
        assert scene.snr_db == 17.0
        assert scene.seed == 9


class TestFrameMessage:
    def test_structure_and_payload(self):
        power = np.full((64, 128), 1e-6)
        power[40, 100] = 1.0
        rd = RangeDopplerMap(power, 0.0375, 0.009, frame_index=3, frame_time=0.3)
        event = FrameEvent(3, 0.3, True, -1.0, 3.75, 0.07, 0.5, 0.01,
                           ActivityState.WAVING, ActivityState.WAVING, 0.01)
        msg = frame_message(event, rd, "waving")
        assert msg["type"] == "frame"
        assert msg["state"] == "waving"
        assert msg["track"] == {"range_m": 3.75, "velocity_mps": 0.07}
        grid = np.frombuffer(base64.b64decode(msg["rd"]["data_b64"]), dtype=np.uint8)
        grid = grid.reshape(msg["rd"]["rows"], msg["rd"]["cols"])
        assert grid.shape == (64, 128)
        assert grid[40, 100] == 255

    def test_no_track(self):
        rd = RangeDopplerMap(np.full((8, 8), 1e-6), 0.0375, 0.009)
        event = FrameEvent(0, 0.0, False, -40.0, None, None, 0.0, 0.0,
                           ActivityState.ABSENT, ActivityState.ABSENT, 0.0)
        assert frame_message(event, rd, "absent")["track"] is None


@pytest.fixture
def live_app(small_cfg):
    script = ScenarioScript(segments=[Segment(0.0, "walking", 5.0, walk_speed=1.0)],
                            duration=1e9, snr_db=20.0, seed=5)
    return build_app(small_cfg, script=script, max_clients=2, pace=False)


def recv_until(ws, msg_type, limit=200):
    for _ in range(limit):
        msg = ws.receive_json()
        if msg["type"] == msg_type:
            return msg
    raise AssertionError(f"no {msg_type} message within {limit} messages")


class TestWebSocket:
    def test_metadata_then_frames(self, live_app, small_params):
        with TestClient(live_app) as client:
            with client.websocket_connect("/ws") as ws:
                meta = ws.receive_json()
                assert meta["type"] == "metadata"
                assert meta["range_bin_m"] == pytest.approx(small_params.range_bin)
                assert meta["thresholds_db"]["upper"] > meta["thresholds_db"]["lower"]
                assert meta["thumbnail"]["rows"] <= 256
                frame = recv_until(ws, "frame")
                rd = frame["rd"]
                assert rd["rows"] * rd["row_factor"] >= meta["cpi_pulses"]
                data = base64.b64decode(rd["data_b64"])
                assert len(data) == rd["rows"] * rd["cols"]

    def test_control_round_trip(self, live_app):
        with TestClient(live_app) as client:
            with client.websocket_connect("/ws") as ws:
                ws.receive_json()  # metadata
                ws.send_text(json.dumps({"type": "control", "action": "set_activity",
                                         "value": "waving"}))
                for _ in range(400):
                    msg = ws.receive_json()
                    if msg["type"] == "frame" and msg["truth"] == "waving":
                        break
                else:
                    raise AssertionError("ground truth never switched to waving")

    def test_invalid_control_reports_error(self, live_app):
        with TestClient(live_app) as client:
            with client.websocket_connect("/ws") as ws:
                ws.receive_json()
                ws.send_text("not json")
                assert recv_until(ws, "error")
                ws.send_text(json.dumps({"type": "control", "action": "warp"}))
                err = recv_until(ws, "error")
                assert "warp" in err["message"]
                ws.send_text(json.dumps({"type": "control", "action": "set_range"}))
                err = recv_until(ws, "error")
                assert "value" in err["message"]

    def test_max_clients_enforced(self, small_cfg):
        app = build_app(small_cfg, max_clients=1, pace=False)
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws1:
                ws1.receive_json()
                with client.websocket_connect("/ws") as ws2:
                    msg = ws2.receive_json()
                    assert msg["type"] == "error"
                    assert "clients" in msg["message"]
