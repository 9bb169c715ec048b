"""Record a short live-gateway session into a JSON fixture for the UI tests.

Connects to the real WebSocket endpoint (in-process test client, unpaced),
captures the metadata message and a run of frames, switches the scene to
"waving" mid-session exactly as the operator console would, and keeps
recording until the scripted truth reflects the change.

Usage: python3 frontend/scripts/make_fixtures.py
Writes: frontend/tests/fixtures/session.json
"""

import json
from pathlib import Path

from starlette.testclient import TestClient

from rdsense.config import AppConfig, SystemConfig
from rdsense.gateway import build_app
from rdsense.scene import ScenarioScript, Segment

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "session.json"


def main() -> None:
    cfg = AppConfig(system=SystemConfig(sequence_length=1024, cpi_pulses=64))
    script = ScenarioScript(
        segments=[Segment(start_time=0.0, activity="walking", start_range=5.0,
                          walk_speed=0.5)],
        duration=1e9, snr_db=20.0, seed=11,
    )
    app = build_app(cfg, script=script, pace=False)
    messages = []
    with TestClient(app) as client, client.websocket_connect("/ws") as ws:
        meta = ws.receive_json()
        assert meta["type"] == "metadata"
        messages.append(meta)
        frames = 0
        while frames < 5:
            msg = ws.receive_json()
            if msg["type"] == "frame":
                frames += 1
                messages.append(msg)
        ws.send_text(json.dumps({"type": "control", "action": "set_activity",
                                 "value": "waving"}))
        for _ in range(200):
            msg = ws.receive_json()
            if msg["type"] != "frame":
                continue
            messages.append(msg)
            if msg["truth"] == "waving":
                break
        else:
            raise AssertionError("truth never switched to waving")
        # a few frames of the new activity so the classifier settles
        extra = 0
        while extra < 25:
            msg = ws.receive_json()
            if msg["type"] == "frame":
                messages.append(msg)
                extra += 1

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps({"messages": messages}, indent=1))
    truths = [m["truth"] for m in messages if m["type"] == "frame"]
    states = [m["state"] for m in messages if m["type"] == "frame"]
    print(f"wrote {OUT} with {len(messages)} messages")
    print("truth:", truths)
    print("state:", states)


if __name__ == "__main__":
    main()
