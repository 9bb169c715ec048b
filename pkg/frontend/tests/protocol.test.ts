import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";

import {
  controlMessage,
  decodeGrid,
  FrameMessage,
  Metadata,
  parseServerMessage,
  ProtocolError,
} from "../src/protocol.js";

const fixture = JSON.parse(
  readFileSync(fileURLToPath(new URL("./fixtures/session.json", import.meta.url)), "utf8"),
) as { messages: Record<string, unknown>[] };

const rawMessages = fixture.messages.map((m) => JSON.stringify(m));

describe("parseServerMessage", () => {
  it("parses every recorded gateway message", () => {
    const parsed = rawMessages.map(parseServerMessage);
    expect(parsed[0].type).toBe("metadata");
    const frames = parsed.filter((m) => m.type === "frame") as FrameMessage[];
    expect(frames.length).toBeGreaterThan(20);
    for (const f of frames) {
      expect(f.rd.rows).toBeGreaterThan(0);
      expect(f.rd.cols).toBeGreaterThan(0);
      expect(["absent", "standing", "walking", "waving"]).toContain(f.state);
    }
  });

  it("exposes calibrated metadata fields", () => {
    const meta = parseServerMessage(rawMessages[0]) as Metadata;
    expect(meta.range_bin_m).toBeGreaterThan(0);
    expect(meta.thresholds_db.upper).toBeGreaterThan(meta.thresholds_db.lower);
    expect(meta.thumbnail.rows).toBeLessThanOrEqual(256);
    expect(meta.thumbnail.cols).toBeLessThanOrEqual(256);
  });

  it("parses heartbeat and error messages", () => {
    expect(parseServerMessage('{"type":"heartbeat","time":12.5}')).toEqual({
      type: "heartbeat",
      time: 12.5,
    });
    expect(parseServerMessage('{"type":"error","message":"nope"}')).toEqual({
      type: "error",
      message: "nope",
    });
  });

  it.each([
    ["not json at all", /not valid JSON/],
    ["[1,2]", /not a JSON object/],
    ['{"type":"warp"}', /unknown message type/],
    ['{"type":"heartbeat"}', /heartbeat\.time/],
    ['{"type":"frame","frame_index":"x","rd":{}}', /frame\.frame_index/],
  ])("rejects %s", (raw, pattern) => {
    expect(() => parseServerMessage(raw)).toThrow(ProtocolError);
    expect(() => parseServerMessage(raw)).toThrow(pattern);
  });

  it("rejects a frame whose state is not a known activity", () => {
    const frame = JSON.parse(rawMessages[1]) as Record<string, unknown>;
    frame["state"] = "levitating";
    expect(() => parseServerMessage(JSON.stringify(frame))).toThrow(/unknown activity/);
  });
});

describe("decodeGrid", () => {
  it("round-trips the recorded heatmap payloads", () => {
    const frame = parseServerMessage(rawMessages[1]) as FrameMessage;
    const grid = decodeGrid(frame.rd);
    expect(grid.length).toBe(frame.rd.rows * frame.rd.cols);
    expect(Math.max(...grid)).toBeGreaterThan(0);
  });

  it("rejects payloads whose size disagrees with rows x cols", () => {
    const frame = parseServerMessage(rawMessages[1]) as FrameMessage;
    const bad = { ...frame.rd, rows: frame.rd.rows + 1 };
    expect(() => decodeGrid(bad)).toThrow(/expected/);
  });

  it("rejects invalid base64", () => {
    const frame = parseServerMessage(rawMessages[1]) as FrameMessage;
    expect(() => decodeGrid({ ...frame.rd, data_b64: "!!!" })).toThrow(/base64/);
  });
});

describe("controlMessage", () => {
  it("builds the documented wire format", () => {
    expect(JSON.parse(controlMessage("set_activity", "waving"))).toEqual({
      type: "control",
      action: "set_activity",
      value: "waving",
    });
    expect(JSON.parse(controlMessage("set_range", 6.5))).toEqual({
      type: "control",
      action: "set_range",
      value: 6.5,
    });
    expect(JSON.parse(controlMessage("pause"))).toEqual({ type: "control", action: "pause" });
  });

  it("validates locally before sending", () => {
    expect(() => controlMessage("set_activity")).toThrow(/requires a value/);
    expect(() => controlMessage("set_activity", "flying")).toThrow(/one of/);
    expect(() => controlMessage("set_range", Number.NaN)).toThrow(/finite number/);
    expect(() => controlMessage("set_speed", "fast" as unknown as number)).toThrow(
      /finite number/,
    );
  });
});
