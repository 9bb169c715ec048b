/**
 * Wire format of the sensing gateway WebSocket endpoint (/ws).
 *
 * All messages are JSON text frames. The server sends metadata, frame,
 * heartbeat and error messages; the client sends control messages. This
 * module parses and validates incoming messages into typed objects and
 * builds outgoing control messages; it has no DOM or network dependencies.
 */

export const ACTIVITIES = ["absent", "standing", "walking", "waving"] as const;
export type ActivityState = (typeof ACTIVITIES)[number];

export interface ThumbnailSpec {
  rows: number;
  cols: number;
  db_min: number;
  db_max: number;
}

export interface Metadata {
  type: "metadata";
  sequence_length: number;
  cpi_pulses: number;
  range_bin_m: number;
  velocity_bin_mps: number;
  max_velocity_mps: number;
  max_range_m: number;
  frame_rate_hz: number;
  noise_floor_db: number;
  thresholds_db: { upper: number; lower: number };
  scope: { min_range_m: number; max_range_m: number };
  thumbnail: ThumbnailSpec;
}

export interface Track {
  range_m: number;
  velocity_mps: number;
}

export interface RdPayload {
  rows: number;
  cols: number;
  row_factor: number;
  col_factor: number;
  db_min: number;
  db_max: number;
  data_b64: string;
}

export interface FrameMessage {
  type: "frame";
  frame_index: number;
  frame_time: number;
  detected: boolean;
  power_db: number;
  track: Track | null;
  state: ActivityState;
  v_md: number;
  truth: ActivityState;
  rd: RdPayload;
}

export interface Heartbeat {
  type: "heartbeat";
  time: number;
}

export interface ErrorMessage {
  type: "error";
  message: string;
}

export type ServerMessage = Metadata | FrameMessage | Heartbeat | ErrorMessage;

export class ProtocolError extends Error {}

function ctx(path: string, what: string): ProtocolError {
  return new ProtocolError(`${path}: ${what}`);
}

function num(obj: Record<string, unknown>, key: string, path: string): number {
  const v = obj[key];
  if (typeof v !== "number" || !Number.isFinite(v)) {
    throw ctx(`${path}.${key}`, `expected a finite number, got ${JSON.stringify(v)}`);
  }
  return v;
}

function str(obj: Record<string, unknown>, key: string, path: string): string {
  const v = obj[key];
  if (typeof v !== "string") {
    throw ctx(`${path}.${key}`, `expected a string, got ${JSON.stringify(v)}`);
  }
  return v;
}

function bool(obj: Record<string, unknown>, key: string, path: string): boolean {
  const v = obj[key];
  if (typeof v !== "boolean") {
    throw ctx(`${path}.${key}`, `expected a boolean, got ${JSON.stringify(v)}`);
  }
  return v;
}

function rec(obj: Record<string, unknown>, key: string, path: string): Record<string, unknown> {
  const v = obj[key];
  if (typeof v !== "object" || v === null || Array.isArray(v)) {
    throw ctx(`${path}.${key}`, "expected an object");
  }
  return v as Record<string, unknown>;
}

function activity(obj: Record<string, unknown>, key: string, path: string): ActivityState {
  const v = str(obj, key, path);
  if (!(ACTIVITIES as readonly string[]).includes(v)) {
    throw ctx(`${path}.${key}`, `unknown activity ${JSON.stringify(v)}`);
  }
  return v as ActivityState;
}

function parseMetadata(m: Record<string, unknown>): Metadata {
  const thr = rec(m, "thresholds_db", "metadata");
  const scope = rec(m, "scope", "metadata");
  const thumb = rec(m, "thumbnail", "metadata");
  return {
    type: "metadata",
    sequence_length: num(m, "sequence_length", "metadata"),
    cpi_pulses: num(m, "cpi_pulses", "metadata"),
    range_bin_m: num(m, "range_bin_m", "metadata"),
    velocity_bin_mps: num(m, "velocity_bin_mps", "metadata"),
    max_velocity_mps: num(m, "max_velocity_mps", "metadata"),
    max_range_m: num(m, "max_range_m", "metadata"),
    frame_rate_hz: num(m, "frame_rate_hz", "metadata"),
    noise_floor_db: num(m, "noise_floor_db", "metadata"),
    thresholds_db: {
      upper: num(thr, "upper", "metadata.thresholds_db"),
      lower: num(thr, "lower", "metadata.thresholds_db"),
    },
    scope: {
      min_range_m: num(scope, "min_range_m", "metadata.scope"),
      max_range_m: num(scope, "max_range_m", "metadata.scope"),
    },
    thumbnail: {
      rows: num(thumb, "rows", "metadata.thumbnail"),
      cols: num(thumb, "cols", "metadata.thumbnail"),
      db_min: num(thumb, "db_min", "metadata.thumbnail"),
      db_max: num(thumb, "db_max", "metadata.thumbnail"),
    },
  };
}

function parseFrame(m: Record<string, unknown>): FrameMessage {
  const rd = rec(m, "rd", "frame");
  let track: Track | null = null;
  if (m["track"] !== null && m["track"] !== undefined) {
    const t = rec(m, "track", "frame");
    track = {
      range_m: num(t, "range_m", "frame.track"),
      velocity_mps: num(t, "velocity_mps", "frame.track"),
    };
  }
  return {
    type: "frame",
    frame_index: num(m, "frame_index", "frame"),
    frame_time: num(m, "frame_time", "frame"),
    detected: bool(m, "detected", "frame"),
    power_db: num(m, "power_db", "frame"),
    track,
    state: activity(m, "state", "frame"),
    v_md: num(m, "v_md", "frame"),
    truth: activity(m, "truth", "frame"),
    rd: {
      rows: num(rd, "rows", "frame.rd"),
      cols: num(rd, "cols", "frame.rd"),
      row_factor: num(rd, "row_factor", "frame.rd"),
      col_factor: num(rd, "col_factor", "frame.rd"),
      db_min: num(rd, "db_min", "frame.rd"),
      db_max: num(rd, "db_max", "frame.rd"),
      data_b64: str(rd, "data_b64", "frame.rd"),
    },
  };
}

/** Parse one incoming text frame; throws ProtocolError on anything invalid. */
export function parseServerMessage(raw: string): ServerMessage {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch (e) {
    throw new ProtocolError(`not valid JSON: ${(e as Error).message}`);
  }
  if (typeof data !== "object" || data === null || Array.isArray(data)) {
    throw new ProtocolError("message is not a JSON object");
  }
  const m = data as Record<string, unknown>;
  switch (m["type"]) {
    case "metadata":
      return parseMetadata(m);
    case "frame":
      return parseFrame(m);
    case "heartbeat":
      return { type: "heartbeat", time: num(m, "time", "heartbeat") };
    case "error":
      return { type: "error", message: str(m, "message", "error") };
    default:
      throw new ProtocolError(`unknown message type ${JSON.stringify(m["type"])}`);
  }
}

/** Decode the base64 heatmap payload into rows*cols bytes (row-major). */
export function decodeGrid(rd: RdPayload): Uint8Array {
  let bin: string;
  try {
    bin = atob(rd.data_b64);
  } catch {
    throw new ProtocolError("frame.rd.data_b64 is not valid base64");
  }
  const expected = rd.rows * rd.cols;
  if (bin.length !== expected) {
    throw new ProtocolError(
      `frame.rd payload has ${bin.length} bytes, expected ${rd.rows}x${rd.cols}=${expected}`,
    );
  }
  const out = new Uint8Array(expected);
  for (let i = 0; i < expected; i++) out[i] = bin.charCodeAt(i);
  return out;
}

export type ControlAction =
  | "set_activity"
  | "set_range"
  | "set_speed"
  | "set_snr"
  | "pause"
  | "resume";

const VALUE_ACTIONS: ControlAction[] = ["set_activity", "set_range", "set_speed", "set_snr"];

/** Build an outgoing control message; validates locally before sending. */
export function controlMessage(action: ControlAction, value?: string | number): string {
  if (VALUE_ACTIONS.includes(action)) {
    if (value === undefined) {
      throw new ProtocolError(`${action} requires a value`);
    }
    if (action === "set_activity") {
      if (!(ACTIVITIES as readonly string[]).includes(value as string)) {
        throw new ProtocolError(`set_activity value must be one of ${ACTIVITIES.join(", ")}`);
      }
    } else if (typeof value !== "number" || !Number.isFinite(value)) {
      throw new ProtocolError(`${action} requires a finite number`);
    }
    return JSON.stringify({ type: "control", action, value });
  }
  return JSON.stringify({ type: "control", action });
}
