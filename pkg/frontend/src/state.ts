/**
 * Pure client-side state: what the operator console currently knows.
 *
 * `reduce` folds each validated server message into a new state object; the
 * DOM layer only reads the result. Keeping this pure makes session replay
 * (and testing) trivial.
 */

import {
  FrameMessage,
  Metadata,
  ServerMessage,
  decodeGrid,
} from "./protocol.js";

export interface VmdSample {
  t: number; // frame_time, seconds
  v: number; // smoothed micro-Doppler velocity, m/s
}

export interface OperatorState {
  metadata: Metadata | null;
  frame: FrameMessage | null;
  grid: Uint8Array | null; // decoded heatmap of the latest frame
  framesSeen: number;
  vmdHistory: VmdSample[]; // trailing window, oldest first
  lastHeartbeat: number | null; // server clock, seconds
  lastError: string | null;
}

export function initialState(): OperatorState {
  return {
    metadata: null,
    frame: null,
    grid: null,
    framesSeen: 0,
    vmdHistory: [],
    lastHeartbeat: null,
    lastError: null,
  };
}

export const VMD_WINDOW_S = 10.0;

export function reduce(
  state: OperatorState,
  msg: ServerMessage,
  vmdWindowS: number = VMD_WINDOW_S,
): OperatorState {
  switch (msg.type) {
    case "metadata":
      return { ...state, metadata: msg };
    case "frame": {
      const history = state.vmdHistory
        .concat([{ t: msg.frame_time, v: msg.v_md }])
        .filter((s) => s.t >= msg.frame_time - vmdWindowS);
      return {
        ...state,
        frame: msg,
        grid: decodeGrid(msg.rd),
        framesSeen: state.framesSeen + 1,
        vmdHistory: history,
      };
    }
    case "heartbeat":
      return { ...state, lastHeartbeat: msg.time };
    case "error":
      return { ...state, lastError: msg.message };
  }
}

/** Range of one heatmap column in meters (column j covers j*col_factor bins). */
export function columnRange(state: OperatorState, col: number): number {
  if (state.metadata === null || state.frame === null) return NaN;
  return col * state.frame.rd.col_factor * state.metadata.range_bin_m;
}

/** Velocity of one heatmap row in m/s; row rows/2 is zero Doppler. */
export function rowVelocity(state: OperatorState, row: number): number {
  if (state.metadata === null || state.frame === null) return NaN;
  const rd = state.frame.rd;
  return (row * rd.row_factor - (rd.rows * rd.row_factor) / 2) * state.metadata.velocity_bin_mps;
}
