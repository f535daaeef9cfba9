/** Wire schema (version 1) shared with the session service. */

export const SCHEMA_VERSION = 1;

export type Mode =
  | "colocation"
  | "collinearity"
  | "parallelism"
  | "perpendicularity";

export type Point = [number, number];
export type SegmentPair = [Point, Point];

export interface FactorPayload {
  mode: Mode;
  seg_a: SegmentPair;
  seg_b: SegmentPair;
  poses_a: number[];
  poses_b: number[];
}

export interface MapUpdate {
  type: "map_update";
  iteration: number;
  poses: number[][]; // [x, y, theta]
  points: number[][]; // [x, y]
  factors: FactorPayload[];
  total_cost: number;
  inconsistency: number;
  timing_ms: number;
  error: string;
  solver_message: string;
}

export interface Ack {
  type: "ack";
  for: string;
  schema?: number;
}

export interface ErrorMessage {
  type: "error";
  message: string;
}

export type ServerMessage = MapUpdate | Ack | ErrorMessage;

export interface SubmitCorrection {
  type: "submit_correction";
  mode: Mode;
  a: SegmentPair;
  b: SegmentPair;
}

export type ClientMessage =
  | { type: "hello"; schema: number }
  | SubmitCorrection
  | { type: "request_snapshot" }
  | { type: "undo_last" };

export function parseServerMessage(text: string): ServerMessage {
  let msg: unknown;
  try {
    msg = JSON.parse(text);
  } catch {
    throw new Error("server sent non-JSON frame");
  }
  if (typeof msg !== "object" || msg === null || !("type" in msg)) {
    throw new Error("server message has no type");
  }
  const type = (msg as { type: unknown }).type;
  if (type !== "map_update" && type !== "ack" && type !== "error") {
    throw new Error(`unknown server message type ${String(type)}`);
  }
  return msg as ServerMessage;
}
