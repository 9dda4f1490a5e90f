/**
 * Wire types for the telemetry socket.
 *
 * Mirrors docs/wire-schema.json in the repository root: every inbound line
 * is one JSON object with keys exactly type/seq/t_sim/data; outbound
 * commands are JSON objects of type set_task, place_obstacle, stop, or
 * set_rate. Parsing here is intentionally forgiving about unknown message
 * types (they are surfaced as "unknown", never thrown) and strict about
 * the fields the panel actually renders.
 */

export type DirectionWord = "forward" | "left" | "right" | "backward" | "halt";

export const DIRECTIONS: readonly DirectionWord[] = [
  "forward", "left", "right", "backward", "halt",
];

export type EventName =
  | "collision"
  | "reached"
  | "task_accepted"
  | "task_rejected"
  | "command_error";

export const EVENT_NAMES: readonly EventName[] = [
  "collision", "reached", "task_accepted", "task_rejected", "command_error",
];

export interface TemperatureMsg {
  type: "temperature";
  seq: number;
  t_sim: number;
  data: { celsius: number };
}

export interface SmokeMsg {
  type: "smoke";
  seq: number;
  t_sim: number;
  data: { detected: boolean };
}

export interface DirectionMsg {
  type: "direction";
  seq: number;
  t_sim: number;
  data: { direction: DirectionWord };
}

export interface PoseMsg {
  type: "pose";
  seq: number;
  t_sim: number;
  data: { x: number; y: number; heading_deg: number };
}

export interface JointsMsg {
  type: "joints";
  seq: number;
  t_sim: number;
  data: { angles_deg: number[] };
}

export interface EventMsg {
  type: "event";
  seq: number;
  t_sim: number;
  data: { name: EventName; detail?: string; x?: number; y?: number };
}

export type TelemetryMsg =
  | TemperatureMsg
  | SmokeMsg
  | DirectionMsg
  | PoseMsg
  | JointsMsg
  | EventMsg;

export type ParseResult =
  | { kind: "telemetry"; msg: TelemetryMsg }
  | { kind: "unknown"; raw: string; reason: string };

export interface RectShape {
  type: "rect";
  x_min: number;
  y_min: number;
  x_max: number;
  y_max: number;
}

export interface CircleShape {
  type: "circle";
  cx: number;
  cy: number;
  radius: number;
}

export type Shape = RectShape | CircleShape;

export type Command =
  | { type: "set_task"; data: { x: number; y: number; radius?: number } }
  | { type: "place_obstacle"; data: { shape: Shape } }
  | { type: "stop" }
  | {
      type: "set_rate";
      data: { pose_decimation?: number; joints_decimation?: number };
    };

function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function envelopeOk(obj: Record<string, unknown>): boolean {
  const keys = Object.keys(obj).sort();
  return (
    keys.length === 4 &&
    keys[0] === "data" &&
    keys[1] === "seq" &&
    keys[2] === "t_sim" &&
    keys[3] === "type" &&
    Number.isInteger(obj["seq"]) &&
    (obj["seq"] as number) >= 1 &&
    isFiniteNumber(obj["t_sim"]) &&
    (obj["t_sim"] as number) >= 0 &&
    typeof obj["data"] === "object" &&
    obj["data"] !== null &&
    !Array.isArray(obj["data"])
  );
}

function dataOk(type: string, data: Record<string, unknown>): boolean {
  switch (type) {
    case "temperature":
      return isFiniteNumber(data["celsius"]);
    case "smoke":
      return typeof data["detected"] === "boolean";
    case "direction":
      return DIRECTIONS.includes(data["direction"] as DirectionWord);
    case "pose":
      return (
        isFiniteNumber(data["x"]) &&
        isFiniteNumber(data["y"]) &&
        isFiniteNumber(data["heading_deg"])
      );
    case "joints":
      return (
        Array.isArray(data["angles_deg"]) &&
        data["angles_deg"].length === 12 &&
        data["angles_deg"].every(isFiniteNumber)
      );
    case "event":
      return EVENT_NAMES.includes(data["name"] as EventName);
    default:
      return false;
  }
}

/** One socket frame -> a typed message, or an "unknown" the UI logs and skips. */
export function parseTelemetry(raw: string): ParseResult {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    return { kind: "unknown", raw, reason: "not JSON" };
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    return { kind: "unknown", raw, reason: "not an object" };
  }
  const rec = obj as Record<string, unknown>;
  if (!envelopeOk(rec)) {
    return { kind: "unknown", raw, reason: "bad envelope" };
  }
  const type = rec["type"] as string;
  if (!dataOk(type, rec["data"] as Record<string, unknown>)) {
    return { kind: "unknown", raw, reason: `unrecognized ${type} payload` };
  }
  return { kind: "telemetry", msg: rec as unknown as TelemetryMsg };
}

/** Command -> the exact JSON text sent on the socket. */
export function serializeCommand(cmd: Command): string {
  return JSON.stringify(cmd);
}
