/**
 * Console session state and its reducer.
 *
 * All socket input funnels through `applyParsed`; the renderer only ever
 * reads the returned state. Indicator fields always reflect the
 * highest-seq message of their type, out-of-order frames are dropped,
 * unknown frames end up in the log instead of throwing.
 */

import {
  Command,
  DirectionWord,
  EventMsg,
  ParseResult,
  Shape,
  TelemetryMsg,
} from "./wire.js";

export const TRAIL_CAP = 2000;
export const STALE_SIM_GAP_S = 2.0;
export const LOG_CAP = 100;

export type ConnectionState = "connecting" | "open" | "closed";

export interface Latest {
  temperature?: { seq: number; t_sim: number; celsius: number };
  smoke?: { seq: number; t_sim: number; detected: boolean };
  direction?: { seq: number; t_sim: number; direction: DirectionWord };
  pose?: { seq: number; t_sim: number; x: number; y: number; heading_deg: number };
  joints?: { seq: number; t_sim: number; angles_deg: number[] };
  event?: { seq: number; t_sim: number };
}

export type AckStatus = "pending" | "accepted" | "rejected" | "error";

export interface CommandLogEntry {
  id: number;
  command: Command;
  status: AckStatus;
  detail?: string;
}

export interface LogLine {
  t_sim: number | null;
  text: string;
}

export interface Goal {
  x: number;
  y: number;
  radius: number;
}

export interface ConsoleState {
  connection: ConnectionState;
  latest: Latest;
  maxTSim: number;
  trail: Array<{ x: number; y: number }>;
  goal: Goal | null;
  /** Obstacles this console placed and the server accepted. */
  obstacles: Shape[];
  commands: CommandLogEntry[];
  log: LogLine[];
  nextCommandId: number;
}

export function initialState(): ConsoleState {
  return {
    connection: "connecting",
    latest: {},
    maxTSim: 0,
    trail: [],
    goal: null,
    obstacles: [],
    commands: [],
    log: [],
    nextCommandId: 1,
  };
}

function appendLog(log: LogLine[], t_sim: number | null, text: string): LogLine[] {
  const out = [...log, { t_sim, text }];
  return out.length > LOG_CAP ? out.slice(out.length - LOG_CAP) : out;
}

export function setConnection(
  state: ConsoleState,
  connection: ConnectionState,
): ConsoleState {
  const log =
    connection === "closed"
      ? appendLog(state.log, null, "connection closed")
      : state.log;
  return { ...state, connection, log };
}

/** Record a command as sent; returns its log id for ack tracking. */
export function noteCommandSent(
  state: ConsoleState,
  command: Command,
): { state: ConsoleState; id: number } {
  const id = state.nextCommandId;
  const next: ConsoleState = {
    ...state,
    commands: [...state.commands, { id, command, status: "pending" }],
    nextCommandId: id + 1,
  };
  return { state: next, id };
}

/** A send that never reached the socket: surfaced, not silently dropped. */
export function noteCommandFailed(
  state: ConsoleState,
  command: Command,
  reason: string,
): ConsoleState {
  const { state: next, id } = noteCommandSent(state, command);
  return resolveCommand(next, id, "error", reason);
}

function resolveCommand(
  state: ConsoleState,
  id: number,
  status: AckStatus,
  detail?: string,
): ConsoleState {
  const commands = state.commands.map((c) =>
    c.id === id ? { ...c, status, detail } : c,
  );
  return { ...state, commands };
}

function oldestPending(
  state: ConsoleState,
  want?: Command["type"],
): CommandLogEntry | undefined {
  return state.commands.find(
    (c) => c.status === "pending" && (want === undefined || c.command.type === want),
  );
}

function near(a: number, b: number): boolean {
  return Math.abs(a - b) <= 1e-6 * Math.max(1, Math.abs(a), Math.abs(b));
}

function applyEvent(state: ConsoleState, msg: EventMsg): ConsoleState {
  const { name, detail, x, y } = msg.data;
  let next: ConsoleState = {
    ...state,
    log: appendLog(state.log, msg.t_sim, detail ? `${name}: ${detail}` : name),
  };

  if (name === "task_accepted") {
    if (x !== undefined && y !== undefined) {
      // goal echo: match the pending set_task with these coordinates
      const entry = next.commands.find(
        (c) =>
          c.status === "pending" &&
          c.command.type === "set_task" &&
          near(c.command.data.x, x) &&
          near(c.command.data.y, y),
      );
      if (entry && entry.command.type === "set_task") {
        next = resolveCommand(next, entry.id, "accepted");
        next = {
          ...next,
          goal: { x, y, radius: entry.command.data.radius ?? 0.1 },
        };
      } else {
        // another operator's task: show the marker anyway
        next = { ...next, goal: { x, y, radius: 0.1 } };
      }
    } else if (detail === "obstacle placed") {
      const entry = oldestPending(next, "place_obstacle");
      if (entry && entry.command.type === "place_obstacle") {
        next = resolveCommand(next, entry.id, "accepted");
        next = { ...next, obstacles: [...next.obstacles, entry.command.data.shape] };
      }
    } else if (detail === "stopped") {
      const entry = oldestPending(next, "stop");
      if (entry) {
        next = resolveCommand(next, entry.id, "accepted");
      }
      next = { ...next, goal: null };
    } else {
      const entry = oldestPending(next);
      if (entry) {
        next = resolveCommand(next, entry.id, "accepted");
      }
    }
  } else if (name === "task_rejected") {
    const entry = oldestPending(next);
    if (entry) {
      next = resolveCommand(next, entry.id, "rejected", detail);
    }
  } else if (name === "command_error") {
    const entry = oldestPending(next);
    if (entry) {
      next = resolveCommand(next, entry.id, "error", detail);
    }
  } else if (name === "reached") {
    next = { ...next, goal: null };
  }
  return next;
}

export function applyTelemetry(state: ConsoleState, msg: TelemetryMsg): ConsoleState {
  const prev = state.latest[msg.type];
  if (prev !== undefined && msg.seq <= prev.seq) {
    return state; // out-of-order duplicate: the panel shows highest-seq only
  }
  let next: ConsoleState = {
    ...state,
    latest: {
      ...state.latest,
      [msg.type]: { seq: msg.seq, t_sim: msg.t_sim, ...msg.data },
    },
    maxTSim: Math.max(state.maxTSim, msg.t_sim),
  };

  if (msg.type === "pose") {
    const trail = [...state.trail, { x: msg.data.x, y: msg.data.y }];
    if (trail.length > TRAIL_CAP) {
      trail.splice(0, trail.length - TRAIL_CAP);
    }
    next = { ...next, trail };
  } else if (msg.type === "event") {
    next = applyEvent(next, msg);
  }
  return next;
}

export function applyParsed(state: ConsoleState, parsed: ParseResult): ConsoleState {
  if (parsed.kind === "telemetry") {
    return applyTelemetry(state, parsed.msg);
  }
  return {
    ...state,
    log: appendLog(state.log, null, `ignored frame (${parsed.reason})`),
  };
}
