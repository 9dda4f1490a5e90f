/**
 * Pure projection of ConsoleState onto what the panel draws.
 *
 * Everything here is plain data in and plain data out so the whole render
 * contract is testable without a browser: lamp one-hotness, staleness
 * flags, and the canvas coordinate mapping used for click-to-task.
 */

import { ConsoleState, STALE_SIM_GAP_S } from "./state.js";
import { DirectionWord, Shape } from "./wire.js";

export interface Lamps {
  forward: boolean;
  left: boolean;
  right: boolean;
  backward: boolean;
}

export interface ViewBox {
  xMin: number;
  yMin: number;
  xMax: number;
  yMax: number;
}

export interface PanelView {
  connectionText: string;
  awaitingData: boolean;
  lamps: Lamps;
  smokeOn: boolean;
  temperatureText: string;
  temperatureC: number | null;
  temperatureStale: boolean;
  smokeStale: boolean;
  poseText: string;
  commandLines: string[];
  logLines: string[];
  canvas: {
    viewBox: ViewBox;
    robot: { x: number; y: number; headingDeg: number } | null;
    trail: Array<{ x: number; y: number }>;
    goal: { x: number; y: number; radius: number } | null;
    obstacles: Shape[];
  };
}

const DEFAULT_VIEW: ViewBox = { xMin: -2, yMin: -2, xMax: 2, yMax: 2 };

export function lampsFor(direction: DirectionWord | undefined): Lamps {
  return {
    forward: direction === "forward",
    left: direction === "left",
    right: direction === "right",
    backward: direction === "backward",
  };
}

function grow(box: ViewBox, x: number, y: number, margin: number): ViewBox {
  return {
    xMin: Math.min(box.xMin, x - margin),
    yMin: Math.min(box.yMin, y - margin),
    xMax: Math.max(box.xMax, x + margin),
    yMax: Math.max(box.yMax, y + margin),
  };
}

/** The world rectangle the canvas shows: default bounds grown to fit data. */
export function viewBoxFor(state: ConsoleState): ViewBox {
  let box = { ...DEFAULT_VIEW };
  for (const p of state.trail) {
    box = grow(box, p.x, p.y, 0.2);
  }
  if (state.goal) {
    box = grow(box, state.goal.x, state.goal.y, state.goal.radius + 0.2);
  }
  for (const s of state.obstacles) {
    if (s.type === "circle") {
      box = grow(box, s.cx, s.cy, s.radius + 0.2);
    } else {
      box = grow(box, s.x_min, s.y_min, 0.2);
      box = grow(box, s.x_max, s.y_max, 0.2);
    }
  }
  return box;
}

/**
 * Pixel -> world for canvas clicks. The world box is fit into the canvas
 * preserving aspect ratio, centered, with +y up (screen y grows down).
 */
export function canvasToWorld(
  px: number,
  py: number,
  box: ViewBox,
  widthPx: number,
  heightPx: number,
): { x: number; y: number } {
  const { scale, offX, offY } = fitTransform(box, widthPx, heightPx);
  return { x: (px - offX) / scale, y: (heightPx - py - offY) / scale };
}

/** World -> pixel, the inverse of canvasToWorld. */
export function worldToCanvas(
  x: number,
  y: number,
  box: ViewBox,
  widthPx: number,
  heightPx: number,
): { px: number; py: number } {
  const { scale, offX, offY } = fitTransform(box, widthPx, heightPx);
  return { px: x * scale + offX, py: heightPx - (y * scale + offY) };
}

function fitTransform(box: ViewBox, widthPx: number, heightPx: number) {
  const w = box.xMax - box.xMin;
  const h = box.yMax - box.yMin;
  const scale = Math.min(widthPx / w, heightPx / h);
  const offX = (widthPx - w * scale) / 2 - box.xMin * scale;
  const offY = (heightPx - h * scale) / 2 - box.yMin * scale;
  return { scale, offX, offY };
}

export function panelView(state: ConsoleState): PanelView {
  const { latest } = state;
  const awaitingData = state.maxTSim === 0.0 && state.trail.length === 0;
  const temperatureStale =
    latest.temperature !== undefined &&
    state.maxTSim - latest.temperature.t_sim > STALE_SIM_GAP_S;
  const smokeStale =
    latest.smoke !== undefined &&
    state.maxTSim - latest.smoke.t_sim > STALE_SIM_GAP_S;

  const pose = latest.pose;
  return {
    connectionText:
      state.connection === "open"
        ? awaitingData
          ? "connected, awaiting data"
          : "live"
        : state.connection,
    awaitingData,
    lamps: lampsFor(latest.direction?.direction),
    smokeOn: latest.smoke?.detected === true,
    temperatureText:
      latest.temperature === undefined
        ? "--.- °C"
        : `${latest.temperature.celsius.toFixed(1)} °C`,
    temperatureC: latest.temperature?.celsius ?? null,
    temperatureStale,
    smokeStale,
    poseText:
      pose === undefined
        ? "pose unknown"
        : `x ${pose.x.toFixed(3)}  y ${pose.y.toFixed(3)}  hdg ${pose.heading_deg.toFixed(1)}°`,
    commandLines: state.commands
      .slice(-8)
      .map(
        (c) =>
          `#${c.id} ${c.command.type} ${c.status}` +
          (c.detail ? ` (${c.detail})` : ""),
      ),
    logLines: state.log.slice(-12).map((l) => {
      const stamp = l.t_sim === null ? "--" : l.t_sim.toFixed(2);
      return `[${stamp}] ${l.text}`;
    }),
    canvas: {
      viewBox: viewBoxFor(state),
      robot:
        pose === undefined
          ? null
          : { x: pose.x, y: pose.y, headingDeg: pose.heading_deg },
      trail: state.trail,
      goal: state.goal,
      obstacles: state.obstacles,
    },
  };
}
