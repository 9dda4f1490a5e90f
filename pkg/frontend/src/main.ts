/**
 * Entry point: connect the socket, fold frames into state, repaint on
 * animation frames. The endpoint defaults to port 7412 on the page's host
 * and can be overridden with ?ws=ws://host:port.
 */

import { buildPanel, Tool } from "./dom.js";
import {
  applyParsed,
  initialState,
  noteCommandFailed,
  noteCommandSent,
  setConnection,
} from "./state.js";
import { ConsoleSocket } from "./transport.js";
import { canvasToWorld, panelView, viewBoxFor } from "./view.js";
import { Command } from "./wire.js";

function endpoint(): string {
  const override = new URLSearchParams(window.location.search).get("ws");
  if (override) {
    return override;
  }
  const host = window.location.hostname || "localhost";
  return `ws://${host}:7412`;
}

function start(): void {
  let state = initialState();
  let dirty = true;

  const socket = new ConsoleSocket(endpoint(), {
    onFrame: (parsed) => {
      state = applyParsed(state, parsed);
      dirty = true;
    },
    onConnection: (conn) => {
      state = setConnection(state, conn);
      dirty = true;
    },
  });

  function dispatch(cmd: Command): void {
    if (socket.send(cmd)) {
      state = noteCommandSent(state, cmd).state;
    } else {
      state = noteCommandFailed(state, cmd, "connection not open");
    }
    dirty = true;
  }

  const panel = buildPanel(document.body, {
    onCanvasClick: (px, py, tool: Tool, radius) => {
      const box = viewBoxFor(state);
      const w = canvasToWorld(px, py, box, 640, 640);
      const x = Number(w.x.toFixed(3));
      const y = Number(w.y.toFixed(3));
      if (tool === "goal") {
        dispatch({ type: "set_task", data: { x, y, radius: 0.1 } });
      } else {
        dispatch({
          type: "place_obstacle",
          data: { shape: { type: "circle", cx: x, cy: y, radius } },
        });
      }
    },
    onStop: () => dispatch({ type: "stop" }),
  });

  function frame(): void {
    if (dirty) {
      panel.render(panelView(state));
      dirty = false;
    }
    window.requestAnimationFrame(frame);
  }
  window.requestAnimationFrame(frame);
}

start();
