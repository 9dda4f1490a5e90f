/**
 * DOM shell: builds the panel once, then repaints it from PanelView data.
 * All decisions about what to show live in view.ts; this file only moves
 * values into elements and pixels onto the canvas.
 */

import { PanelView, worldToCanvas } from "./view.js";
import { Shape } from "./wire.js";

export type Tool = "goal" | "obstacle";

export interface PanelHooks {
  onCanvasClick: (px: number, py: number, tool: Tool, radius: number) => void;
  onStop: () => void;
}

export interface PanelDom {
  root: HTMLElement;
  render: (view: PanelView) => void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

export function buildPanel(host: HTMLElement, hooks: PanelHooks): PanelDom {
  const root = el("div", "console");

  const status = el("div", "status", "connecting");
  root.appendChild(status);

  const lampRow = el("div", "lamp-row");
  const lampEls = {
    forward: el("div", "lamp", "FWD"),
    left: el("div", "lamp", "LEFT"),
    right: el("div", "lamp", "RIGHT"),
    backward: el("div", "lamp", "BACK"),
  };
  for (const lamp of Object.values(lampEls)) {
    lampRow.appendChild(lamp);
  }
  const smokeLamp = el("div", "lamp smoke", "SMOKE");
  lampRow.appendChild(smokeLamp);
  root.appendChild(lampRow);

  const gauges = el("div", "gauges");
  const thermo = el("div", "thermo", "--.- °C");
  const poseLine = el("div", "pose", "pose unknown");
  gauges.appendChild(thermo);
  gauges.appendChild(poseLine);
  root.appendChild(gauges);

  const toolbar = el("div", "toolbar");
  const goalBtn = el("button", "tool active", "goal tool");
  const obstacleBtn = el("button", "tool", "obstacle tool");
  const radiusInput = el("input") as HTMLInputElement;
  radiusInput.type = "number";
  radiusInput.step = "0.05";
  radiusInput.min = "0.05";
  radiusInput.value = "0.15";
  radiusInput.title = "obstacle radius (m)";
  const stopBtn = el("button", "stop", "STOP");
  let tool: Tool = "goal";
  goalBtn.onclick = () => {
    tool = "goal";
    goalBtn.classList.add("active");
    obstacleBtn.classList.remove("active");
  };
  obstacleBtn.onclick = () => {
    tool = "obstacle";
    obstacleBtn.classList.add("active");
    goalBtn.classList.remove("active");
  };
  stopBtn.onclick = () => hooks.onStop();
  toolbar.append(goalBtn, obstacleBtn, radiusInput, stopBtn);
  root.appendChild(toolbar);

  const canvas = el("canvas") as HTMLCanvasElement;
  canvas.width = 640;
  canvas.height = 640;
  canvas.className = "arena";
  canvas.onclick = (ev: MouseEvent) => {
    const rect = canvas.getBoundingClientRect();
    const px = ((ev.clientX - rect.left) / rect.width) * canvas.width;
    const py = ((ev.clientY - rect.top) / rect.height) * canvas.height;
    hooks.onCanvasClick(px, py, tool, Number(radiusInput.value) || 0.15);
  };
  root.appendChild(canvas);

  const commandBox = el("pre", "commands", "");
  const logBox = el("pre", "log", "");
  root.appendChild(commandBox);
  root.appendChild(logBox);

  host.appendChild(root);
  const ctx = canvas.getContext("2d");

  function drawObstacle(view: PanelView, shape: Shape): void {
    if (!ctx) {
      return;
    }
    const { viewBox } = view.canvas;
    ctx.fillStyle = "#8a6d3b";
    if (shape.type === "circle") {
      const c = worldToCanvas(shape.cx, shape.cy, viewBox, canvas.width, canvas.height);
      const edge = worldToCanvas(
        shape.cx + shape.radius, shape.cy, viewBox, canvas.width, canvas.height,
      );
      ctx.beginPath();
      ctx.arc(c.px, c.py, Math.abs(edge.px - c.px), 0, 2 * Math.PI);
      ctx.fill();
    } else {
      const a = worldToCanvas(shape.x_min, shape.y_max, viewBox, canvas.width, canvas.height);
      const b = worldToCanvas(shape.x_max, shape.y_min, viewBox, canvas.width, canvas.height);
      ctx.fillRect(a.px, a.py, b.px - a.px, b.py - a.py);
    }
  }

  function render(view: PanelView): void {
    status.textContent = view.connectionText;
    status.classList.toggle("closed", view.connectionText === "closed");

    for (const name of ["forward", "left", "right", "backward"] as const) {
      lampEls[name].classList.toggle("lit", view.lamps[name]);
    }
    smokeLamp.classList.toggle("alarm", view.smokeOn);
    smokeLamp.classList.toggle("stale", view.smokeStale);
    thermo.textContent = view.temperatureText;
    thermo.classList.toggle("stale", view.temperatureStale);
    poseLine.textContent = view.poseText;
    commandBox.textContent = view.commandLines.join("\n");
    logBox.textContent = view.logLines.join("\n");

    if (!ctx) {
      return;
    }
    const { viewBox, robot, trail, goal, obstacles } = view.canvas;
    ctx.fillStyle = "#11161d";
    ctx.fillRect(0, 0, canvas.width, canvas.height);

    for (const shape of obstacles) {
      drawObstacle(view, shape);
    }

    if (goal) {
      const g = worldToCanvas(goal.x, goal.y, viewBox, canvas.width, canvas.height);
      const e = worldToCanvas(
        goal.x + goal.radius, goal.y, viewBox, canvas.width, canvas.height,
      );
      ctx.strokeStyle = "#3fb950";
      ctx.beginPath();
      ctx.arc(g.px, g.py, Math.abs(e.px - g.px), 0, 2 * Math.PI);
      ctx.stroke();
      ctx.beginPath();
      ctx.moveTo(g.px - 6, g.py);
      ctx.lineTo(g.px + 6, g.py);
      ctx.moveTo(g.px, g.py - 6);
      ctx.lineTo(g.px, g.py + 6);
      ctx.stroke();
    }

    if (trail.length > 1) {
      ctx.strokeStyle = "#58a6ff";
      ctx.beginPath();
      trail.forEach((p, i) => {
        const q = worldToCanvas(p.x, p.y, viewBox, canvas.width, canvas.height);
        if (i === 0) {
          ctx.moveTo(q.px, q.py);
        } else {
          ctx.lineTo(q.px, q.py);
        }
      });
      ctx.stroke();
    }

    if (robot) {
      const r = worldToCanvas(robot.x, robot.y, viewBox, canvas.width, canvas.height);
      ctx.fillStyle = "#e3b341";
      ctx.beginPath();
      ctx.arc(r.px, r.py, 7, 0, 2 * Math.PI);
      ctx.fill();
      const rad = (robot.headingDeg * Math.PI) / 180;
      ctx.strokeStyle = "#e3b341";
      ctx.beginPath();
      ctx.moveTo(r.px, r.py);
      ctx.lineTo(r.px + 16 * Math.cos(rad), r.py - 16 * Math.sin(rad));
      ctx.stroke();
    }
  }

  return { root, render };
}
