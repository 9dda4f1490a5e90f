/**
 * Both ends of the wire test against the same checked-in schema document.
 * Here the console's parser is held to it: everything the schema admits
 * parses, everything it rejects is refused or surfaced as unknown.
 */

import { readFileSync } from "node:fs";

import Ajv2020 from "ajv/dist/2020.js";
import { beforeAll, describe, expect, it } from "vitest";

import { Command, parseTelemetry, serializeCommand } from "../src/wire.js";
import { mulberry32, randomTelemetry } from "./helpers.js";

const schemaText = readFileSync(
  new URL("../../docs/wire-schema.json", import.meta.url),
  "utf8",
);

let validate: (doc: unknown) => boolean;

beforeAll(() => {
  const ajv = new Ajv2020({ allErrors: true });
  validate = ajv.compile(JSON.parse(schemaText));
});

const TELEMETRY_FIXTURES: Array<Record<string, unknown>> = [
  { type: "temperature", seq: 1, t_sim: 0.5, data: { celsius: 23.4 } },
  { type: "smoke", seq: 2, t_sim: 0.5, data: { detected: true } },
  { type: "direction", seq: 3, t_sim: 0.6, data: { direction: "forward" } },
  {
    type: "pose",
    seq: 4,
    t_sim: 0.62,
    data: { x: -0.25, y: 1.5, heading_deg: -90.0 },
  },
  {
    type: "joints",
    seq: 5,
    t_sim: 0.62,
    data: { angles_deg: [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11] },
  },
  { type: "event", seq: 6, t_sim: 0.7, data: { name: "collision" } },
  {
    type: "event",
    seq: 7,
    t_sim: 0.7,
    data: { name: "task_accepted", x: 1.0, y: 0.0 },
  },
  {
    type: "event",
    seq: 8,
    t_sim: 0.7,
    data: { name: "task_rejected", detail: "goal outside bounds" },
  },
];

const COMMAND_FIXTURES: Command[] = [
  { type: "set_task", data: { x: 1.0, y: 0.5 } },
  { type: "set_task", data: { x: 1.0, y: 0.5, radius: 0.2 } },
  {
    type: "place_obstacle",
    data: { shape: { type: "circle", cx: 0.2, cy: 0.0, radius: 0.12 } },
  },
  {
    type: "place_obstacle",
    data: { shape: { type: "rect", x_min: 0, y_min: 0, x_max: 1, y_max: 1 } },
  },
  { type: "stop" },
  { type: "set_rate", data: { pose_decimation: 5, joints_decimation: 0 } },
];

const NEAR_MISSES: Array<[string, Record<string, unknown>]> = [
  ["extra envelope key", { type: "smoke", seq: 1, t_sim: 0, data: { detected: true }, extra: 1 }],
  ["zero seq", { type: "smoke", seq: 0, t_sim: 0.5, data: { detected: true } }],
  ["unknown direction word", { type: "direction", seq: 1, t_sim: 0, data: { direction: "up" } }],
  ["eleven joints", { type: "joints", seq: 1, t_sim: 0, data: { angles_deg: [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10] } }],
  ["unknown event name", { type: "event", seq: 1, t_sim: 0, data: { name: "rebooted" } }],
  ["pose missing heading", { type: "pose", seq: 1, t_sim: 0, data: { x: 0, y: 0 } }],
  ["unknown message type", { type: "warp", seq: 1, t_sim: 0, data: {} }],
];

describe("shared wire schema", () => {
  it("admits every telemetry fixture the console parses", () => {
    for (const doc of TELEMETRY_FIXTURES) {
      expect(validate(doc), JSON.stringify(doc)).toBe(true);
      expect(parseTelemetry(JSON.stringify(doc)).kind).toBe("telemetry");
    }
  });

  it("admits exactly what the console serializes for each command", () => {
    for (const cmd of COMMAND_FIXTURES) {
      const doc = JSON.parse(serializeCommand(cmd));
      expect(validate(doc), serializeCommand(cmd)).toBe(true);
    }
  });

  it("rejects the same near-misses the console refuses", () => {
    for (const [label, doc] of NEAR_MISSES) {
      expect(validate(doc), label).toBe(false);
      expect(parseTelemetry(JSON.stringify(doc)).kind, label).toBe("unknown");
    }
  });

  it("rejects malformed commands", () => {
    expect(validate({ type: "set_task", data: { x: 1.0 } })).toBe(false);
    expect(
      validate({
        type: "place_obstacle",
        data: { shape: { type: "hexagon", cx: 0, cy: 0, radius: 1 } },
      }),
    ).toBe(false);
    expect(validate({ type: "set_rate", data: { pose_decimation: -1 } })).toBe(false);
  });

  it("agrees with the console parser over a seeded corpus", () => {
    const rng = mulberry32(29);
    for (let seq = 1; seq <= 250; seq++) {
      const msg = randomTelemetry(rng, seq, seq * 0.02);
      const raw = JSON.stringify(msg);
      expect(validate(JSON.parse(raw)), raw).toBe(true);
      expect(parseTelemetry(raw).kind, raw).toBe("telemetry");

      // one envelope-level mutation must flip both verdicts
      const broken: Record<string, unknown> = { ...(msg as unknown as Record<string, unknown>) };
      const kind = seq % 3;
      if (kind === 0) {
        delete broken["seq"];
      } else if (kind === 1) {
        broken["seq"] = 0;
      } else {
        broken["note"] = "x";
      }
      const rawBroken = JSON.stringify(broken);
      expect(validate(JSON.parse(rawBroken)), rawBroken).toBe(false);
      expect(parseTelemetry(rawBroken).kind, rawBroken).toBe("unknown");
    }
  });
});
