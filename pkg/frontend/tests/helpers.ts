/** Shared test utilities: a small seeded RNG and telemetry corpus builders. */

import {
  DIRECTIONS,
  EVENT_NAMES,
  TelemetryMsg,
} from "../src/wire.js";

/** Deterministic PRNG so corpus tests replay exactly. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function pick<T>(rng: () => number, items: readonly T[]): T {
  return items[Math.floor(rng() * items.length)]!;
}

export function mkMsg(
  type: TelemetryMsg["type"],
  seq: number,
  t_sim: number,
  data: unknown,
): TelemetryMsg {
  return { type, seq, t_sim, data } as TelemetryMsg;
}

/** One random well-formed telemetry message. */
export function randomTelemetry(
  rng: () => number,
  seq: number,
  t_sim: number,
): TelemetryMsg {
  const type = pick(rng, [
    "temperature",
    "smoke",
    "direction",
    "pose",
    "joints",
    "event",
  ] as const);
  switch (type) {
    case "temperature":
      return mkMsg(type, seq, t_sim, { celsius: 15 + 30 * rng() });
    case "smoke":
      return mkMsg(type, seq, t_sim, { detected: rng() < 0.5 });
    case "direction":
      return mkMsg(type, seq, t_sim, { direction: pick(rng, DIRECTIONS) });
    case "pose":
      return mkMsg(type, seq, t_sim, {
        x: 4 * rng() - 2,
        y: 4 * rng() - 2,
        heading_deg: 360 * rng() - 180,
      });
    case "joints":
      return mkMsg(type, seq, t_sim, {
        angles_deg: Array.from({ length: 12 }, () => 180 * rng() - 90),
      });
    case "event": {
      const name = pick(rng, EVENT_NAMES);
      if (name === "task_accepted" && rng() < 0.5) {
        return mkMsg(type, seq, t_sim, {
          name,
          x: 4 * rng() - 2,
          y: 4 * rng() - 2,
        });
      }
      if (rng() < 0.5) {
        return mkMsg(type, seq, t_sim, { name, detail: "because" });
      }
      return mkMsg(type, seq, t_sim, { name });
    }
  }
}
