"""Headless entry point: scripted runs, gait CSVs, sensor reports, serving.

The simulation loop lives here: it owns the world, the pose, the RNG, and
the controller, advancing one 20 ms tick at a time.  Gait phases are whole
numbers of ticks; the controller is stepped at phase boundaries (a walking
robot can only change direction between steps), and operator commands are
applied at those same boundaries.  Sensor frames are drawn every tick in a
fixed order, so a run is bit-reproducible from (config, seed) regardless
of how many telemetry clients watch it.

Direction changes swap the active gait plan between phases; foot
bookkeeping restarts in the new plan's cycle, which is the simulation
analogue of the robot re-planting its feet before a new maneuver.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .arena import (
    DEFAULT_BODY_RADIUS,
    Bounds,
    ParseError,
    RobotPose,
    SimulationTick,
    ValidationError,
    WorldState,
    advance,
    load_arena,
    save_arena,
)
from .controller import (
    ControllerParams,
    ControllerState,
    Mode,
    MotionCommand,
    RejectedCommandError,
    SetTask,
    Stop,
    handle_command,
    step,
)
from .gait import (
    Direction,
    GaitConfig,
    InfeasibleGaitError,
    LegId,
    ServoConfig,
    joint_trace,
    plan_cycle,
    to_shoulder_frame,
    trace_to_csv,
)
from .kinematics import IkBranch, KinematicsError, LegGeometry, inverse_kinematics
from .sensors import (
    SensorFrame,
    SmokeConfig,
    TemperatureConfig,
    UltrasonicConfig,
    read_frame,
    side_clearances,
)
from .telemetry import (
    BindError,
    CadenceConfig,
    PlaceObstacle,
    TelemetryService,
    normalize_floats,
    parse_command,
)

__all__ = [
    "SimConfig",
    "TickRecord",
    "RunTrace",
    "Simulation",
    "ConfigError",
    "load_sim_config",
    "run_sim",
    "emit_gait_csv",
    "sensor_accuracy_report",
    "format_report_table",
    "serve_loop",
    "main",
]


class ConfigError(Exception):
    """Configuration rejected; the message names the offending field."""


DEFAULT_BOUNDS = Bounds(-2.0, -2.0, 2.0, 2.0)
DEFAULT_MAX_TICKS = 20_000


@dataclass(frozen=True)
class SimConfig:
    geometry: LegGeometry = field(default_factory=LegGeometry)
    gait: GaitConfig = field(default_factory=GaitConfig)
    servo: ServoConfig = field(default_factory=ServoConfig)
    ultrasonic: UltrasonicConfig = field(default_factory=UltrasonicConfig)
    smoke: SmokeConfig = field(default_factory=SmokeConfig)
    temperature: TemperatureConfig = field(default_factory=TemperatureConfig)
    controller: ControllerParams = field(default_factory=ControllerParams)
    world: WorldState = field(default_factory=lambda: WorldState(bounds=DEFAULT_BOUNDS))
    dt: float = 0.02
    seed: int = 0
    max_ticks: int = DEFAULT_MAX_TICKS
    script: tuple[tuple[float, object], ...] = ()

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if self.max_ticks < 1:
            raise ConfigError("max_ticks must be >= 1")
        ticks = self.gait.phase_duration / self.dt
        if abs(ticks - round(ticks)) > 1e-9 or round(ticks) < 1:
            raise ConfigError(
                f"gait.phase_duration {self.gait.phase_duration}s must be a "
                f"whole number of dt={self.dt}s ticks")


# --- config file loading -----------------------------------------------------


def _build_from_table(cls, table: dict, where: str, converters: dict = {}):
    if not isinstance(table, dict):
        raise ConfigError(f"{where}: expected an object")
    kwargs = {}
    valid = set(cls.__dataclass_fields__)
    for key, value in table.items():
        if key in converters:
            name, value = converters[key](value)
        else:
            name = key
        if name not in valid:
            raise ConfigError(f"{where}.{key}: unknown field")
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as e:
        raise ConfigError(f"{where}: {e}") from e


def _deg_field(name):
    return lambda v: (name, math.radians(v))


def _limits_deg(v):
    try:
        limits = tuple((math.radians(lo), math.radians(hi)) for lo, hi in v)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"leg_geometry.joint_limits_deg: {e}") from e
    return ("joint_limits", limits)


def load_sim_config(source, base_dir: Path | None = None, *,
                    arena_override: str | None = None,
                    seed_override: int | None = None,
                    ticks_override: int | None = None) -> SimConfig:
    """Build a SimConfig from a JSON file path, JSON text, or parsed dict.

    Angle-valued fields use degrees in files (suffix _deg); lengths are
    meters.  Relative arena/script paths resolve against the config file's
    directory.
    """
    doc = source
    if isinstance(source, (str, Path)) and not (
            isinstance(source, str) and source.lstrip().startswith("{")):
        path = Path(source)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        base_dir = path.parent
        doc = path.read_text()
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config: invalid JSON at line {e.lineno}: {e.msg}") from e
    if not isinstance(doc, dict):
        raise ConfigError("config: expected a JSON object")
    base = base_dir if base_dir is not None else Path.cwd()

    known = {"leg_geometry", "gait", "servo", "ultrasonic", "smoke", "temperature",
             "controller", "dt", "seed", "max_ticks", "arena", "arena_path",
             "script", "script_path"}
    for key in doc:
        if key not in known:
            raise ConfigError(f"config.{key}: unknown field")

    geometry = _build_from_table(LegGeometry, doc.get("leg_geometry", {}),
                                 "leg_geometry", {"joint_limits_deg": _limits_deg})
    gait = _build_from_table(GaitConfig, doc.get("gait", {}), "gait",
                             {"turn_angle_deg": _deg_field("turn_angle")})
    servo = _build_from_table(ServoConfig, doc.get("servo", {}), "servo",
                              {"angle_range_deg": _deg_field("angle_range")})
    ultrasonic = _build_from_table(UltrasonicConfig, doc.get("ultrasonic", {}), "ultrasonic")
    smoke = _build_from_table(SmokeConfig, doc.get("smoke", {}), "smoke")
    temperature = _build_from_table(TemperatureConfig, doc.get("temperature", {}), "temperature")
    controller = _build_from_table(ControllerParams, doc.get("controller", {}), "controller",
                                   {"heading_threshold_deg": _deg_field("heading_threshold")})

    arena_src = arena_override if arena_override is not None else doc.get("arena_path")
    if arena_src is not None:
        arena_path = Path(arena_src)
        if not arena_path.is_absolute():
            arena_path = base / arena_path
        if not arena_path.is_file():
            raise ConfigError(f"arena_path: file not found: {arena_path}")
        try:
            world = load_arena(arena_path.read_text())
        except (ParseError, ValidationError) as e:
            raise ConfigError(f"arena_path: {e}") from e
    elif "arena" in doc:
        try:
            world = load_arena(doc["arena"])
        except (ParseError, ValidationError) as e:
            raise ConfigError(f"arena: {e}") from e
    else:
        world = WorldState(bounds=DEFAULT_BOUNDS)

    script_doc = doc.get("script")
    if "script_path" in doc:
        script_path = Path(doc["script_path"])
        if not script_path.is_absolute():
            script_path = base / script_path
        if not script_path.is_file():
            raise ConfigError(f"script_path: file not found: {script_path}")
        try:
            script_doc = json.loads(script_path.read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"script_path: invalid JSON: {e.msg}") from e
    script = _parse_script(script_doc) if script_doc is not None else ()

    seed = seed_override if seed_override is not None else doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("seed: must be an integer")
    max_ticks = ticks_override if ticks_override is not None else doc.get("max_ticks", DEFAULT_MAX_TICKS)
    if isinstance(max_ticks, bool) or not isinstance(max_ticks, int):
        raise ConfigError("max_ticks: must be an integer")
    dt = doc.get("dt", 0.02)
    if isinstance(dt, bool) or not isinstance(dt, (int, float)):
        raise ConfigError("dt: must be a number")

    return SimConfig(geometry=geometry, gait=gait, servo=servo, ultrasonic=ultrasonic,
                     smoke=smoke, temperature=temperature, controller=controller,
                     world=world, dt=float(dt), seed=seed, max_ticks=max_ticks,
                     script=script)


def _parse_script(doc) -> tuple[tuple[float, object], ...]:
    """Command script: JSON list of [t_sim, command-object] pairs."""
    from .telemetry import SchemaError

    if not isinstance(doc, list):
        raise ConfigError("script: expected a JSON list of [t_sim, command] pairs")
    entries = []
    for i, pair in enumerate(doc):
        where = f"script[{i}]"
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise ConfigError(f"{where}: expected a [t_sim, command] pair")
        t, cmd_doc = pair
        if isinstance(t, bool) or not isinstance(t, (int, float)) or t < 0:
            raise ConfigError(f"{where}: t_sim must be a number >= 0")
        if not isinstance(cmd_doc, dict):
            raise ConfigError(f"{where}: command must be an object")
        try:
            cmd = parse_command(cmd_doc)
        except SchemaError as e:
            raise ConfigError(f"{where}: {e}") from e
        entries.append((float(t), cmd))
    entries.sort(key=lambda pair: pair[0])
    return tuple(entries)


# --- simulation loop ---------------------------------------------------------


@dataclass(frozen=True)
class TickRecord:
    """State after one completed tick; tick_index is 1-based."""

    tick_index: int
    t_sim: float
    pose: tuple[float, float, float]  # x, y, heading_deg
    mode: str
    direction: str  # wire string of the active motion command
    frame: SensorFrame
    joints_deg: tuple[float, ...]
    events: tuple[dict, ...]

    @property
    def temperature_c(self) -> float:
        return self.frame.temperature_c

    @property
    def smoke(self) -> bool:
        return self.frame.smoke


@dataclass(frozen=True)
class RunTrace:
    records: tuple[TickRecord, ...]
    summary: dict

    def to_json(self) -> str:
        doc = {
            "summary": self.summary,
            "records": [
                {
                    "tick": r.tick_index,
                    "t_sim": r.t_sim,
                    "x": r.pose[0],
                    "y": r.pose[1],
                    "heading_deg": r.pose[2],
                    "mode": r.mode,
                    "direction": r.direction,
                    "sensors": {
                        "ultrasonic_m": r.frame.ultrasonic_distance,
                        "triggered": r.frame.ultrasonic_triggered,
                        "smoke": r.frame.smoke,
                        "temperature_c": r.frame.temperature_c,
                    },
                    "joints_deg": list(r.joints_deg),
                    "events": list(r.events),
                }
                for r in self.records
            ],
        }
        return json.dumps(normalize_floats(doc), separators=(",", ":")) + "\n"


class Simulation:
    """Deterministic tick-stepped run: world, pose, controller, gait."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.ticks_per_phase = round(cfg.gait.phase_duration / cfg.dt)
        try:
            self.plans = {d: plan_cycle(cfg.gait, d, cfg.geometry) for d in Direction}
        except InfeasibleGaitError as e:
            raise ConfigError(f"gait: {e}") from e
        self.rng = np.random.default_rng(cfg.seed)
        self.world = cfg.world
        start = cfg.world.robot_start
        radius = start.body_radius
        if radius == DEFAULT_BODY_RADIUS:
            radius = math.hypot(cfg.gait.body_length, cfg.gait.body_width) / 2
        self.pose = RobotPose(start.x, start.y, start.heading, radius)
        self.state = ControllerState()
        self.tick = SimulationTick(cfg.dt, 0)
        self.current_cmd = MotionCommand.HALT
        self.current_plan = None
        self.phase_slot = 0
        self.moving_phases = 0
        self._script_pos = 0
        self._pending: list = []
        self._collision_reported = False
        self.reached = False
        self.distance = 0.0
        self.done = False
        self.home_joints_deg = self._stand_posture_deg()

    def _stand_posture_deg(self) -> tuple[float, ...]:
        angles = []
        for leg in LegId:
            target = to_shoulder_frame(self.cfg.gait, leg,
                                       self.cfg.gait.home_foot(leg, self.cfg.geometry))
            try:
                q = inverse_kinematics(self.cfg.geometry, target, IkBranch.KNEE_UP)
            except KinematicsError as e:
                raise ConfigError(f"gait: standing posture unreachable for {leg.name}: {e}") from e
            angles.extend(math.degrees(v) for v in q.as_tuple())
        return tuple(angles)

    # -- commands

    def submit_command(self, cmd) -> None:
        """Queue an operator command; applied at the next phase boundary."""
        self._pending.append(cmd)

    def _apply_command(self, cmd) -> list[dict]:
        if isinstance(cmd, PlaceObstacle):
            obs = cmd.obstacle
            b = self.world.bounds
            inside = (
                b.contains(obs.cx - obs.radius, obs.cy - obs.radius)
                and b.contains(obs.cx + obs.radius, obs.cy + obs.radius)
            ) if hasattr(obs, "radius") else (
                b.contains(obs.x_min, obs.y_min) and b.contains(obs.x_max, obs.y_max)
            )
            if not inside:
                return [{"name": "task_rejected", "detail": "obstacle outside bounds"}]
            self.world = replace(self.world, obstacles=self.world.obstacles + (obs,))
            return [{"name": "task_accepted", "detail": "obstacle placed"}]
        try:
            self.state = handle_command(self.state, cmd, self.cfg.controller)
        except RejectedCommandError as e:
            return [{"name": "task_rejected", "detail": str(e)}]
        if isinstance(cmd, SetTask):
            return [{"name": "task_accepted", "x": self.state.task.goal_x,
                     "y": self.state.task.goal_y}]
        return [{"name": "task_accepted", "detail": "stopped"}]

    # -- stepping

    def step_tick(self) -> TickRecord:
        i = self.tick.index
        events: list[dict] = []
        boundary = i % self.ticks_per_phase == 0

        if boundary:
            now = self.tick.t_sim
            script = self.cfg.script
            while self._script_pos < len(script) and script[self._script_pos][0] <= now + 1e-12:
                events.extend(self._apply_command(script[self._script_pos][1]))
                self._script_pos += 1
            for cmd in self._pending:
                events.extend(self._apply_command(cmd))
            self._pending.clear()

        frame = read_frame(self.world, self.pose, self.tick.t_sim,
                           self.cfg.ultrasonic, self.cfg.smoke, self.cfg.temperature,
                           self.rng)

        if boundary:
            clearances = side_clearances(self.world, self.pose)
            prev_mode = self.state.mode
            self.state, cmd = step(self.state, frame, clearances, self.pose,
                                   self.cfg.controller)
            self.current_cmd = cmd
            if cmd is MotionCommand.HALT:
                self.current_plan = None
            else:
                self.current_plan = self.plans[cmd.gait_direction]
                self.phase_slot = self.moving_phases % 4
                self.moving_phases += 1
            if self.state.mode is Mode.REACHED and prev_mode is not Mode.REACHED:
                events.append({"name": "reached"})
                self.reached = True

        prev_x, prev_y = self.pose.x, self.pose.y
        self.world, self.pose = advance(self.world, self.pose, self.current_plan,
                                        self.phase_slot, self.cfg.dt)
        self.distance += math.hypot(self.pose.x - prev_x, self.pose.y - prev_y)
        if self.world.collided and not self._collision_reported:
            events.append({"name": "collision"})
            self._collision_reported = True

        if self.current_plan is None:
            joints = self.home_joints_deg
        else:
            u = (i % self.ticks_per_phase) / self.ticks_per_phase
            joints = self._joints_at(u)

        self.tick = self.tick.next()
        record = TickRecord(
            tick_index=self.tick.index,
            t_sim=self.tick.t_sim,
            pose=(self.pose.x, self.pose.y, math.degrees(self.pose.heading)),
            mode=self.state.mode.value,
            direction=self.current_cmd.value,
            frame=frame,
            joints_deg=joints,
            events=tuple(events),
        )
        script_done = self._script_pos >= len(self.cfg.script)
        if script_done and not self._pending and self.state.mode in (Mode.IDLE, Mode.REACHED):
            self.done = True
        return record

    def _joints_at(self, u: float) -> tuple[float, ...]:
        from .gait import foot_trajectory

        angles = []
        for leg in LegId:
            target = foot_trajectory(leg, u, self.current_plan, self.phase_slot)
            q = inverse_kinematics(self.cfg.geometry, target, IkBranch.KNEE_UP)
            angles.extend(math.degrees(v) for v in q.as_tuple())
        return tuple(angles)

    def summary(self) -> dict:
        return {
            "ticks": self.tick.index,
            "sim_seconds": self.tick.t_sim,
            "reached": self.reached,
            "collided": self.world.collided,
            "distance_m": self.distance,
            "cycles": self.moving_phases / 4.0,
            "final_mode": self.state.mode.value,
            "final_pose": {"x": self.pose.x, "y": self.pose.y,
                           "heading_deg": math.degrees(self.pose.heading)},
            "budget_exceeded": not self.done,
        }


def run_sim(cfg: SimConfig) -> RunTrace:
    """Run to completion: task reached, script exhausted, or tick budget."""
    sim = Simulation(cfg)
    records = []
    while not sim.done and sim.tick.index < cfg.max_ticks:
        records.append(sim.step_tick())
    return RunTrace(records=tuple(records), summary=sim.summary())


# --- reports and exports ------------------------------------------------------


def emit_gait_csv(cfg: SimConfig, direction: Direction, cycles: int,
                  samples_per_phase: int = 25) -> str:
    plan = plan_cycle(cfg.gait, direction, cfg.geometry)
    trace = joint_trace(plan, cfg.geometry, samples_per_phase, cycles=cycles)
    return trace_to_csv(trace)


def split_gait_csv(csv_text: str) -> dict[str, str]:
    """Combined CSV -> one document per leg (time column retained)."""
    lines = csv_text.strip().split("\n")
    header = lines[0].split(",")
    out = {}
    for leg in range(1, 5):
        cols = [0] + [header.index(f"L{leg}{j}") for j in range(1, 4)]
        rows = [",".join(line.split(",")[c] for c in cols) for line in lines]
        out[f"L{leg}"] = "\n".join(rows) + "\n"
    return out


def sensor_accuracy_report(cfg: SimConfig, trials: int) -> dict:
    """Read-vs-truth statistics for all three sensors over random poses."""
    from .arena import GaussianSource, RectObstacle, TemperatureField, temperature_at

    if trials < 1:
        raise ConfigError("trials must be >= 1")
    rng = np.random.default_rng(cfg.seed)
    bounds = Bounds(-10.0, -10.0, 10.0, 10.0)

    # Temperature: ambient plus one hot spot; poses sampled near the spot.
    temp_world = WorldState(
        bounds=bounds,
        temperature=TemperatureField(ambient_c=25.0,
                                     hot_spots=(GaussianSource(0.0, 0.0, 40.0, 1.5),)),
    )
    rel_errors = np.empty(trials)
    for n in range(trials):
        pose = RobotPose(rng.uniform(-2, 2), rng.uniform(-2, 2), 0.0)
        truth = temperature_at(temp_world, pose.x, pose.y)
        from .sensors import temperature_read
        reading = temperature_read(temp_world, pose, cfg.temperature, rng)
        rel_errors[n] = abs(reading - truth) / max(abs(truth), 1.0)

    # Ultrasonic: a wall placed at a random sub-threshold clearance; any
    # miss is either noise pushing past the threshold or a dropout.
    from .sensors import ultrasonic_read
    u = cfg.ultrasonic
    margin = 5 * u.noise_sigma
    hi = max(u.trigger_distance - margin, u.trigger_distance * 0.5)
    hits = 0
    pose = RobotPose(0.0, 0.0, 0.0)
    for _ in range(trials):
        clearance = rng.uniform(0.02, hi)
        x = pose.body_radius + clearance
        wall = RectObstacle(x, -2.0, x + 0.3, 2.0)
        world = WorldState(bounds=bounds, obstacles=(wall,))
        _, triggered = ultrasonic_read(world, pose, u, rng)
        hits += triggered

    # Smoke: poses inside the super-threshold core of one plume.
    from .sensors import smoke_read
    smoke_world = WorldState(bounds=bounds,
                             smoke_sources=(GaussianSource(0.0, 0.0, 4.0, 2.0),))
    detections = 0
    for _ in range(trials):
        pose_s = RobotPose(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0.0)
        detections += smoke_read(smoke_world, pose_s, cfg.smoke, rng)

    return {
        "trials": trials,
        "temperature": {
            "max_relative_error": float(np.max(rel_errors)),
            "mean_relative_error": float(np.mean(rel_errors)),
            "bound": cfg.temperature.relative_error_bound,
        },
        "ultrasonic": {
            "detection_rate": hits / trials,
            "configured_probability": cfg.ultrasonic.detection_probability,
        },
        "smoke": {
            "detection_rate": detections / trials,
            "configured_probability": cfg.smoke.detection_probability,
        },
    }


def format_report_table(report: dict) -> str:
    t = report["temperature"]
    lines = [
        f"sensor accuracy over {report['trials']} trials",
        f"  temperature  max rel err {t['max_relative_error']:.4%}  "
        f"mean {t['mean_relative_error']:.4%}  bound {t['bound']:.0%}",
        f"  ultrasonic   detection rate {report['ultrasonic']['detection_rate']:.4f}  "
        f"(configured {report['ultrasonic']['configured_probability']:.2f})",
        f"  smoke        detection rate {report['smoke']['detection_rate']:.4f}  "
        f"(configured {report['smoke']['configured_probability']:.2f})",
    ]
    return "\n".join(lines) + "\n"


# --- serving ------------------------------------------------------------------


def serve_loop(sim: Simulation, service: TelemetryService,
               max_ticks: int | None = None, throttle: bool = True,
               stop_check=None) -> None:
    """Drive the simulation while publishing; returns on budget or stop."""
    next_deadline = time.monotonic()
    while max_ticks is None or sim.tick.index < max_ticks:
        if stop_check is not None and stop_check():
            return
        for cmd in service.drain_commands():
            sim.submit_command(cmd)
        record = sim.step_tick()
        service.on_tick(record)
        if throttle:
            next_deadline += sim.cfg.dt
            delay = next_deadline - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            else:
                next_deadline = time.monotonic()


# --- argument parsing ----------------------------------------------------------


def _add_config_args(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON simulation config file")
    p.add_argument("--arena", help="arena JSON file (overrides config)")
    p.add_argument("--seed", type=int, help="random seed (overrides config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arachne",
        description="walking-robot simulation: gait traces, scripted runs, telemetry",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_run = sub.add_parser("run", help="run a scripted simulation to completion")
    _add_config_args(p_run)
    p_run.add_argument("--ticks", type=int, help="tick budget (overrides config)")
    p_run.add_argument("--out", help="write the full tick trace as JSON")

    p_csv = sub.add_parser("gait-csv", help="emit a joint-angle trace as CSV")
    _add_config_args(p_csv)
    p_csv.add_argument("--direction", default="forward",
                       choices=[d.value for d in Direction])
    p_csv.add_argument("--cycles", type=int, default=2)
    p_csv.add_argument("--samples-per-phase", type=int, default=25)
    p_csv.add_argument("--split-legs", action="store_true",
                       help="write one file per leg next to --out")
    p_csv.add_argument("--out", help="output CSV path (default stdout)")

    p_rep = sub.add_parser("sensor-report", help="read-vs-truth sensor statistics")
    _add_config_args(p_rep)
    p_rep.add_argument("--trials", type=int, default=10_000)
    p_rep.add_argument("--out", help="write the JSON report here")

    p_srv = sub.add_parser("serve", help="run live with the telemetry service")
    _add_config_args(p_srv)
    p_srv.add_argument("--port", type=int, help="TCP telemetry port")
    p_srv.add_argument("--ws-port", type=int, help="browser socket port")
    p_srv.add_argument("--no-throttle", action="store_true",
                       help="run as fast as possible instead of real time")
    p_srv.add_argument("--ticks", type=int, help="stop after this many ticks")

    p_val = sub.add_parser("arena-validate", help="check an arena file")
    p_val.add_argument("arena_file")
    p_val.add_argument("--out", help="write the canonical form here")
    return parser


def _load_config(args) -> SimConfig:
    # --arena is typed at the shell, so it resolves against the caller's
    # cwd; arena_path inside a config file resolves against that file.
    arena = args.arena
    if arena is not None:
        arena = str(Path.cwd() / arena)
    if args.config:
        return load_sim_config(args.config, arena_override=arena,
                               seed_override=args.seed,
                               ticks_override=getattr(args, "ticks", None))
    cfg = load_sim_config({}, arena_override=arena, seed_override=args.seed,
                          ticks_override=getattr(args, "ticks", None))
    return cfg


def _write_text(path: str, text: str) -> None:
    Path(path).write_text(text, newline="\n")


def _resolve_port(flag_value, env_name: str, default: int) -> int:
    if flag_value is not None:
        return flag_value
    env = os.environ.get(env_name)
    if env is not None:
        try:
            return int(env)
        except ValueError as e:
            raise ConfigError(f"{env_name}: not an integer: {env!r}") from e
    return default


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigError, BindError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.subcommand == "run":
        trace = run_sim(_load_config(args))
        if args.out:
            _write_text(args.out, trace.to_json())
        print(json.dumps(normalize_floats(trace.summary), indent=2))
        return 0

    if args.subcommand == "gait-csv":
        cfg = _load_config(args)
        csv_text = emit_gait_csv(cfg, Direction(args.direction), args.cycles,
                                 args.samples_per_phase)
        if args.split_legs:
            if not args.out:
                raise ConfigError("--split-legs requires --out")
            base = Path(args.out)
            for leg, text in split_gait_csv(csv_text).items():
                _write_text(str(base.with_name(f"{base.stem}-{leg}{base.suffix}")), text)
        elif args.out:
            _write_text(args.out, csv_text)
        else:
            sys.stdout.write(csv_text)
        return 0

    if args.subcommand == "sensor-report":
        cfg = _load_config(args)
        report = sensor_accuracy_report(cfg, args.trials)
        if args.out:
            _write_text(args.out, json.dumps(normalize_floats(report), indent=2,
                                             sort_keys=True) + "\n")
        sys.stdout.write(format_report_table(report))
        return 0

    if args.subcommand == "serve":
        cfg = _load_config(args)
        sim = Simulation(cfg)
        service = TelemetryService(
            tcp_port=_resolve_port(args.port, "ARACHNE_PORT", 7411),
            ws_port=_resolve_port(args.ws_port, "ARACHNE_WS_PORT", 7412),
            cadence=CadenceConfig(), dt=cfg.dt)
        service.start()
        print(f"telemetry on tcp:{service.tcp_port} ws:{service.ws_port}", flush=True)
        try:
            serve_loop(sim, service, max_ticks=args.ticks,
                       throttle=not args.no_throttle)
        except KeyboardInterrupt:
            pass
        finally:
            service.close()
        print(json.dumps(normalize_floats(sim.summary()), indent=2))
        return 0

    if args.subcommand == "arena-validate":
        path = Path(args.arena_file)
        if not path.is_file():
            raise ConfigError(f"arena file not found: {path}")
        try:
            world = load_arena(path.read_text())
        except (ParseError, ValidationError) as e:
            raise ConfigError(f"{path.name}: {e}") from e
        canonical = save_arena(world)
        if args.out:
            _write_text(args.out, canonical)
        print(f"ok: {len(world.obstacles)} obstacles, "
              f"{len(world.smoke_sources)} smoke sources, "
              f"{len(world.temperature.hot_spots)} hot spots")
        return 0

    raise ConfigError(f"unknown subcommand {args.subcommand!r}")


if __name__ == "__main__":
    sys.exit(main())
