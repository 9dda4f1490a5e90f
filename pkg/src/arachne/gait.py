"""Crawl-gait planning: phase schedules, foot trajectories, joint traces.

The robot walks a statically stable crawl: one leg swings per phase while
the other three stay planted, and the body is pushed along continuously.
Forward walking swings the legs in the fixed order Leg1, Leg3, Leg4, Leg2;
backward is the forward cycle time-reversed; left/right are in-place
turning cycles with the same swing order.

Geometry conventions: body frame x forward, y left, z up.  Each leg's
shoulder frame has z up and x pointing straight out from the body side, so
q1 = 0 aims the leg sideways.  Front legs place their feet in the front
3/4 of the reachable fore-aft interval, rear legs in the rear 3/4.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .kinematics import (
    FootPosition,
    IkBranch,
    JointAngles,
    KinematicsError,
    LegGeometry,
    inverse_kinematics,
    reachable,
)

__all__ = [
    "Direction",
    "LegId",
    "GaitConfig",
    "GaitPhase",
    "GaitPlan",
    "GaitTrace",
    "ServoConfig",
    "InfeasibleGaitError",
    "OutOfRangeError",
    "TraceIkError",
    "FORWARD_SEQUENCE",
    "plan_cycle",
    "foot_position_body",
    "foot_trajectory",
    "joint_trace",
    "trace_to_csv",
    "angle_to_pulse",
]


class Direction(Enum):
    FORWARD = "forward"
    LEFT = "left"
    RIGHT = "right"
    BACKWARD = "backward"


class LegId(Enum):
    LEG1 = 1  # front right
    LEG2 = 2  # front left
    LEG3 = 3  # back left
    LEG4 = 4  # back right

    @property
    def index(self) -> int:
        return self.value

    @property
    def is_front(self) -> bool:
        return self in (LegId.LEG1, LegId.LEG2)

    @property
    def is_left(self) -> bool:
        return self in (LegId.LEG2, LegId.LEG3)


FORWARD_SEQUENCE = (LegId.LEG1, LegId.LEG3, LegId.LEG4, LegId.LEG2)

PHASES_PER_CYCLE = 4

# Stance occupies 3 of 4 phases, so a foot's fore-aft sweep in the body
# frame is 3/4 of the body's per-cycle displacement.
SWEEP_FRACTION = 0.75


class InfeasibleGaitError(Exception):
    """Configured stride/offsets push a foot target out of its workspace."""


class OutOfRangeError(Exception):
    """Angle outside the servo's mechanical range."""


class TraceIkError(Exception):
    """IK failed while sampling a joint trace."""

    def __init__(self, leg: "LegId", sample: int, cause: KinematicsError):
        self.leg = leg
        self.sample = sample
        super().__init__(f"IK failed for {leg.name} at sample {sample}: {cause}")


@dataclass(frozen=True)
class GaitConfig:
    """Crawl-gait tuning.  Lengths meters, angles radians, durations seconds.

    stride_length is the body displacement per full four-phase cycle;
    turn_angle the per-cycle yaw of the turning gaits.  stance_y_offset is
    the lateral distance from shoulder to foot track, stand_height the
    shoulder height above the foot plane.
    """

    stride_length: float = 0.08
    step_height: float = 0.03
    phase_duration: float = 0.5
    stance_y_offset: float = 0.12
    workspace_partition: float = 0.75
    stand_height: float = 0.08
    body_length: float = 0.20
    body_width: float = 0.12
    turn_angle: float = math.pi / 4
    max_joint_velocity: float = 6.0

    def __post_init__(self):
        positive = (
            "step_height", "phase_duration", "stance_y_offset", "stand_height",
            "body_length", "body_width", "turn_angle", "max_joint_velocity",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"GaitConfig.{name} must be positive")
        if self.stride_length < 0:
            raise ValueError("GaitConfig.stride_length must be >= 0")
        if not 0 < self.workspace_partition <= 1:
            raise ValueError("GaitConfig.workspace_partition must be in (0, 1]")

    @property
    def cycle_duration(self) -> float:
        return PHASES_PER_CYCLE * self.phase_duration

    def mount(self, leg: LegId) -> tuple[float, float]:
        """Shoulder position in the body frame."""
        hx = self.body_length / 2
        hy = self.body_width / 2
        return (hx if leg.is_front else -hx, hy if leg.is_left else -hy)

    def home_foot(self, leg: LegId, geometry: LegGeometry) -> np.ndarray:
        """Steady-state foot center in the body frame."""
        mx, my = self.mount(leg)
        s_home = self.home_sagittal(leg, geometry)
        lateral = self.stance_y_offset if leg.is_left else -self.stance_y_offset
        return np.array([mx + s_home, my + lateral, -self.stand_height])

    def sagittal_span(self, geometry: LegGeometry) -> float:
        """Half-width S of the reachable fore-aft interval at stance height
        and lateral offset: feet may sit anywhere in [-S, +S]."""
        g = geometry
        r2 = (g.l2 + g.l3) ** 2 - self.stand_height**2
        if r2 <= 0:
            raise InfeasibleGaitError(
                f"stand_height {self.stand_height} exceeds leg reach {g.l2 + g.l3}"
            )
        rho_max = g.l1 + math.sqrt(r2)
        s2 = rho_max**2 - self.stance_y_offset**2
        if s2 <= 0:
            raise InfeasibleGaitError(
                f"stance_y_offset {self.stance_y_offset} beyond reach {rho_max:.4f}"
            )
        return math.sqrt(s2)

    def home_sagittal(self, leg: LegId, geometry: LegGeometry) -> float:
        """Center of the leg's workspace partition along body-forward."""
        s = self.sagittal_span(geometry) * (1.0 - self.workspace_partition)
        return s if leg.is_front else -s

    def partition_interval(self, leg: LegId, geometry: LegGeometry) -> tuple[float, float]:
        """Allowed fore-aft interval for the leg's foot: the front (rear)
        fraction `workspace_partition` of [-S, +S]."""
        span = self.sagittal_span(geometry)
        width = 2.0 * self.workspace_partition * span
        if leg.is_front:
            return (span - width, span)
        return (-span, -span + width)


def to_shoulder_frame(cfg: GaitConfig, leg: LegId, p_body: np.ndarray) -> FootPosition:
    """Body-frame point -> the leg's shoulder frame (exact quarter-turn)."""
    mx, my = cfg.mount(leg)
    dx = p_body[0] - mx
    dy = p_body[1] - my
    if leg.is_left:
        return FootPosition(dy, -dx, float(p_body[2]))
    return FootPosition(-dy, dx, float(p_body[2]))


def sagittal_of(cfg: GaitConfig, leg: LegId, p_body: np.ndarray) -> float:
    """Body-forward coordinate of a foot relative to its shoulder."""
    return float(p_body[0] - cfg.mount(leg)[0])


@dataclass(frozen=True)
class GaitPhase:
    """One quarter of a cycle: a single swing leg plus the body's motion.

    Swing endpoints are body-frame foot positions.  body_dx/body_dy is the
    body-frame displacement over the phase, body_dyaw the heading change;
    plans never mix translation and rotation in one phase.
    """

    swing_leg: LegId
    swing_start: tuple[float, float, float]
    swing_end: tuple[float, float, float]
    apex_height: float
    body_dx: float
    body_dy: float
    body_dyaw: float


@dataclass(frozen=True)
class GaitPlan:
    direction: Direction
    phases: tuple[GaitPhase, ...]
    config: GaitConfig

    @property
    def cycle_displacement(self) -> tuple[float, float]:
        return (
            sum(p.body_dx for p in self.phases),
            sum(p.body_dy for p in self.phases),
        )

    @property
    def cycle_yaw(self) -> float:
        return sum(p.body_dyaw for p in self.phases)

    def swing_slot(self, leg: LegId) -> int:
        for k, phase in enumerate(self.phases):
            if phase.swing_leg is leg:
                return k
        raise ValueError(f"{leg} has no swing phase")


def _rot_z(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def plan_cycle(
    cfg: GaitConfig,
    direction: Direction,
    geometry: LegGeometry | None = None,
) -> GaitPlan:
    """Build one periodic crawl cycle for a walking direction.

    Every sampled foot target is verified reachable and inside the leg's
    workspace partition; violations raise InfeasibleGaitError.
    """
    g = geometry if geometry is not None else LegGeometry()
    sweep = SWEEP_FRACTION * cfg.stride_length
    half = sweep / 2.0
    turn_half = SWEEP_FRACTION * cfg.turn_angle / 2.0

    phases = []
    if direction in (Direction.FORWARD, Direction.BACKWARD):
        sign = 1.0 if direction is Direction.FORWARD else -1.0
        order = FORWARD_SEQUENCE if direction is Direction.FORWARD else tuple(reversed(FORWARD_SEQUENCE))
        for leg in order:
            home = cfg.home_foot(leg, g)
            start = home - np.array([sign * half, 0.0, 0.0])
            end = home + np.array([sign * half, 0.0, 0.0])
            phases.append(GaitPhase(
                swing_leg=leg,
                swing_start=tuple(start),
                swing_end=tuple(end),
                apex_height=cfg.step_height,
                body_dx=sign * cfg.stride_length / PHASES_PER_CYCLE,
                body_dy=0.0,
                body_dyaw=0.0,
            ))
    else:
        sign = 1.0 if direction is Direction.LEFT else -1.0
        for leg in FORWARD_SEQUENCE:
            home = cfg.home_foot(leg, g)
            start_xy = _rot_z(-sign * turn_half) @ home[:2]
            end_xy = _rot_z(sign * turn_half) @ home[:2]
            phases.append(GaitPhase(
                swing_leg=leg,
                swing_start=(float(start_xy[0]), float(start_xy[1]), float(home[2])),
                swing_end=(float(end_xy[0]), float(end_xy[1]), float(home[2])),
                apex_height=cfg.step_height,
                body_dx=0.0,
                body_dy=0.0,
                body_dyaw=sign * cfg.turn_angle / PHASES_PER_CYCLE,
            ))

    plan = GaitPlan(direction=direction, phases=tuple(phases), config=cfg)
    _validate_plan(plan, g)
    return plan


def _validate_plan(plan: GaitPlan, g: LegGeometry, samples: int = 21) -> None:
    cfg = plan.config
    for k in range(PHASES_PER_CYCLE):
        for leg in LegId:
            lo, hi = cfg.partition_interval(leg, g)
            for u in np.linspace(0.0, 1.0, samples):
                p = foot_position_body(plan, leg, k, float(u))
                target = to_shoulder_frame(cfg, leg, p)
                if not reachable(g, target):
                    raise InfeasibleGaitError(
                        f"{leg.name} target {tuple(round(v, 4) for v in p)} unreachable "
                        f"in phase {k} (u={u:.2f})"
                    )
                s = sagittal_of(cfg, leg, p)
                if not lo - 1e-9 <= s <= hi + 1e-9:
                    raise InfeasibleGaitError(
                        f"{leg.name} sagittal {s:.4f} outside partition "
                        f"[{lo:.4f}, {hi:.4f}] in phase {k}"
                    )


def foot_position_body(plan: GaitPlan, leg: LegId, phase_index: int, u: float) -> np.ndarray:
    """Body-frame foot position at fraction u through a phase.

    Swing legs lift along a straight chord with a sin^2 vertical profile;
    stance feet stay world-fixed, which in the body frame is the inverse of
    the body's motion applied continuously since the leg's last landing.
    """
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"phase fraction {u} outside [0, 1]")
    k = phase_index % PHASES_PER_CYCLE
    phase = plan.phases[k]
    slot = plan.swing_slot(leg)

    if slot == k:
        start = np.array(phase.swing_start)
        end = np.array(phase.swing_end)
        p = start + u * (end - start)
        if not np.array_equal(start, end):
            p[2] += phase.apex_height * math.sin(math.pi * u) ** 2
        return p

    # Stance: tau phases elapsed since this leg's landing (0 <= tau < 3).
    landing = np.array(plan.phases[slot].swing_end)
    tau = (k - slot - 1) % PHASES_PER_CYCLE + u
    dxy = np.array([phase.body_dx, phase.body_dy])
    xy = landing[:2] - tau * dxy
    if phase.body_dyaw != 0.0:
        xy = _rot_z(-tau * phase.body_dyaw) @ xy
    return np.array([xy[0], xy[1], landing[2]])


def foot_trajectory(leg: LegId, phase_time: float, plan: GaitPlan, phase_index: int = 0) -> FootPosition:
    """Shoulder-frame foot position at fraction phase_time of a phase."""
    p = foot_position_body(plan, leg, phase_index, phase_time)
    return to_shoulder_frame(plan.config, leg, p)


COLUMN_LABELS = tuple(f"L{j}{k}" for j in range(1, 5) for k in range(1, 4))


@dataclass(frozen=True)
class GaitTrace:
    """Sampled joint-angle time series, one (q1, q2, q3) row set per leg."""

    times: np.ndarray
    angles: dict[LegId, np.ndarray]  # radians, shape (n, 3)

    def as_matrix(self) -> np.ndarray:
        """Columns L11..L43, radians."""
        return np.hstack([self.angles[leg] for leg in LegId])

    def as_degrees(self) -> np.ndarray:
        return np.degrees(self.as_matrix())


def joint_trace(
    plan: GaitPlan,
    g: LegGeometry,
    samples_per_phase: int,
    cycles: int = 1,
    branch: IkBranch = IkBranch.KNEE_UP,
) -> GaitTrace:
    """Inverse kinematics along the plan: joint angles per leg per sample.

    Output is periodic with the four-phase cycle.  IK failures surface as
    TraceIkError naming the leg and sample index.
    """
    if samples_per_phase < 1:
        raise ValueError("samples_per_phase must be >= 1")
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    n = PHASES_PER_CYCLE * samples_per_phase * cycles
    times = np.arange(n) * (plan.config.phase_duration / samples_per_phase)
    angles = {leg: np.empty((n, 3)) for leg in LegId}
    for i in range(n):
        slot = (i // samples_per_phase) % PHASES_PER_CYCLE
        u = (i % samples_per_phase) / samples_per_phase
        for leg in LegId:
            target = foot_trajectory(leg, u, plan, slot)
            try:
                q = inverse_kinematics(g, target, branch)
            except KinematicsError as e:
                raise TraceIkError(leg, i, e) from e
            angles[leg][i] = q.as_tuple()
    return GaitTrace(times=times, angles=angles)


def trace_to_csv(trace: GaitTrace) -> str:
    """CSV export: time_s then L11..L43 in degrees, LF line endings."""
    buf = io.StringIO()
    buf.write("time_s," + ",".join(COLUMN_LABELS) + "\n")
    deg = trace.as_degrees()
    for t, row in zip(trace.times, deg):
        buf.write(repr(float(t)) + "," + ",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()


@dataclass(frozen=True)
class ServoConfig:
    """Hobby-servo pulse mapping: angle range centered on zero, affine to
    [pulse_min_us, pulse_max_us]."""

    pulse_min_us: float = 500.0
    pulse_max_us: float = 2500.0
    angle_range: float = math.pi
    period_ms: float = 20.0

    def __post_init__(self):
        if not 0 < self.pulse_min_us < self.pulse_max_us:
            raise ValueError("require 0 < pulse_min_us < pulse_max_us")
        if self.angle_range <= 0:
            raise ValueError("angle_range must be positive")
        if self.period_ms * 1000.0 <= self.pulse_max_us:
            raise ValueError("PWM period must exceed the maximum pulse width")


def angle_to_pulse(q: float, sc: ServoConfig) -> int:
    """Microsecond pulse width for a joint angle, rounded to the nearest us."""
    half = sc.angle_range / 2.0
    if not -half <= q <= half:
        raise OutOfRangeError(f"angle {q:.6f} rad outside servo range +/-{half:.6f}")
    frac = (q + half) / sc.angle_range
    return round(sc.pulse_min_us + frac * (sc.pulse_max_us - sc.pulse_min_us))
