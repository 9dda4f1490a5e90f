"""Obstacle-avoidance state machine: idle, walk, divert, arrive.

The controller is stepped once per gait phase and emits one motion command
per step.  It walks toward the active goal, steering with in-place turn
cycles when the heading error exceeds a threshold; a triggered range
reading diverts it left, right, or backward for a fixed number of phases,
after which forward walking resumes and the range check repeats.

Safety bookkeeping: backward diverts are capped by the number of forward
phases just driven on the current heading (the swept trail is the only
space known free behind the robot, since there is no rear sensor).  After
a turn divert the controller commits to a few forward phases before
steering back toward the goal, which breaks the turn/steer-back livelock
in front of a wide obstacle.  While an encounter lasts (divert through
committed forward phases), repeated triggers reuse the same turn
direction; without that stickiness the side comparison flips with every
quarter-turn and the robot spins left/right in place forever.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .arena import RobotPose, normalize_heading
from .gait import Direction
from .sensors import SensorFrame

__all__ = [
    "Mode",
    "MotionCommand",
    "Task",
    "ControllerParams",
    "ControllerState",
    "SetTask",
    "Stop",
    "RejectedCommandError",
    "step",
    "choose_avoidance",
    "handle_command",
]


class Mode(Enum):
    IDLE = "idle"
    WALK_FORWARD = "walk_forward"
    AVOID_LEFT = "avoid_left"
    AVOID_RIGHT = "avoid_right"
    AVOID_BACKWARD = "avoid_backward"
    REACHED = "reached"


class MotionCommand(Enum):
    FORWARD = "forward"
    LEFT = "left"
    RIGHT = "right"
    BACKWARD = "backward"
    HALT = "halt"

    @property
    def gait_direction(self) -> Direction | None:
        if self is MotionCommand.HALT:
            return None
        return Direction(self.value)


_AVOID_MODE = {
    MotionCommand.LEFT: Mode.AVOID_LEFT,
    MotionCommand.RIGHT: Mode.AVOID_RIGHT,
    MotionCommand.BACKWARD: Mode.AVOID_BACKWARD,
}
_AVOID_CMD = {mode: cmd for cmd, mode in _AVOID_MODE.items()}


@dataclass(frozen=True)
class Task:
    goal_x: float
    goal_y: float
    arrival_radius: float

    def __post_init__(self):
        if not (math.isfinite(self.goal_x) and math.isfinite(self.goal_y)):
            raise RejectedCommandError("goal coordinates must be finite")
        if not (math.isfinite(self.arrival_radius) and self.arrival_radius > 0):
            raise RejectedCommandError("arrival radius must be positive")


@dataclass(frozen=True)
class ControllerParams:
    avoid_phases: int = 4  # one full gait cycle per divert
    commit_phases: int = 4  # forward phases before steering resumes
    tie_margin: float = 0.05
    min_side_clearance: float = 0.30
    heading_threshold: float = math.radians(15.0)
    default_arrival_radius: float = 0.08  # one stride

    def __post_init__(self):
        if self.avoid_phases < 1:
            raise ValueError("avoid_phases must be >= 1")
        if self.commit_phases < 0:
            raise ValueError("commit_phases must be >= 0")
        if self.tie_margin < 0 or self.min_side_clearance < 0:
            raise ValueError("clearance parameters must be >= 0")
        if not self.heading_threshold > 0:
            raise ValueError("heading_threshold must be positive")
        if not self.default_arrival_radius > 0:
            raise ValueError("default_arrival_radius must be positive")


@dataclass(frozen=True)
class ControllerState:
    mode: Mode = Mode.IDLE
    task: Task | None = None
    avoid_remaining: int = 0
    commit_remaining: int = 0
    forward_run: int = 0  # contiguous forward phases on the current heading
    # Sticky turn direction for the current obstacle encounter: once the
    # robot starts rotating one way it keeps that way until it has walked
    # clear, otherwise symmetric geometry flips it left/right forever.
    divert_bias: MotionCommand | None = None

    def __post_init__(self):
        in_avoid = self.mode in (Mode.AVOID_LEFT, Mode.AVOID_RIGHT, Mode.AVOID_BACKWARD)
        if self.avoid_remaining > 0 and not in_avoid:
            raise ValueError("avoid countdown outside an avoidance mode")
        if self.avoid_remaining < 0 or self.commit_remaining < 0 or self.forward_run < 0:
            raise ValueError("countdowns must be >= 0")
        needs_task = self.mode in (Mode.WALK_FORWARD, Mode.AVOID_LEFT,
                                   Mode.AVOID_RIGHT, Mode.AVOID_BACKWARD)
        if needs_task and self.task is None:
            raise ValueError(f"{self.mode} requires an active task")
        if self.divert_bias not in (None, MotionCommand.LEFT, MotionCommand.RIGHT):
            raise ValueError("divert_bias must be a turn command or None")


@dataclass(frozen=True)
class SetTask:
    x: float
    y: float
    arrival_radius: float | None = None


@dataclass(frozen=True)
class Stop:
    pass


Command = SetTask | Stop


class RejectedCommandError(Exception):
    """Command refused: malformed coordinates or radius."""


def choose_avoidance(frame: SensorFrame, clearances: tuple[float, float],
                     params: ControllerParams) -> MotionCommand:
    """Divert selection from the two side clearances.

    Backward when both sides are cramped; otherwise the clearer side, with
    ties (within tie_margin) resolving left.
    """
    left, right = clearances
    if left < params.min_side_clearance and right < params.min_side_clearance:
        return MotionCommand.BACKWARD
    if right > left + params.tie_margin:
        return MotionCommand.RIGHT
    return MotionCommand.LEFT


def _heading_error(pose: RobotPose, task: Task) -> float:
    bearing = math.atan2(task.goal_y - pose.y, task.goal_x - pose.x)
    return normalize_heading(bearing - pose.heading)


def _at_goal(pose: RobotPose, task: Task) -> bool:
    return math.hypot(task.goal_x - pose.x, task.goal_y - pose.y) <= task.arrival_radius


def _enter_avoidance(state: ControllerState, cmd: MotionCommand,
                     params: ControllerParams) -> tuple[ControllerState, MotionCommand]:
    if cmd is MotionCommand.BACKWARD:
        # Cap the retreat by the freshly swept trail; with no trail, turn
        # in place toward the clearer side instead (always contact-free).
        budget = min(params.avoid_phases, state.forward_run)
        if budget == 0:
            fallback = state.divert_bias or MotionCommand.LEFT
            return _enter_avoidance(state, fallback, params)
        new = replace(state, mode=Mode.AVOID_BACKWARD, avoid_remaining=budget,
                      forward_run=state.forward_run - 1, commit_remaining=0)
        return new, cmd
    new = replace(state, mode=_AVOID_MODE[cmd], avoid_remaining=params.avoid_phases,
                  forward_run=0, commit_remaining=0, divert_bias=cmd)
    return new, cmd


def _walk_forward(state: ControllerState, frame: SensorFrame,
                  clearances: tuple[float, float], pose: RobotPose,
                  params: ControllerParams) -> tuple[ControllerState, MotionCommand]:
    task = state.task
    if _at_goal(pose, task):
        return replace(state, mode=Mode.REACHED, avoid_remaining=0,
                       commit_remaining=0, divert_bias=None), MotionCommand.HALT
    if frame.ultrasonic_triggered:
        cmd = choose_avoidance(frame, clearances, params)
        if cmd is not MotionCommand.BACKWARD and state.divert_bias is not None:
            # Still boxed in from the last divert: keep rotating the same
            # way instead of re-comparing sides, which flips as we turn.
            cmd = state.divert_bias
        return _enter_avoidance(state, cmd, params)
    err = _heading_error(pose, task)
    if state.commit_remaining == 0 and abs(err) > params.heading_threshold:
        turn = MotionCommand.LEFT if err > 0 else MotionCommand.RIGHT
        return replace(state, mode=Mode.WALK_FORWARD, forward_run=0), turn
    # A plain goal-aligned forward phase ends the encounter; until then the
    # bias survives steer-back phases so re-triggers stay on one side.
    bias = state.divert_bias if state.commit_remaining > 0 else None
    return replace(state, mode=Mode.WALK_FORWARD,
                   commit_remaining=max(0, state.commit_remaining - 1),
                   forward_run=state.forward_run + 1,
                   divert_bias=bias), MotionCommand.FORWARD


def step(state: ControllerState, frame: SensorFrame,
         clearances: tuple[float, float], pose: RobotPose,
         params: ControllerParams) -> tuple[ControllerState, MotionCommand]:
    """One phase-boundary decision: next state and the phase's command."""
    if state.mode in (Mode.IDLE, Mode.REACHED):
        return state, MotionCommand.HALT

    if state.mode is Mode.WALK_FORWARD:
        return _walk_forward(state, frame, clearances, pose, params)

    # Avoidance modes: continue the divert, then resume forward logic so
    # the range check repeats immediately.
    remaining = state.avoid_remaining - 1
    if remaining > 0:
        cmd = _AVOID_CMD[state.mode]
        run = state.forward_run - 1 if cmd is MotionCommand.BACKWARD else 0
        return replace(state, avoid_remaining=remaining, forward_run=max(run, 0)), cmd
    commit = params.commit_phases if state.mode in (Mode.AVOID_LEFT, Mode.AVOID_RIGHT) else 0
    resumed = replace(state, mode=Mode.WALK_FORWARD, avoid_remaining=0,
                      commit_remaining=commit)
    return _walk_forward(resumed, frame, clearances, pose, params)


def handle_command(state: ControllerState, cmd: Command,
                   params: ControllerParams | None = None) -> ControllerState:
    """Apply an operator command between phases."""
    p = params if params is not None else ControllerParams()
    if isinstance(cmd, SetTask):
        radius = cmd.arrival_radius if cmd.arrival_radius is not None else p.default_arrival_radius
        task = Task(cmd.x, cmd.y, radius)  # raises RejectedCommandError if bad
        return replace(state, mode=Mode.WALK_FORWARD, task=task,
                       avoid_remaining=0, commit_remaining=0, divert_bias=None)
    if isinstance(cmd, Stop):
        return replace(state, mode=Mode.IDLE, task=None,
                       avoid_remaining=0, commit_remaining=0, divert_bias=None)
    raise RejectedCommandError(f"unknown command {cmd!r}")
