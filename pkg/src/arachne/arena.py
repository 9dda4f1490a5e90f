"""Deterministic 2D world: obstacles, scalar fields, raycasts, pose updates.

The arena is a bounded axis-aligned rectangle holding static obstacles
(axis-aligned boxes and circles), Gaussian smoke plumes, and a temperature
field (ambient plus Gaussian hot spots).  The robot is a disc.  All
geometry is exact closed form; nothing here reads a clock or an RNG, so a
given input always produces the same output.

Raycasts accept an `inflate` radius: obstacles grow and the bounds shrink
by that amount, turning a swept-disc query into a point query.  This is
how sensors measure clearance from the body edge rather than the center.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

__all__ = [
    "Bounds",
    "RectObstacle",
    "CircleObstacle",
    "GaussianSource",
    "TemperatureField",
    "RobotPose",
    "SimulationTick",
    "WorldState",
    "ParseError",
    "ValidationError",
    "DEFAULT_BODY_RADIUS",
    "DT_DEFAULT",
    "normalize_heading",
    "raycast",
    "body_collides",
    "advance",
    "smoke_concentration",
    "temperature_at",
    "load_arena",
    "save_arena",
]

# Disc radius covering the default 0.20 x 0.12 m body rectangle.
DEFAULT_BODY_RADIUS = math.hypot(0.20, 0.12) / 2

# Tick period: one servo PWM frame.
DT_DEFAULT = 0.02


class ParseError(Exception):
    """Arena document is not valid JSON."""


class ValidationError(Exception):
    """Arena document is well-formed JSON but violates the schema."""


def normalize_heading(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    wrapped = math.remainder(theta, math.tau)
    if wrapped == -math.pi:
        return math.pi
    return wrapped


@dataclass(frozen=True)
class Bounds:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValidationError(f"degenerate bounds {self}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    def contains(self, x: float, y: float, margin: float = 0.0) -> bool:
        return (self.x_min + margin <= x <= self.x_max - margin
                and self.y_min + margin <= y <= self.y_max - margin)


@dataclass(frozen=True)
class RectObstacle:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValidationError(f"degenerate rectangle {self}")

    def distance_to(self, x: float, y: float) -> float:
        """Distance from a point to the rectangle (0 inside)."""
        dx = max(self.x_min - x, 0.0, x - self.x_max)
        dy = max(self.y_min - y, 0.0, y - self.y_max)
        return math.hypot(dx, dy)


@dataclass(frozen=True)
class CircleObstacle:
    cx: float
    cy: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValidationError(f"non-positive circle radius {self.radius}")

    def distance_to(self, x: float, y: float) -> float:
        return max(math.hypot(x - self.cx, y - self.cy) - self.radius, 0.0)


Obstacle = RectObstacle | CircleObstacle


@dataclass(frozen=True)
class GaussianSource:
    """Radial Gaussian bump: amplitude * exp(-d^2 / (2 sigma^2))."""

    cx: float
    cy: float
    amplitude: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValidationError(f"non-positive sigma {self.sigma}")

    def value_at(self, x: float, y: float) -> float:
        d2 = (x - self.cx) ** 2 + (y - self.cy) ** 2
        return self.amplitude * math.exp(-d2 / (2.0 * self.sigma**2))


@dataclass(frozen=True)
class TemperatureField:
    ambient_c: float = 22.0
    hot_spots: tuple[GaussianSource, ...] = ()


@dataclass(frozen=True)
class RobotPose:
    x: float
    y: float
    heading: float  # radians, normalized to (-pi, pi]
    body_radius: float = DEFAULT_BODY_RADIUS

    def __post_init__(self):
        for name in ("x", "y", "heading"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"RobotPose.{name} must be finite")
        if not self.body_radius > 0:
            raise ValueError("RobotPose.body_radius must be positive")
        object.__setattr__(self, "heading", normalize_heading(self.heading))


@dataclass(frozen=True)
class SimulationTick:
    dt: float = DT_DEFAULT
    index: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("SimulationTick.dt must be positive")
        if self.index < 0:
            raise ValueError("SimulationTick.index must be >= 0")

    @property
    def t_sim(self) -> float:
        return self.index * self.dt

    def next(self) -> "SimulationTick":
        return SimulationTick(self.dt, self.index + 1)


@dataclass(frozen=True)
class WorldState:
    bounds: Bounds
    obstacles: tuple[Obstacle, ...] = ()
    smoke_sources: tuple[GaussianSource, ...] = ()
    temperature: TemperatureField = field(default_factory=TemperatureField)
    robot_start: RobotPose = RobotPose(0.0, 0.0, 0.0)
    clock: float = 0.0
    collided: bool = False  # latches true on first body contact


def _ray_exit_aabb(ox, oy, c, s, x_min, y_min, x_max, y_max) -> float:
    """Distance along (c, s) from an inside point to the box boundary."""
    tx = math.inf
    if c > 0:
        tx = (x_max - ox) / c
    elif c < 0:
        tx = (x_min - ox) / c
    ty = math.inf
    if s > 0:
        ty = (y_max - oy) / s
    elif s < 0:
        ty = (y_min - oy) / s
    return max(min(tx, ty), 0.0)


def _ray_enter_aabb(ox, oy, c, s, x_min, y_min, x_max, y_max) -> float:
    """Distance to the box surface, inf on miss, 0 if starting inside."""
    t_lo, t_hi = 0.0, math.inf
    for o, d, lo, hi in ((ox, c, x_min, x_max), (oy, s, y_min, y_max)):
        if d == 0.0:
            if not lo <= o <= hi:
                return math.inf
        else:
            t1 = (lo - o) / d
            t2 = (hi - o) / d
            if t1 > t2:
                t1, t2 = t2, t1
            t_lo = max(t_lo, t1)
            t_hi = min(t_hi, t2)
    if t_lo > t_hi:
        return math.inf
    return t_lo


def _ray_enter_circle(ox, oy, c, s, cx, cy, radius) -> float:
    dx = cx - ox
    dy = cy - oy
    proj = dx * c + dy * s
    disc = radius * radius - (dx * dx + dy * dy - proj * proj)
    if disc < 0:
        return math.inf
    root = math.sqrt(disc)
    t = proj - root
    if t >= 0:
        return t
    if proj + root > 0:  # origin inside the circle
        return 0.0
    return math.inf


def raycast(world: WorldState, origin: tuple[float, float], direction: float,
            inflate: float = 0.0) -> float:
    """Distance along a heading to the nearest obstacle or boundary.

    With inflate > 0 the query is a swept disc of that radius: obstacles
    are grown and the bounds shrunk, exactly (rectangles grow into rounded
    rectangles).  Exact closed form throughout.
    """
    ox, oy = origin
    c = math.cos(direction)
    s = math.sin(direction)
    b = world.bounds
    best = _ray_exit_aabb(ox, oy, c, s,
                          b.x_min + inflate, b.y_min + inflate,
                          b.x_max - inflate, b.y_max - inflate)
    for obs in world.obstacles:
        if isinstance(obs, CircleObstacle):
            t = _ray_enter_circle(ox, oy, c, s, obs.cx, obs.cy,
                                  obs.radius + inflate)
        else:
            # Rounded rectangle: the union of the two slab-expanded boxes
            # and the four corner circles.
            t = min(
                _ray_enter_aabb(ox, oy, c, s,
                                obs.x_min - inflate, obs.y_min,
                                obs.x_max + inflate, obs.y_max),
                _ray_enter_aabb(ox, oy, c, s,
                                obs.x_min, obs.y_min - inflate,
                                obs.x_max, obs.y_max + inflate),
            )
            if inflate > 0:
                for cx in (obs.x_min, obs.x_max):
                    for cy in (obs.y_min, obs.y_max):
                        t = min(t, _ray_enter_circle(ox, oy, c, s, cx, cy, inflate))
        best = min(best, t)
    return best


def body_collides(world: WorldState, pose: RobotPose) -> bool:
    """True when the body disc touches any obstacle or leaves the bounds."""
    r = pose.body_radius
    if not world.bounds.contains(pose.x, pose.y, margin=r):
        return True
    for obs in world.obstacles:
        if obs.distance_to(pose.x, pose.y) <= r:
            return True
    return False


def advance(world: WorldState, pose: RobotPose, plan, phase_index: int,
            dt: float):
    """One tick of body motion: (world', pose').

    The plan's per-phase displacement and yaw are spread uniformly over the
    phase; plan None means halt (clock still advances).  Collision latches
    into the returned world and is reported, never raised.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if plan is None:
        new_pose = pose
    else:
        ph = plan.phases[phase_index % len(plan.phases)]
        du = dt / plan.config.phase_duration
        c = math.cos(pose.heading)
        s = math.sin(pose.heading)
        dx_b = du * ph.body_dx
        dy_b = du * ph.body_dy
        new_pose = RobotPose(
            x=pose.x + c * dx_b - s * dy_b,
            y=pose.y + s * dx_b + c * dy_b,
            heading=pose.heading + du * ph.body_dyaw,
            body_radius=pose.body_radius,
        )
    collided = world.collided or body_collides(world, new_pose)
    new_world = replace(world, clock=world.clock + dt, collided=collided)
    return new_world, new_pose


def smoke_concentration(world: WorldState, x: float, y: float) -> float:
    return sum(src.value_at(x, y) for src in world.smoke_sources)


def temperature_at(world: WorldState, x: float, y: float) -> float:
    t = world.temperature.ambient_c
    return t + sum(spot.value_at(x, y) for spot in world.temperature.hot_spots)


# --- arena files -----------------------------------------------------------
#
# UTF-8 JSON, lengths in meters, angles in degrees.  Top-level keys:
# bounds (required), obstacles, smoke_sources, temperature, robot_start.


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ValidationError(f"{where}: missing required field '{key}'")
    return table[key]


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{where}: expected a number, got {value!r}")
    v = float(value)
    if not math.isfinite(v):
        raise ValidationError(f"{where}: non-finite number")
    return v


def _check_inside(bounds: Bounds, x: float, y: float, where: str):
    if not bounds.contains(x, y):
        raise ValidationError(f"{where}: point ({x}, {y}) outside bounds")


def _parse_source(entry, where: str) -> GaussianSource:
    if not isinstance(entry, dict):
        raise ValidationError(f"{where}: expected an object")
    return GaussianSource(
        cx=_number(_require(entry, "cx", where), f"{where}.cx"),
        cy=_number(_require(entry, "cy", where), f"{where}.cy"),
        amplitude=_number(_require(entry, "amplitude", where), f"{where}.amplitude"),
        sigma=_number(_require(entry, "sigma", where), f"{where}.sigma"),
    )


def load_arena(document) -> WorldState:
    """Parse and validate an arena document (JSON text or parsed dict)."""
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e
    else:
        doc = document
    if not isinstance(doc, dict):
        raise ValidationError("arena document must be a JSON object")

    b = _require(doc, "bounds", "arena")
    if not isinstance(b, dict):
        raise ValidationError("bounds: expected an object")
    try:
        bounds = Bounds(
            x_min=_number(_require(b, "x_min", "bounds"), "bounds.x_min"),
            y_min=_number(_require(b, "y_min", "bounds"), "bounds.y_min"),
            x_max=_number(_require(b, "x_max", "bounds"), "bounds.x_max"),
            y_max=_number(_require(b, "y_max", "bounds"), "bounds.y_max"),
        )
    except ValidationError:
        raise
    obstacles = []
    for i, entry in enumerate(doc.get("obstacles", [])):
        where = f"obstacles[{i}]"
        if not isinstance(entry, dict):
            raise ValidationError(f"{where}: expected an object")
        kind = _require(entry, "type", where)
        if kind == "rect":
            obs = RectObstacle(
                x_min=_number(_require(entry, "x_min", where), f"{where}.x_min"),
                y_min=_number(_require(entry, "y_min", where), f"{where}.y_min"),
                x_max=_number(_require(entry, "x_max", where), f"{where}.x_max"),
                y_max=_number(_require(entry, "y_max", where), f"{where}.y_max"),
            )
            inside = (bounds.contains(obs.x_min, obs.y_min)
                      and bounds.contains(obs.x_max, obs.y_max))
        elif kind == "circle":
            obs = CircleObstacle(
                cx=_number(_require(entry, "cx", where), f"{where}.cx"),
                cy=_number(_require(entry, "cy", where), f"{where}.cy"),
                radius=_number(_require(entry, "radius", where), f"{where}.radius"),
            )
            inside = (bounds.contains(obs.cx - obs.radius, obs.cy - obs.radius)
                      and bounds.contains(obs.cx + obs.radius, obs.cy + obs.radius))
        else:
            raise ValidationError(f"{where}: unknown obstacle type {kind!r}")
        if not inside:
            raise ValidationError(f"{where}: geometry extends outside bounds")
        obstacles.append(obs)

    smoke = []
    for i, entry in enumerate(doc.get("smoke_sources", [])):
        where = f"smoke_sources[{i}]"
        src = _parse_source(entry, where)
        _check_inside(bounds, src.cx, src.cy, where)
        smoke.append(src)

    temp_doc = doc.get("temperature", {})
    if not isinstance(temp_doc, dict):
        raise ValidationError("temperature: expected an object")
    spots = []
    for i, entry in enumerate(temp_doc.get("hot_spots", [])):
        where = f"temperature.hot_spots[{i}]"
        spot = _parse_source(entry, where)
        _check_inside(bounds, spot.cx, spot.cy, where)
        spots.append(spot)
    temperature = TemperatureField(
        ambient_c=_number(temp_doc.get("ambient_c", 22.0), "temperature.ambient_c"),
        hot_spots=tuple(spots),
    )

    start_doc = doc.get("robot_start", {})
    if not isinstance(start_doc, dict):
        raise ValidationError("robot_start: expected an object")
    start = RobotPose(
        x=_number(start_doc.get("x", (bounds.x_min + bounds.x_max) / 2), "robot_start.x"),
        y=_number(start_doc.get("y", (bounds.y_min + bounds.y_max) / 2), "robot_start.y"),
        heading=math.radians(_number(start_doc.get("heading_deg", 0.0), "robot_start.heading_deg")),
        body_radius=_number(start_doc.get("body_radius", DEFAULT_BODY_RADIUS), "robot_start.body_radius"),
    )
    _check_inside(bounds, start.x, start.y, "robot_start")

    return WorldState(
        bounds=bounds,
        obstacles=tuple(obstacles),
        smoke_sources=tuple(smoke),
        temperature=temperature,
        robot_start=start,
    )


def save_arena(world: WorldState) -> str:
    """Canonical JSON for a world: stable key order, LF-terminated."""
    doc = {
        "bounds": {
            "x_min": world.bounds.x_min, "y_min": world.bounds.y_min,
            "x_max": world.bounds.x_max, "y_max": world.bounds.y_max,
        },
        "obstacles": [
            ({"type": "rect", "x_min": o.x_min, "y_min": o.y_min,
              "x_max": o.x_max, "y_max": o.y_max}
             if isinstance(o, RectObstacle) else
             {"type": "circle", "cx": o.cx, "cy": o.cy, "radius": o.radius})
            for o in world.obstacles
        ],
        "smoke_sources": [
            {"cx": s.cx, "cy": s.cy, "amplitude": s.amplitude, "sigma": s.sigma}
            for s in world.smoke_sources
        ],
        "temperature": {
            "ambient_c": world.temperature.ambient_c,
            "hot_spots": [
                {"cx": s.cx, "cy": s.cy, "amplitude": s.amplitude, "sigma": s.sigma}
                for s in world.temperature.hot_spots
            ],
        },
        "robot_start": {
            "x": world.robot_start.x,
            "y": world.robot_start.y,
            "heading_deg": math.degrees(world.robot_start.heading),
            "body_radius": world.robot_start.body_radius,
        },
    }
    return json.dumps(doc, indent=2) + "\n"
