"""World geometry tests: raycasts vs a marching oracle, collision, files."""

import json
import math

import numpy as np
import pytest

from arachne.arena import (
    DEFAULT_BODY_RADIUS,
    Bounds,
    CircleObstacle,
    GaussianSource,
    ParseError,
    RectObstacle,
    RobotPose,
    SimulationTick,
    TemperatureField,
    ValidationError,
    WorldState,
    advance,
    body_collides,
    load_arena,
    normalize_heading,
    raycast,
    save_arena,
    smoke_concentration,
    temperature_at,
)
from arachne.gait import Direction, GaitConfig, plan_cycle
from arachne.kinematics import LegGeometry

BOUNDS = Bounds(-2.0, -1.5, 2.0, 1.5)


def make_world(obstacles=(), smoke=(), spots=(), ambient=22.0):
    return WorldState(
        bounds=BOUNDS,
        obstacles=tuple(obstacles),
        smoke_sources=tuple(smoke),
        temperature=TemperatureField(ambient_c=ambient, hot_spots=tuple(spots)),
    )


def march_ray(world, origin, direction, inflate, step=1e-4, limit=6.0):
    """Brute-force oracle: walk the ray until the inflated world is hit."""
    ox, oy = origin
    c, s = math.cos(direction), math.sin(direction)
    t = 0.0
    while t < limit:
        x, y = ox + t * c, oy + t * s
        b = world.bounds
        if not (b.x_min + inflate <= x <= b.x_max - inflate
                and b.y_min + inflate <= y <= b.y_max - inflate):
            return t
        for obs in world.obstacles:
            if obs.distance_to(x, y) <= inflate:
                return t
        t += step
    return limit


class TestNormalizeHeading:
    def test_wraps_into_half_open_interval(self):
        assert normalize_heading(math.pi) == math.pi
        assert normalize_heading(-math.pi) == math.pi
        assert normalize_heading(3 * math.pi) == pytest.approx(math.pi)
        assert normalize_heading(0.1) == pytest.approx(0.1)
        assert normalize_heading(2 * math.pi + 0.3) == pytest.approx(0.3)


class TestTypes:
    def test_degenerate_bounds_rejected(self):
        with pytest.raises(ValidationError):
            Bounds(0, 0, 0, 1)

    def test_degenerate_rect_rejected(self):
        with pytest.raises(ValidationError):
            RectObstacle(1, 1, 1, 2)

    def test_circle_radius_positive(self):
        with pytest.raises(ValidationError):
            CircleObstacle(0, 0, 0.0)

    def test_pose_normalizes_heading(self):
        pose = RobotPose(0, 0, 3 * math.pi)
        assert pose.heading == pytest.approx(math.pi)

    def test_pose_rejects_nan(self):
        with pytest.raises(ValueError):
            RobotPose(math.nan, 0, 0)

    def test_tick_advances_time(self):
        tick = SimulationTick()
        assert tick.dt == 0.02
        assert tick.next().index == 1
        assert SimulationTick(0.02, 25).t_sim == pytest.approx(0.5)
        with pytest.raises(ValueError):
            SimulationTick(dt=0.0)


class TestRaycast:
    def test_empty_world_hits_boundary(self):
        world = make_world()
        assert raycast(world, (0.0, 0.0), 0.0) == pytest.approx(2.0)
        assert raycast(world, (0.0, 0.0), math.pi) == pytest.approx(2.0)
        assert raycast(world, (0.0, 0.0), math.pi / 2) == pytest.approx(1.5)

    def test_circle_dead_ahead(self):
        world = make_world([CircleObstacle(1.0, 0.0, 0.25)])
        assert raycast(world, (0.0, 0.0), 0.0) == pytest.approx(0.75)

    def test_rect_face_hit(self):
        world = make_world([RectObstacle(0.5, -0.5, 1.0, 0.5)])
        assert raycast(world, (0.0, 0.0), 0.0) == pytest.approx(0.5)

    def test_ray_misses_offset_obstacle(self):
        world = make_world([CircleObstacle(1.0, 0.6, 0.25)])
        assert raycast(world, (0.0, 0.0), 0.0) == pytest.approx(2.0)

    def test_inflated_ray_sees_offset_obstacle(self):
        # Swept disc of radius 0.4 clips a circle 0.6 off-axis.
        world = make_world([CircleObstacle(1.0, 0.6, 0.25)])
        d = raycast(world, (0.0, 0.0), 0.0, inflate=0.4)
        # Oracle: inflate the circle to 0.65 and intersect with y=0.
        expect = 1.0 - math.sqrt(0.65**2 - 0.6**2)
        assert d == pytest.approx(expect, abs=1e-12)

    def test_inflate_shrinks_boundary(self):
        world = make_world()
        assert raycast(world, (0.0, 0.0), 0.0, inflate=0.3) == pytest.approx(1.7)

    def test_origin_inside_obstacle_reads_zero(self):
        world = make_world([CircleObstacle(0.0, 0.0, 0.5)])
        assert raycast(world, (0.1, 0.0), 0.0) == 0.0

    def test_rounded_corner_exact(self):
        # Ray along +x at y = 0.55 toward a rect with y_max = 0.5: only the
        # inflated corner circle at (1.0, 0.5) with radius 0.1 is hit.
        world = make_world([RectObstacle(1.0, -0.5, 1.4, 0.5)])
        d = raycast(world, (0.0, 0.55), 0.0, inflate=0.1)
        dy = 0.05
        expect = 1.0 - math.sqrt(0.1**2 - dy**2)
        assert d == pytest.approx(expect, abs=1e-12)

    @pytest.mark.parametrize("inflate", [0.0, 0.1166])
    def test_random_rays_match_marching_oracle(self, inflate):
        rng = np.random.default_rng(42)
        world = make_world([
            RectObstacle(0.5, -0.5, 1.0, 0.5),
            CircleObstacle(-1.0, 0.7, 0.3),
            RectObstacle(-1.5, -1.2, -0.6, -0.8),
            CircleObstacle(1.2, -1.0, 0.2),
        ])
        step = 2e-4
        checked = 0
        for _ in range(400):
            ox = rng.uniform(BOUNDS.x_min + 0.3, BOUNDS.x_max - 0.3)
            oy = rng.uniform(BOUNDS.y_min + 0.3, BOUNDS.y_max - 0.3)
            pose_clear = all(o.distance_to(ox, oy) > inflate + 0.01 for o in world.obstacles)
            if not pose_clear or not BOUNDS.contains(ox, oy, margin=inflate + 0.01):
                continue
            theta = rng.uniform(-math.pi, math.pi)
            exact = raycast(world, (ox, oy), theta, inflate=inflate)
            oracle = march_ray(world, (ox, oy), theta, inflate, step=step)
            assert abs(exact - oracle) <= step * 1.5, (ox, oy, theta)
            checked += 1
        assert checked > 200


class TestCollision:
    def test_clear_pose(self):
        world = make_world([CircleObstacle(1.0, 0.0, 0.2)])
        assert not body_collides(world, RobotPose(0.0, 0.0, 0.0))

    def test_touching_circle(self):
        world = make_world([CircleObstacle(1.0, 0.0, 0.2)])
        r = DEFAULT_BODY_RADIUS
        assert body_collides(world, RobotPose(1.0 - 0.2 - r + 0.001, 0.0, 0.0))

    def test_touching_rect_corner(self):
        world = make_world([RectObstacle(0.5, 0.5, 1.0, 1.0)])
        assert body_collides(world, RobotPose(0.45, 0.45, 0.0))
        assert not body_collides(world, RobotPose(0.3, 0.3, 0.0))

    def test_boundary_violation(self):
        world = make_world()
        assert body_collides(world, RobotPose(BOUNDS.x_max - 0.05, 0.0, 0.0))


class TestAdvance:
    G = LegGeometry()
    CFG = GaitConfig()

    def run_cycle(self, plan, world, pose, dt=0.02):
        ticks_per_phase = round(plan.config.phase_duration / dt)
        for k in range(4):
            for _ in range(ticks_per_phase):
                world, pose = advance(world, pose, plan, k, dt)
        return world, pose

    def test_halt_keeps_pose(self):
        world = make_world()
        pose = RobotPose(0.3, -0.2, 0.5)
        world2, pose2 = advance(world, pose, None, 0, 0.02)
        assert pose2 == pose
        assert world2.clock == pytest.approx(0.02)

    def test_forward_cycle_displaces_by_stride(self):
        world = make_world()
        plan = plan_cycle(self.CFG, Direction.FORWARD, self.G)
        pose = RobotPose(0.0, 0.0, 0.0)
        world2, pose2 = self.run_cycle(plan, world, pose)
        assert pose2.x == pytest.approx(self.CFG.stride_length, abs=1e-9)
        assert pose2.y == pytest.approx(0.0, abs=1e-9)
        assert pose2.heading == pytest.approx(0.0, abs=1e-9)
        assert not world2.collided

    def test_forward_cycle_follows_heading(self):
        world = make_world()
        plan = plan_cycle(self.CFG, Direction.FORWARD, self.G)
        theta = 0.7
        _, pose2 = self.run_cycle(world=world, plan=plan, pose=RobotPose(0, 0, theta))
        assert pose2.x == pytest.approx(0.08 * math.cos(theta), abs=1e-9)
        assert pose2.y == pytest.approx(0.08 * math.sin(theta), abs=1e-9)

    def test_left_cycle_turns_in_place(self):
        world = make_world()
        plan = plan_cycle(self.CFG, Direction.LEFT, self.G)
        _, pose2 = self.run_cycle(plan, world, RobotPose(0.2, 0.1, 0.0))
        assert pose2.heading == pytest.approx(self.CFG.turn_angle, abs=1e-9)
        assert (pose2.x, pose2.y) == pytest.approx((0.2, 0.1), abs=1e-9)

    def test_clock_accumulates_dt(self):
        world = make_world()
        pose = RobotPose(0, 0, 0)
        for _ in range(25):
            world, pose = advance(world, pose, None, 0, 0.02)
        assert world.clock == pytest.approx(0.5)

    def test_collision_latches(self):
        # Near edge at x = 0.25; contact once the disc center passes 0.1334.
        world = make_world([CircleObstacle(0.45, 0.0, 0.2)])
        plan = plan_cycle(self.CFG, Direction.FORWARD, self.G)
        pose = RobotPose(0.0, 0.0, 0.0)
        assert not body_collides(world, pose)
        for k in range(8):  # two cycles, 0.16 m
            for _ in range(25):
                world, pose = advance(world, pose, plan, k % 4, 0.02)
        assert world.collided  # stays latched even after contact ends

    def test_per_tick_displacement_bounded(self):
        plan = plan_cycle(self.CFG, Direction.FORWARD, self.G)
        world = make_world()
        pose = RobotPose(0, 0, 0)
        bound = self.CFG.stride_length / 4 / self.CFG.phase_duration * 0.02
        for k in range(4):
            for _ in range(25):
                _, pose2 = advance(world, pose, plan, k, 0.02)
                moved = math.hypot(pose2.x - pose.x, pose2.y - pose.y)
                assert moved <= bound + 1e-12
                pose = pose2


class TestFields:
    def test_smoke_sums_plumes(self):
        world = make_world(smoke=[GaussianSource(0.0, 0.0, 1.0, 0.5),
                                  GaussianSource(1.0, 0.0, 2.0, 0.25)])
        assert smoke_concentration(world, 0.0, 0.0) == pytest.approx(
            1.0 + 2.0 * math.exp(-1.0**2 / (2 * 0.25**2)))
        assert smoke_concentration(world, 1.0, 0.0) == pytest.approx(
            2.0 + math.exp(-1.0 / (2 * 0.25)), abs=1e-6)

    def test_smoke_zero_without_sources(self):
        assert smoke_concentration(make_world(), 0.3, 0.4) == 0.0

    def test_temperature_ambient_plus_spot(self):
        world = make_world(spots=[GaussianSource(0.5, 0.5, 30.0, 0.3)], ambient=20.0)
        assert temperature_at(world, 0.5, 0.5) == pytest.approx(50.0)
        far = temperature_at(world, -1.5, -1.0)
        assert far == pytest.approx(20.0, abs=1e-6)

    def test_field_purity(self):
        world = make_world(smoke=[GaussianSource(0.2, 0.1, 1.5, 0.4)])
        a = smoke_concentration(world, 0.35, 0.22)
        b = smoke_concentration(world, 0.35, 0.22)
        assert a == b


MINIMAL = json.dumps({"bounds": {"x_min": 0, "y_min": 0, "x_max": 4, "y_max": 3}})

FULL_DOC = {
    "bounds": {"x_min": 0, "y_min": 0, "x_max": 4, "y_max": 3},
    "obstacles": [
        {"type": "rect", "x_min": 1.0, "y_min": 1.0, "x_max": 1.5, "y_max": 2.0},
        {"type": "circle", "cx": 3.0, "cy": 1.5, "radius": 0.3},
    ],
    "smoke_sources": [{"cx": 2.0, "cy": 2.5, "amplitude": 1.0, "sigma": 0.4}],
    "temperature": {"ambient_c": 21.0,
                    "hot_spots": [{"cx": 0.5, "cy": 0.5, "amplitude": 15.0, "sigma": 0.3}]},
    "robot_start": {"x": 0.5, "y": 1.5, "heading_deg": 90.0},
}


class TestArenaFiles:
    def test_minimal_document(self):
        world = load_arena(MINIMAL)
        assert world.obstacles == ()
        assert world.bounds.width == 4.0
        # start defaults to the center
        assert (world.robot_start.x, world.robot_start.y) == (2.0, 1.5)

    def test_full_document(self):
        world = load_arena(json.dumps(FULL_DOC))
        assert len(world.obstacles) == 2
        assert world.temperature.ambient_c == 21.0
        assert world.robot_start.heading == pytest.approx(math.pi / 2)

    def test_accepts_parsed_dict(self):
        world = load_arena(FULL_DOC)
        assert len(world.smoke_sources) == 1

    def test_parse_error_has_line_info(self):
        with pytest.raises(ParseError, match="line"):
            load_arena('{"bounds": \n  nope}')

    def test_missing_bounds(self):
        with pytest.raises(ValidationError, match="bounds"):
            load_arena("{}")

    def test_obstacle_outside_bounds(self):
        doc = json.loads(MINIMAL)
        doc["obstacles"] = [{"type": "circle", "cx": 3.9, "cy": 1.0, "radius": 0.5}]
        with pytest.raises(ValidationError, match=r"obstacles\[0\]"):
            load_arena(json.dumps(doc))

    def test_unknown_obstacle_type(self):
        doc = json.loads(MINIMAL)
        doc["obstacles"] = [{"type": "triangle"}]
        with pytest.raises(ValidationError, match="triangle"):
            load_arena(json.dumps(doc))

    def test_start_outside_bounds(self):
        doc = json.loads(MINIMAL)
        doc["robot_start"] = {"x": 9.0, "y": 0.5}
        with pytest.raises(ValidationError, match="robot_start"):
            load_arena(json.dumps(doc))

    def test_non_numeric_field(self):
        doc = json.loads(MINIMAL)
        doc["obstacles"] = [{"type": "circle", "cx": "left", "cy": 0.5, "radius": 0.1}]
        with pytest.raises(ValidationError, match="cx"):
            load_arena(json.dumps(doc))

    def test_save_load_round_trip_is_canonical(self):
        first = save_arena(load_arena(json.dumps(FULL_DOC)))
        second = save_arena(load_arena(first))
        assert first == second
        assert first.endswith("\n")

    def test_round_trip_preserves_geometry(self):
        world = load_arena(json.dumps(FULL_DOC))
        again = load_arena(save_arena(world))
        assert again.obstacles == world.obstacles
        assert again.bounds == world.bounds
        assert again.robot_start.heading == pytest.approx(world.robot_start.heading)
