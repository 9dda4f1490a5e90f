"""Sensor model tests: thresholds, noise statistics, determinism."""

import math

import numpy as np
import pytest

from arachne.arena import (
    Bounds,
    CircleObstacle,
    GaussianSource,
    RectObstacle,
    RobotPose,
    TemperatureField,
    WorldState,
    raycast,
)
from arachne.sensors import (
    SensorFrame,
    SmokeConfig,
    TemperatureConfig,
    UltrasonicConfig,
    forward_clearance,
    read_frame,
    side_clearances,
    smoke_read,
    temperature_read,
    ultrasonic_read,
)

BIG_BOUNDS = Bounds(-10.0, -10.0, 10.0, 10.0)


def world_with(obstacles=(), smoke=(), spots=(), ambient=22.0):
    return WorldState(
        bounds=BIG_BOUNDS,
        obstacles=tuple(obstacles),
        smoke_sources=tuple(smoke),
        temperature=TemperatureField(ambient_c=ambient, hot_spots=tuple(spots)),
    )


def wall_at_clearance(pose: RobotPose, clearance: float) -> RectObstacle:
    """Axis-aligned wall whose face sits `clearance` ahead of the body edge."""
    assert abs(pose.heading) < 1e-12, "helper assumes +x heading"
    x = pose.x + pose.body_radius + clearance
    return RectObstacle(x, pose.y - 2.0, x + 0.2, pose.y + 2.0)


NOISELESS = UltrasonicConfig(noise_sigma=0.0, detection_probability=1.0)


class TestConfigs:
    def test_ultrasonic_invariants(self):
        with pytest.raises(ValueError):
            UltrasonicConfig(trigger_distance=0.0)
        with pytest.raises(ValueError):
            UltrasonicConfig(trigger_distance=3.0, max_range=2.0)
        with pytest.raises(ValueError):
            UltrasonicConfig(detection_probability=1.5)
        with pytest.raises(ValueError):
            UltrasonicConfig(noise_sigma=-0.1)

    def test_temperature_invariants(self):
        with pytest.raises(ValueError):
            TemperatureConfig(relative_error_bound=0.0)
        with pytest.raises(ValueError):
            TemperatureConfig(noise_sigma=-1.0)

    def test_smoke_invariants(self):
        with pytest.raises(ValueError):
            SmokeConfig(threshold=-0.1)
        with pytest.raises(ValueError):
            SmokeConfig(detection_probability=-0.2)

    def test_frame_rejects_non_finite(self):
        with pytest.raises(ValueError):
            SensorFrame(0.0, math.inf, False, False, 20.0)
        with pytest.raises(ValueError):
            SensorFrame(0.0, 1.0, False, False, math.nan)


class TestClearances:
    def test_forward_clearance_subtracts_body(self):
        pose = RobotPose(0.0, 0.0, 0.0)
        world = world_with([wall_at_clearance(pose, 0.5)])
        assert forward_clearance(world, pose) == pytest.approx(0.5, abs=1e-12)

    def test_side_clearances_left_right(self):
        pose = RobotPose(0.0, 0.0, 0.0)
        r = pose.body_radius
        world = world_with([
            RectObstacle(-1.0, 0.8, 1.0, 1.0),     # left wall face at y=0.8
            RectObstacle(-1.0, -1.5, 1.0, -1.2),   # right wall face at y=-1.2
        ])
        left, right = side_clearances(world, pose)
        assert left == pytest.approx(0.8 - r, abs=1e-12)
        assert right == pytest.approx(1.2 - r, abs=1e-12)

    def test_side_clearances_are_noise_free(self):
        pose = RobotPose(0.0, 0.0, 0.3)
        world = world_with([CircleObstacle(1.0, 1.0, 0.4)])
        assert side_clearances(world, pose) == side_clearances(world, pose)


class TestUltrasonic:
    def test_empty_world_reads_max_range(self):
        world = world_with()
        pose = RobotPose(0.0, 0.0, 0.0)
        rng = np.random.default_rng(0)
        d, trig = ultrasonic_read(world, pose, UltrasonicConfig(), rng)
        assert d == 2.0
        assert trig is False

    def test_noiseless_wall_inside_trigger(self):
        pose = RobotPose(0.0, 0.0, 0.0)
        world = world_with([wall_at_clearance(pose, 0.25)])
        d, trig = ultrasonic_read(world, pose, NOISELESS, np.random.default_rng(0))
        assert d == pytest.approx(0.25, abs=1e-12)
        assert trig is True

    def test_noiseless_wall_outside_trigger(self):
        pose = RobotPose(0.0, 0.0, 0.0)
        world = world_with([wall_at_clearance(pose, 0.35)])
        d, trig = ultrasonic_read(world, pose, NOISELESS, np.random.default_rng(0))
        assert d == pytest.approx(0.35, abs=1e-12)
        assert trig is False

    def test_threshold_monotone_noiseless(self):
        pose = RobotPose(0.0, 0.0, 0.0)
        rng = np.random.default_rng(0)
        trig_at = {}
        for clearance in (0.1, 0.2, 0.29, 0.31, 0.5):
            world = world_with([wall_at_clearance(pose, clearance)])
            _, trig = ultrasonic_read(world, pose, NOISELESS, rng)
            trig_at[clearance] = trig
        assert all(trig_at[c] for c in (0.1, 0.2, 0.29))
        assert not any(trig_at[c] for c in (0.31, 0.5))

    def test_reading_clamped_to_range(self):
        pose = RobotPose(0.0, 0.0, 0.0)
        world = world_with([wall_at_clearance(pose, 0.02)])
        cfg = UltrasonicConfig(noise_sigma=0.5, detection_probability=1.0)
        rng = np.random.default_rng(7)
        for _ in range(200):
            d, _ = ultrasonic_read(world, pose, cfg, rng)
            assert 0.0 <= d <= cfg.max_range

    def test_detection_rate_matches_bernoulli(self):
        # Wall well inside the trigger band: misses come only from dropout.
        pose = RobotPose(0.0, 0.0, 0.0)
        cfg = UltrasonicConfig()
        clearance = cfg.trigger_distance - 5 * cfg.noise_sigma - 0.05
        world = world_with([wall_at_clearance(pose, clearance)])
        rng = np.random.default_rng(2024)
        n = 10_000
        hits = sum(ultrasonic_read(world, pose, cfg, rng)[1] for _ in range(n))
        rate = hits / n
        p = cfg.detection_probability
        band = 3 * math.sqrt(p * (1 - p) / n)
        assert rate >= 0.95
        assert abs(rate - p) <= band

    def test_dropout_reports_max_range(self):
        pose = RobotPose(0.0, 0.0, 0.0)
        world = world_with([wall_at_clearance(pose, 0.2)])
        cfg = UltrasonicConfig(noise_sigma=0.0, detection_probability=0.5)
        rng = np.random.default_rng(3)
        readings = {ultrasonic_read(world, pose, cfg, rng) for _ in range(500)}
        assert (cfg.max_range, False) in readings
        assert (0.2, True) in readings
        assert len(readings) == 2


class TestSmoke:
    def test_zero_field_is_false(self):
        world = world_with()
        assert smoke_read(world, RobotPose(0, 0, 0), SmokeConfig(),
                          np.random.default_rng(0)) is False

    def test_source_center_detected(self):
        world = world_with(smoke=[GaussianSource(0.0, 0.0, 1.0, 0.5)])
        assert smoke_read(world, RobotPose(0, 0, 0), SmokeConfig(),
                          np.random.default_rng(0)) is True

    def test_exact_threshold_counts_as_detected(self):
        # Amplitude equal to the threshold at the center: >= comparison.
        world = world_with(smoke=[GaussianSource(0.0, 0.0, 0.5, 0.5)])
        assert smoke_read(world, RobotPose(0, 0, 0), SmokeConfig(threshold=0.5),
                          np.random.default_rng(0)) is True

    def test_default_never_misses(self):
        world = world_with(smoke=[GaussianSource(0.0, 0.0, 2.0, 1.0)])
        rng = np.random.default_rng(11)
        assert all(smoke_read(world, RobotPose(0, 0, 0), SmokeConfig(), rng)
                   for _ in range(10_000))

    def test_sub_unit_probability_misses_sometimes(self):
        world = world_with(smoke=[GaussianSource(0.0, 0.0, 2.0, 1.0)])
        cfg = SmokeConfig(detection_probability=0.5)
        rng = np.random.default_rng(5)
        hits = sum(smoke_read(world, RobotPose(0, 0, 0), cfg, rng) for _ in range(1000))
        assert 400 < hits < 600


class TestTemperature:
    def test_zero_noise_reads_exact(self):
        world = world_with(spots=[GaussianSource(0.5, 0.5, 30.0, 0.3)], ambient=20.0)
        cfg = TemperatureConfig(noise_sigma=0.0)
        got = temperature_read(world, RobotPose(0.5, 0.5, 0.0), cfg,
                               np.random.default_rng(0))
        assert got == 50.0

    def test_relative_error_always_inside_bound(self):
        world = world_with(ambient=40.0)
        cfg = TemperatureConfig()
        rng = np.random.default_rng(99)
        pose = RobotPose(0, 0, 0)
        for _ in range(10_000):
            r = temperature_read(world, pose, cfg, rng)
            assert abs(r - 40.0) / 40.0 < cfg.relative_error_bound

    def test_mean_converges_to_truth(self):
        world = world_with(ambient=40.0)
        cfg = TemperatureConfig()
        rng = np.random.default_rng(123)
        pose = RobotPose(0, 0, 0)
        n = 10_000
        reads = [temperature_read(world, pose, cfg, rng) for _ in range(n)]
        # per-read sigma = noise_sigma * truth (truncation shrinks it a bit,
        # so 3 sigma / sqrt(n) of the untruncated model is conservative)
        assert abs(np.mean(reads) - 40.0) <= 3 * (cfg.noise_sigma * 40.0) / math.sqrt(n)

    def test_near_zero_truth_uses_absolute_error(self):
        world = world_with(ambient=0.0)
        cfg = TemperatureConfig()
        rng = np.random.default_rng(4)
        pose = RobotPose(0, 0, 0)
        for _ in range(2000):
            r = temperature_read(world, pose, cfg, rng)
            assert abs(r) < cfg.relative_error_bound

    def test_negative_truth_keeps_relative_bound(self):
        world = world_with(ambient=-10.0)
        cfg = TemperatureConfig()
        rng = np.random.default_rng(6)
        for _ in range(2000):
            r = temperature_read(world, RobotPose(0, 0, 0), cfg, rng)
            assert abs(r - (-10.0)) / 10.0 < cfg.relative_error_bound


class TestDeterminism:
    def test_identical_seed_identical_stream(self):
        pose = RobotPose(0.0, 0.0, 0.0)
        world = world_with(
            obstacles=[wall_at_clearance(pose, 0.2)],
            smoke=[GaussianSource(0.0, 0.0, 1.0, 0.5)],
            spots=[GaussianSource(0.3, 0.0, 10.0, 0.5)],
        )
        ucfg, scfg, tcfg = UltrasonicConfig(), SmokeConfig(0.5, 0.9), TemperatureConfig()

        def run(seed):
            rng = np.random.default_rng(seed)
            return [read_frame(world, pose, i * 0.02, ucfg, scfg, tcfg, rng)
                    for i in range(200)]

        assert run(42) == run(42)
        assert run(42) != run(43)

    def test_frame_field_order_fixed(self):
        pose = RobotPose(0.0, 0.0, 0.0)
        world = world_with([wall_at_clearance(pose, 0.2)])
        rng = np.random.default_rng(1)
        frame = read_frame(world, pose, 1.0, UltrasonicConfig(), SmokeConfig(),
                           TemperatureConfig(), rng)
        assert frame.timestamp == 1.0
        assert frame.ultrasonic_triggered is True
        assert frame.smoke is False
        assert frame.temperature_c == pytest.approx(22.0, rel=0.05)
