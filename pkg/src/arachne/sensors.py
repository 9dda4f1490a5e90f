"""Sensor models: ultrasonic ranging, smoke detection, temperature.

Readings are pure functions of (world, pose, rng state), so a fixed seed
replays bit-identically.  The ultrasonic measures forward clearance from
the body edge (a swept-disc cast, matching how far the robot could advance
before contact); two noise-free side rays at +-90 degrees are exposed for
the avoidance policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arena import RobotPose, WorldState, raycast

__all__ = [
    "UltrasonicConfig",
    "SmokeConfig",
    "TemperatureConfig",
    "SensorFrame",
    "ultrasonic_read",
    "smoke_read",
    "temperature_read",
    "side_clearances",
    "read_frame",
]


@dataclass(frozen=True)
class UltrasonicConfig:
    """Range finder: trigger threshold per the 30 cm obstacle-stop rule."""

    trigger_distance: float = 0.30
    max_range: float = 2.0
    noise_sigma: float = 0.005
    detection_probability: float = 0.97

    def __post_init__(self):
        if not 0 < self.trigger_distance <= self.max_range:
            raise ValueError("require 0 < trigger_distance <= max_range")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if not 0 <= self.detection_probability <= 1:
            raise ValueError("detection_probability must be in [0, 1]")


@dataclass(frozen=True)
class SmokeConfig:
    threshold: float = 0.5
    detection_probability: float = 1.0

    def __post_init__(self):
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")
        if not 0 <= self.detection_probability <= 1:
            raise ValueError("detection_probability must be in [0, 1]")


@dataclass(frozen=True)
class TemperatureConfig:
    """Multiplicative Gaussian noise, rejected outside the relative bound.

    Truth magnitudes below 1 degree C switch to additive noise with the
    same bound: relative error is ill-defined near zero.
    """

    relative_error_bound: float = 0.05
    noise_sigma: float = 0.02

    def __post_init__(self):
        if not self.relative_error_bound > 0:
            raise ValueError("relative_error_bound must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


@dataclass(frozen=True)
class SensorFrame:
    """One synchronized sample of all three sensors."""

    timestamp: float
    ultrasonic_distance: float
    ultrasonic_triggered: bool
    smoke: bool
    temperature_c: float

    def __post_init__(self):
        if not math.isfinite(self.temperature_c):
            raise ValueError("temperature must be finite")
        if not math.isfinite(self.ultrasonic_distance):
            raise ValueError("ultrasonic distance must be finite")


def forward_clearance(world: WorldState, pose: RobotPose) -> float:
    """Noise-free distance the body could advance before contact."""
    return raycast(world, (pose.x, pose.y), pose.heading, inflate=pose.body_radius)


def side_clearances(world: WorldState, pose: RobotPose) -> tuple[float, float]:
    """(left, right) noise-free swept-disc clearances at +-90 degrees."""
    left = raycast(world, (pose.x, pose.y), pose.heading + math.pi / 2,
                   inflate=pose.body_radius)
    right = raycast(world, (pose.x, pose.y), pose.heading - math.pi / 2,
                    inflate=pose.body_radius)
    return left, right


def ultrasonic_read(world: WorldState, pose: RobotPose, cfg: UltrasonicConfig,
                    rng: np.random.Generator) -> tuple[float, bool]:
    """(distance, triggered) with Gaussian noise and Bernoulli dropout.

    Echoes past max_range read as exactly max_range.  A dropout (probability
    1 - detection_probability) also reads max_range, untriggered.
    """
    truth = forward_clearance(world, pose)
    if truth >= cfg.max_range:
        return cfg.max_range, False
    if cfg.detection_probability < 1.0 and rng.random() >= cfg.detection_probability:
        return cfg.max_range, False
    noise = rng.normal(0.0, cfg.noise_sigma) if cfg.noise_sigma > 0 else 0.0
    distance = min(max(truth + noise, 0.0), cfg.max_range)
    return distance, distance <= cfg.trigger_distance


def smoke_read(world: WorldState, pose: RobotPose, cfg: SmokeConfig,
               rng: np.random.Generator) -> bool:
    """True iff concentration at the pose is at or above threshold.

    The boundary counts as detected.  detection_probability below 1 adds
    Bernoulli misses; the default never misses.
    """
    from .arena import smoke_concentration

    if smoke_concentration(world, pose.x, pose.y) < cfg.threshold:
        return False
    if cfg.detection_probability >= 1.0:
        return True
    return bool(rng.random() < cfg.detection_probability)


def temperature_read(world: WorldState, pose: RobotPose, cfg: TemperatureConfig,
                     rng: np.random.Generator) -> float:
    """Field value with truncated multiplicative noise, never outside the
    configured relative bound (absolute below 1 degree C magnitude)."""
    from .arena import temperature_at

    truth = temperature_at(world, pose.x, pose.y)
    if cfg.noise_sigma == 0.0:
        return truth
    while True:
        eps = rng.normal(0.0, cfg.noise_sigma)
        if abs(eps) < cfg.relative_error_bound:
            break
    if abs(truth) >= 1.0:
        return truth * (1.0 + eps)
    return truth + eps


def read_frame(world: WorldState, pose: RobotPose, timestamp: float,
               ucfg: UltrasonicConfig, scfg: SmokeConfig, tcfg: TemperatureConfig,
               rng: np.random.Generator) -> SensorFrame:
    """Sample all sensors in a fixed order (ultrasonic, smoke, temperature)
    so the RNG stream stays aligned across runs."""
    distance, triggered = ultrasonic_read(world, pose, ucfg, rng)
    smoke = smoke_read(world, pose, scfg, rng)
    temp = temperature_read(world, pose, tcfg, rng)
    return SensorFrame(
        timestamp=timestamp,
        ultrasonic_distance=distance,
        ultrasonic_triggered=triggered,
        smoke=smoke,
        temperature_c=temp,
    )
