"""Closed-form forward and inverse kinematics for one 3-DOF spider-robot leg.

Each leg is a shoulder yaw joint (about z) followed by two pitch joints,
modelled with standard Denavit-Hartenberg frames.  The D-H assignment is
alpha = (+pi/2, 0, 0), d = (0, 0, 0), a = (l1, l2, l3), which is the unique
standard assignment whose composed transform has third rotation column
(sin q1, -cos q1, 0).

All angles are radians, all lengths meters.  Angles returned by this module
are normalized to (-pi, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "DhParams",
    "HomogeneousTransform",
    "LegGeometry",
    "JointAngles",
    "FootPosition",
    "IkBranch",
    "KinematicsError",
    "UnreachableError",
    "ShoulderSingularityError",
    "JointLimitError",
    "normalize_angle",
    "dh_transform",
    "compose",
    "leg_dh_params",
    "forward_kinematics",
    "inverse_kinematics",
    "reachable",
]

ORTHONORMALITY_TOL = 1e-12


class KinematicsError(Exception):
    """Base class for kinematics failures."""


class UnreachableError(KinematicsError):
    """Target lies outside the leg's annular workspace."""


class ShoulderSingularityError(KinematicsError):
    """Target on the shoulder axis: q1 = atan2(0, 0) is undefined."""


class JointLimitError(KinematicsError):
    """A geometrically valid solution violates a joint limit."""

    def __init__(self, joint: int, angle: float, limits: tuple[float, float]):
        self.joint = joint
        self.angle = angle
        self.limits = limits
        super().__init__(
            f"joint {joint} angle {angle:.6f} rad outside [{limits[0]:.6f}, {limits[1]:.6f}]"
        )


def normalize_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    r = math.remainder(angle, math.tau)
    if r <= -math.pi:
        r += math.tau
    return r


@dataclass(frozen=True)
class DhParams:
    """One joint's D-H parameters: joint angle q, link twist alpha,
    link offset d, link length a."""

    q: float
    alpha: float
    d: float
    a: float

    def __post_init__(self):
        for name in ("q", "alpha", "d", "a"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"DhParams.{name} must be finite")
        object.__setattr__(self, "q", normalize_angle(self.q))


@dataclass(frozen=True)
class HomogeneousTransform:
    """A rigid transform stored as a 4x4 matrix with bottom row (0, 0, 0, 1).

    Construction validates the bottom row exactly and the rotation block's
    orthonormality to 1e-12, so an invalid transform can never circulate.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (4, 4):
            raise ValueError(f"expected 4x4 matrix, got shape {m.shape}")
        if not (m[3, 0] == 0.0 and m[3, 1] == 0.0 and m[3, 2] == 0.0 and m[3, 3] == 1.0):
            raise ValueError(f"bottom row must be (0, 0, 0, 1), got {m[3]}")
        r = m[:3, :3]
        err = np.max(np.abs(r.T @ r - np.eye(3)))
        if err > ORTHONORMALITY_TOL:
            raise ValueError(f"rotation block not orthonormal (|R'R - I| = {err:.3e})")
        det = np.linalg.det(r)
        if abs(det - 1.0) > ORTHONORMALITY_TOL:
            raise ValueError(f"rotation determinant {det!r} != +1")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "HomogeneousTransform":
        return cls(np.eye(4))

    @property
    def rotation(self) -> np.ndarray:
        return self.matrix[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        return self.matrix[:3, 3]

    def inverse(self) -> "HomogeneousTransform":
        rt = self.rotation.T
        m = np.eye(4)
        m[:3, :3] = rt
        m[:3, 3] = -rt @ self.translation
        return HomogeneousTransform(m)


@dataclass(frozen=True)
class LegGeometry:
    """Link lengths and joint limits for one leg.

    joint_limits holds one (min, max) interval per joint, radians, each
    inside [-pi, pi].  The defaults leave every joint effectively free.
    """

    l1: float = 0.05
    l2: float = 0.10
    l3: float = 0.10
    joint_limits: tuple[tuple[float, float], ...] = (
        (-math.pi, math.pi),
        (-math.pi, math.pi),
        (-math.pi, math.pi),
    )

    def __post_init__(self):
        for name in ("l1", "l2", "l3"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"LegGeometry.{name} must be a positive length, got {v}")
        if len(self.joint_limits) != 3:
            raise ValueError("joint_limits must hold exactly 3 intervals")
        lims = tuple((float(lo), float(hi)) for lo, hi in self.joint_limits)
        for i, (lo, hi) in enumerate(lims):
            if not (-math.pi <= lo < hi <= math.pi):
                raise ValueError(f"joint {i + 1} limits [{lo}, {hi}] invalid")
        object.__setattr__(self, "joint_limits", lims)

    @property
    def total_length(self) -> float:
        return self.l1 + self.l2 + self.l3


@dataclass(frozen=True)
class JointAngles:
    """(q1, q2, q3) for one leg, radians."""

    q1: float
    q2: float
    q3: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.q1, self.q2, self.q3)


@dataclass(frozen=True)
class FootPosition:
    """Foot position in the leg's shoulder frame, meters."""

    px: float
    py: float
    pz: float

    def __post_init__(self):
        for name in ("px", "py", "pz"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"FootPosition.{name} must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.px, self.py, self.pz])


class IkBranch(Enum):
    """Elbow branch of the closed-form IK: sign of the square root in the
    q2 solution, paired with the q3 sign that makes the branch round-trip
    through forward kinematics (pinned by test)."""

    KNEE_DOWN = 1
    KNEE_UP = -1


def dh_transform(p: DhParams) -> HomogeneousTransform:
    """The homogeneous transform between consecutive link frames."""
    cq, sq = math.cos(p.q), math.sin(p.q)
    ca, sa = math.cos(p.alpha), math.sin(p.alpha)
    return HomogeneousTransform(np.array([
        [cq, -sq * ca, sq * sa, p.a * cq],
        [sq, cq * ca, -cq * sa, p.a * sq],
        [0.0, sa, ca, p.d],
        [0.0, 0.0, 0.0, 1.0],
    ]))


def compose(first: HomogeneousTransform, *rest: HomogeneousTransform) -> HomogeneousTransform:
    """Chain transforms left to right: compose(A, B, C) = A @ B @ C."""
    m = first.matrix
    for t in rest:
        m = m @ t.matrix
    return HomogeneousTransform(m)


def leg_dh_params(g: LegGeometry, q: JointAngles) -> tuple[DhParams, DhParams, DhParams]:
    """D-H parameter triple for the leg at joint angles q."""
    return (
        DhParams(q=q.q1, alpha=math.pi / 2, d=0.0, a=g.l1),
        DhParams(q=q.q2, alpha=0.0, d=0.0, a=g.l2),
        DhParams(q=q.q3, alpha=0.0, d=0.0, a=g.l3),
    )


def forward_kinematics(g: LegGeometry, q: JointAngles) -> tuple[HomogeneousTransform, FootPosition]:
    """Shoulder-to-foot transform and foot position for joint angles q.

    Uses the closed form of the composed three-joint chain; equality with
    the explicit D-H matrix product is enforced by test.
    """
    c1, s1 = math.cos(q.q1), math.sin(q.q1)
    c2, s2 = math.cos(q.q2), math.sin(q.q2)
    c23, s23 = math.cos(q.q2 + q.q3), math.sin(q.q2 + q.q3)
    reach = g.l1 + g.l2 * c2 + g.l3 * c23
    px = c1 * reach
    py = s1 * reach
    pz = g.l2 * s2 + g.l3 * s23
    t = HomogeneousTransform(np.array([
        [c1 * c23, -c1 * s23, s1, px],
        [s1 * c23, -s1 * s23, -c1, py],
        [s23, c23, 0.0, pz],
        [0.0, 0.0, 0.0, 1.0],
    ]))
    return t, FootPosition(px, py, pz)


def _planar_intermediates(g: LegGeometry, target: FootPosition) -> tuple[float, float, float, float]:
    """The (r, a, b, c) intermediates of the closed-form IK."""
    r = math.hypot(target.px, target.py) - g.l1
    a = 2.0 * g.l2 * r
    b = 2.0 * target.pz * g.l2
    c = r * r + target.pz * target.pz + g.l2 * g.l2 - g.l3 * g.l3
    return r, a, b, c


def reachable(g: LegGeometry, target: FootPosition) -> bool:
    """True iff the target lies in the leg's workspace (q1 defined and the
    two distal links can span the planar distance)."""
    if target.px == 0.0 and target.py == 0.0:
        return False
    r, _, _, c = _planar_intermediates(g, target)
    return abs((c - 2.0 * g.l2 * g.l2) / (2.0 * g.l2 * g.l3)) <= 1.0


def inverse_kinematics(g: LegGeometry, target: FootPosition, branch: IkBranch) -> JointAngles:
    """Closed-form IK for one leg.

    q1 = atan2(py, px); q2 from the a*cos + b*sin = c trig equation with the
    branch selecting the square-root sign; q3's magnitude from the law of
    cosines, its sign tied to the branch so that forward kinematics
    reproduces the target.

    Raises ShoulderSingularityError when px = py = 0, UnreachableError when
    the target is outside the workspace, and JointLimitError when the
    solution violates g's joint limits.
    """
    if target.px == 0.0 and target.py == 0.0:
        raise ShoulderSingularityError("target on the shoulder z-axis")
    q1 = math.atan2(target.py, target.px)

    _, a, b, c = _planar_intermediates(g, target)
    cos_q3 = (c - 2.0 * g.l2 * g.l2) / (2.0 * g.l2 * g.l3)
    if abs(cos_q3) > 1.0:
        raise UnreachableError(
            f"target ({target.px}, {target.py}, {target.pz}) outside workspace "
            f"(|cos q3| = {abs(cos_q3):.6f})"
        )

    sign = float(branch.value)
    # disc >= 0 is equivalent to |cos_q3| <= 1; clip rounding residue only.
    disc = max(a * a + b * b - c * c, 0.0)
    q2 = normalize_angle(math.atan2(c, sign * math.sqrt(disc)) - math.atan2(a, b))
    q3 = sign * math.acos(cos_q3)

    angles = JointAngles(q1, normalize_angle(q2), normalize_angle(q3))
    for i, ang in enumerate(angles.as_tuple()):
        lo, hi = g.joint_limits[i]
        if not (lo <= ang <= hi):
            raise JointLimitError(i + 1, ang, (lo, hi))
    return angles
