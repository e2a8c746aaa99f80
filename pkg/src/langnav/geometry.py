"""Planar poses and SE(2) transforms shared by the whole stack."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(theta):
    """Wrap an angle to (-pi, pi]."""
    t = math.fmod(theta + math.pi, TWO_PI)
    if t <= 0.0:
        t += TWO_PI
    return t - math.pi


def wrap_angle_array(theta):
    # vectorized variant, same (-pi, pi] convention
    t = np.mod(np.asarray(theta, dtype=float) + math.pi, TWO_PI)
    t = np.where(t <= 0.0, t + TWO_PI, t)
    return t - math.pi


@dataclass(frozen=True)
class Pose2:
    """SE(2) pose. theta is always normalized to (-pi, pi]."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @property
    def xy(self):
        return np.array([self.x, self.y])

    def compose(self, dx, dy, dtheta):
        """Apply a body-frame delta to this pose."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2(
            self.x + c * dx - s * dy,
            self.y + s * dx + c * dy,
            self.theta + dtheta,
        )

    def delta_to(self, other):
        """Body-frame delta (dx, dy, dtheta) such that compose(*delta) == other."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        ex, ey = other.x - self.x, other.y - self.y
        return (c * ex + s * ey, -s * ex + c * ey, wrap_angle(other.theta - self.theta))

    def to_body(self, points):
        """Map-frame points (..., 2) into this pose's body frame."""
        p = np.asarray(points, dtype=float)
        c, s = math.cos(self.theta), math.sin(self.theta)
        ex = p[..., 0] - self.x
        ey = p[..., 1] - self.y
        return np.stack([c * ex + s * ey, -s * ex + c * ey], axis=-1)

    def to_map(self, points):
        """Body-frame points (..., 2) into the map frame."""
        p = np.asarray(points, dtype=float)
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.stack(
            [self.x + c * p[..., 0] - s * p[..., 1],
             self.y + s * p[..., 0] + c * p[..., 1]],
            axis=-1,
        )


def compose_poses_array(poses, deltas):
    """Compose body-frame deltas onto an (N, 3) pose array. Returns a new array."""
    poses = np.asarray(poses, dtype=float)
    deltas = np.asarray(deltas, dtype=float)
    c = np.cos(poses[:, 2])
    s = np.sin(poses[:, 2])
    out = np.empty_like(poses)
    out[:, 0] = poses[:, 0] + c * deltas[:, 0] - s * deltas[:, 1]
    out[:, 1] = poses[:, 1] + s * deltas[:, 0] + c * deltas[:, 1]
    out[:, 2] = wrap_angle_array(poses[:, 2] + deltas[:, 2])
    return out


def segment_point_distance(a, b, points):
    """Distance from each of `points` (..., 2) to segment a-b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    p = np.asarray(points, dtype=float)
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.linalg.norm(p - a, axis=-1)
    t = np.clip(((p - a) @ ab) / denom, 0.0, 1.0)
    proj = a + t[..., None] * ab
    return np.linalg.norm(p - proj, axis=-1)
