"""Kinematic bicycle vehicle plus the synthetic sensor suite.

Sensors read the true map only; the nav map's corruptions never leak into
what the vehicle physically observes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import Pose2, segment_point_distance
from .perception import Grid2D
from .world import visible_landmarks


@dataclass
class VehicleState:
    pose: Pose2
    speed: float = 0.0
    steering: float = 0.0
    wheelbase: float = 2.5
    max_steer: float = 0.6


@dataclass
class OdometryDelta:
    """Body-frame motion since the previous step."""
    dx: float
    dy: float
    dtheta: float

    @property
    def translation(self):
        return math.hypot(self.dx, self.dy)


@dataclass
class FeaturePoint:
    """One scattered observation of a landmark, in the vehicle frame."""
    position: np.ndarray  # (2,)
    feature: np.ndarray   # unit vector
    source_landmark_id: int


@dataclass
class SensorRig:
    fov: float = 2.0                 # radians
    max_range: float = 80.0          # meters
    points_per_landmark: int = 5
    point_scatter_std: float = 0.3   # meters
    feature_noise_std: float = 0.25  # radians in feature space
    odom_trans_std: float = 0.05     # meters of noise per meter traveled
    odom_rot_std: float = 0.4        # radians of noise per radian turned
    grid_length: float = 30.0        # along vehicle x
    grid_width: float = 15.0         # along vehicle y
    grid_resolution: float = 0.25


def step_kinematics(state, accel, steer, dt):
    """One explicit-Euler step of the kinematic bicycle model."""
    steer = float(np.clip(steer, -state.max_steer, state.max_steer))
    p = state.pose
    v = state.speed
    new_pose = Pose2(
        p.x + v * math.cos(p.theta) * dt,
        p.y + v * math.sin(p.theta) * dt,
        p.theta + v / state.wheelbase * math.tan(steer) * dt,
    )
    return replace(state, pose=new_pose, speed=max(0.0, v + accel * dt),
                   steering=steer)


def sense_odometry(prev_pose, curr_pose, rig, rng):
    """Noisy body-frame delta between consecutive true poses.

    Translation noise scales with distance covered, rotation noise with the
    rotation magnitude.
    """
    dx, dy, dth = prev_pose.delta_to(curr_pose)
    dist = math.hypot(dx, dy)
    t_std = rig.odom_trans_std * dist
    r_std = rig.odom_rot_std * abs(dth)
    if t_std > 0.0:
        dx += rng.normal(0.0, t_std)
        dy += rng.normal(0.0, t_std)
    if r_std > 0.0:
        dth += rng.normal(0.0, r_std)
    return OdometryDelta(dx=dx, dy=dy, dtheta=dth)


def sense_landmarks(true_map, pose, rig, vocab, rng):
    """Scattered feature points from every physically visible landmark."""
    from .embedding import embed_visual
    out = []
    for lm in visible_landmarks(true_map, pose, rig.fov, rig.max_range):
        for _ in range(rig.points_per_landmark):
            off = rng.normal(0.0, rig.point_scatter_std, size=2)
            # keep scatter inside 3 sigma so ranges stay bounded
            n = np.linalg.norm(off)
            cap = 3.0 * rig.point_scatter_std
            if n > cap:
                off *= cap / n
            p_map = lm.position + off
            out.append(FeaturePoint(
                position=pose.to_body(p_map),
                feature=embed_visual(lm.tag, rig.feature_noise_std, vocab, rng),
                source_landmark_id=lm.id,
            ))
    return out


def occupancy_origin(rig):
    return Pose2(-rig.grid_length / 2.0, -rig.grid_width / 2.0, 0.0)


def sense_road_grid(true_map, pose, rig):
    """Vehicle-centered occupancy grid; a cell is free iff its center lies
    within half an edge's width of that edge's centerline."""
    res = rig.grid_resolution
    nx = int(round(rig.grid_length / res))
    ny = int(round(rig.grid_width / res))
    origin = occupancy_origin(rig)
    xs = origin.x + (np.arange(nx) + 0.5) * res
    ys = origin.y + (np.arange(ny) + 0.5) * res
    local = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)
    pts = pose.to_map(local)

    free = np.zeros(len(pts), dtype=bool)
    reach = math.hypot(rig.grid_length, rig.grid_width) / 2.0
    here = pose.xy
    for e in true_map.network.edges:
        a = true_map.network.nodes[e.a]
        b = true_map.network.nodes[e.b]
        # skip edges that cannot intersect the grid window
        if segment_point_distance(a, b, here) > reach + e.width / 2.0:
            continue
        free |= segment_point_distance(a, b, pts) <= e.width / 2.0
    occ = (~free).astype(np.uint8).reshape(nx, ny)
    return Grid2D(origin=origin, resolution=res, values=occ)
