"""Multimodal Monte Carlo localization.

Per-particle importance mixes a language-landmark term (feature points
matched against map landmarks by cosine similarity, gated by a logistic of
inverse distance) with a road-alignment term (signed-distance samples at
the nav map's road points, projected through the particle). Raw scores go
through a softmax reweight; systematic resampling triggers on low ESS.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .embedding import cosine_sim
from .geometry import Pose2, compose_poses_array, wrap_angle, wrap_angle_array
from .perception import EsdfSampler
from .world import visibility_mask

METHODS = ("deadreckon", "maplite", "altpilot_l", "altpilot")

INIT_YAW_SPREAD = math.pi / 6.0


class WeightCollapse(RuntimeError):
    """All particle weights vanished (no finite score)."""


@dataclass
class FilterConfig:
    n_particles: int = 500
    alpha: float = -0.5          # logistic offset of the distance factor
    beta: float = 2.0            # logistic gain on inverse distance
    epsilon: float = 0.1         # meters, guards the inverse distance
    lam: float = 0.05            # weight of the road-alignment term
    road_points_v: int = 10      # alignment samples per particle
    road_spacing: float = 1.0    # meters between sampled road points
    temperature: float = 1.0
    ess_frac: float = 0.5
    trans_std_per_meter: float = 0.05
    rot_std_per_radian: float = 0.3
    init_mode: str = "road"      # road | bbox
    init_yaw_spread: float = INIT_YAW_SPREAD


@dataclass
class Particle:
    pose: Pose2
    weight: float


@dataclass
class ParticleSet:
    """poses (N, 3) [x, y, theta], weights (N,) summing to 1."""

    poses: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.poses)

    def particle(self, i):
        x, y, t = self.poses[i]
        return Particle(pose=Pose2(x, y, t), weight=float(self.weights[i]))


@dataclass
class PoseEstimate:
    x: float
    y: float
    yaw: float
    spread: float  # RMS weighted distance to the median position, meters

    @property
    def xy(self):
        return np.array([self.x, self.y])

    @property
    def pose(self):
        return Pose2(self.x, self.y, self.yaw)


# ---------------------------------------------------------------------------
# initialization

def _clip_edge_to_discs(a, b, regions):
    """Merged parameter intervals of segment a-b lying inside any disc."""
    d = b - a
    aa = float(d @ d)
    raw = []
    for center, radius in regions:
        c = np.asarray(center, dtype=float)
        if aa == 0.0:
            if np.linalg.norm(a - c) <= radius:
                raw.append((0.0, 1.0))
            continue
        bb = 2.0 * float(d @ (a - c))
        cc = float((a - c) @ (a - c)) - radius * radius
        disc = bb * bb - 4.0 * aa * cc
        if disc <= 0.0:
            continue
        r = math.sqrt(disc)
        t0 = max(0.0, (-bb - r) / (2.0 * aa))
        t1 = min(1.0, (-bb + r) / (2.0 * aa))
        if t0 < t1:
            raw.append((t0, t1))
    raw.sort()
    merged = []
    for t0, t1 in raw:
        if merged and t0 <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], t1))
        else:
            merged.append((t0, t1))
    return merged


def init_particles(nav_map, cfg, rng, regions=None, heading=None):
    """Draw the initial particle set.

    road mode: positions uniform by arc length along edge centerlines, yaw
    aligned with the edge (either direction, or the one nearer `heading`
    when given) plus a uniform perturbation. bbox mode: uniform over the
    map bounds with uniform yaw. `regions` (center, radius) discs restrict
    the road draw to the covered stretches.
    """
    n = cfg.n_particles
    if cfg.init_mode == "bbox":
        mn_x, mn_y, mx_x, mx_y = nav_map.bounds
        poses = np.empty((n, 3))
        poses[:, 0] = rng.uniform(mn_x, mx_x, size=n)
        poses[:, 1] = rng.uniform(mn_y, mx_y, size=n)
        poses[:, 2] = wrap_angle_array(rng.uniform(-math.pi, math.pi, size=n))
        return ParticleSet(poses=poses, weights=np.full(n, 1.0 / n))
    if cfg.init_mode != "road":
        raise ValueError(f"unknown init mode {cfg.init_mode!r}")

    segments = []  # (start_xy, direction_unit, seg_len, edge_heading)
    net = nav_map.network
    for e in net.edges:
        a, b = net.nodes[e.a], net.nodes[e.b]
        length = float(np.linalg.norm(b - a))
        if length == 0.0:
            continue
        u = (b - a) / length
        spans = [(0.0, 1.0)] if regions is None else _clip_edge_to_discs(a, b, regions)
        for t0, t1 in spans:
            segments.append((a + t0 * length * u, u, (t1 - t0) * length))
    if not segments:
        raise ValueError("road init found no road inside the init regions")

    lens = np.array([s[2] for s in segments])
    pick = rng.choice(len(segments), size=n, p=lens / lens.sum())
    s = rng.uniform(0.0, 1.0, size=n) * lens[pick]
    starts = np.array([seg[0] for seg in segments])
    dirs = np.array([seg[1] for seg in segments])
    pos = starts[pick] + s[:, None] * dirs[pick]

    base = np.arctan2(dirs[pick][:, 1], dirs[pick][:, 0])
    if heading is None:
        flip = rng.integers(0, 2, size=n).astype(bool)
    else:
        # take the edge direction closer to the hint
        flip = np.abs(wrap_angle_array(base - heading)) > math.pi / 2.0
    base = np.where(flip, base + math.pi, base)
    yaw = base + rng.uniform(-cfg.init_yaw_spread, cfg.init_yaw_spread, size=n)

    poses = np.column_stack([pos, wrap_angle_array(yaw)])
    return ParticleSet(poses=poses, weights=np.full(n, 1.0 / n))


# ---------------------------------------------------------------------------
# prediction

def predict(particles, odo, cfg, rng):
    """Compose the odometry delta, perturbed per particle, onto every pose."""
    n = len(particles)
    deltas = np.tile([odo.dx, odo.dy, odo.dtheta], (n, 1))
    t_std = cfg.trans_std_per_meter * odo.translation
    r_std = cfg.rot_std_per_radian * abs(odo.dtheta)
    if t_std > 0.0:
        deltas[:, 0] += rng.normal(0.0, t_std, size=n)
        deltas[:, 1] += rng.normal(0.0, t_std, size=n)
    if r_std > 0.0:
        deltas[:, 2] += rng.normal(0.0, r_std, size=n)
    return ParticleSet(poses=compose_poses_array(particles.poses, deltas),
                       weights=particles.weights.copy())


# ---------------------------------------------------------------------------
# scoring

def importance_factor(particle, landmarks, points, esdf_sampler, road_points, cfg):
    """Raw score of one particle: landmark term plus lam * alignment term.

    landmarks: nav-map Landmark list hypothesized visible from the particle.
    points: FeaturePoint list observed in the vehicle frame.
    road_points: (v, 2) nav road points nearest the particle, map frame.
    """
    pose = particle.pose
    w_lm = 0.0
    for lm in landmarks:
        c = 0.0
        match = None
        for fp in points:
            sim = cosine_sim(lm.text_feature, fp.feature)
            if sim > c:
                c = sim
                match = fp
        if match is None:
            continue
        p_map = pose.to_map(match.position)
        d_inv = 1.0 / (float(np.linalg.norm(p_map - lm.position)) + cfg.epsilon)
        d = cfg.alpha + expit(cfg.beta * d_inv)
        w_lm += c * d
    if cfg.lam == 0.0:
        return w_lm
    w_yaw = float(np.sum(esdf_sampler.sample_many(road_points)))
    return w_lm + cfg.lam * w_yaw


def baseline_weight_maplite(particle, esdf_sampler, road_points, cfg):
    """Road-alignment score alone (geometry-only baseline)."""
    return float(np.sum(esdf_sampler.sample_many(road_points)))


@dataclass
class StepObservation:
    """Per-step sensor bundle shared by every particle."""

    nav_map: object
    sdf: object                 # esdf Grid2D
    points: list                # FeaturePoint list
    fov: float
    max_range: float
    outside_value: float = -5.0

    lm_pos: np.ndarray = field(init=False)
    lm_feat: np.ndarray = field(init=False)
    best_c: np.ndarray = field(init=False)
    best_pos: np.ndarray = field(init=False)

    def __post_init__(self):
        lms = self.nav_map.landmarks
        self.lm_pos = (np.array([l.position for l in lms])
                       if lms else np.zeros((0, 2)))
        self.lm_feat = (np.array([l.text_feature for l in lms])
                        if lms else np.zeros((0, 0)))
        k = len(lms)
        if k == 0 or not self.points:
            self.best_c = np.zeros(k)
            self.best_pos = np.zeros((k, 2))
            return
        pf = np.array([p.feature for p in self.points])
        pp = np.array([p.position for p in self.points])
        sims = np.clip(self.lm_feat @ pf.T, 0.0, 1.0)
        idx = np.argmax(sims, axis=1)  # first max, matching the scalar loop
        self.best_c = sims[np.arange(k), idx]
        self.best_pos = pp[idx]


def _sample_field_local(grid, lx, ly, outside_value):
    ex, ey = grid.extent
    ox, oy = grid.origin.x, grid.origin.y
    gx = lx - ox
    gy = ly - oy
    inside = (gx >= 0.0) & (gx < ex) & (gy >= 0.0) & (gy < ey)
    u = gx / grid.resolution - 0.5
    v = gy / grid.resolution - 0.5
    i0 = np.clip(np.floor(u).astype(int), 0, grid.nx - 1)
    j0 = np.clip(np.floor(v).astype(int), 0, grid.ny - 1)
    i1 = np.minimum(i0 + 1, grid.nx - 1)
    j1 = np.minimum(j0 + 1, grid.ny - 1)
    fu = np.where(np.floor(u) < 0, 0.0, np.clip(u - np.floor(u), 0.0, 1.0))
    fv = np.where(np.floor(v) < 0, 0.0, np.clip(v - np.floor(v), 0.0, 1.0))
    z = grid.values
    top = z[i0, j0] * (1 - fu) + z[i1, j0] * fu
    bot = z[i0, j1] * (1 - fu) + z[i1, j1] * fu
    return np.where(inside, top * (1 - fv) + bot * fv, outside_value)


def _alignment_scores(poses, obs, cfg):
    tree = obs.nav_map.road_tree(cfg.road_spacing)
    if tree is None:
        return np.zeros(len(poses))
    road = obs.nav_map.road_points(cfg.road_spacing)
    k = min(cfg.road_points_v, len(road))
    _, idx = tree.query(poses[:, :2], k=k)
    if k == 1:
        idx = idx[:, None]
    pts = road[idx]  # (N, k, 2)
    dx = pts[:, :, 0] - poses[:, None, 0]
    dy = pts[:, :, 1] - poses[:, None, 1]
    c = np.cos(poses[:, 2])[:, None]
    s = np.sin(poses[:, 2])[:, None]
    lx = c * dx + s * dy
    ly = -s * dx + c * dy
    vals = _sample_field_local(obs.sdf, lx.ravel(), ly.ravel(), obs.outside_value)
    return vals.reshape(len(poses), k).sum(axis=1)


def _landmark_scores(poses, obs, cfg):
    k = len(obs.best_c)
    if k == 0:
        return np.zeros(len(poses))
    vis = visibility_mask(obs.lm_pos, poses, obs.fov, obs.max_range)
    has = obs.best_c > 0.0
    c = np.cos(poses[:, 2])[:, None]
    s = np.sin(poses[:, 2])[:, None]
    bx, by = obs.best_pos[:, 0][None, :], obs.best_pos[:, 1][None, :]
    mx = poses[:, 0][:, None] + c * bx - s * by
    my = poses[:, 1][:, None] + s * bx + c * by
    dist = np.hypot(mx - obs.lm_pos[:, 0][None, :], my - obs.lm_pos[:, 1][None, :])
    d = cfg.alpha + expit(cfg.beta / (dist + cfg.epsilon))
    contrib = obs.best_c[None, :] * d * vis * has[None, :]
    return contrib.sum(axis=1)


def score_particles(particles, obs, cfg, method):
    """Vectorized raw scores for a whole particle set (matches
    importance_factor / baseline_weight_maplite per particle)."""
    poses = particles.poses
    if method == "maplite":
        return _alignment_scores(poses, obs, cfg)
    if method == "altpilot_l":
        return _landmark_scores(poses, obs, cfg)
    if method == "altpilot":
        w = _landmark_scores(poses, obs, cfg)
        if cfg.lam != 0.0:
            w = w + cfg.lam * _alignment_scores(poses, obs, cfg)
        return w
    raise ValueError(f"method {method!r} does not score particles")


# ---------------------------------------------------------------------------
# reweighting and state extraction

def reweight_and_resample(particles, scores, cfg, rng):
    """Softmax the raw scores into weights; systematic-resample on low ESS."""
    scores = np.asarray(scores, dtype=float)
    finite = np.isfinite(scores)
    if not finite.any():
        raise WeightCollapse("all particle scores are non-finite")
    top = scores[finite].max()
    w = np.where(finite, np.exp(cfg.temperature * (scores - top)), 0.0)
    total = w.sum()
    if total <= 0.0 or not np.isfinite(total):
        raise WeightCollapse("particle weights sum to zero")
    w /= total
    n = len(particles)
    ess = 1.0 / float(w @ w)
    if ess >= cfg.ess_frac * n:
        return ParticleSet(poses=particles.poses.copy(), weights=w)
    # systematic (low variance) resampling
    positions = (rng.random() + np.arange(n)) / n
    idx = np.searchsorted(np.cumsum(w), positions)
    idx = np.clip(idx, 0, n - 1)
    return ParticleSet(poses=particles.poses[idx].copy(),
                       weights=np.full(n, 1.0 / n))


def _weighted_median(values, weights):
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(weights[order])
    i = int(np.searchsorted(cum, 0.5 * cum[-1]))
    return float(values[order[min(i, len(values) - 1)]])


def estimate(particles):
    """Weighted componentwise median position, circular-mean yaw, RMS spread."""
    w = particles.weights
    total = w.sum()
    if total <= 0.0:
        raise WeightCollapse("cannot estimate from zero-weight particle set")
    wn = w / total
    x = _weighted_median(particles.poses[:, 0], wn)
    y = _weighted_median(particles.poses[:, 1], wn)
    yaw = math.atan2(float(wn @ np.sin(particles.poses[:, 2])),
                     float(wn @ np.cos(particles.poses[:, 2])))
    d2 = (particles.poses[:, 0] - x) ** 2 + (particles.poses[:, 1] - y) ** 2
    spread = math.sqrt(float(wn @ d2))
    return PoseEstimate(x=x, y=y, yaw=wrap_angle(yaw), spread=spread)
