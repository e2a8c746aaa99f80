"""Scenario configs, deterministic runners, and the ablation sweep.

All randomness in a run flows from the scenario seed through three named
streams: "sim" (sensor noise), "filter" (particle filter), "corruption"
(nav-map landmark corruption). Reruns of the same scenario and seed are
byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import zlib
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import localization as loc
from .embedding import Vocabulary, load_vocabulary
from .geometry import Pose2, wrap_angle_array
from .metrics import LogRecord, RunLog, compute_report
from .perception import EsdfSampler, Grid2D, esdf
from .planning import (NoFeasibleTrajectory, NoRoute, PidGains, PidState,
                       PlannerConfig, Route, Trajectory, _polyline, astar_route,
                       pid_speed, plan_frenet, resolve_language_goal,
                       snap_to_network, stanley_steer, waypoints_ahead)
from .simulator import (SensorRig, VehicleState, sense_landmarks,
                        sense_odometry, sense_road_grid, step_kinematics)
from .world import (TopometricMap, corrupt_landmarks, load_map, scale_map,
                    unscale_point)

COMFORT_DECEL = 1.5      # m/s^2 used for the approach speed ramp
GOAL_ARC_TOL = 2.0       # declare arrival within this arc distance of route end
GOAL_SPEED_TOL = 0.1
BUDGET_FACTOR = 4.0      # step budget = factor * route time at target speed
STALL_LIMIT = 150        # consecutive parked-and-planless steps before giving up
CORNER_LAT_ACCEL = 2.5   # lateral acceleration budget for bends, m/s^2
CORNER_MIN_SPEED = 2.0   # never slow below this for a bend
PREVIEW_DIST = 60.0      # route meters scanned ahead for bend braking

ABLATION_COLUMNS = ("scenario_hash", "method", "sweep", "value", "seed", "steps",
                    "mean_ape", "median_ape", "final_ape", "mean_spread",
                    "final_spread", "dist_to_converge", "status")


class ScenarioError(ValueError):
    """Bad scenario configuration (usage-level failure)."""


def data_path(name):
    """Absolute path of a bundled reference data file."""
    return os.path.join(os.path.dirname(os.path.abspath(__file__)), "data", name)


def stream_rng(seed, label):
    """Independent generator for one named stream of a seeded run."""
    return np.random.default_rng(
        np.random.SeedSequence([int(seed), zlib.crc32(label.encode("ascii"))]))


def stream_seed(seed, label):
    return np.random.SeedSequence([int(seed), zlib.crc32(label.encode("ascii"))])


@dataclass
class VehicleParams:
    wheelbase: float = 2.5
    max_steer: float = 0.6


@dataclass
class InitSpec:
    mode: str = "road"
    regions: list = None        # [(x, y, radius), ...] in base-map coords
    heading: float = None
    align_to_route: bool = False


@dataclass
class Scenario:
    name: str
    path: str
    map_path: str
    vocab_path: str
    method: str
    seeds: list
    noise: float
    fn: float
    fp: float
    speed: float
    dt: float
    route: list
    start: dict
    goal: dict
    init: InitSpec
    rig: SensorRig
    filt: loc.FilterConfig
    planner: PlannerConfig
    vehicle: VehicleParams
    pid: PidGains

    def resolved_doc(self):
        """Fully-defaulted config dict; its canonical JSON is the identity."""
        return {
            "map": os.path.basename(self.map_path),
            "vocabulary": os.path.basename(self.vocab_path)
            if self.vocab_path else None,
            "method": self.method,
            "noise": self.noise, "fn": self.fn, "fp": self.fp,
            "speed": self.speed, "dt": self.dt,
            "route": self.route, "start": self.start, "goal": self.goal,
            "init": {"mode": self.init.mode, "regions": self.init.regions,
                     "heading": self.init.heading,
                     "align_to_route": self.init.align_to_route},
            "rig": asdict(self.rig), "filter": asdict(self.filt),
            "planner": asdict(self.planner), "vehicle": asdict(self.vehicle),
            "pid": asdict(self.pid),
        }

    @property
    def scenario_hash(self):
        doc = json.dumps(self.resolved_doc(), sort_keys=True)
        return hashlib.sha256(doc.encode("utf-8")).hexdigest()[:12]


def _build(cls, doc, what):
    """Dataclass from a config sub-dict, rejecting unknown keys."""
    doc = dict(doc or {})
    known = {f for f in cls.__dataclass_fields__}
    unknown = set(doc) - known
    if unknown:
        raise ScenarioError(f"{what}: unknown keys {sorted(unknown)}")
    return cls(**doc)


def load_scenario(path):
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: not valid JSON ({exc})") from exc
    return scenario_from_dict(doc, base_dir=os.path.dirname(os.path.abspath(path)),
                              path=path)


def scenario_from_dict(doc, base_dir=".", path="<dict>"):
    if "map" not in doc:
        raise ScenarioError(f"{path}: scenario needs a 'map' entry")
    method = doc.get("method", "altpilot")
    if method not in loc.METHODS:
        raise ScenarioError(
            f"{path}: unknown method {method!r}, expected one of {loc.METHODS}")
    noise = float(doc.get("noise", 0.0))
    fn = float(doc.get("fn", 0.0))
    fp = float(doc.get("fp", 0.0))
    if noise < 0.0:
        raise ScenarioError(f"{path}: noise must be >= 0")
    if not (0.0 <= fn <= 1.0 and 0.0 <= fp <= 1.0 and fn + fp <= 1.0):
        raise ScenarioError(f"{path}: need 0 <= fn, fp and fn + fp <= 1")

    init_doc = dict(doc.get("init") or {})
    init = InitSpec(
        mode=init_doc.get("mode", "road"),
        regions=[tuple(map(float, r)) for r in init_doc["regions"]]
        if init_doc.get("regions") else None,
        heading=None if init_doc.get("heading") is None
        else float(init_doc["heading"]),
        align_to_route=bool(init_doc.get("align_to_route", False)),
    )
    if init.mode not in ("road", "bbox"):
        raise ScenarioError(f"{path}: init mode must be 'road' or 'bbox'")

    def resolve(p):
        return p if os.path.isabs(p) else os.path.join(base_dir, p)

    route = doc.get("route")
    return Scenario(
        name=doc.get("name", os.path.splitext(os.path.basename(path))[0]),
        path=path,
        map_path=resolve(doc["map"]),
        vocab_path=resolve(doc["vocabulary"]) if doc.get("vocabulary") else None,
        method=method,
        seeds=[int(s) for s in doc.get("seeds", [0])],
        noise=noise, fn=fn, fp=fp,
        speed=float(doc.get("speed", 10.0)),
        dt=float(doc.get("dt", 0.1)),
        route=[int(n) for n in route] if route else None,
        start=doc.get("start"),
        goal=doc.get("goal"),
        init=init,
        rig=_build(SensorRig, doc.get("rig"), "rig"),
        filt=_build(loc.FilterConfig, doc.get("filter"), "filter"),
        planner=_build(PlannerConfig, doc.get("planner"), "planner"),
        vehicle=_build(VehicleParams, doc.get("vehicle"), "vehicle"),
        pid=_build(PidGains, doc.get("pid"), "pid"),
    )


@dataclass
class BuiltWorld:
    true_map: TopometricMap
    nav_map: TopometricMap
    vocab: Vocabulary
    scale: float


def build_world(scn, seed):
    """True map straight from file; nav map scaled then corrupted."""
    vocab = load_vocabulary(scn.vocab_path) if scn.vocab_path else Vocabulary()
    true_map = load_map(scn.map_path, vocab)
    factor = 1.0 + scn.noise
    nav = scale_map(true_map, factor) if scn.noise != 0.0 else true_map
    nav = corrupt_landmarks(nav, scn.fn, scn.fp,
                            stream_seed(seed, "corruption"), vocab)
    return BuiltWorld(true_map=true_map, nav_map=nav, vocab=vocab, scale=factor)


# ---------------------------------------------------------------------------
# ground-truth drive (deterministic, cached per route)

@dataclass
class GtDrive:
    poses: list          # T+1 true poses
    deltas: np.ndarray   # (T, 3) exact body-frame deltas
    fields: list         # T signed-distance grids, fields[t-1] sensed at poses[t]
    route_length: float


_DRIVE_CACHE = {}


def _route_polyline(true_map, route_nodes):
    net = true_map.network
    pairs = {(min(e.a, e.b), max(e.a, e.b)) for e in net.edges}
    pts = []
    for i, nid in enumerate(route_nodes):
        if nid not in net.nodes:
            raise ScenarioError(f"route node {nid} is not in the map")
        if i > 0:
            a, b = route_nodes[i - 1], nid
            if (min(a, b), max(a, b)) not in pairs:
                raise ScenarioError(f"route nodes {a} and {b} share no edge")
        pts.append(net.nodes[nid])
    points, cum = _polyline(pts)
    return Route(nodes=list(route_nodes), points=points, cum=cum)


def traj_from_waypoints(waypoints, speed):
    wp = np.atleast_2d(np.asarray(waypoints, dtype=float))
    if len(wp) == 1:
        wp = np.vstack([wp, wp[0] + [1e-6, 0.0]])
    seg = np.diff(wp, axis=0)
    head = np.arctan2(seg[:, 1], seg[:, 0])
    head = np.append(head, head[-1])
    return Trajectory(points=wp, headings=head,
                      speeds=np.full(len(wp), speed), offset=0.0, cost=0.0)


def approach_speed(cruise, remaining):
    return min(cruise, math.sqrt(2.0 * COMFORT_DECEL * max(0.0, remaining - 0.5)))


def corner_speed(waypoints, a_lat=CORNER_LAT_ACCEL, floor=CORNER_MIN_SPEED):
    """Speed the tightest bend in the waypoint ribbon allows at a_lat."""
    wp = np.asarray(waypoints, dtype=float)
    if len(wp) < 3:
        return math.inf
    seg = np.diff(wp, axis=0)
    lengths = np.linalg.norm(seg, axis=1)
    heading = np.arctan2(seg[:, 1], seg[:, 0])
    turn = np.abs(wrap_angle_array(np.diff(heading)))
    arc = np.maximum(0.5 * (lengths[:-1] + lengths[1:]), 1e-6)
    kappa = float(np.max(turn / arc))
    if kappa <= 1e-6:
        return math.inf
    return max(floor, math.sqrt(a_lat / kappa))


def preview_brake(route, s_now, cruise):
    """Admissible speed so every bend in the preview window is entered slowly
    enough, given the comfort braking rate."""
    span = min(PREVIEW_DIST, route.length - s_now)
    if span < 6.0:
        return cruise
    ss = np.arange(0.0, span, 2.0)
    pts = np.array([route.point_at(s_now + s) for s in ss])
    seg = np.diff(pts, axis=0)
    lengths = np.linalg.norm(seg, axis=1)
    heading = np.arctan2(seg[:, 1], seg[:, 0])
    turn = np.abs(wrap_angle_array(np.diff(heading)))
    arc = np.maximum(0.5 * (lengths[:-1] + lengths[1:]), 1e-6)
    kappa = turn / arc
    bend = kappa > 1e-6
    if not bend.any():
        return cruise
    v_corner = np.maximum(CORNER_MIN_SPEED,
                          np.sqrt(CORNER_LAT_ACCEL / kappa[bend]))
    gap = ss[1:-1][bend]
    allowed = np.sqrt(v_corner ** 2 + 2.0 * COMFORT_DECEL * gap)
    return min(cruise, float(allowed.min()))


def drive_ground_truth(scn, true_map):
    """Simulate the vehicle tracking the true route; cache per route."""
    key = (scn.map_path, tuple(scn.route), scn.speed, scn.dt,
           tuple(sorted(asdict(scn.rig).items())),
           tuple(sorted(asdict(scn.vehicle).items())),
           tuple(sorted(asdict(scn.planner).items())),
           tuple(sorted(asdict(scn.pid).items())))
    if key in _DRIVE_CACHE:
        return _DRIVE_CACHE[key]

    route = _route_polyline(true_map, scn.route)
    if len(scn.route) < 2 or route.length == 0.0:
        start = Pose2(route.points[0][0], route.points[0][1], 0.0)
        drive = GtDrive(poses=[start], deltas=np.zeros((0, 3)), fields=[],
                        route_length=0.0)
        _DRIVE_CACHE[key] = drive
        return drive

    first_leg = route.points[1] - route.points[0]
    start = Pose2(route.points[0][0], route.points[0][1],
                  math.atan2(first_leg[1], first_leg[0]))
    state = VehicleState(pose=start, speed=0.0,
                         wheelbase=scn.vehicle.wheelbase,
                         max_steer=scn.vehicle.max_steer)
    pid = PidState()
    budget = int(BUDGET_FACTOR * route.length / (scn.speed * scn.dt)) + 100

    poses = [start]
    for _ in range(budget):
        s_now = route.project(state.pose.xy)
        remaining = route.length - s_now
        if remaining <= 0.5 and state.speed < 0.05:
            break
        wp = waypoints_ahead(route, state.pose.xy, scn.planner.horizon,
                             scn.planner.spacing)
        traj = traj_from_waypoints(wp, scn.speed)
        steer = stanley_steer(state.pose, state.speed, traj, scn.planner)
        accel = pid_speed(approach_speed(scn.speed, remaining), state.speed,
                          scn.pid, pid, scn.dt)
        state = step_kinematics(state, accel, steer, scn.dt)
        poses.append(state.pose)

    deltas = np.array([poses[i].delta_to(poses[i + 1])
                       for i in range(len(poses) - 1)])
    fields = []
    for p in poses[1:]:
        f = esdf(sense_road_grid(true_map, p, scn.rig))
        fields.append(Grid2D(origin=f.origin, resolution=f.resolution,
                             values=f.values.astype(np.float32)))
    drive = GtDrive(poses=poses, deltas=deltas, fields=fields,
                    route_length=route.length)
    _DRIVE_CACHE[key] = drive
    return drive


# ---------------------------------------------------------------------------
# runners

def _scaled_regions(regions, true_map, factor):
    if regions is None:
        return None
    mn_x, mn_y, mx_x, mx_y = true_map.bounds
    c = np.array([(mn_x + mx_x) / 2.0, (mn_y + mx_y) / 2.0])
    out = []
    for x, y, r in regions:
        p = c + factor * (np.array([x, y]) - c)
        out.append(((p[0], p[1]), r * factor))
    return out


def _init_heading(scn, drive=None, start_pose=None):
    if scn.init.heading is not None:
        return scn.init.heading
    if scn.init.align_to_route:
        if drive is not None and drive.poses:
            return drive.poses[0].theta
        if start_pose is not None:
            return start_pose.theta
    return None


def _meta(scn, seed, extra=None):
    meta = {
        "scenario": scn.name,
        "scenario_hash": scn.scenario_hash,
        "method": scn.method,
        "seed": seed,
        "map_path": os.path.abspath(scn.map_path),
        "vocab_path": os.path.abspath(scn.vocab_path) if scn.vocab_path else None,
        "noise": scn.noise, "fn": scn.fn, "fp": scn.fp,
        "dt": scn.dt, "speed": scn.speed,
    }
    if extra:
        meta.update(extra)
    return meta


def run_open_loop(scn, seed, out_dir=None):
    """Drive the true route, localize along it, log per-step state."""
    if not scn.route:
        raise ScenarioError(f"scenario {scn.name!r} has no route for an open-loop run")
    world = build_world(scn, seed)
    drive = drive_ground_truth(scn, world.true_map)
    sim_rng = stream_rng(seed, "sim")
    filt_rng = stream_rng(seed, "filter")

    regions = _scaled_regions(scn.init.regions, world.true_map, world.scale)
    particles = loc.init_particles(world.nav_map, scn.filt, filt_rng,
                                   regions=regions,
                                   heading=_init_heading(scn, drive=drive))
    est = loc.estimate(particles)
    log = RunLog(meta=_meta(scn, seed))
    dist = 0.0
    p0 = drive.poses[0]
    log.append(LogRecord(step=0, t=0.0, dist=0.0, gt_x=p0.x, gt_y=p0.y,
                         gt_theta=p0.theta, est_x=est.x, est_y=est.y,
                         est_yaw=est.yaw, spread=est.spread))

    for t in range(1, len(drive.poses)):
        pose_t = drive.poses[t]
        odo = sense_odometry(drive.poses[t - 1], pose_t, scn.rig, sim_rng)
        dist += odo.translation
        particles = loc.predict(particles, odo, scn.filt, filt_rng)
        if scn.method != "deadreckon":
            points = sense_landmarks(world.true_map, pose_t, scn.rig,
                                     world.vocab, sim_rng)
            obs = loc.StepObservation(nav_map=world.nav_map,
                                      sdf=drive.fields[t - 1], points=points,
                                      fov=scn.rig.fov, max_range=scn.rig.max_range)
            scores = loc.score_particles(particles, obs, scn.filt, scn.method)
            particles = loc.reweight_and_resample(particles, scores, scn.filt,
                                                  filt_rng)
        est = loc.estimate(particles)
        log.append(LogRecord(step=t, t=t * scn.dt, dist=dist,
                             gt_x=pose_t.x, gt_y=pose_t.y, gt_theta=pose_t.theta,
                             est_x=est.x, est_y=est.y, est_yaw=est.yaw,
                             spread=est.spread))

    if out_dir:
        log.save(out_dir)
        write_plots(log, out_dir)
    return log


@dataclass
class NavResult:
    success: bool
    steps: int
    goal_distance: float
    path_length: float
    goal_true: tuple
    budget: int
    method: str
    seed: int

    def to_dict(self):
        return {"success": self.success, "steps": self.steps,
                "goal_distance": self.goal_distance,
                "path_length": self.path_length,
                "goal_true": list(self.goal_true), "budget": self.budget,
                "method": self.method, "seed": self.seed}


def _resolve_goal(scn, world, goal_doc):
    """Returns (nav road location, true-frame goal xy)."""
    nav, true = world.nav_map, world.true_map
    if goal_doc is None:
        raise ScenarioError("closed-loop run needs a goal")
    if "point" in goal_doc:
        p = np.asarray(goal_doc["point"], dtype=float)
        nav_loc = snap_to_network(nav, p)
        # measure against the physical image of the snapped road point
        return nav_loc, tuple(unscale_point(nav, nav_loc.point, world.scale))
    if "node" in goal_doc:
        nid = int(goal_doc["node"])
        if nid not in nav.network.nodes:
            raise ScenarioError(f"goal node {nid} is not in the map")
        nav_loc = snap_to_network(nav, nav.network.nodes[nid])
        return nav_loc, tuple(true.network.nodes[nid])
    if "text" in goal_doc:
        lm = resolve_language_goal(nav, goal_doc["text"], world.vocab)
        nav_loc = snap_to_network(nav, lm.position)
        return nav_loc, tuple(true.landmark_by_id(lm.id).position)
    raise ScenarioError(f"goal spec {goal_doc!r} needs 'point', 'node' or 'text'")


def _start_pose(scn, world):
    doc = scn.start
    if doc is None:
        raise ScenarioError("closed-loop run needs a start")
    if "pose" in doc:
        x, y, th = doc["pose"]
        return Pose2(float(x), float(y), float(th))
    nid = int(doc["node"])
    toward = int(doc["toward"])
    net = world.true_map.network
    if nid not in net.nodes or toward not in net.nodes:
        raise ScenarioError("start node ids are not in the map")
    d = net.nodes[toward] - net.nodes[nid]
    return Pose2(net.nodes[nid][0], net.nodes[nid][1],
                 math.atan2(d[1], d[0]))


def run_closed_loop(scn, seed, goal=None, out_dir=None):
    """Navigate from the scenario start to a goal using the estimate only."""
    world = build_world(scn, seed)
    goal_loc, goal_true = _resolve_goal(scn, world, goal or scn.goal)
    start = _start_pose(scn, world)
    sim_rng = stream_rng(seed, "sim")
    filt_rng = stream_rng(seed, "filter")

    regions = _scaled_regions(scn.init.regions, world.true_map, world.scale)
    if regions is None:
        regions = [((start.x, start.y), 30.0 * world.scale)]
    particles = loc.init_particles(world.nav_map, scn.filt, filt_rng,
                                   regions=regions,
                                   heading=_init_heading(scn, start_pose=start))

    state = VehicleState(pose=start, speed=0.0,
                         wheelbase=scn.vehicle.wheelbase,
                         max_steer=scn.vehicle.max_steer)
    pid = PidState()

    def sense_and_update(particles, pose):
        field = esdf(sense_road_grid(world.true_map, pose, scn.rig))
        if scn.method == "deadreckon":
            return particles, field
        points = sense_landmarks(world.true_map, pose, scn.rig, world.vocab,
                                 sim_rng)
        obs = loc.StepObservation(nav_map=world.nav_map, sdf=field, points=points,
                                  fov=scn.rig.fov, max_range=scn.rig.max_range)
        scores = loc.score_particles(particles, obs, scn.filt, scn.method)
        return loc.reweight_and_resample(particles, scores, scn.filt,
                                         filt_rng), field

    particles, field = sense_and_update(particles, start)
    est = loc.estimate(particles)

    log = RunLog(meta=_meta(scn, seed, extra={"goal_true": list(goal_true)}))
    log.append(LogRecord(step=0, t=0.0, dist=0.0, gt_x=start.x, gt_y=start.y,
                         gt_theta=start.theta, est_x=est.x, est_y=est.y,
                         est_yaw=est.yaw, spread=est.spread))

    def finish(result):
        if out_dir:
            log.save(out_dir)
            write_plots(log, out_dir)
            with open(os.path.join(out_dir, "navresult.json"), "w") as f:
                json.dump(result.to_dict(), f, indent=2, sort_keys=True)
                f.write("\n")
        return result, log

    try:
        route = astar_route(world.nav_map, snap_to_network(world.nav_map, est.xy),
                            goal_loc)
    except NoRoute:
        # unreachable goal is a failed run, not a crash
        return finish(NavResult(
            success=False, steps=0,
            goal_distance=float(np.linalg.norm(start.xy - np.asarray(goal_true))),
            path_length=0.0, goal_true=goal_true, budget=0,
            method=scn.method, seed=seed))
    budget = int(BUDGET_FACTOR * max(route.length, 1.0) / (scn.speed * scn.dt)) + 100

    dist = 0.0
    path_len = 0.0
    success = False
    steps = 0
    stalled = 0
    for t in range(1, budget + 1):
        s_est = route.project(est.xy)
        if float(np.linalg.norm(est.xy - route.point_at(s_est))) \
                > scn.planner.replan_departure:
            try:
                route = astar_route(world.nav_map,
                                    snap_to_network(world.nav_map, est.xy),
                                    goal_loc)
                s_est = route.project(est.xy)
            except NoRoute:
                pass
        remaining = route.length - s_est
        wp = waypoints_ahead(route, est.xy, scn.planner.horizon,
                             scn.planner.spacing)
        target = min(approach_speed(scn.speed, remaining),
                     preview_brake(route, s_est, scn.speed))
        # beyond the sensed grid is unknown, not occupied: score it as
        # exactly safe so distant waypoints neither prune nor attract
        sampler = EsdfSampler(field=field, anchor=est.pose,
                              outside_value=scn.planner.c_safe)
        try:
            if len(wp) < 2:
                raise NoFeasibleTrajectory("at route end")
            t0 = wp[1] - wp[0]
            n0 = np.array([-t0[1], t0[0]])
            nn = np.linalg.norm(n0)
            d0 = float((est.xy - wp[0]) @ (n0 / nn)) if nn > 0 else 0.0
            traj = plan_frenet(wp, d0, target, sampler, scn.planner)
            steer = stanley_steer(est.pose, state.speed, traj, scn.planner)
        except NoFeasibleTrajectory:
            steer = 0.0
            target = 0.0
        accel = pid_speed(target, state.speed, scn.pid, pid, scn.dt)
        prev_pose = state.pose
        state = step_kinematics(state, accel, steer, scn.dt)
        path_len += float(np.linalg.norm(state.pose.xy - prev_pose.xy))

        odo = sense_odometry(prev_pose, state.pose, scn.rig, sim_rng)
        dist += odo.translation
        particles = loc.predict(particles, odo, scn.filt, filt_rng)
        particles, field = sense_and_update(particles, state.pose)
        est = loc.estimate(particles)
        steps = t
        log.append(LogRecord(step=t, t=t * scn.dt, dist=dist,
                             gt_x=state.pose.x, gt_y=state.pose.y,
                             gt_theta=state.pose.theta, est_x=est.x, est_y=est.y,
                             est_yaw=est.yaw, spread=est.spread))
        s_est = route.project(est.xy)
        if route.length - s_est <= GOAL_ARC_TOL and state.speed < GOAL_SPEED_TOL:
            success = True
            break
        # parked with no feasible plan for a sustained stretch: give up early
        stalled = stalled + 1 if (target == 0.0 and state.speed < 0.05) else 0
        if stalled >= STALL_LIMIT:
            break

    return finish(NavResult(
        success=success, steps=steps,
        goal_distance=float(np.linalg.norm(state.pose.xy - np.asarray(goal_true))),
        path_length=path_len, goal_true=goal_true, budget=budget,
        method=scn.method, seed=seed))


# ---------------------------------------------------------------------------
# ablation sweep

SWEEP_PARAMS = ("noise", "fn", "fp")


def parse_sweep(spec):
    """'fn=0,0.2,0.4' or 'fn=0..0.8' (step 0.1) or 'fn=0..0.8:0.2'."""
    if "=" not in spec:
        raise ScenarioError(f"sweep {spec!r} must look like param=values")
    param, _, body = spec.partition("=")
    param = param.strip()
    if param not in SWEEP_PARAMS:
        raise ScenarioError(f"sweep parameter must be one of {SWEEP_PARAMS}")
    body = body.strip()
    if ".." in body:
        rng_part, _, step_part = body.partition(":")
        lo_s, _, hi_s = rng_part.partition("..")
        try:
            lo, hi = float(lo_s), float(hi_s)
            step = float(step_part) if step_part else 0.1
        except ValueError as exc:
            raise ScenarioError(f"bad sweep range {body!r}") from exc
        if step <= 0 or hi < lo:
            raise ScenarioError(f"bad sweep range {body!r}")
        n = int(round((hi - lo) / step))
        values = [round(lo + i * step, 10) for i in range(n + 1)]
    else:
        try:
            values = [float(v) for v in body.split(",") if v.strip() != ""]
        except ValueError as exc:
            raise ScenarioError(f"bad sweep values {body!r}") from exc
    if not values:
        raise ScenarioError(f"sweep {spec!r} has no values")
    return param, values


def _sweep_cell(scn, param, value, method, seed):
    cell = replace(scn, method=method, **{
        "noise": value if param == "noise" else scn.noise,
        "fn": value if param == "fn" else scn.fn,
        "fp": value if param == "fp" else scn.fp,
    })
    row = {"scenario_hash": cell.scenario_hash, "method": method,
           "sweep": param, "value": f"{value:.6f}", "seed": seed}
    try:
        log = run_open_loop(cell, seed)
        rep = compute_report(log).row
        row.update(steps=rep["steps"], mean_ape=rep["mean_ape"],
                   median_ape=rep["median_ape"], final_ape=rep["final_ape"],
                   mean_spread=rep["mean_spread"],
                   final_spread=rep["final_spread"],
                   dist_to_converge=rep["dist_to_converge"], status="ok")
    except Exception as exc:  # an error row, never a crashed sweep
        row.update(steps="", mean_ape="", median_ape="", final_ape="",
                   mean_spread="", final_spread="", dist_to_converge="",
                   status=f"error: {exc}")
    return row


def _sweep_cell_by_path(args):
    scn_path, overrides, param, value, method, seed = args
    scn = load_scenario(scn_path)
    if overrides:
        scn = replace(scn, **overrides)
    return _sweep_cell(scn, param, value, method, seed)


def run_ablation(scn, param, values, n_seeds, methods=None, jobs=1):
    """Cartesian sweep; rows ordered method-major, then value, then seed."""
    methods = list(methods) if methods else list(loc.METHODS)
    for m in methods:
        if m not in loc.METHODS:
            raise ScenarioError(f"unknown method {m!r}")
    seeds = list(range(int(n_seeds)))
    cells = [(m, v, s) for m in methods for v in values for s in seeds]
    if jobs > 1 and len(cells) > 1:
        from concurrent.futures import ProcessPoolExecutor
        args = [(scn.path, None, param, v, m, s) for m, v, s in cells]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_cell_by_path, args))
    else:
        rows = [_sweep_cell(scn, param, v, m, s) for m, v, s in cells]
    return rows


def write_ablation_csv(rows, path):
    with open(path, "w", newline="\n") as f:
        w = csv.writer(f)
        w.writerow(ABLATION_COLUMNS)
        for row in rows:
            w.writerow([row.get(c, "") for c in ABLATION_COLUMNS])


# ---------------------------------------------------------------------------
# plots (presentation only)

def write_plots(log, out_dir):
    import matplotlib
    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "langnav"
    import matplotlib.pyplot as plt

    dists = [r.dist for r in log.records]
    for name, series, label in (
            ("ape_vs_distance.svg", log.apes, "APE [m]"),
            ("spread_vs_distance.svg", log.spreads, "estimate spread [m]")):
        fig, ax = plt.subplots(figsize=(6, 3))
        ax.plot(dists, series, lw=1.0)
        ax.set_xlabel("distance traveled [m]")
        ax.set_ylabel(label)
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        fig.savefig(os.path.join(out_dir, name), metadata={"Date": None})
        plt.close(fig)
