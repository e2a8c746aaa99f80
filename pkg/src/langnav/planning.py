"""Route search, local trajectory candidates, and tracking controllers."""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .embedding import cosine_sim, embed_text
from .geometry import wrap_angle


class PlanningError(RuntimeError):
    pass


class NoRoute(PlanningError):
    pass


class NoFeasibleTrajectory(PlanningError):
    pass


@dataclass
class PlannerConfig:
    horizon: float = 15.0        # meters of route ahead to track
    spacing: float = 1.0         # waypoint spacing
    d_max: float = 3.0           # largest lateral offset candidate
    d_step: float = 0.5
    c_safe: float = 1.5          # obstacle cost engages below this clearance
    e_min: float = 0.3           # hard clearance bound
    e_min_grace: float = 7.5     # arc from the start exempt from the bound
    w_lat: float = 1.0
    w_obs: float = 10.0
    w_goal: float = 1.0
    k_stanley: float = 2.0
    v_soft: float = 0.1
    replan_departure: float = 10.0  # replan when estimate strays this far


@dataclass
class RoadLocation:
    """A point on the network: edge index plus arc distance from edge.a."""
    edge: int
    s: float
    point: np.ndarray


@dataclass
class Route:
    """Polyline through the network with cumulative arc length."""
    nodes: list            # node ids passed through (may be empty)
    points: np.ndarray     # (M, 2) polyline vertices
    cum: np.ndarray        # (M,) cumulative arc length, cum[0] == 0

    @property
    def length(self):
        return float(self.cum[-1]) if len(self.cum) else 0.0

    @property
    def end(self):
        return self.points[-1]

    def point_at(self, s):
        s = float(np.clip(s, 0.0, self.length))
        i = int(np.searchsorted(self.cum, s, side="right") - 1)
        i = min(max(i, 0), len(self.points) - 2) if len(self.points) > 1 else 0
        if len(self.points) == 1:
            return self.points[0].copy()
        seg = self.cum[i + 1] - self.cum[i]
        t = 0.0 if seg <= 0.0 else (s - self.cum[i]) / seg
        return self.points[i] + t * (self.points[i + 1] - self.points[i])

    def project(self, point):
        """Arc position of the closest point on the polyline."""
        p = np.asarray(point, dtype=float)
        if len(self.points) == 1:
            return 0.0
        best_s, best_d = 0.0, math.inf
        for i in range(len(self.points) - 1):
            a, b = self.points[i], self.points[i + 1]
            ab = b - a
            denom = float(ab @ ab)
            t = 0.0 if denom == 0.0 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
            proj = a + t * ab
            d = float(np.linalg.norm(p - proj))
            if d < best_d:
                best_d = d
                best_s = float(self.cum[i]) + t * math.sqrt(denom)
        return best_s


def _polyline(points):
    pts = np.asarray(points, dtype=float)
    if len(pts) == 0:
        raise PlanningError("empty polyline")
    deltas = np.linalg.norm(np.diff(pts, axis=0), axis=1) if len(pts) > 1 else []
    cum = np.concatenate([[0.0], np.cumsum(deltas)]) if len(pts) > 1 else np.zeros(1)
    return pts, cum


def snap_to_network(nav_map, point):
    """Closest point on any edge centerline; ties to the lowest edge index."""
    p = np.asarray(point, dtype=float)
    net = nav_map.network
    if not net.edges:
        raise NoRoute("network has no edges")
    best = None
    best_d = math.inf
    for i, e in enumerate(net.edges):
        a, b = net.nodes[e.a], net.nodes[e.b]
        ab = b - a
        denom = float(ab @ ab)
        t = 0.0 if denom == 0.0 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
        proj = a + t * ab
        d = float(np.linalg.norm(p - proj))
        if d < best_d - 1e-12:
            best_d = d
            best = RoadLocation(edge=i, s=t * math.sqrt(denom), point=proj)
    return best


def astar_route(nav_map, start, goal):
    """Shortest route between two road locations.

    A* over the node graph with a Euclidean heuristic (admissible, so the
    cost matches Dijkstra's). Start and goal are spliced into their edges
    as virtual endpoints.
    """
    net = nav_map.network
    if isinstance(start, (tuple, list, np.ndarray)):
        start = snap_to_network(nav_map, start)
    if isinstance(goal, (tuple, list, np.ndarray)):
        goal = snap_to_network(nav_map, goal)

    sp, gp = start.point, goal.point
    if start.edge == goal.edge:
        pts, cum = _polyline([sp, gp])
        return Route(nodes=[], points=pts, cum=cum)

    se, ge = net.edges[start.edge], net.edges[goal.edge]
    entry = {nid: float(np.linalg.norm(sp - net.nodes[nid])) for nid in (se.a, se.b)}
    exit_cost = {nid: float(np.linalg.norm(gp - net.nodes[nid])) for nid in (ge.a, ge.b)}
    adj = nav_map.adjacency()

    def h(nid):
        return float(np.linalg.norm(net.nodes[nid] - gp))

    dist = {}
    prev = {}
    pq = []
    tie = itertools.count()  # keeps exact-tie entries from comparing parents
    for nid in sorted(entry):
        heapq.heappush(pq, (entry[nid] + h(nid), entry[nid], nid, next(tie), None))
    while pq:
        _, g, nid, _, parent = heapq.heappop(pq)
        if nid in dist:
            continue
        dist[nid] = g
        prev[nid] = parent
        for nbr, _, length in adj[nid]:
            if nbr not in dist:
                ng = g + length
                heapq.heappush(pq, (ng + h(nbr), ng, nbr, next(tie), nid))

    best_total = math.inf
    best_exit = None
    for nid in sorted(exit_cost):
        if nid in dist and dist[nid] + exit_cost[nid] < best_total:
            best_total = dist[nid] + exit_cost[nid]
            best_exit = nid
    if best_exit is None:
        raise NoRoute("start and goal are not connected")

    chain = []
    nid = best_exit
    while nid is not None:
        chain.append(nid)
        nid = prev[nid]
    chain.reverse()
    pts = [sp] + [net.nodes[n] for n in chain] + [gp]
    points, cum = _polyline(pts)
    return Route(nodes=chain, points=points, cum=cum)


def waypoints_ahead(route, position, horizon, spacing):
    """Waypoints from the projection of `position`, spaced along the route,
    stopping at the horizon or the route end (whichever comes first)."""
    s0 = route.project(position)
    s_stop = min(s0 + horizon, route.length)
    n = int(math.floor((s_stop - s0) / spacing + 1e-9))
    ss = [s0 + i * spacing for i in range(n + 1)]
    if ss[-1] < s_stop - 1e-9:
        ss.append(s_stop)
    return np.array([route.point_at(s) for s in ss])


# ---------------------------------------------------------------------------
# local trajectory candidates

@dataclass
class Trajectory:
    points: np.ndarray    # (M, 2) map frame
    headings: np.ndarray  # (M,)
    speeds: np.ndarray    # (M,)
    offset: float         # lateral offset this candidate ends at
    cost: float


def _offsets(d_max, d_step):
    n = int(round(d_max / d_step))
    vals = [i * d_step for i in range(-n, n + 1)]
    # zero first so exact cost ties keep the straight candidate
    vals.sort(key=lambda v: (abs(v), v))
    return vals


def plan_frenet(waypoints, current_offset, speed, sampler, params):
    """Pick the cheapest lateral-offset candidate around the waypoint ribbon.

    Each candidate eases from the vehicle's current lateral offset to a
    fixed offset via a cubic profile, then is scored on lateral deviation,
    clearance shortfall, and terminal goal distance. Candidates whose
    minimum clearance falls below e_min are discarded; the bound is waived
    inside e_min_grace of arc so a vehicle already in a bad spot can still
    pick a path back out (the shortfall cost covers the waived stretch).
    """
    wp, cum = _polyline(waypoints)
    if len(wp) < 2:
        raise NoFeasibleTrajectory("waypoint ribbon is a single point")
    total = cum[-1]
    tang = np.gradient(wp, axis=0)
    norm = np.linalg.norm(tang, axis=1)
    norm[norm == 0.0] = 1.0
    tang = tang / norm[:, None]
    normal = np.stack([-tang[:, 1], tang[:, 0]], axis=1)  # left of travel

    u = cum / total if total > 0 else np.zeros_like(cum)
    ease = 3.0 * u ** 2 - 2.0 * u ** 3  # 0 -> 1, zero slope at both ends
    goal = wp[-1]

    bounded = cum >= min(params.e_min_grace, cum[-1])
    if not bounded.any():
        bounded[-1] = True
    best = None
    for d_end in _offsets(params.d_max, params.d_step):
        d_profile = current_offset + (d_end - current_offset) * ease
        pts = wp + d_profile[:, None] * normal
        clear = sampler.sample_many(pts)
        if clear[bounded].min() <= params.e_min:
            continue
        shortfall = np.maximum(0.0, params.c_safe - clear)
        cost = (params.w_lat * d_end ** 2
                + params.w_obs * float(np.sum(shortfall ** 2))
                + params.w_goal * float(np.linalg.norm(pts[-1] - goal)))
        if best is None or cost < best.cost - 1e-12:
            seg = np.diff(pts, axis=0)
            head = np.arctan2(seg[:, 1], seg[:, 0])
            head = np.append(head, head[-1])
            best = Trajectory(points=pts, headings=head,
                              speeds=np.full(len(pts), speed),
                              offset=d_end, cost=cost)
    if best is None:
        raise NoFeasibleTrajectory("every candidate violates the clearance bound")
    return best


# ---------------------------------------------------------------------------
# controllers

def stanley_steer(pose, speed, traj, params):
    """Stanley steering toward a trajectory.

    Cross-track error is positive when the vehicle sits right of the path,
    so the atan2 term steers back toward it.
    """
    p = pose.xy
    d2 = np.sum((traj.points - p) ** 2, axis=1)
    i = int(np.argmin(d2))
    i = min(i, len(traj.points) - 2) if len(traj.points) > 1 else 0
    a = traj.points[i]
    b = traj.points[i + 1] if len(traj.points) > 1 else a + np.array(
        [math.cos(traj.headings[i]), math.sin(traj.headings[i])])
    t = b - a
    tn = np.linalg.norm(t)
    t = t / tn if tn > 0 else np.array([1.0, 0.0])
    # left-of-path offset flips sign: positive e_cross means right of path
    e_cross = -float(t[0] * (p[1] - a[1]) - t[1] * (p[0] - a[0]))
    theta_e = wrap_angle(math.atan2(t[1], t[0]) - pose.theta)
    return theta_e + math.atan2(params.k_stanley * e_cross, speed + params.v_soft)


@dataclass
class PidState:
    integral_term: float = 0.0
    prev_error: float = None


@dataclass
class PidGains:
    kp: float = 1.5
    ki: float = 0.3
    kd: float = 0.0
    i_max: float = 1.0       # clamp on the integral term's contribution
    accel_min: float = -3.0
    accel_max: float = 2.0


def pid_speed(target, current, gains, state, dt):
    """PI(D) acceleration command with anti-windup on the integral term."""
    err = target - current
    state.integral_term = float(np.clip(state.integral_term + gains.ki * err * dt,
                                        -gains.i_max, gains.i_max))
    deriv = 0.0 if state.prev_error is None else (err - state.prev_error) / dt
    state.prev_error = err
    out = gains.kp * err + state.integral_term + gains.kd * deriv
    return float(np.clip(out, gains.accel_min, gains.accel_max))


# ---------------------------------------------------------------------------
# goals

def resolve_language_goal(nav_map, query, vocab):
    """The landmark whose tag embedding best matches the query embedding.

    Ties resolve to the lowest landmark id.
    """
    if not nav_map.landmarks:
        raise PlanningError("map has no landmarks to match a language goal")
    q = embed_text(query, vocab)
    best = None
    best_sim = -1.0
    for lm in sorted(nav_map.landmarks, key=lambda l: l.id):
        sim = cosine_sim(q, lm.text_feature)
        if sim > best_sim + 1e-12:
            best_sim = sim
            best = lm
    return best
