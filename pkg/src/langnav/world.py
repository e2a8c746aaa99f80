"""Topometric world model: road network, tagged landmarks, map file I/O.

The map file is JSON with a canonical form: keys sorted at every level,
coordinates fixed to 6 decimals, nodes/landmarks sorted by id and edges by
their normalized (a, b) pair. save_map(load_map(f)) is byte-identical to
the canonical form of f.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .embedding import Vocabulary, embed_text
from .geometry import segment_point_distance, wrap_angle

MAP_VERSION = 1


class MapError(ValueError):
    """Raised for structurally invalid map documents."""


@dataclass
class Landmark:
    id: int
    position: np.ndarray  # (2,)
    tag: str
    text_feature: np.ndarray = None


@dataclass
class Edge:
    a: int
    b: int
    width: float


@dataclass
class RoadNetwork:
    nodes: dict          # id -> (2,) ndarray
    edges: list          # list[Edge]; an edge's id is its list index

    def edge_length(self, e):
        return float(np.linalg.norm(self.nodes[e.b] - self.nodes[e.a]))


@dataclass
class TopometricMap:
    """Immutable-by-convention map; derived caches fill lazily."""

    network: RoadNetwork
    landmarks: list
    bounds: tuple  # (min_x, min_y, max_x, max_y)

    _road_points: dict = field(default_factory=dict, repr=False)
    _road_tree: dict = field(default_factory=dict, repr=False)
    _adjacency: list = field(default_factory=list, repr=False)

    def road_points(self, spacing=1.0):
        if spacing not in self._road_points:
            self._road_points[spacing] = sample_road_points(self.network, spacing)
        return self._road_points[spacing]

    def road_tree(self, spacing=1.0):
        if spacing not in self._road_tree:
            pts = self.road_points(spacing)
            self._road_tree[spacing] = cKDTree(pts) if len(pts) else None
        return self._road_tree[spacing]

    def adjacency(self):
        """node id -> list of (neighbor id, edge index, length)."""
        if not self._adjacency:
            adj = {nid: [] for nid in self.network.nodes}
            for i, e in enumerate(self.network.edges):
                length = self.network.edge_length(e)
                adj[e.a].append((e.b, i, length))
                adj[e.b].append((e.a, i, length))
            self._adjacency = adj
        return self._adjacency

    def landmark_by_id(self, lid):
        for lm in self.landmarks:
            if lm.id == lid:
                return lm
        raise KeyError(f"no landmark with id {lid}")


# ---------------------------------------------------------------------------
# file I/O

def _require(cond, msg):
    if not cond:
        raise MapError(msg)


def map_from_dict(doc, vocab=None):
    _require(isinstance(doc, dict), "map document must be an object")
    for key in ("version", "bounds", "nodes", "edges", "landmarks"):
        _require(key in doc, f"map document missing {key!r}")
    _require(doc["version"] == MAP_VERSION,
             f"unsupported map version {doc['version']!r}")

    b = doc["bounds"]
    for key in ("min_x", "min_y", "max_x", "max_y"):
        _require(key in b, f"bounds missing {key!r}")
    bounds = (float(b["min_x"]), float(b["min_y"]),
              float(b["max_x"]), float(b["max_y"]))
    _require(bounds[0] < bounds[2] and bounds[1] < bounds[3],
             "bounds must have positive extent")

    def in_bounds(x, y):
        return bounds[0] <= x <= bounds[2] and bounds[1] <= y <= bounds[3]

    nodes = {}
    for i, n in enumerate(doc["nodes"]):
        nid = n["id"]
        _require(isinstance(nid, int), f"node {i}: id must be an integer")
        _require(nid not in nodes, f"duplicate node id {nid}")
        x, y = float(n["x"]), float(n["y"])
        _require(in_bounds(x, y), f"node {nid} at ({x}, {y}) outside bounds")
        nodes[nid] = np.array([x, y])

    edges = []
    for i, e in enumerate(doc["edges"]):
        a, b_ = e["a"], e["b"]
        _require(a in nodes, f"edge {i}: dangling endpoint {a!r}")
        _require(b_ in nodes, f"edge {i}: dangling endpoint {b_!r}")
        _require(a != b_, f"edge {i}: zero-length self loop at node {a}")
        w = float(e["width"])
        _require(w > 0.0, f"edge {i}: non-positive width {w}")
        edges.append(Edge(a=a, b=b_, width=w))

    seen = set()
    landmarks = []
    for i, l in enumerate(doc["landmarks"]):
        lid = l["id"]
        _require(isinstance(lid, int), f"landmark {i}: id must be an integer")
        _require(lid not in seen, f"duplicate landmark id {lid}")
        seen.add(lid)
        x, y = float(l["x"]), float(l["y"])
        _require(in_bounds(x, y), f"landmark {lid} at ({x}, {y}) outside bounds")
        tag = l["tag"]
        _require(isinstance(tag, str) and tag.strip(), f"landmark {lid}: empty tag")
        landmarks.append(Landmark(id=lid, position=np.array([x, y]), tag=tag,
                                  text_feature=embed_text(tag, vocab)))

    return TopometricMap(network=RoadNetwork(nodes=nodes, edges=edges),
                         landmarks=landmarks, bounds=bounds)


def load_map(path, vocab=None):
    """Load and validate a map file; landmark text features embed at load."""
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise MapError(f"{path}: not valid JSON ({exc})") from exc
    try:
        return map_from_dict(doc, vocab)
    except MapError as exc:
        raise MapError(f"{path}: {exc}") from exc


def _fmt(v):
    return f"{v:.6f}"


def map_to_canonical_json(m):
    """Render a map to its canonical byte form (keys sorted, 6 decimals)."""
    out = io.StringIO()
    out.write("{\n")
    mn_x, mn_y, mx_x, mx_y = m.bounds
    out.write('  "bounds": {')
    out.write(f'"max_x": {_fmt(mx_x)}, "max_y": {_fmt(mx_y)}, '
              f'"min_x": {_fmt(mn_x)}, "min_y": {_fmt(mn_y)}}},\n')

    def edge_key(e):
        return (min(e.a, e.b), max(e.a, e.b), e.width)

    out.write('  "edges": [\n')
    edges = sorted(m.network.edges, key=edge_key)
    for i, e in enumerate(edges):
        a, b = min(e.a, e.b), max(e.a, e.b)
        sep = "," if i + 1 < len(edges) else ""
        out.write(f'    {{"a": {a}, "b": {b}, "width": {_fmt(e.width)}}}{sep}\n')
    out.write("  ],\n")

    out.write('  "landmarks": [\n')
    lms = sorted(m.landmarks, key=lambda l: l.id)
    for i, l in enumerate(lms):
        sep = "," if i + 1 < len(lms) else ""
        out.write(f'    {{"id": {l.id}, "tag": {json.dumps(l.tag)}, '
                  f'"x": {_fmt(l.position[0])}, "y": {_fmt(l.position[1])}}}{sep}\n')
    out.write("  ],\n")

    out.write('  "nodes": [\n')
    nids = sorted(m.network.nodes)
    for i, nid in enumerate(nids):
        p = m.network.nodes[nid]
        sep = "," if i + 1 < len(nids) else ""
        out.write(f'    {{"id": {nid}, "x": {_fmt(p[0])}, "y": {_fmt(p[1])}}}{sep}\n')
    out.write("  ],\n")
    out.write(f'  "version": {MAP_VERSION}\n')
    out.write("}\n")
    return out.getvalue()


def save_map(m, path):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(map_to_canonical_json(m))


# ---------------------------------------------------------------------------
# derived geometry

def sample_road_points(network, spacing):
    """Evenly sample each edge at <= spacing intervals, endpoints included.

    An edge of length L yields ceil(L / spacing) + 1 points. Points shared
    by adjacent edges are kept per edge (no dedup).
    """
    if spacing <= 0.0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    chunks = []
    for e in network.edges:
        a, b = network.nodes[e.a], network.nodes[e.b]
        length = float(np.linalg.norm(b - a))
        n = max(1, math.ceil(length / spacing)) if length > 0 else 1
        t = np.linspace(0.0, 1.0, n + 1)
        chunks.append(a[None, :] + t[:, None] * (b - a)[None, :])
    if not chunks:
        return np.zeros((0, 2))
    return np.vstack(chunks)


def nearest_road_points(m, position, v, spacing=1.0):
    """The v sampled road points closest to `position`, ascending distance."""
    pts = m.road_points(spacing)
    if len(pts) == 0:
        raise MapError("no road points: network has no edges")
    v = min(v, len(pts))
    tree = m.road_tree(spacing)
    _, idx = tree.query(np.asarray(position, dtype=float), k=v)
    idx = np.atleast_1d(idx)
    return pts[idx]


def scale_map(m, factor):
    """Scale geometry isotropically about the bounds centroid.

    Topology, ids, tags and text features are untouched.
    """
    if factor <= 0.0:
        raise ValueError(f"scale factor must be positive, got {factor}")
    mn_x, mn_y, mx_x, mx_y = m.bounds
    c = np.array([(mn_x + mx_x) / 2.0, (mn_y + mx_y) / 2.0])
    nodes = {nid: c + factor * (p - c) for nid, p in m.network.nodes.items()}
    landmarks = [Landmark(id=l.id, position=c + factor * (l.position - c),
                          tag=l.tag, text_feature=l.text_feature)
                 for l in m.landmarks]
    half = np.array([(mx_x - mn_x) / 2.0, (mx_y - mn_y) / 2.0]) * factor
    bounds = (c[0] - half[0], c[1] - half[1], c[0] + half[0], c[1] + half[1])
    edges = [Edge(e.a, e.b, e.width) for e in m.network.edges]
    return TopometricMap(network=RoadNetwork(nodes=nodes, edges=edges),
                         landmarks=landmarks, bounds=bounds)


def unscale_point(m, point, factor):
    """Inverse of scale_map for a single point (nav frame -> true frame)."""
    mn_x, mn_y, mx_x, mx_y = m.bounds
    c = np.array([(mn_x + mx_x) / 2.0, (mn_y + mx_y) / 2.0])
    return c + (np.asarray(point, dtype=float) - c) / factor


def corrupt_landmarks(m, fn_frac, fp_frac, seed, vocab=None):
    """Remove floor(fn*|K|) landmarks and re-tag floor(fp*|K|) of the rest.

    Replacement tags come from the vocabulary's decoy pool. Positions never
    change; the true world is unaffected (callers corrupt the nav map only).
    """
    if not (0.0 <= fn_frac <= 1.0 and 0.0 <= fp_frac <= 1.0):
        raise ValueError("corruption fractions must be in [0, 1]")
    if fn_frac + fp_frac > 1.0 + 1e-12:
        raise ValueError("fn_frac + fp_frac must not exceed 1")
    vocab = vocab if vocab is not None else Vocabulary()
    k = len(m.landmarks)
    n_fn = int(math.floor(fn_frac * k))
    n_fp = int(math.floor(fp_frac * k))
    if n_fn == 0 and n_fp == 0:
        return m
    rng = np.random.default_rng(seed)
    order = rng.permutation(k)
    drop = set(order[:n_fn].tolist())
    swap = set(order[n_fn:n_fn + n_fp].tolist())

    landmarks = []
    for i, l in enumerate(m.landmarks):
        if i in drop:
            continue
        if i in swap:
            if not vocab.decoys:
                raise MapError("cannot swap tags: vocabulary has no decoys")
            tag = vocab.decoys[int(rng.integers(len(vocab.decoys)))]
            landmarks.append(Landmark(id=l.id, position=l.position.copy(), tag=tag,
                                      text_feature=embed_text(tag, vocab)))
        else:
            landmarks.append(Landmark(id=l.id, position=l.position.copy(),
                                      tag=l.tag, text_feature=l.text_feature))
    edges = [Edge(e.a, e.b, e.width) for e in m.network.edges]
    return TopometricMap(network=RoadNetwork(nodes=dict(m.network.nodes), edges=edges),
                         landmarks=landmarks, bounds=m.bounds)


def visible_landmarks(m, pose, fov, max_range):
    """Landmarks within max_range whose bearing is inside the fov cone."""
    out = []
    for l in m.landmarks:
        dx = l.position[0] - pose.x
        dy = l.position[1] - pose.y
        if math.hypot(dx, dy) > max_range:
            continue
        bearing = wrap_angle(math.atan2(dy, dx) - pose.theta)
        if abs(bearing) <= fov / 2.0:
            out.append(l)
    return out


def visibility_mask(positions, poses, fov, max_range):
    """Vectorized visible_landmarks: mask (N_poses, N_landmarks)."""
    lp = np.asarray(positions, dtype=float)
    pp = np.asarray(poses, dtype=float)
    dx = lp[None, :, 0] - pp[:, None, 0]
    dy = lp[None, :, 1] - pp[:, None, 1]
    rng_ok = np.hypot(dx, dy) <= max_range
    from .geometry import wrap_angle_array
    bearing = wrap_angle_array(np.arctan2(dy, dx) - pp[:, None, 2])
    return rng_ok & (np.abs(bearing) <= fov / 2.0)


def distance_to_nearest_node(m, point):
    ids = sorted(m.network.nodes)
    if not ids:
        return math.inf
    pts = np.array([m.network.nodes[i] for i in ids])
    return float(np.min(np.linalg.norm(pts - np.asarray(point, dtype=float), axis=1)))


def edge_distance(m, point):
    """Distance from a point to the nearest edge centerline."""
    best = math.inf
    for e in m.network.edges:
        d = float(segment_point_distance(m.network.nodes[e.a], m.network.nodes[e.b],
                                         np.asarray(point, dtype=float)))
        best = min(best, d)
    return best
