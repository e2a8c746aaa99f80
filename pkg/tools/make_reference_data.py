#!/usr/bin/env python3
"""Regenerate the reference maps, vocabulary, and scenario files shipped in
src/langnav/data/. Run from the repo root:

    python3 tools/make_reference_data.py
"""

import json
import math
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from langnav.embedding import Vocabulary  # noqa: E402
from langnav.world import load_map, map_to_canonical_json, map_from_dict  # noqa: E402

OUT = os.path.join(os.path.dirname(__file__), "..", "src", "langnav", "data")


def on_leg(p0, p1, s, off):
    """Point `s` meters along the segment p0->p1, `off` meters to its left."""
    p0 = np.asarray(p0, float)
    p1 = np.asarray(p1, float)
    u = (p1 - p0) / np.linalg.norm(p1 - p0)
    n = np.array([-u[1], u[0]])
    p = p0 + s * u + off * n
    return [round(float(p[0]), 3), round(float(p[1]), 3)]


def write_json(name, doc):
    path = os.path.join(OUT, name)
    with open(path, "w", newline="\n") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
    print("wrote", path)


def write_map(name, doc):
    m = map_from_dict(doc)  # validate before writing
    path = os.path.join(OUT, name)
    with open(path, "w", newline="\n") as f:
        f.write(map_to_canonical_json(m))
    load_map(path)  # round-trip check
    print("wrote", path, f"({len(doc['nodes'])} nodes, {len(doc['edges'])} edges,"
          f" {len(doc['landmarks'])} landmarks)")


# ---------------------------------------------------------------------------
# vocabulary: 20 tags (4 synonym groups + 11 standalone), default decoy pool

VOCAB = {
    "dim": 64,
    "groups": [
        {"tags": ["bench", "park bench", "place where I can sit"], "angle": 0.4},
        {"tags": ["fountain", "water fountain"], "angle": 0.4},
        {"tags": ["store", "shop"], "angle": 0.4},
        {"tags": ["mailbox", "letter box"], "angle": 0.4},
    ],
    "decoys": list(Vocabulary().decoys),
}


# ---------------------------------------------------------------------------
# grid-plus-loop map: 4-intersection loop with spurs, ~2 km x 2 km

N = {
    1: (300.0, 300.0),    # west spur end
    2: (700.0, 700.0),    # intersection A
    3: (1200.0, 700.0),   # intersection B
    4: (1200.0, 1200.0),  # intersection C
    5: (700.0, 1200.0),   # intersection D
    6: (1900.0, 700.0),   # east spur end
    7: (1200.0, 1900.0),  # north spur end
    8: (100.0, 1200.0),   # northwest spur end
    9: (1200.0, 100.0),   # south spur end
}

EDGES = [(1, 2), (2, 3), (3, 4), (4, 5), (2, 5), (3, 6), (4, 7), (5, 8), (3, 9)]

GRID_LOOP_LANDMARKS = [
    # along the west spur (leg 1 of the reference route)
    (1, on_leg(N[1], N[2], 70, 6), "oak tree"),
    (2, on_leg(N[1], N[2], 180, -7), "fountain"),
    (3, on_leg(N[1], N[2], 380, 5), "statue"),
    (4, on_leg(N[1], N[2], 505, -6), "fire hydrant"),
    # A -> B leg, with a deliberate gap between 210 m and 390 m
    (5, on_leg(N[2], N[3], 60, -6), "bus stop"),
    (6, on_leg(N[2], N[3], 130, 7), "street lamp"),
    (7, on_leg(N[2], N[3], 210, -5), "mailbox"),
    (8, on_leg(N[2], N[3], 390, 6), "store"),
    (9, on_leg(N[2], N[3], 460, -7), "flagpole"),
    # B -> C leg, gap between 230 m and 410 m
    (10, on_leg(N[3], N[4], 50, 6), "phone booth"),
    (11, on_leg(N[3], N[4], 140, -6), "picnic table"),
    (12, on_leg(N[3], N[4], 230, 7), "trash can"),
    (13, on_leg(N[3], N[4], 410, -5), "kiosk"),
    (14, on_leg(N[3], N[4], 470, 6), "water fountain"),
    # goal neighborhoods on the remaining edges
    (15, on_leg(N[3], N[6], 235, -6), "street lamp"),
    (16, on_leg(N[3], N[6], 255, 1.0), "bench"),
    (17, on_leg(N[4], N[7], 235, 5), "fountain"),
    (18, on_leg(N[4], N[7], 260, -6), "trash can"),
    (19, on_leg(N[2], N[5], 235, 6), "statue"),
    (20, on_leg(N[2], N[5], 260, -5), "bike rack"),
    (21, on_leg(N[3], N[9], 235, -6), "oak tree"),
    (22, on_leg(N[3], N[9], 258, 5), "phone booth"),
    (23, on_leg(N[4], N[5], 285, 6), "kiosk"),
    (24, on_leg(N[4], N[5], 315, -5), "mailbox"),
    # mid-leg waystations so the spur legs are not bare before the goals
    (25, on_leg(N[2], N[5], 110, 6), "planter"),
    (26, on_leg(N[2], N[5], 125, -6), "hedge"),
    (27, on_leg(N[3], N[6], 110, -6), "parking meter"),
    (28, on_leg(N[3], N[6], 125, 6), "street sign"),
    (29, on_leg(N[3], N[9], 105, 5), "dumpster"),
    (30, on_leg(N[3], N[9], 120, -6), "fence post"),
    (31, on_leg(N[4], N[7], 105, -5), "bollard"),
    (32, on_leg(N[4], N[7], 122, 6), "picnic table"),
    (33, on_leg(N[4], N[5], 105, 6), "flagpole"),
    (34, on_leg(N[4], N[5], 122, -5), "bus stop"),
    (35, on_leg(N[2], N[5], 385, 6), "water fountain"),
    (36, on_leg(N[2], N[5], 400, -6), "store"),
]

GRID_LOOP = {
    "version": 1,
    "bounds": {"min_x": 0.0, "min_y": 0.0, "max_x": 2000.0, "max_y": 2000.0},
    "nodes": [{"id": i, "x": N[i][0], "y": N[i][1]} for i in sorted(N)],
    "edges": [{"a": a, "b": b, "width": 7.0} for a, b in EDGES],
    "landmarks": [{"id": i, "x": p[0], "y": p[1], "tag": t}
                  for i, p, t in GRID_LOOP_LANDMARKS],
}


# ---------------------------------------------------------------------------
# twin straights: two parallel roads, identical until their cross streets

T = {
    1: (100.0, 200.0),    # south road, west end (route start)
    2: (700.0, 200.0),    # south road intersection, 600 m in
    3: (1100.0, 200.0),   # south road, east end
    4: (700.0, 500.0),    # south cross street end
    5: (100.0, 800.0),    # north road, west end
    6: (700.0, 800.0),    # north road, first intersection (same arc as south's)
    7: (1000.0, 800.0),   # north road, second intersection (south has none here)
    8: (1400.0, 800.0),   # north road, east end
    9: (700.0, 1100.0),   # north first cross street end
    10: (1000.0, 1100.0), # north second cross street end
}

# matched pairs at equal arc positions, distinct tags per road
TWIN_LANDMARKS = [
    (1, (200.0, 207.0), "oak tree"),
    (2, (214.0, 193.0), "statue"),
    (3, (228.0, 207.0), "fire hydrant"),
    (4, (242.0, 193.0), "bus stop"),
    (5, (256.0, 207.0), "street lamp"),
    (6, (270.0, 193.0), "flagpole"),
    (7, (284.0, 207.0), "phone booth"),
    (8, (298.0, 193.0), "picnic table"),
    (9, (480.0, 207.0), "fountain"),
    (10, (880.0, 193.0), "mailbox"),
    (11, (200.0, 807.0), "kiosk"),
    (12, (214.0, 793.0), "trash can"),
    (13, (228.0, 807.0), "bike rack"),
    (14, (242.0, 793.0), "fence post"),
    (15, (256.0, 807.0), "dumpster"),
    (16, (270.0, 793.0), "hedge"),
    (17, (284.0, 807.0), "parking meter"),
    (18, (298.0, 793.0), "street sign"),
    (19, (480.0, 807.0), "planter"),
    (20, (880.0, 793.0), "bollard"),
]

TWIN = {
    "version": 1,
    "bounds": {"min_x": 0.0, "min_y": 0.0, "max_x": 1500.0, "max_y": 1300.0},
    "nodes": [{"id": i, "x": T[i][0], "y": T[i][1]} for i in sorted(T)],
    "edges": [{"a": a, "b": b, "width": 7.0}
              for a, b in [(1, 2), (2, 3), (2, 4),
                           (5, 6), (6, 7), (7, 8), (6, 9), (7, 10)]],
    "landmarks": [{"id": i, "x": p[0], "y": p[1], "tag": t}
                  for i, p, t in TWIN_LANDMARKS],
}


# ---------------------------------------------------------------------------
# scenarios

REFERENCE = {
    "name": "reference",
    "map": "grid_loop_map.json",
    "vocabulary": "vocabulary.json",
    "method": "altpilot",
    "seeds": list(range(10)),
    "noise": 0.0, "fn": 0.0, "fp": 0.0,
    "speed": 10.0, "dt": 0.1,
    "route": [1, 2, 3, 4],
    "init": {"mode": "road", "regions": [[300.0, 300.0, 15.0]],
             "align_to_route": True},
    "rig": {"odom_trans_std": 0.10},
    "filter": {"ess_frac": 1.0, "trans_std_per_meter": 0.10,
               "rot_std_per_radian": 0.8},
}

CONVERGENCE = {
    "name": "convergence",
    "map": "twin_straights_map.json",
    "vocabulary": "vocabulary.json",
    "method": "altpilot",
    "seeds": list(range(10)),
    "noise": 0.0, "fn": 0.0, "fp": 0.0,
    "speed": 10.0, "dt": 0.1,
    "route": [1, 2, 3],
    "init": {"mode": "road",
             "regions": [[100.0, 200.0, 12.0], [100.0, 800.0, 12.0]],
             "heading": 0.0},
    "rig": {"odom_trans_std": 0.005, "odom_rot_std": 0.05},
    "filter": {"ess_frac": 0.6, "temperature": 2.5,
               "trans_std_per_meter": 0.002, "init_yaw_spread": 0.0},
}

_SQ = math.sqrt(0.5)
NAV_START = [700.0 - 60.0 * _SQ, 700.0 - 60.0 * _SQ, math.pi / 4.0]

NAVIGATION = {
    "name": "navigation",
    "map": "grid_loop_map.json",
    "vocabulary": "vocabulary.json",
    "method": "altpilot",
    "seeds": [0, 1, 2],
    "noise": 0.05, "fn": 0.0, "fp": 0.0,
    "speed": 10.0, "dt": 0.1,
    "start": {"pose": [round(NAV_START[0], 6), round(NAV_START[1], 6),
                       round(NAV_START[2], 12)]},
    "goal": {"text": "bench"},
    "init": {"mode": "road",
             "regions": [[round(NAV_START[0], 6), round(NAV_START[1], 6), 15.0]],
             "align_to_route": True},
    "filter": {"ess_frac": 0.5, "temperature": 3.0, "beta": 20.0,
               "trans_std_per_meter": 0.30},
}

ABLATE_MINI = {
    "name": "ablate_mini",
    "map": "grid_loop_map.json",
    "vocabulary": "vocabulary.json",
    "method": "altpilot",
    "seeds": [0, 1],
    "noise": 0.0, "fn": 0.0, "fp": 0.0,
    "speed": 10.0, "dt": 0.1,
    "route": [1, 2],
    "init": {"mode": "road", "regions": [[300.0, 300.0, 15.0]],
             "align_to_route": True},
    "filter": {"ess_frac": 1.0},
}


def main():
    os.makedirs(OUT, exist_ok=True)
    write_json("vocabulary.json", VOCAB)
    write_map("grid_loop_map.json", GRID_LOOP)
    write_map("twin_straights_map.json", TWIN)
    write_json("reference.json", REFERENCE)
    write_json("convergence.json", CONVERGENCE)
    write_json("navigation.json", NAVIGATION)
    write_json("ablate_mini.json", ABLATE_MINI)


if __name__ == "__main__":
    main()
