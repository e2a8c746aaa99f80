"""Shared fixtures: small maps built through the public loader."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from langnav.embedding import load_vocabulary
from langnav.harness import data_path
from langnav.world import load_map, map_from_dict


def build_map(nodes, edges, landmarks=(), bounds=None, vocab=None):
    """TopometricMap from terse specs: nodes {id: (x, y)},
    edges [(a, b, width)], landmarks [(id, x, y, tag)]."""
    xs = [p[0] for p in nodes.values()] + [l[1] for l in landmarks]
    ys = [p[1] for p in nodes.values()] + [l[2] for l in landmarks]
    if bounds is None:
        pad = 50.0
        bounds = (min(xs) - pad, min(ys) - pad, max(xs) + pad, max(ys) + pad)
    doc = {
        "version": 1,
        "bounds": {"min_x": bounds[0], "min_y": bounds[1],
                   "max_x": bounds[2], "max_y": bounds[3]},
        "nodes": [{"id": i, "x": p[0], "y": p[1]} for i, p in nodes.items()],
        "edges": [{"a": a, "b": b, "width": w} for a, b, w in edges],
        "landmarks": [{"id": i, "x": x, "y": y, "tag": t}
                      for i, x, y, t in landmarks],
    }
    return map_from_dict(doc, vocab)


@pytest.fixture(scope="session")
def vocab():
    return load_vocabulary(data_path("vocabulary.json"))


@pytest.fixture(scope="session")
def reference_map(vocab):
    return load_map(data_path("grid_loop_map.json"), vocab)


@pytest.fixture
def straight_map():
    # one 100 m edge along x
    return build_map({1: (0.0, 0.0), 2: (100.0, 0.0)}, [(1, 2, 7.0)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
