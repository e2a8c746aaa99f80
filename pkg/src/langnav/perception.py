"""Occupancy grids and the signed distance field built from them.

The signed field is D(occupied) - D(free complement), both exact Euclidean
distance transforms, capped at the grid diagonal. Values are meters:
positive inside free space, negative inside obstacles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .geometry import Pose2

DEFAULT_OUTSIDE_VALUE = -5.0


@dataclass
class Grid2D:
    """Axis-aligned grid in a local frame.

    origin maps the grid's local frame into the vehicle frame: cell (i, j)
    covers [i, i+1) x [j, j+1) cells from the origin corner, values indexed
    values[i, j] with i along local x.
    """

    origin: Pose2
    resolution: float
    values: np.ndarray  # (nx, ny)

    @property
    def nx(self):
        return self.values.shape[0]

    @property
    def ny(self):
        return self.values.shape[1]

    @property
    def extent(self):
        return (self.nx * self.resolution, self.ny * self.resolution)

    def cell_centers_local(self):
        xs = (np.arange(self.nx) + 0.5) * self.resolution
        ys = (np.arange(self.ny) + 0.5) * self.resolution
        return xs, ys

    def diagonal(self):
        ex, ey = self.extent
        return math.hypot(ex, ey)


def distance_transform(occ):
    """Exact Euclidean distance (meters) to the nearest occupied cell.

    Distances are between cell centers, capped at the grid diagonal. A grid
    with no occupied cells is the diagonal everywhere.
    """
    vals = occ.values
    cap = occ.diagonal()
    if not vals.any():
        return np.full(vals.shape, cap)
    # nearest-occupied indices, then integer-exact distances from them
    idx = ndimage.distance_transform_edt(vals == 0, return_distances=False,
                                         return_indices=True)
    ii = np.arange(vals.shape[0], dtype=np.int64)[:, None]
    jj = np.arange(vals.shape[1], dtype=np.int64)[None, :]
    d2 = (ii - idx[0]) ** 2 + (jj - idx[1]) ** 2
    return np.minimum(np.sqrt(d2) * occ.resolution, cap)


def esdf(occ):
    """Signed distance field: D(occupied) - D(complement)."""
    inv = Grid2D(origin=occ.origin, resolution=occ.resolution,
                 values=(occ.values == 0).astype(np.uint8))
    vals = distance_transform(occ) - distance_transform(inv)
    return Grid2D(origin=occ.origin, resolution=occ.resolution, values=vals)


@dataclass
class EsdfSampler:
    """Bilinear field lookup anchored at a pose hypothesis.

    Map-frame query points are carried into the grid through the anchor
    (the grid lives in the vehicle frame of whoever sensed it; the anchor
    says where that vehicle is hypothesized to be).
    """

    field: Grid2D
    anchor: Pose2
    outside_value: float = DEFAULT_OUTSIDE_VALUE

    def sample_many(self, map_points):
        pts = np.atleast_2d(np.asarray(map_points, dtype=float))
        local = self.anchor.to_body(pts)
        g = self.field
        ox, oy = g.origin.x, g.origin.y
        if g.origin.theta != 0.0:
            c, s = math.cos(g.origin.theta), math.sin(g.origin.theta)
            lx = c * (local[:, 0] - ox) + s * (local[:, 1] - oy)
            ly = -s * (local[:, 0] - ox) + c * (local[:, 1] - oy)
        else:
            lx = local[:, 0] - ox
            ly = local[:, 1] - oy
        ex, ey = g.extent
        inside = (lx >= 0.0) & (lx < ex) & (ly >= 0.0) & (ly < ey)

        u = lx / g.resolution - 0.5
        v = ly / g.resolution - 0.5
        i0 = np.clip(np.floor(u).astype(int), 0, g.nx - 1)
        j0 = np.clip(np.floor(v).astype(int), 0, g.ny - 1)
        i1 = np.minimum(i0 + 1, g.nx - 1)
        j1 = np.minimum(j0 + 1, g.ny - 1)
        fu = np.clip(u - np.floor(u), 0.0, 1.0)
        fv = np.clip(v - np.floor(v), 0.0, 1.0)
        # clamp the border half-cell to the edge value
        fu = np.where(np.floor(u) < 0, 0.0, fu)
        fv = np.where(np.floor(v) < 0, 0.0, fv)

        z = g.values
        top = z[i0, j0] * (1 - fu) + z[i1, j0] * fu
        bot = z[i0, j1] * (1 - fu) + z[i1, j1] * fu
        out = top * (1 - fv) + bot * fv
        return np.where(inside, out, self.outside_value)

    def sample(self, map_point):
        return float(self.sample_many(np.asarray(map_point, dtype=float)[None, :])[0])
