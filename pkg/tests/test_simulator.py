"""Vehicle kinematics and synthetic sensors."""

import math

import numpy as np
import pytest

from conftest import build_map
from langnav.embedding import embed_text
from langnav.geometry import Pose2, segment_point_distance
from langnav.simulator import (OdometryDelta, SensorRig, VehicleState,
                               sense_landmarks, sense_odometry,
                               sense_road_grid, step_kinematics)


def make_state(x=0.0, y=0.0, theta=0.0, speed=0.0, **kw):
    return VehicleState(pose=Pose2(x, y, theta), speed=speed, **kw)


# ---------------------------------------------------------------------------
# kinematics

def test_stationary_vehicle_stays_put():
    s0 = make_state(3.0, 4.0, 1.0)
    s1 = step_kinematics(s0, accel=0.0, steer=0.0, dt=0.1)
    assert s1.pose == s0.pose
    assert s1.speed == 0.0


def test_straight_line_advance():
    s0 = make_state(speed=2.0)
    s1 = step_kinematics(s0, accel=0.0, steer=0.0, dt=0.1)
    assert s1.pose.x == pytest.approx(0.2)
    assert s1.pose.y == pytest.approx(0.0)
    assert s1.pose.theta == pytest.approx(0.0)


def test_constant_steer_traces_circle_of_radius_wheelbase_over_tan():
    steer = 0.3
    state = make_state(speed=2.0)
    want_r = state.wheelbase / math.tan(steer)
    pts = []
    # a bit more than one full loop at dt = 0.01
    for _ in range(2700):
        state = step_kinematics(state, accel=0.0, steer=steer, dt=0.01)
        pts.append((state.pose.x, state.pose.y))
    pts = np.array(pts)
    center = pts.mean(axis=0)
    radii = np.linalg.norm(pts - center, axis=1)
    assert radii.mean() == pytest.approx(want_r, rel=0.01)


def test_speed_never_goes_negative():
    state = make_state(speed=0.5)
    for _ in range(20):
        state = step_kinematics(state, accel=-3.0, steer=0.0, dt=0.1)
    assert state.speed == 0.0


def test_steering_clamped_to_limit():
    s1 = step_kinematics(make_state(speed=1.0), accel=0.0, steer=5.0, dt=0.1)
    assert s1.steering == pytest.approx(s1.max_steer)


# ---------------------------------------------------------------------------
# odometry

def test_same_pose_zero_noise_gives_zero_delta():
    rig = SensorRig(odom_trans_std=0.0, odom_rot_std=0.0)
    p = Pose2(4.0, 5.0, 0.3)
    odo = sense_odometry(p, p, rig, np.random.default_rng(0))
    assert (odo.dx, odo.dy, odo.dtheta) == (0.0, 0.0, 0.0)


def test_noiseless_delta_composes_back_exactly(rng):
    rig = SensorRig(odom_trans_std=0.0, odom_rot_std=0.0)
    for _ in range(30):
        a = Pose2(*rng.uniform(-10, 10, size=2), rng.uniform(-3, 3))
        b = Pose2(*rng.uniform(-10, 10, size=2), rng.uniform(-3, 3))
        odo = sense_odometry(a, b, rig, rng)
        c = a.compose(odo.dx, odo.dy, odo.dtheta)
        assert c.x == pytest.approx(b.x, abs=1e-9)
        assert c.y == pytest.approx(b.y, abs=1e-9)


def test_dead_reckoning_drift_grows_like_sqrt_time():
    """Integrated noisy deltas drift with RMS ~ sqrt(t) on a straight drive."""
    rig = SensorRig(odom_trans_std=0.05, odom_rot_std=0.0)
    errs_25 = []
    errs_100 = []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        est = Pose2(0.0, 0.0, 0.0)
        for t in range(1, 101):
            prev = Pose2(float(t - 1), 0.0, 0.0)
            curr = Pose2(float(t), 0.0, 0.0)
            odo = sense_odometry(prev, curr, rig, rng)
            est = est.compose(odo.dx, odo.dy, odo.dtheta)
            if t == 25:
                errs_25.append(math.hypot(est.x - 25.0, est.y))
        errs_100.append(math.hypot(est.x - 100.0, est.y))
    ratio = np.sqrt(np.mean(np.square(errs_100))
                    / np.mean(np.square(errs_25)))
    assert 1.6 <= ratio <= 2.5  # sqrt(100/25) = 2


def test_odometry_translation_property():
    assert OdometryDelta(3.0, 4.0, 0.1).translation == pytest.approx(5.0)


# ---------------------------------------------------------------------------
# landmark sensing

def test_empty_viewing_cone_gives_no_points(vocab, rng):
    m = build_map({1: (0.0, 0.0), 2: (100.0, 0.0)}, [(1, 2, 7.0)],
                  landmarks=[(1, 90.0, 0.0, "statue")])
    rig = SensorRig(fov=1.0, max_range=50.0)
    assert sense_landmarks(m, Pose2(0.0, 0.0, math.pi), rig, vocab, rng) == []


def test_noiseless_landmark_gives_identical_points_dead_ahead(vocab, rng):
    m = build_map({1: (0.0, 0.0), 2: (100.0, 0.0)}, [(1, 2, 7.0)],
                  landmarks=[(7, 10.0, 0.0, "bench")])
    rig = SensorRig(point_scatter_std=0.0, feature_noise_std=0.0)
    pts = sense_landmarks(m, Pose2(0.0, 0.0, 0.0), rig, vocab, rng)
    assert len(pts) == rig.points_per_landmark == 5
    for fp in pts:
        np.testing.assert_allclose(fp.position, [10.0, 0.0], atol=1e-9)
        np.testing.assert_array_equal(fp.feature, embed_text("bench", vocab))
        assert fp.source_landmark_id == 7


def test_scatter_is_centered_on_the_true_position(vocab):
    m = build_map({1: (0.0, 0.0), 2: (100.0, 0.0)}, [(1, 2, 7.0)],
                  landmarks=[(1, 20.0, 5.0, "statue")])
    rig = SensorRig(point_scatter_std=0.5, feature_noise_std=0.0,
                    points_per_landmark=1000)
    pts = sense_landmarks(m, Pose2(0.0, 0.0, 0.0), rig, vocab,
                          np.random.default_rng(11))
    mean = np.mean([fp.position for fp in pts], axis=0)
    np.testing.assert_allclose(mean, [20.0, 5.0], atol=0.05)


def test_point_ranges_stay_bounded(vocab, rng):
    m = build_map({1: (0.0, 0.0), 2: (100.0, 0.0)}, [(1, 2, 7.0)],
                  landmarks=[(i, 5.0 + 9.0 * i, 3.0, "kiosk") for i in range(9)])
    rig = SensorRig(point_scatter_std=0.6, max_range=60.0)
    for _ in range(20):
        for fp in sense_landmarks(m, Pose2(0.0, 0.0, 0.0), rig, vocab, rng):
            assert np.linalg.norm(fp.position) \
                <= rig.max_range + 3.0 * rig.point_scatter_std + 1e-9


def test_removed_map_entries_still_emit_points(vocab, rng):
    from langnav.world import corrupt_landmarks
    m = build_map({1: (0.0, 0.0), 2: (100.0, 0.0)}, [(1, 2, 7.0)],
                  landmarks=[(i, 10.0 * (i + 1), 0.0, f"t{i}") for i in range(4)])
    corrupted = corrupt_landmarks(m, 0.5, 0.0, seed=0)
    assert len(corrupted.landmarks) == 2
    # the physical world still renders everything the rig can see
    pts = sense_landmarks(m, Pose2(0.0, 0.0, 0.0),
                          SensorRig(point_scatter_std=0.0), vocab, rng)
    assert {fp.source_landmark_id for fp in pts} == {0, 1, 2, 3}


# ---------------------------------------------------------------------------
# road occupancy grid

def test_cell_under_vehicle_on_road_is_free():
    m = build_map({1: (-100.0, 0.0), 2: (100.0, 0.0)}, [(1, 2, 6.0)])
    grid = sense_road_grid(m, Pose2(0.0, 0.0, 0.0), SensorRig())
    i = grid.nx // 2
    j = grid.ny // 2
    assert grid.values[i, j] == 0


def test_far_from_any_road_everything_is_occupied():
    m = build_map({1: (0.0, 0.0), 2: (100.0, 0.0)}, [(1, 2, 6.0)],
                  bounds=(-500, -500, 500, 500))
    grid = sense_road_grid(m, Pose2(0.0, -400.0, 0.3), SensorRig())
    assert grid.values.all()


def test_grid_classification_matches_distance_oracle():
    m = build_map({1: (0.0, 0.0), 2: (40.0, 0.0), 3: (40.0, 40.0),
                   4: (0.0, 40.0)},
                  [(1, 2, 6.0), (2, 3, 5.0), (3, 4, 8.0)])
    rig = SensorRig(grid_resolution=0.5)
    pose = Pose2(38.0, 3.0, 1.2)
    grid = sense_road_grid(m, pose, rig)
    xs, ys = grid.cell_centers_local()
    for i in range(0, grid.nx, 7):
        for j in range(0, grid.ny, 5):
            local = np.array([grid.origin.x + xs[i], grid.origin.y + ys[j]])
            p = pose.to_map(local)
            free = False
            for e in m.network.edges:
                a = m.network.nodes[e.a]
                b = m.network.nodes[e.b]
                if float(segment_point_distance(a, b, p)) <= e.width / 2.0:
                    free = True
                    break
            assert bool(grid.values[i, j] == 0) == free


def test_road_grid_is_deterministic():
    m = build_map({1: (0.0, 0.0), 2: (100.0, 30.0)}, [(1, 2, 6.0)])
    pose = Pose2(20.0, 6.0, 0.29)
    a = sense_road_grid(m, pose, SensorRig())
    b = sense_road_grid(m, pose, SensorRig())
    np.testing.assert_array_equal(a.values, b.values)
