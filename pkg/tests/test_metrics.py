"""Evaluation metrics and the run-log container."""

import math
from dataclasses import dataclass

import numpy as np
import pytest

from langnav.metrics import (LOG_COLUMNS, REPORT_COLUMNS, LogRecord, RunLog,
                             ape, compute_report, dclr, distance_to_converge,
                             goal_distance, recall_at_k, write_report_csv)


@dataclass
class LM:
    id: int
    position: np.ndarray


def lms_on_a_line(xs):
    return [LM(id=i + 1, position=np.array([float(x), 0.0]))
            for i, x in enumerate(xs)]


def make_log(apes, spreads=None, dist_step=2.5, meta=None):
    spreads = spreads if spreads is not None else [1.0] * len(apes)
    log = RunLog(meta=meta or {})
    for i, (a, s) in enumerate(zip(apes, spreads)):
        log.append(LogRecord(step=i, t=0.1 * i, dist=dist_step * i,
                             gt_x=0.0, gt_y=0.0, gt_theta=0.0,
                             est_x=float(a), est_y=0.0, est_yaw=0.0,
                             spread=float(s)))
    return log


# ---------------------------------------------------------------------------
# pointwise metrics

def test_ape_is_euclidean():
    assert ape((0.0, 0.0), (3.0, 4.0)) == 5.0
    assert ape((1.0, 1.0), (1.0, 1.0)) == 0.0
    assert ape((2.0, 7.0), (-1.0, 3.0)) == ape((-1.0, 3.0), (2.0, 7.0))


def test_log_record_ape_property():
    r = LogRecord(step=0, t=0.0, dist=0.0, gt_x=0.0, gt_y=0.0, gt_theta=0.0,
                  est_x=3.0, est_y=4.0, est_yaw=0.0, spread=0.0)
    assert r.ape == 5.0


def test_recall_disjoint_neighborhoods_score_zero():
    lms = lms_on_a_line([0, 10, 20, 30, 40])
    assert recall_at_k(lms, (9.0, 0.0), (21.0, 0.0), 2) == 0.0


def test_recall_half_overlap_scores_half():
    lms = lms_on_a_line([0, 10, 20, 30, 40])
    assert recall_at_k(lms, (9.0, 0.0), (21.0, 0.0), 3) == 0.5


def test_recall_perfect_estimate_scores_one():
    lms = lms_on_a_line([0, 10, 20, 30, 40])
    for k in (1, 3, 5, 7):
        assert recall_at_k(lms, (12.0, 0.0), (12.0, 0.0), k) == 1.0


def test_recall_without_landmarks_is_zero():
    assert recall_at_k([], (0.0, 0.0), (1.0, 1.0), 3) == 0.0


def test_dclr_inside_the_radius_is_zero():
    lms = lms_on_a_line([0, 100])
    assert dclr(lms, (2.0, 0.0), 5.0) == 0.0


def test_dclr_measures_the_excess_distance():
    lms = lms_on_a_line([0, 100])
    assert dclr(lms, (10.0, 0.0), 3.0) == 7.0
    assert dclr(lms, (8.0, 0.0), 3.0) == 5.0


def test_dclr_zero_radius_is_the_nearest_distance():
    lms = lms_on_a_line([0, 100])
    assert dclr(lms, (30.0, 0.0), 0.0) == 30.0


def test_dclr_without_landmarks_is_infinite():
    assert dclr([], (0.0, 0.0), 5.0) == math.inf


def test_goal_distance_is_euclidean():
    assert goal_distance((0.0, 0.0), (6.0, 8.0)) == 10.0


# ---------------------------------------------------------------------------
# convergence

def test_converged_from_the_start_reports_zero_distance():
    log = make_log([1.0] * 20)
    assert distance_to_converge(log) == 0.0


def test_never_converging_run_reports_none():
    log = make_log([50.0] * 20)
    assert distance_to_converge(log) is None


def test_empty_log_reports_none():
    assert distance_to_converge(RunLog(meta={})) is None


def test_convergence_distance_at_the_first_sustained_step():
    apes = [50.0] * 15 + [1.0] * 15
    log = make_log(apes, dist_step=2.5)
    assert distance_to_converge(log) == 37.5


def test_a_blip_inside_the_window_postpones_convergence():
    apes = [50.0] * 5 + [1.0] * 5 + [50.0] + [1.0] * 20
    log = make_log(apes, dist_step=1.0)
    assert distance_to_converge(log) == 11.0


def test_window_clamps_at_the_log_tail():
    apes = [50.0] * 10 + [1.0] * 5
    log = make_log(apes, dist_step=1.0)
    assert distance_to_converge(log, window=10) == 10.0


def test_spread_condition_participates():
    log = make_log([1.0] * 20, spreads=[50.0] * 20)
    assert distance_to_converge(log) is None
    log = make_log([1.0] * 20, spreads=[50.0] * 10 + [1.0] * 10)
    assert distance_to_converge(log) == 10 * 2.5


def test_looser_tolerance_never_converges_later():
    apes = [40.0, 30.0, 20.0, 12.0, 8.0, 4.0, 3.0, 2.0, 1.0, 1.0, 1.0, 1.0]
    log = make_log(apes, dist_step=1.0)
    tight = distance_to_converge(log, ape_tol=5.0)
    loose = distance_to_converge(log, ape_tol=10.0)
    assert loose <= tight


# ---------------------------------------------------------------------------
# reports

def test_report_rows_are_fixed_point_strings():
    log = make_log([1.0, 2.0, 3.0],
                   meta={"scenario_hash": "abc", "method": "altpilot",
                         "seed": 4})
    rep = compute_report(log)
    assert rep.row["mean_ape"] == "2.000000"
    assert rep.row["median_ape"] == "2.000000"
    assert rep.row["final_ape"] == "3.000000"
    assert rep.row["mean_spread"] == "1.000000"
    assert rep.row["steps"] == 3
    assert rep.row["method"] == "altpilot"
    assert rep.row["dist_to_converge"] == "0.000000"
    assert "recall_at_1" not in rep.row


def test_report_marks_non_convergence_as_never():
    rep = compute_report(make_log([50.0] * 5))
    assert rep.row["dist_to_converge"] == "never"


def test_report_with_landmarks_adds_recall_and_clearance_columns():
    lms = lms_on_a_line([0, 10, 20, 30, 40])
    rep = compute_report(make_log([1.0, 1.0]), landmarks=lms)
    for k in (1, 3, 5):
        assert f"recall_at_{k}" in rep.row
    for r in (5, 10, 20):
        assert f"dclr_{r}" in rep.row
    assert rep.row["recall_at_1"] == "1.000000"  # est within the same cell
    assert rep.row["dclr_5"] == "0.000000"


def test_report_goal_distance_uses_the_true_final_position():
    log = make_log([2.0, 2.0])
    rep = compute_report(log, goal_xy=(3.0, 4.0))
    # final ground truth sits at the origin regardless of the estimate
    assert rep.row["goal_distance"] == "5.000000"


def test_empty_log_report_has_blank_statistics():
    rep = compute_report(RunLog(meta={}))
    assert rep.row["steps"] == 0
    assert rep.row["mean_ape"] == ""
    assert rep.row["dist_to_converge"] == "never"


def test_report_csv_round_trip(tmp_path):
    lms = lms_on_a_line([0, 10])
    reps = [compute_report(make_log([1.0, 2.0]), landmarks=lms),
            compute_report(make_log([9.0]))]
    path = tmp_path / "report.csv"
    write_report_csv(reps, str(path))
    lines = path.read_text().strip().split("\n")
    assert lines[0] == ",".join(REPORT_COLUMNS)
    assert len(lines) == 3
    # columns without a value stay empty rather than shifting the row
    assert lines[2].split(",")[REPORT_COLUMNS.index("recall_at_1")] == ""


# ---------------------------------------------------------------------------
# run-log persistence

def test_runlog_save_load_round_trip(tmp_path):
    log = make_log([1.25, 2.5], meta={"method": "maplite", "seed": 3,
                                      "scenario_hash": "deadbeef"})
    out = tmp_path / "run"
    log.save(str(out))
    back = RunLog.load(str(out))
    assert back.meta == log.meta
    assert len(back.records) == 2
    for a, b in zip(log.records, back.records):
        assert a == b


def test_runlog_resave_is_byte_identical(tmp_path):
    log = make_log([0.1, 0.2, 0.3], meta={"seed": 1})
    a = tmp_path / "a"
    b = tmp_path / "b"
    log.save(str(a))
    RunLog.load(str(a)).save(str(b))
    assert (a / "runlog.csv").read_bytes() == (b / "runlog.csv").read_bytes()
    assert (a / "meta.json").read_bytes() == (b / "meta.json").read_bytes()


def test_runlog_csv_header_matches_the_contract(tmp_path):
    log = make_log([1.0])
    log.save(str(tmp_path / "r"))
    first = (tmp_path / "r" / "runlog.csv").read_text().split("\n")[0]
    assert first == ",".join(LOG_COLUMNS)
