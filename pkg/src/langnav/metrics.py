"""Run logs and evaluation metrics."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

APE_TOL = 5.0       # meters, convergence position tolerance
SPREAD_TOL = 10.0   # meters, convergence spread tolerance
CONFIRM_WINDOW = 10  # steps the conditions must hold
RECALL_KS = (1, 3, 5)
DCLR_RADII = (5.0, 10.0, 20.0)

LOG_COLUMNS = ("step", "t", "dist", "gt_x", "gt_y", "gt_theta",
               "est_x", "est_y", "est_yaw", "spread", "ape")

REPORT_COLUMNS = ("scenario_hash", "method", "seed", "steps",
                  "mean_ape", "median_ape", "final_ape",
                  "mean_spread", "final_spread",
                  "recall_at_1", "recall_at_3", "recall_at_5",
                  "dclr_5", "dclr_10", "dclr_20",
                  "dist_to_converge", "goal_distance")


def ape(gt_xy, est_xy):
    """Absolute position error, meters."""
    g = np.asarray(gt_xy, dtype=float)
    e = np.asarray(est_xy, dtype=float)
    return float(np.linalg.norm(g - e))


def _knn_ids(landmarks, point, k):
    """Ids of the k landmarks nearest `point`; distance ties break by id."""
    p = np.asarray(point, dtype=float)
    ranked = sorted(landmarks,
                    key=lambda l: (float(np.linalg.norm(l.position - p)), l.id))
    return {l.id for l in ranked[:k]}


def recall_at_k(landmarks, gt_xy, est_xy, k):
    """Jaccard overlap of the k-nearest landmark id sets around gt and est."""
    if not landmarks:
        return 0.0
    a = _knn_ids(landmarks, gt_xy, k)
    b = _knn_ids(landmarks, est_xy, k)
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


def dclr(landmarks, est_xy, radius):
    """Distance beyond `radius` to the closest landmark (0 when inside)."""
    if not landmarks:
        return math.inf
    p = np.asarray(est_xy, dtype=float)
    nearest = min(float(np.linalg.norm(l.position - p)) for l in landmarks)
    return max(0.0, nearest - radius)


def goal_distance(goal_xy, final_xy):
    return ape(goal_xy, final_xy)


@dataclass
class LogRecord:
    step: int
    t: float
    dist: float       # odometry-integrated distance traveled
    gt_x: float
    gt_y: float
    gt_theta: float
    est_x: float
    est_y: float
    est_yaw: float
    spread: float

    @property
    def ape(self):
        return math.hypot(self.gt_x - self.est_x, self.gt_y - self.est_y)


@dataclass
class RunLog:
    meta: dict
    records: list = field(default_factory=list)

    def append(self, rec):
        self.records.append(rec)

    @property
    def apes(self):
        return np.array([r.ape for r in self.records])

    @property
    def spreads(self):
        return np.array([r.spread for r in self.records])

    def save(self, out_dir):
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "runlog.csv"), "w", newline="\n") as f:
            w = csv.writer(f)
            w.writerow(LOG_COLUMNS)
            for r in self.records:
                w.writerow([r.step, f"{r.t:.6f}", f"{r.dist:.6f}",
                            f"{r.gt_x:.6f}", f"{r.gt_y:.6f}", f"{r.gt_theta:.6f}",
                            f"{r.est_x:.6f}", f"{r.est_y:.6f}", f"{r.est_yaw:.6f}",
                            f"{r.spread:.6f}", f"{r.ape:.6f}"])
        with open(os.path.join(out_dir, "meta.json"), "w", newline="\n") as f:
            json.dump(self.meta, f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, log_dir):
        with open(os.path.join(log_dir, "meta.json"), "r") as f:
            meta = json.load(f)
        records = []
        with open(os.path.join(log_dir, "runlog.csv"), "r", newline="") as f:
            for row in csv.DictReader(f):
                records.append(LogRecord(
                    step=int(row["step"]), t=float(row["t"]), dist=float(row["dist"]),
                    gt_x=float(row["gt_x"]), gt_y=float(row["gt_y"]),
                    gt_theta=float(row["gt_theta"]),
                    est_x=float(row["est_x"]), est_y=float(row["est_y"]),
                    est_yaw=float(row["est_yaw"]), spread=float(row["spread"])))
        return cls(meta=meta, records=records)


def distance_to_converge(log, ape_tol=APE_TOL, spread_tol=SPREAD_TOL,
                         window=CONFIRM_WINDOW):
    """Odometry distance at the first step whose convergence conditions hold
    through the confirmation window (clamped at the log tail). None if the
    run never converges."""
    recs = log.records
    n = len(recs)
    ok = [r.ape <= ape_tol and r.spread <= spread_tol for r in recs]
    for i in range(n):
        end = min(i + window, n)
        if all(ok[i:end]) and end > i:
            return recs[i].dist
    return None


@dataclass
class MetricsReport:
    row: dict

    def to_csv_row(self):
        return [self.row.get(c, "") for c in REPORT_COLUMNS]

    def pretty(self):
        lines = []
        for c in REPORT_COLUMNS:
            if c in self.row and self.row[c] != "":
                lines.append(f"{c:>18}: {self.row[c]}")
        return "\n".join(lines)


def _f(v):
    return f"{v:.6f}"


def compute_report(log, landmarks=None, goal_xy=None):
    """Summarize one run log. `landmarks` (true map) enable recall/DCLR."""
    apes = log.apes
    spreads = log.spreads
    n = len(log.records)
    row = {
        "scenario_hash": log.meta.get("scenario_hash", ""),
        "method": log.meta.get("method", ""),
        "seed": log.meta.get("seed", ""),
        "steps": n,
        "mean_ape": _f(float(apes.mean())) if n else "",
        "median_ape": _f(float(np.median(apes))) if n else "",
        "final_ape": _f(float(apes[-1])) if n else "",
        "mean_spread": _f(float(spreads.mean())) if n else "",
        "final_spread": _f(float(spreads[-1])) if n else "",
    }
    if landmarks:
        for k in RECALL_KS:
            vals = [recall_at_k(landmarks, (r.gt_x, r.gt_y), (r.est_x, r.est_y), k)
                    for r in log.records]
            row[f"recall_at_{k}"] = _f(float(np.mean(vals))) if vals else ""
        for radius in DCLR_RADII:
            vals = [dclr(landmarks, (r.est_x, r.est_y), radius)
                    for r in log.records]
            row[f"dclr_{int(radius)}"] = _f(float(np.mean(vals))) if vals else ""
    conv = distance_to_converge(log)
    row["dist_to_converge"] = _f(conv) if conv is not None else "never"
    if goal_xy is not None and n:
        row["goal_distance"] = _f(goal_distance(
            goal_xy, (log.records[-1].gt_x, log.records[-1].gt_y)))
    return MetricsReport(row=row)


def write_report_csv(reports, path):
    with open(path, "w", newline="\n") as f:
        w = csv.writer(f)
        w.writerow(REPORT_COLUMNS)
        for r in reports:
            w.writerow(r.to_csv_row())
