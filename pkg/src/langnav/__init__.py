"""Language-augmented topometric localization and navigation on a 2D
synthetic world: coarse road-network maps plus tagged landmarks, a
multimodal particle filter, and a route/corridor planning stack, all
deterministic under seeded runs.
"""

from .embedding import (Vocabulary, cosine_sim, embed_text, embed_visual,
                        load_vocabulary)
from .geometry import Pose2, wrap_angle
from .harness import (NavResult, Scenario, load_scenario, run_ablation,
                      run_closed_loop, run_open_loop)
from .localization import (METHODS, FilterConfig, ParticleSet, PoseEstimate,
                           estimate, importance_factor, init_particles, predict,
                           reweight_and_resample, score_particles)
from .metrics import RunLog, ape, compute_report, dclr, distance_to_converge, recall_at_k
from .perception import EsdfSampler, Grid2D, distance_transform, esdf
from .planning import (PlannerConfig, astar_route, plan_frenet,
                       resolve_language_goal, stanley_steer, waypoints_ahead)
from .simulator import SensorRig, VehicleState, sense_landmarks, sense_odometry, step_kinematics
from .world import (TopometricMap, corrupt_landmarks, load_map, save_map,
                    scale_map, visible_landmarks)

__version__ = "0.1.0"

__all__ = [
    "Vocabulary", "cosine_sim", "embed_text", "embed_visual", "load_vocabulary",
    "Pose2", "wrap_angle",
    "NavResult", "Scenario", "load_scenario", "run_ablation", "run_closed_loop",
    "run_open_loop",
    "METHODS", "FilterConfig", "ParticleSet", "PoseEstimate", "estimate",
    "importance_factor", "init_particles", "predict", "reweight_and_resample",
    "score_particles",
    "RunLog", "ape", "compute_report", "dclr", "distance_to_converge",
    "recall_at_k",
    "EsdfSampler", "Grid2D", "distance_transform", "esdf",
    "PlannerConfig", "astar_route", "plan_frenet", "resolve_language_goal",
    "stanley_steer", "waypoints_ahead",
    "SensorRig", "VehicleState", "sense_landmarks", "sense_odometry",
    "step_kinematics",
    "TopometricMap", "corrupt_landmarks", "load_map", "save_map", "scale_map",
    "visible_landmarks",
    "__version__",
]
