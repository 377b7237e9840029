"""Validation of 3D hand-tracking output against a motion-capture reference."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .kinematics import (  # noqa: F401
    DistanceSeries,
    Intrinsics,
    JointTrajectory,
    LandmarkFrame,
    TrackingSystem,
    Trial,
    TrialMetadata,
    backproject,
    derive_wb,
    distance_series,
    fuse_depth,
    hand_length,
    project,
    tt_all,
    uplift_frame,
)
from .alignment import align, estimate_lag, remove_vertical_offset, resample  # noqa: F401
from .metrics import pearson, prmse, rmse, spectral_features, trajectory_metrics  # noqa: F401
from .segmentation import SegmentationConfig, find_extrema, segment, segment_parameters  # noqa: F401
from .agreement import agreement_report, bland_altman, ccc, icc  # noqa: F401
from .synth import DegradationSpec, MotionSpec, degrade, generate_trial, make_benchmark_suite  # noqa: F401
from .fileio import parse_trajectory_file, write_trajectory_file  # noqa: F401
from .pipeline import PipelineConfig, aggregate, run_cohort, run_validation  # noqa: F401
