"""Domain types, wrist-anchored depth fusion and inter-joint distances.

All lengths are millimetres internally. Reporting helpers convert to
centimetres where the clinical convention calls for it.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import (
    DepthHole,
    GridMismatch,
    InvalidIntrinsics,
    MissingJoint,
    NonPhysicalDepth,
    ProtocolWarning,
    TooFewSamples,
    WrongLabels,
)

__all__ = [
    "TrackingSystem", "Intrinsics", "JointTrajectory", "LandmarkFrame",
    "TrialMetadata", "DistanceSeries", "Trial",
    "fuse_depth", "fuse_depth_value", "backproject", "project", "uplift_frame",
    "uplift_frames", "derive_wb", "distance_series", "tt_all", "hand_length",
    "TASKS", "SPEEDS", "DISTANCE_BANDS", "VIEWING_ANGLES", "DISTANCE_LABELS",
    "JOINTS",
]

# joint names
WOB, WIB, WB = "WOB", "WIB", "WB"
IFT, TT, MT, RFT, PT = "IFT", "TT", "MT", "RFT", "PT"
WRIST = "WRIST"
JOINTS = (WOB, WIB, WB, IFT, TT, MT, RFT, PT, WRIST)

TASKS = ("OC", "SFT", "MFT", "SOH")
SPEEDS = (75, 115, 140)
DISTANCE_BANDS = ("Near_60_80cm", "Far_80_100cm")
VIEWING_ANGLES = ("Frontal", "Lateral")

MT_WB, IFT_TT, MT_TT, RFT_TT, PT_TT, TT_ALL = (
    "MT_WB", "IFT_TT", "MT_TT", "RFT_TT", "PT_TT", "TT_ALL")
DISTANCE_LABELS = (MT_WB, IFT_TT, MT_TT, RFT_TT, PT_TT, TT_ALL)
FINGER_TT_LABELS = (IFT_TT, MT_TT, RFT_TT, PT_TT)

HAND_LENGTH_PLAUSIBLE_CM = (12.0, 25.0)


def _frozen_array(a, dtype=float):
    arr = np.array(a, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TrackingSystem:
    """Which device produced a stream.

    ``kind`` is one of ``reference``, ``candidate_rgb``, ``candidate_rgbd`` or
    ``other``; ``name`` distinguishes ``other`` systems.
    """

    kind: str
    name: str = ""

    KINDS = ("reference", "candidate_rgb", "candidate_rgbd", "other")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown tracking system kind {self.kind!r}")
        if self.kind == "other" and not self.name:
            raise ValueError("an 'other' tracking system needs a name")

    @property
    def is_reference(self):
        return self.kind == "reference"

    @classmethod
    def parse(cls, text):
        text = str(text)
        if text.startswith("other:"):
            return cls("other", text[len("other:"):])
        if text in cls.KINDS:
            return cls(text)
        return cls("other", text)

    def __str__(self):
        return f"other:{self.name}" if self.kind == "other" else self.kind


REFERENCE = TrackingSystem("reference")
CANDIDATE_RGB = TrackingSystem("candidate_rgb")
CANDIDATE_RGBD = TrackingSystem("candidate_rgbd")


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def check(self):
        if not (self.fx > 0 and self.fy > 0):
            raise InvalidIntrinsics(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        return self

    def to_dict(self):
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy}


@dataclass(frozen=True)
class JointTrajectory:
    """Time-stamped 3D positions (mm) of one joint from one tracking system."""

    joint: str
    system: TrackingSystem
    t: np.ndarray
    p: np.ndarray
    fps: float

    def __post_init__(self):
        t = _frozen_array(self.t)
        p = _frozen_array(self.p)
        if t.ndim != 1 or p.shape != (t.size, 3):
            raise ValueError(f"{self.joint}: expected t of shape (n,) and p of shape (n, 3), "
                             f"got {t.shape} and {p.shape}")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError(f"{self.joint}: timestamps must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(p))):
            raise ValueError(f"{self.joint}: non-finite sample")
        if not self.fps > 0:
            raise ValueError(f"{self.joint}: fps must be positive")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "p", p)

    def __len__(self):
        return self.t.size

    def irregular_steps(self, tol=0.10):
        """Indices ``i`` where ``t[i+1] - t[i]`` is off the nominal period by more than ``tol``."""
        period = 1.0 / self.fps
        return np.flatnonzero(np.abs(np.diff(self.t) - period) > tol * period)

    def subset(self, mask):
        return JointTrajectory(self.joint, self.system, self.t[mask], self.p[mask], self.fps)


@dataclass(frozen=True)
class LandmarkFrame:
    """One frame of 2.5D landmarks: pixels plus wrist-relative depth ``z_im``.

    ``d_wrist`` is the wrist depth in mm read from the depth map; ``None``
    marks a depth hole, which is deliberately distinct from 0 mm.
    """

    t: float
    landmarks: Mapping[str, tuple]
    d_wrist: Optional[float]
    intrinsics: Intrinsics

    def __post_init__(self):
        lms = {j: tuple(float(c) for c in uvz) for j, uvz in self.landmarks.items()}
        if WRIST in lms and lms[WRIST][2] != 0.0:
            raise ValueError(f"WRIST landmark must have z_im = 0, got {lms[WRIST][2]}")
        object.__setattr__(self, "landmarks", lms)

    @property
    def has_depth(self):
        return self.d_wrist is not None


@dataclass(frozen=True)
class TrialMetadata:
    task: str
    speed_bpm: Optional[int] = None
    distance_band: str = "Near_60_80cm"
    viewing_angle: str = "Frontal"
    subject_id: str = ""
    duration_s: float = 15.0

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.distance_band not in DISTANCE_BANDS:
            raise ValueError(f"unknown distance band {self.distance_band!r}")
        if self.viewing_angle not in VIEWING_ANGLES:
            raise ValueError(f"unknown viewing angle {self.viewing_angle!r}")

    def protocol_issues(self):
        """Deviations from the acquisition protocol. These are warnings, never errors."""
        issues = []
        if self.task == "SOH":
            if self.speed_bpm is not None:
                issues.append("SOH trials carry no metronome speed")
        elif self.speed_bpm is None:
            issues.append(f"{self.task} trial without a metronome speed")
        elif self.speed_bpm not in SPEEDS:
            issues.append(f"{self.task} at non-protocol speed {self.speed_bpm} bpm")
        if self.task == "MFT" and self.speed_bpm not in (None, 115):
            issues.append("MFT is recorded at 115 bpm only")
        if self.task in ("OC", "MFT") and self.viewing_angle != "Frontal":
            issues.append(f"{self.task} is recorded from the frontal view only")
        return issues

    def to_dict(self):
        return {
            "task": self.task,
            "speed_bpm": self.speed_bpm,
            "distance_band": self.distance_band,
            "viewing_angle": self.viewing_angle,
            "subject_id": self.subject_id,
            "duration_s": self.duration_s,
        }

    @classmethod
    def from_dict(cls, d):
        speed = d.get("speed_bpm")
        return cls(
            task=d["task"],
            speed_bpm=None if speed is None else int(speed),
            distance_band=d.get("distance_band", "Near_60_80cm"),
            viewing_angle=d.get("viewing_angle", "Frontal"),
            subject_id=str(d.get("subject_id", "")),
            duration_s=float(d.get("duration_s", 15.0)),
        )


@dataclass(frozen=True)
class DistanceSeries:
    """Scalar inter-joint distance (mm) over time."""

    label: str
    t: np.ndarray
    d: np.ndarray
    system: TrackingSystem = REFERENCE
    fps: Optional[float] = None

    def __post_init__(self):
        t = _frozen_array(self.t)
        d = _frozen_array(self.d)
        if t.ndim != 1 or d.shape != t.shape:
            raise ValueError(f"{self.label}: t and d must be 1-D of equal length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError(f"{self.label}: timestamps must be strictly increasing")
        if not np.all(np.isfinite(d)):
            raise ValueError(f"{self.label}: non-finite distance")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "d", d)
        if self.fps is None and t.size > 1:
            object.__setattr__(self, "fps", float(1.0 / np.median(np.diff(t))))

    def __len__(self):
        return self.t.size

    @property
    def duration(self):
        """Time covered by the samples, counting one period per sample."""
        if self.t.size == 0:
            return 0.0
        return float(self.t[-1] - self.t[0] + 1.0 / self.fps)

    def with_values(self, d, label=None):
        return DistanceSeries(label or self.label, self.t, d, self.system, self.fps)


@dataclass(frozen=True)
class Trial:
    """Everything one system recorded during one trial."""

    metadata: TrialMetadata
    system: TrackingSystem
    fps: float
    trajectories: Mapping[str, JointTrajectory]
    intrinsics: Optional[Intrinsics] = None
    trial_id: str = ""
    extra: Mapping = field(default_factory=dict)

    def joint(self, name):
        try:
            return self.trajectories[name]
        except KeyError:
            raise MissingJoint(f"joint {name} not recorded in trial {self.trial_id or '?'}") from None


# ---------------------------------------------------------------------------
# depth fusion and geometry

def fuse_depth_value(d_wrist, z_im):
    """Joint depth from wrist depth and relative depth: ``d_wrist * (1 + z_im)``."""
    scale = 1.0 + np.asarray(z_im, dtype=float)
    if np.any(scale <= 0):
        raise NonPhysicalDepth(f"1 + z_im = {scale} <= 0 would place the joint behind the camera")
    out = np.asarray(d_wrist, dtype=float) * scale
    return float(out) if out.ndim == 0 else out


def fuse_depth(frame: LandmarkFrame, joint: str) -> float:
    if not frame.has_depth:
        raise DepthHole(f"wrist depth missing at t={frame.t}")
    if not frame.d_wrist > 0:
        raise NonPhysicalDepth(f"wrist depth {frame.d_wrist} mm is not positive")
    try:
        _, _, z_im = frame.landmarks[joint]
    except KeyError:
        raise MissingJoint(f"joint {joint} absent from frame at t={frame.t}") from None
    return fuse_depth_value(frame.d_wrist, z_im)


def backproject(u, v, d, intrinsics: Intrinsics):
    """Pinhole back-projection of pixel ``(u, v)`` at depth ``d`` mm to camera coordinates."""
    k = intrinsics.check()
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise NonPhysicalDepth("back-projection needs positive depth")
    return np.stack([(u - k.cx) * d / k.fx, (v - k.cy) * d / k.fy, d], axis=-1)


def project(points, intrinsics: Intrinsics):
    """Inverse of :func:`backproject`: camera-frame points (..., 3) to ``(u, v, depth)``."""
    k = intrinsics.check()
    points = np.asarray(points, dtype=float)
    z = points[..., 2]
    if np.any(z <= 0):
        raise NonPhysicalDepth("cannot project points at or behind the camera plane")
    return points[..., 0] * k.fx / z + k.cx, points[..., 1] * k.fy / z + k.cy, z


def uplift_frame(frame: LandmarkFrame, skip_invalid=False):
    """Camera-frame 3D point (mm) for every landmark of ``frame``.

    A depth hole at the wrist fails the whole frame. A landmark whose fused
    depth is non-physical raises, or is left out when ``skip_invalid``.
    """
    if not frame.has_depth:
        raise DepthHole(f"wrist depth missing at t={frame.t}")
    out = {}
    for joint, (u, v, _) in frame.landmarks.items():
        try:
            d = fuse_depth(frame, joint)
            out[joint] = backproject(u, v, d, frame.intrinsics)
        except NonPhysicalDepth:
            if joint == WRIST or not skip_invalid:
                raise
    return out


def uplift_frames(frames: Sequence[LandmarkFrame], system, fps, skip_invalid=False):
    """Uplift a landmark stream to per-joint trajectories.

    Frames with a depth hole are dropped; the number dropped is returned
    alongside the trajectories.
    """
    per_joint = {}
    holes = 0
    for frame in frames:
        try:
            points = uplift_frame(frame, skip_invalid=skip_invalid)
        except DepthHole:
            holes += 1
            continue
        for joint, p in points.items():
            per_joint.setdefault(joint, ([], []))
            per_joint[joint][0].append(frame.t)
            per_joint[joint][1].append(p)
    trajectories = {
        j: JointTrajectory(j, system, np.array(ts), np.array(ps).reshape(-1, 3), fps)
        for j, (ts, ps) in per_joint.items()
    }
    return trajectories, holes


# ---------------------------------------------------------------------------
# distances

def _check_grid(a, b):
    if a.t.shape != b.t.shape or not np.array_equal(a.t, b.t):
        raise GridMismatch("series are not on the same timestamp grid")


def derive_wb(wib: JointTrajectory, wob: JointTrajectory) -> JointTrajectory:
    """Wrist-bone midpoint of the inner and outer wrist markers."""
    _check_grid(wib, wob)
    return JointTrajectory(WB, wib.system, wib.t, 0.5 * (wib.p + wob.p), wib.fps)


def common_grid(a: JointTrajectory, b: JointTrajectory):
    """Restrict two trajectories to the timestamps they share."""
    if a.t.shape == b.t.shape and np.array_equal(a.t, b.t):
        return a, b
    shared, ia, ib = np.intersect1d(a.t, b.t, assume_unique=True, return_indices=True)
    return a.subset(ia), b.subset(ib)


def distance_series(a: JointTrajectory, b: JointTrajectory, label: str) -> DistanceSeries:
    _check_grid(a, b)
    if label not in DISTANCE_LABELS:
        raise WrongLabels(f"unknown distance label {label!r}")
    d = np.linalg.norm(a.p - b.p, axis=1)
    return DistanceSeries(label, a.t, d, a.system, a.fps)


def tt_all(index: DistanceSeries, middle: DistanceSeries, ring: DistanceSeries,
           pinkie: DistanceSeries) -> DistanceSeries:
    """Composite finger-to-thumb distance: the sum of the four sub-distances."""
    parts = (index, middle, ring, pinkie)
    if tuple(s.label for s in parts) != FINGER_TT_LABELS:
        raise WrongLabels(f"expected labels {FINGER_TT_LABELS}, got {tuple(s.label for s in parts)}")
    for s in parts[1:]:
        _check_grid(index, s)
    total = index.d + middle.d + ring.d + pinkie.d
    return DistanceSeries(TT_ALL, index.t, total, index.system, index.fps)


def hand_length(mt: JointTrajectory, wb: JointTrajectory) -> float:
    """Mean middle-tip to wrist-bone distance over a static trial, in cm."""
    s = distance_series(mt, wb, MT_WB)
    if len(s) == 0 or s.duration < 1.0 - 1e-9:
        raise TooFewSamples(f"hand length needs at least 1 s of static samples, got {s.duration:.3f} s")
    length_cm = float(np.mean(s.d)) / 10.0
    lo, hi = HAND_LENGTH_PLAUSIBLE_CM
    if not lo <= length_cm <= hi:
        warnings.warn(f"hand length {length_cm:.2f} cm outside plausible adult range [{lo}, {hi}] cm",
                      ProtocolWarning, stacklevel=2)
    return length_cm
