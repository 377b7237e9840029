"""Synthetic ground-truth trials with metronome-locked kinematics.

Each task's characteristic distance follows a raised cosine (or triangle)
locked to the metronome, with the maximum at every cycle start. Optional
cycle-to-cycle tempo variability breaks strict periodicity the way a human
tapper does; with ``tempo_jitter=0`` the closed form is exact.

Degradations act on the task distances by sliding the distal joint along
the line to its anchor, so every degraded trial is still a set of 3D
trajectories that can be written to and read from a trajectory file.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import InvalidSpec
from .kinematics import (
    CANDIDATE_RGBD,
    FINGER_TT_LABELS,
    IFT,
    IFT_TT,
    MT,
    MT_WB,
    PT,
    REFERENCE,
    RFT,
    TT,
    TT_ALL,
    WIB,
    WOB,
    WRIST,
    Intrinsics,
    JointTrajectory,
    LandmarkFrame,
    TrackingSystem,
    Trial,
    TrialMetadata,
    project,
)

__all__ = ["MotionSpec", "DegradationSpec", "MotionModel", "generate_trial", "degrade",
           "landmark_frames", "make_benchmark_suite", "SuiteEntry", "PRESETS",
           "DEFAULT_INTRINSICS", "EXCURSION_SCALE", "MFT_OPEN_OFFSETS_MM"]

EXCURSION_SCALE = {"Wide": 1.0, "Free": 0.7, "Small": 0.4}
PROTOCOL_EXCURSION = {75: "Wide", 115: "Free", 140: "Small"}

DEFAULT_AMPLITUDE_MM = {"OC": 80.0, "SFT": 80.0, "MFT": 50.0, "SOH": 0.0}
DEFAULT_BASELINE_MM = {"OC": 140.0, "SFT": 60.0, "MFT": 80.0, "SOH": 180.0}
# per-finger open distance to the thumb, relative to the MFT baseline
MFT_OPEN_OFFSETS_MM = (-10.0, 0.0, 5.0, 10.0)
MFT_FINGERS = (IFT, MT, RFT, PT)

HAND_DEPTH_MM = {"Near_60_80cm": 700.0, "Far_80_100cm": 900.0}
SOH_JITTER_MM = 0.2
DEFAULT_INTRINSICS = Intrinsics(fx=605.0, fy=605.0, cx=639.5, cy=359.5)

_WRIST_HALF_WIDTH_MM = 15.0
_MIN_DISTANCE_MM = 1e-3


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


# hand geometry relative to the wrist-bone midpoint, camera axes (x right, y down, z away)
_DIR_MT = _unit([0.05, -1.0, -0.1])
_TT_OFFSET = np.array([-45.0, -75.0, -15.0])
_DIR_FINGER = {IFT: _unit([0.55, -1.0, -0.25]), MT: _unit([0.75, -0.8, -0.25]),
               RFT: _unit([0.95, -0.55, -0.2]), PT: _unit([1.0, -0.3, -0.15])}


@dataclass(frozen=True)
class MotionSpec:
    task: str
    bpm: Optional[float] = 75
    duration_s: float = 15.0
    fps: float = 30.0
    amplitude_mm: Optional[float] = None
    baseline_mm: Optional[float] = None
    excursion_profile: str = "Wide"
    seed: int = 0
    tempo_jitter: float = 0.0
    waveform: str = "cosine"
    distance_band: str = "Near_60_80cm"
    viewing_angle: str = "Frontal"
    subject_id: str = "synthetic"

    @property
    def effective_amplitude(self):
        base = DEFAULT_AMPLITUDE_MM[self.task] if self.amplitude_mm is None else self.amplitude_mm
        return base * EXCURSION_SCALE[self.excursion_profile]

    @property
    def baseline(self):
        return DEFAULT_BASELINE_MM[self.task] if self.baseline_mm is None else self.baseline_mm

    def validate(self):
        if self.task not in DEFAULT_AMPLITUDE_MM:
            raise InvalidSpec(f"unknown task {self.task!r}")
        if not self.duration_s > 0 or not self.fps > 0:
            raise InvalidSpec("duration_s and fps must be positive")
        if self.excursion_profile not in EXCURSION_SCALE:
            raise InvalidSpec(f"unknown excursion profile {self.excursion_profile!r}")
        if self.waveform not in ("cosine", "triangle"):
            raise InvalidSpec(f"unknown waveform {self.waveform!r}")
        if not 0 <= self.tempo_jitter < 0.3:
            raise InvalidSpec("tempo_jitter must lie in [0, 0.3)")
        if self.distance_band not in HAND_DEPTH_MM:
            raise InvalidSpec(f"unknown distance band {self.distance_band!r}")
        if self.task == "SOH":
            return self
        if self.bpm is None or not self.bpm > 0:
            raise InvalidSpec(f"{self.task} needs a positive bpm")
        amp = self.effective_amplitude
        if amp < 0:
            raise InvalidSpec("amplitude must be non-negative")
        lowest = self.baseline + (min(MFT_OPEN_OFFSETS_MM) - amp if self.task == "MFT" else -amp / 2)
        if lowest <= 0:
            raise InvalidSpec(f"amplitude {amp} mm drives the {self.task} distance to {lowest} mm")
        return self

    def metadata(self):
        return TrialMetadata(
            task=self.task,
            speed_bpm=None if self.task == "SOH" else int(round(self.bpm)),
            distance_band=self.distance_band,
            viewing_angle=self.viewing_angle,
            subject_id=self.subject_id,
            duration_s=float(self.duration_s),
        )


@dataclass(frozen=True)
class DegradationSpec:
    noise_sigma_mm: float = 0.0
    offset_mm: float = 0.0
    lag_samples: int = 0
    squeeze_factor: float = 1.0
    dropout_rate: float = 0.0
    seed: int = 0

    def validate(self):
        if not 0 < self.squeeze_factor <= 1:
            raise InvalidSpec("squeeze_factor must lie in (0, 1]")
        if not 0 <= self.dropout_rate <= 0.2:
            raise InvalidSpec("dropout_rate must lie in [0, 0.2]")
        if self.noise_sigma_mm < 0:
            raise InvalidSpec("noise_sigma_mm must be non-negative")
        if int(self.lag_samples) != self.lag_samples:
            raise InvalidSpec("lag_samples must be an integer")
        return self

    @property
    def is_identity(self):
        return (self.noise_sigma_mm == 0 and self.offset_mm == 0 and self.lag_samples == 0
                and self.squeeze_factor == 1 and self.dropout_rate == 0)


class MotionModel:
    """Continuous-time hand motion for one :class:`MotionSpec`.

    The cycle counter ``c(t)`` advances by one per metronome beat; it is
    piecewise linear in time when tempo jitter is on, and exactly
    ``t * bpm / 60`` otherwise.
    """

    def __init__(self, spec: MotionSpec):
        self.spec = spec.validate()
        self.rng = np.random.default_rng(spec.seed)
        self.origin = np.array([0.0, 60.0, HAND_DEPTH_MM[spec.distance_band]])
        if spec.task != "SOH":
            self.rate = spec.bpm / 60.0
            self._build_cycles()

    def _build_cycles(self, margin_s=5.0):
        spec = self.spec
        period = 1.0 / self.rate
        n_fwd = int(np.ceil((spec.duration_s + margin_s) * self.rate)) + 1
        n_back = int(np.ceil(margin_s * self.rate)) + 1
        if spec.tempo_jitter > 0:
            eps = np.clip(spec.tempo_jitter * self.rng.standard_normal(n_fwd + n_back), -0.5, 0.5)
        else:
            eps = np.zeros(n_fwd + n_back)
        periods = period * (1.0 + eps)
        fwd = np.concatenate([[0.0], np.cumsum(periods[:n_fwd])])
        back = -np.cumsum(periods[n_fwd:])[::-1]
        self._edges = np.concatenate([back, fwd])
        self._counts = np.arange(-n_back, n_fwd + 1, dtype=float)

    def cycles(self, t):
        t = np.asarray(t, dtype=float)
        if self.spec.tempo_jitter == 0:
            return t * self.rate
        return np.interp(t, self._edges, self._counts)

    def beat_times(self):
        """Times of every cycle start (distance maxima) within the trial."""
        if self.spec.tempo_jitter == 0:
            return np.arange(0, self.spec.duration_s, 1 / self.rate)
        e = self._edges
        return e[(e >= 0) & (e < self.spec.duration_s)]

    def _wave(self, c):
        if self.spec.waveform == "triangle":
            return 4.0 * np.abs(np.mod(c, 1.0) - 0.5) - 1.0
        return np.cos(2 * np.pi * c)

    def distances(self, t):
        """Ground-truth task distances (mm) at times ``t``."""
        spec = self.spec
        t = np.asarray(t, dtype=float)
        if spec.task == "SOH":
            return {MT_WB: np.full(t.shape, spec.baseline)}
        c = self.cycles(t)
        amp = spec.effective_amplitude
        if spec.task in ("SFT", "OC"):
            label = IFT_TT if spec.task == "SFT" else MT_WB
            return {label: spec.baseline + 0.5 * amp * self._wave(c)}
        # MFT: finger i dips during every fourth beat; the dips tile so the
        # composite is a single raised cosine at the beat rate
        dip = 0.5 * (1.0 - self._wave(c))
        which = np.mod(np.floor(c), 4).astype(int)
        out = {}
        for i, label in enumerate(FINGER_TT_LABELS):
            open_mm = spec.baseline + MFT_OPEN_OFFSETS_MM[i]
            out[label] = open_mm - amp * np.where(which == i, dip, 0.0)
        out[TT_ALL] = sum(out[label] for label in FINGER_TT_LABELS)
        return out

    def positions(self, t, schema="markers"):
        """Joint positions (mm, camera frame) at ``t``.

        ``schema='markers'`` yields the physical marker set (WIB/WOB plus the
        task joints); ``'landmarks'`` replaces the wrist markers with WRIST.
        """
        spec = self.spec
        t = np.asarray(t, dtype=float)
        n = t.size
        wb = np.tile(self.origin, (n, 1))
        out = {}
        if schema == "markers":
            half = np.array([_WRIST_HALF_WIDTH_MM, 0.0, 0.0])
            out[WIB] = wb - half
            out[WOB] = wb + half
        else:
            out[WRIST] = wb.copy()
        dist = self.distances(t)
        if spec.task in ("OC", "SOH"):
            out[MT] = wb + dist[MT_WB][:, None] * _DIR_MT
        elif spec.task == "SFT":
            tt = wb + _TT_OFFSET
            out[TT] = tt
            out[IFT] = tt + dist[IFT_TT][:, None] * _DIR_FINGER[IFT]
        else:
            tt = wb + _TT_OFFSET
            out[TT] = tt
            for joint, label in zip(MFT_FINGERS, FINGER_TT_LABELS):
                out[joint] = tt + dist[label][:, None] * _DIR_FINGER[joint]
        if spec.task == "SOH":
            for joint in out:
                out[joint] = out[joint] + SOH_JITTER_MM * self.rng.standard_normal((n, 3))
        return out


def _sample_times(spec):
    n = int(round(spec.duration_s * spec.fps))
    return np.arange(n) / spec.fps


def generate_trial(spec: MotionSpec, system: TrackingSystem = REFERENCE, schema=None) -> Trial:
    """Sample the motion of ``spec`` at ``spec.fps``.

    The reference system carries the physical marker schema; any other system
    gets the landmark schema (WRIST instead of WIB/WOB) unless ``schema`` says
    otherwise. Metadata and the motion parameters ride along in ``extra``.
    """
    model = MotionModel(spec)
    schema = schema or ("markers" if system.is_reference else "landmarks")
    t = _sample_times(spec)
    pos = model.positions(t, schema)
    trajectories = {j: JointTrajectory(j, system, t, p, spec.fps) for j, p in sorted(pos.items())}
    extra = {"motion": _jsonable(asdict(spec)), "schema": schema}
    return Trial(spec.metadata(), system, float(spec.fps), trajectories,
                 DEFAULT_INTRINSICS, trial_id=f"{spec.task}_{spec.subject_id}", extra=extra)


# ---------------------------------------------------------------------------
# degradation

def _task_channels(trial: Trial):
    """``(label, distal joint, anchor positions)`` for every degradable distance."""
    tr = trial.trajectories
    task = trial.metadata.task
    if task in ("OC", "SOH"):
        if WIB in tr and WOB in tr:
            anchor = 0.5 * (tr[WIB].p + tr[WOB].p)
        else:
            anchor = tr[WRIST].p
        return [(MT_WB, MT, anchor)]
    anchor = tr[TT].p
    if task == "SFT":
        return [(IFT_TT, IFT, anchor)]
    return [(label, joint, anchor) for label, joint in zip(FINGER_TT_LABELS, MFT_FINGERS)]


def _dropout_mask(n, rate, fps, rng):
    keep = np.ones(n, dtype=bool)
    n_drop = int(round(rate * n))
    if n_drop == 0:
        return keep
    keep[rng.choice(n, size=n_drop, replace=False)] = False
    # break up missing runs longer than one second
    max_run = max(int(np.floor(fps)) - 1, 1)
    run = 0
    for i in range(n):
        run = run + 1 if not keep[i] else 0
        if run > max_run:
            keep[i] = True
            run = 0
    return keep


def degrade(gold: Trial, spec: DegradationSpec) -> Trial:
    """Apply squeeze, offset, noise, lag shift and dropout, in that order.

    The squeeze contracts each task distance toward the gold trial mean. When
    ``gold`` is itself degraded, the original means stored in its ``extra``
    are reused so successive squeezes compose multiplicatively. The returned
    trial records the degradation in ``extra['degradation']``.
    """
    spec.validate()
    if spec.is_identity:
        extra = dict(gold.extra)
        extra["degradation"] = _jsonable(asdict(spec))
        return replace(gold, extra=extra)

    rng = np.random.default_rng(spec.seed)
    tr = {j: traj.p.copy() for j, traj in gold.trajectories.items()}
    t = gold.trajectories[next(iter(gold.trajectories))].t
    for traj in gold.trajectories.values():
        if not np.array_equal(traj.t, t):
            raise InvalidSpec("degrade needs every joint on the same timestamp grid")

    means = dict(gold.extra.get("channel_means", {}))
    for label, joint, anchor in _task_channels(gold):
        rel = tr[joint] - anchor
        d = np.linalg.norm(rel, axis=1)
        mu = means.setdefault(label, float(np.mean(d)))
        d_new = mu + spec.squeeze_factor * (d - mu)
        d_new = d_new + spec.offset_mm
        if spec.noise_sigma_mm > 0:
            d_new = d_new + spec.noise_sigma_mm * rng.standard_normal(d.size)
        d_new = np.maximum(d_new, _MIN_DISTANCE_MM)
        tr[joint] = anchor + rel * (d_new / d)[:, None]

    n = t.size
    k = int(spec.lag_samples)
    if abs(k) >= n:
        raise InvalidSpec(f"lag of {k} samples exceeds the trial length")
    if k >= 0:
        t_out, sl = t[k:], slice(0, n - k)
    else:
        t_out, sl = t[:n + k], slice(-k, n)
    keep = _dropout_mask(t_out.size, spec.dropout_rate, gold.fps, rng)

    trajectories = {
        j: JointTrajectory(j, gold.system, t_out[keep], p[sl][keep], gold.fps)
        for j, p in tr.items()
    }
    extra = dict(gold.extra)
    extra["channel_means"] = means
    extra["degradation"] = _jsonable(asdict(spec))
    extra["n_dropped_frames"] = int(np.count_nonzero(~keep))
    return replace(gold, trajectories=trajectories, extra=extra)


def landmark_frames(trial: Trial, intrinsics: Intrinsics = None, depth_holes=()):
    """Re-express a landmark-schema trial as 2.5D frames.

    Pixel coordinates come from projecting each joint; ``z_im`` is the joint
    depth relative to the wrist depth. Timestamps listed in ``depth_holes``
    get a missing wrist depth.
    """
    k = intrinsics or trial.intrinsics or DEFAULT_INTRINSICS
    if WRIST not in trial.trajectories:
        raise InvalidSpec("landmark frames need a WRIST trajectory")
    wrist = trial.trajectories[WRIST]
    holes = set(np.round(np.asarray(depth_holes, dtype=float), 9).tolist())
    projected = {}
    for joint, traj in trial.trajectories.items():
        u, v, z = project(traj.p, k)
        projected[joint] = {ti: (ui, vi, zi) for ti, ui, vi, zi in zip(traj.t, u, v, z)}
    frames = []
    for ti, wp in zip(wrist.t, wrist.p):
        d_wrist = float(wp[2])
        lms = {}
        for joint, by_t in projected.items():
            if ti in by_t:
                u, v, z = by_t[ti]
                lms[joint] = (u, v, 0.0 if joint == WRIST else z / d_wrist - 1.0)
        hole = round(float(ti), 9) in holes
        frames.append(LandmarkFrame(float(ti), lms, None if hole else d_wrist, k))
    return frames


# ---------------------------------------------------------------------------
# benchmark suite

PRESETS = {
    "clean": DegradationSpec(),
    "noisy": DegradationSpec(noise_sigma_mm=2.0),
    "lagged": DegradationSpec(noise_sigma_mm=1.0, lag_samples=6),
    "squeezed": DegradationSpec(squeeze_factor=0.5),
    "combined": DegradationSpec(noise_sigma_mm=2.0, offset_mm=12.0, lag_samples=6,
                                squeeze_factor=0.7, dropout_rate=0.05),
    # illustrative only: squeeze magnified with speed, not calibrated to any data
    "speed_squeeze": None,
}
SPEED_SQUEEZE = {75: 0.8, 115: 0.6, 140: 0.45}
SUITE_TEMPO_JITTER = 0.03
SUITE_DURATION_S = 15.0
REFERENCE_FPS = 120.0
CANDIDATE_FPS = 30.0

# (task, bpm, distance band, viewing angle) cells, following the protocol table
SUITE_CELLS = (
    ("OC", 75, "Near_60_80cm", "Frontal"),
    ("OC", 115, "Far_80_100cm", "Frontal"),
    ("OC", 140, "Near_60_80cm", "Frontal"),
    ("SFT", 75, "Near_60_80cm", "Lateral"),
    ("SFT", 115, "Far_80_100cm", "Lateral"),
    ("SFT", 140, "Far_80_100cm", "Frontal"),
    ("MFT", 115, "Near_60_80cm", "Frontal"),
)


@dataclass(frozen=True)
class SuiteEntry:
    trial_id: str
    gold: Trial           # reference system at the reference rate
    degraded: Trial       # candidate system at the candidate rate
    ground_truth: dict = field(repr=False)


def _sub_seed(seed, *keys):
    return int(np.random.SeedSequence([int(seed), *keys]).generate_state(1)[0])


def preset_spec(name, bpm=None, seed=0):
    if name not in PRESETS:
        raise InvalidSpec(f"unknown degradation preset {name!r}")
    if name == "speed_squeeze":
        s = SPEED_SQUEEZE.get(int(bpm), 0.6) if bpm else 0.6
        return DegradationSpec(noise_sigma_mm=1.0, squeeze_factor=s, seed=seed)
    return replace(PRESETS[name], seed=seed)


def make_pair(motion: MotionSpec, degradation: DegradationSpec, trial_id, ref_fps=REFERENCE_FPS,
              cand_fps=CANDIDATE_FPS):
    """Gold reference at ``ref_fps`` and degraded candidate at ``cand_fps`` of one motion."""
    gold = replace(generate_trial(replace(motion, fps=ref_fps), REFERENCE), trial_id=trial_id)
    base = replace(generate_trial(replace(motion, fps=cand_fps), CANDIDATE_RGBD), trial_id=trial_id)
    degraded = degrade(base, degradation)
    model = MotionModel(replace(motion, fps=cand_fps))
    truth = {
        "trial_id": trial_id,
        "motion": _jsonable(asdict(motion)),
        "degradation": _jsonable(asdict(degradation)),
        "reference_fps": ref_fps,
        "candidate_fps": cand_fps,
        "lag_samples": int(degradation.lag_samples),
        "lag_seconds": degradation.lag_samples / cand_fps,
        "offset_mm": float(degradation.offset_mm),
        "squeeze_factor": float(degradation.squeeze_factor),
        "channel_means_mm": degraded.extra.get("channel_means", {}),
        "n_dropped_frames": int(degraded.extra.get("n_dropped_frames", 0)),
        "expected_rom_cm": motion.effective_amplitude / 10.0,
        "expected_f_dom_hz": None if motion.task == "SOH" else motion.bpm / 60.0,
        "n_beats": int(model.beat_times().size) if motion.task != "SOH" else 0,
    }
    if motion.task == "MFT":
        truth["mft_phases"] = {label: f"dips on beats {i} mod 4"
                               for i, label in enumerate(FINGER_TT_LABELS)}
    if motion.task == "SOH":
        truth["hand_length_cm"] = motion.baseline / 10.0
    return SuiteEntry(trial_id, gold, degraded, truth)


def make_benchmark_suite(seed=0, presets=None, duration_s=SUITE_DURATION_S,
                         tempo_jitter=SUITE_TEMPO_JITTER):
    """Deterministic factorial suite of (gold, degraded, ground truth) triples.

    Covers every protocol cell of :data:`SUITE_CELLS` under each degradation
    preset, plus one static open-hand trial. Gold motion carries human-like
    tempo variability so that lag recovery is well posed.
    """
    presets = tuple(PRESETS) if presets is None else tuple(presets)
    entries = []
    for ci, (task, bpm, band, angle) in enumerate(SUITE_CELLS):
        motion_seed = _sub_seed(seed, ci)
        motion = MotionSpec(task=task, bpm=bpm, duration_s=duration_s,
                            excursion_profile=PROTOCOL_EXCURSION[bpm] if task != "MFT" else "Wide",
                            seed=motion_seed, tempo_jitter=tempo_jitter, distance_band=band,
                            viewing_angle=angle, subject_id=f"S{ci:02d}")
        for pi, preset in enumerate(presets):
            deg = preset_spec(preset, bpm, seed=_sub_seed(seed, ci, pi + 1))
            trial_id = f"{task}_{bpm}_{preset}"
            entries.append(make_pair(motion, deg, trial_id))
    soh = MotionSpec(task="SOH", bpm=None, duration_s=5.0, seed=_sub_seed(seed, 99),
                     subject_id="S99")
    entries.append(make_pair(soh, preset_spec("clean", seed=_sub_seed(seed, 99, 1)), "SOH_clean"))
    return entries


def _jsonable(d):
    out = {}
    for k, v in d.items():
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        out[k] = v
    return out
