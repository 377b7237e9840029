"""Per-trial validation and cohort aggregation."""
from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .agreement import ICC_FORM, agreement_report
from .alignment import DEFAULT_MAX_LAG, AlignmentResult, align
from .errors import (
    EmptyInput,
    HandValError,
    MissingJoint,
    ParseError,
    ProtocolWarning,
    TaskMismatch,
)
from .fileio import file_digest, parse_trajectory_file
from .kinematics import (
    FINGER_TT_LABELS,
    IFT,
    IFT_TT,
    MT,
    MT_TT,
    MT_WB,
    PT,
    PT_TT,
    RFT,
    RFT_TT,
    TT,
    TT_ALL,
    WIB,
    WOB,
    WRIST,
    DistanceSeries,
    Trial,
    common_grid,
    derive_wb,
    distance_series,
    hand_length,
    tt_all,
)
from .metrics import (
    DEFAULT_BAND,
    DEFAULT_PRMSE_FLOOR_MM,
    SpectralFeatures,
    TrajectoryMetrics,
    spectral_features,
    trajectory_metrics,
)
from .segmentation import SegmentationConfig, segment

__all__ = ["PipelineConfig", "LabelResult", "TrialReport", "CohortReport", "task_distances",
           "run_validation", "aggregate", "run_cohort", "TASK_LABELS", "SEGMENT_LABEL",
           "PARAMETERS", "DEFAULT_STRATA"]

TASK_LABELS = {
    "OC": (MT_WB,),
    "SFT": (IFT_TT,),
    "MFT": (IFT_TT, MT_TT, RFT_TT, PT_TT, TT_ALL),
    "SOH": (MT_WB,),
}
SEGMENT_LABEL = {"OC": MT_WB, "SFT": IFT_TT, "MFT": TT_ALL}
PARAMETERS = ("ROM", "DUR", "F_DOM", "POW_DOM")
DEFAULT_STRATA = ("task", "speed_bpm", "distance_band", "viewing_angle")


@dataclass(frozen=True)
class PipelineConfig:
    max_lag: int = DEFAULT_MAX_LAG
    prmse_floor_mm: float = DEFAULT_PRMSE_FLOOR_MM
    band: tuple = DEFAULT_BAND
    segmentation: SegmentationConfig = SegmentationConfig()

    def to_dict(self):
        return {
            "max_lag": int(self.max_lag),
            "prmse_floor_mm": float(self.prmse_floor_mm),
            "band": [float(b) for b in self.band],
            "segmentation": asdict(self.segmentation),
        }

    @classmethod
    def from_dict(cls, d):
        seg = d.get("segmentation", {})
        return cls(
            max_lag=int(d.get("max_lag", DEFAULT_MAX_LAG)),
            prmse_floor_mm=float(d.get("prmse_floor_mm", DEFAULT_PRMSE_FLOOR_MM)),
            band=tuple(float(b) for b in d.get("band", DEFAULT_BAND)),
            segmentation=SegmentationConfig(**seg),
        )

    def config_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class LabelResult:
    label: str
    lag_samples: int
    lag_seconds: float
    vertical_offset_mm: float
    n_dropped: int
    metrics: TrajectoryMetrics
    spectral_reference: Optional[SpectralFeatures]
    spectral_candidate: Optional[SpectralFeatures]
    alignment: AlignmentResult = field(repr=False, default=None)


@dataclass
class TrialReport:
    trial_id: str
    metadata: dict
    reference_system: str
    candidate_system: str
    labels: dict = field(default_factory=dict)            # label -> LabelResult
    segment_label: Optional[str] = None
    segments_reference: list = field(default_factory=list)
    segments_candidate: list = field(default_factory=list)
    parameters: dict = field(default_factory=dict)        # name -> (ref values, cand values)
    hand_length_cm: dict = field(default_factory=dict)    # system -> cm, SOH only
    warnings: list = field(default_factory=list)
    inputs: dict = field(default_factory=dict)            # role -> {path, sha256}
    distances: dict = field(default_factory=dict, repr=False)

    @property
    def task(self):
        return self.metadata["task"]

    @property
    def primary(self) -> Optional[LabelResult]:
        return self.labels.get(self.segment_label) if self.segment_label else None


@dataclass
class CohortReport:
    trials: list
    agreement: dict        # task -> parameter -> AgreementReport or None
    unavailable: dict      # task -> parameter -> reason
    strata: list
    strata_keys: tuple
    warnings: list
    provenance: dict


# ---------------------------------------------------------------------------

def _wrist(trial: Trial):
    tr = trial.trajectories
    if WIB in tr and WOB in tr:
        return derive_wb(*common_grid(tr[WIB], tr[WOB]))
    if WRIST in tr:
        return tr[WRIST]
    raise MissingJoint(f"trial {trial.trial_id or '?'} has neither WIB/WOB markers nor a WRIST landmark")


def _pair(trial, a, b, label):
    ja = trial.joint(a) if isinstance(a, str) else a
    jb = trial.joint(b) if isinstance(b, str) else b
    return distance_series(*common_grid(ja, jb), label)


def task_distances(trial: Trial):
    """Every distance series the trial's task is assessed on, keyed by label."""
    task = trial.metadata.task
    if task in ("OC", "SOH"):
        return {MT_WB: _pair(trial, MT, _wrist(trial), MT_WB)}
    if task == "SFT":
        return {IFT_TT: _pair(trial, IFT, TT, IFT_TT)}
    subs = {label: _pair(trial, joint, TT, label)
            for label, joint in zip(FINGER_TT_LABELS, (IFT, MT, RFT, PT))}
    # restrict to timestamps shared by all four before summing
    shared = subs[IFT_TT].t
    for s in subs.values():
        shared = np.intersect1d(shared, s.t)
    subs = {k: s if np.array_equal(s.t, shared) else
            DistanceSeries(k, shared, s.d[np.isin(s.t, shared)], s.system, s.fps)
            for k, s in subs.items()}
    out = dict(subs)
    out[TT_ALL] = tt_all(*(subs[k] for k in FINGER_TT_LABELS))
    return out


def _load(trial_or_path, role, inputs):
    if isinstance(trial_or_path, Trial):
        return trial_or_path
    path = Path(trial_or_path)
    trial = parse_trajectory_file(path)
    inputs[role] = {"path": path.name, "sha256": file_digest(path)}
    return trial


def run_validation(reference, candidate, config: PipelineConfig = PipelineConfig(),
                   trial_id=None) -> TrialReport:
    """Validate one candidate trial against its reference.

    Steps: task distances, alignment, whole-trajectory metrics, spectral
    features, then segmentation of the task's primary distance and ordinal
    pairing of segments. ``reference`` and ``candidate`` may be
    :class:`Trial` objects or trajectory file paths.
    """
    inputs = {}
    try:
        ref = _load(reference, "reference", inputs)
        cand = _load(candidate, "candidate", inputs)
    except ParseError as exc:
        if not trial_id or exc.trial_id:
            raise
        raise type(exc)(exc.reason, exc.line, exc.path, trial_id) from exc
    trial_id = trial_id or ref.trial_id or cand.trial_id or "trial"
    if ref.metadata.task != cand.metadata.task:
        raise TaskMismatch(f"trial {trial_id}: reference task {ref.metadata.task} "
                           f"!= candidate task {cand.metadata.task}")
    task = ref.metadata.task
    report = TrialReport(trial_id, ref.metadata.to_dict(), str(ref.system), str(cand.system),
                         inputs=inputs)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ProtocolWarning)
        for issue in ref.metadata.protocol_issues():
            warnings.warn(issue, ProtocolWarning)
        if ref.metadata.to_dict() != cand.metadata.to_dict():
            warnings.warn("reference and candidate metadata differ beyond the task", ProtocolWarning)
        for tr_name, tr in (("reference", ref), ("candidate", cand)):
            holes = tr.extra.get("depth_hole_frames", 0)
            if holes:
                warnings.warn(f"{tr_name}: {holes} frames dropped for wrist depth holes", ProtocolWarning)
        try:
            if task == "SOH":
                _run_static(report, ref, cand)
            else:
                _run_dynamic(report, ref, cand, config)
        except ParseError:
            raise
        except HandValError as exc:
            raise type(exc)(f"trial {trial_id}: {exc}") from exc
    for w in caught:
        if issubclass(w.category, ProtocolWarning):
            report.warnings.append(str(w.message))
        else:
            warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    return report


def _run_static(report, ref, cand):
    for name, trial in (("reference", ref), ("candidate", cand)):
        wrist = _wrist(trial)
        mt, wb = common_grid(trial.joint(MT), wrist)
        report.hand_length_cm[name] = hand_length(mt, wb)


def _run_dynamic(report, ref, cand, config):
    task = ref.metadata.task
    ref_d = task_distances(ref)
    cand_d = task_distances(cand)
    report.distances = {"reference": ref_d, "candidate": cand_d}
    for label in TASK_LABELS[task]:
        result = align(ref_d[label], cand_d[label], max_lag=config.max_lag)
        metrics = trajectory_metrics(result.aligned_reference, result.aligned_candidate,
                                     floor=config.prmse_floor_mm)
        if metrics.n_excluded_prmse:
            warnings.warn(f"{label}: {metrics.n_excluded_prmse} samples below the "
                          f"{config.prmse_floor_mm:g} mm PRMSE floor excluded", ProtocolWarning)
        if result.n_dropped:
            warnings.warn(f"{label}: {result.n_dropped} missing candidate frames dropped from both "
                          f"series", ProtocolWarning)
        spec_ref = spec_cand = None
        try:
            spec_ref = spectral_features(result.aligned_reference, config.band)
            spec_cand = spectral_features(result.aligned_candidate, config.band)
        except HandValError as exc:
            warnings.warn(f"{label}: spectral features unavailable ({exc})", ProtocolWarning)
        report.labels[label] = LabelResult(label, result.lag_samples, result.lag_seconds,
                                           result.vertical_offset, result.n_dropped, metrics,
                                           spec_ref, spec_cand, result)

    seg_label = SEGMENT_LABEL[task]
    report.segment_label = seg_label
    primary = report.labels[seg_label]
    # identical configuration for both systems, on the aligned pair
    seg_ref = segment(primary.alignment.aligned_reference, config.segmentation, task)
    seg_cand = segment(primary.alignment.aligned_candidate, config.segmentation, task)
    report.segments_reference, report.segments_candidate = seg_ref, seg_cand
    n = min(len(seg_ref), len(seg_cand))
    if len(seg_ref) != len(seg_cand):
        warnings.warn(f"{seg_label}: segment counts differ (reference {len(seg_ref)}, candidate "
                      f"{len(seg_cand)}); pairing truncated to {n}", ProtocolWarning)
    report.parameters["ROM"] = ([s.rom for s in seg_ref[:n]], [s.rom for s in seg_cand[:n]])
    report.parameters["DUR"] = ([s.dur for s in seg_ref[:n]], [s.dur for s in seg_cand[:n]])
    if primary.spectral_reference and primary.spectral_candidate:
        report.parameters["F_DOM"] = ([primary.spectral_reference.f_dom],
                                      [primary.spectral_candidate.f_dom])
        report.parameters["POW_DOM"] = ([primary.spectral_reference.pow_dom],
                                        [primary.spectral_candidate.pow_dom])


# ---------------------------------------------------------------------------

def _mean_sd(values):
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    sd = float(values.std(ddof=1)) if values.size >= 2 else None
    return {"n": int(values.size), "mean": mean, "sd": sd}


def aggregate(reports, strata_keys=DEFAULT_STRATA, config: PipelineConfig = PipelineConfig()):
    """Pool segment- and trial-level parameters per task and summarize strata.

    Agreement statistics pool every paired segment (ROM, DUR) or trial
    (F_DOM, POW_DOM) of a task. Strata rows give the mean and SD across
    trials of RMSE, PRMSE and rho on each trial's primary distance; the SD
    is ``None`` for strata with a single trial. PRMSE is averaged per trial,
    not pooled per sample.
    """
    reports = list(reports)
    if not reports:
        raise EmptyInput("no trial reports to aggregate")
    warn = []
    for r in reports:
        warn.extend(f"{r.trial_id}: {w}" for w in r.warnings)

    agreement, unavailable = {}, {}
    for task in sorted({r.task for r in reports}):
        task_reports = [r for r in reports if r.task == task and r.parameters]
        if not task_reports:
            continue
        agreement[task], unavailable[task] = {}, {}
        for param in PARAMETERS:
            xs, ys = [], []
            for r in task_reports:
                if param in r.parameters:
                    xs.extend(r.parameters[param][0])
                    ys.extend(r.parameters[param][1])
            try:
                agreement[task][param] = agreement_report(param, xs, ys)
            except HandValError as exc:
                unavailable[task][param] = str(exc)
                warn.append(f"{task} {param}: agreement unavailable ({exc})")

    cells = {}
    for r in reports:
        if r.primary is None:
            continue
        key = tuple(r.metadata.get(k) for k in strata_keys)
        cells.setdefault(key, []).append(r.primary.metrics)
    strata = []
    for key in sorted(cells, key=lambda k: tuple("" if v is None else str(v) for v in k)):
        ms = cells[key]
        strata.append({
            "keys": dict(zip(strata_keys, key)),
            "n": len(ms),
            "rmse_cm": _mean_sd([m.rmse for m in ms]),
            "prmse_pct": _mean_sd([m.prmse for m in ms]),
            "pearson_rho": _mean_sd([m.pearson_rho for m in ms]),
        })

    inputs = {}
    for r in reports:
        for role, meta in r.inputs.items():
            inputs[f"{r.trial_id}/{role}"] = meta
    provenance = {
        "tool": "handval",
        "version": __version__,
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "icc_form": ICC_FORM,
        "prmse_aggregation": "per-trial PRMSE, then mean and SD across trials of a stratum",
        "inputs": inputs,
    }
    return CohortReport(reports, agreement, unavailable, strata, tuple(strata_keys), warn, provenance)


def load_manifest(path):
    path = Path(path)
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read manifest ({exc})", None, path) from None
    base = path.parent
    entries = []
    if not isinstance(manifest, dict) or not isinstance(manifest.get("trials", []), list):
        raise ParseError("manifest must be an object with a 'trials' list", None, path)
    for i, item in enumerate(manifest.get("trials", [])):
        try:
            entries.append((str(item.get("trial_id", f"trial{i:03d}")),
                            base / item["reference"], base / item["candidate"]))
        except (KeyError, TypeError, AttributeError):
            raise ParseError(f"trial entry {i} needs 'reference' and 'candidate' paths", None, path) from None
    return entries


def run_cohort(manifest_path, config: PipelineConfig = PipelineConfig(), strata_keys=DEFAULT_STRATA):
    """Validate every trial listed in a manifest and aggregate the results."""
    entries = load_manifest(manifest_path)
    if not entries:
        raise EmptyInput(f"manifest {manifest_path} lists no trials")
    reports = [run_validation(ref, cand, config, trial_id=tid) for tid, ref, cand in entries]
    return aggregate(reports, strata_keys, config)
