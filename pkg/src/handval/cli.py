"""Command-line entry point: ``handval validate | cohort | synth | segment``.

Exit codes: 0 on success, 1 for validation-level errors, 2 for parse and
configuration errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError, HandValError, ParseError
from .fileio import parse_trajectory_file, write_trajectory_file
from .pipeline import SEGMENT_LABEL, PipelineConfig, aggregate, run_cohort, run_validation, task_distances
from .report import FORMATS, emit, render
from .segmentation import segment
from .synth import (
    PRESETS,
    DegradationSpec,
    MotionSpec,
    landmark_frames,
    make_benchmark_suite,
    make_pair,
)

CONFIG_ENV = "HANDVAL_CONFIG"


def load_config(path=None) -> PipelineConfig:
    """Read a TOML config; falls back to ``$HANDVAL_CONFIG``, then defaults.

    Recognised tables: ``[alignment] max_lag``, ``[metrics] prmse_floor_mm,
    band`` and ``[segmentation] prominence_fraction, min_separation,
    smoothing_window``. The same keys are also accepted at top level.
    """
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return PipelineConfig()
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    flat = {}
    for key, value in raw.items():
        if key in ("alignment", "metrics") and isinstance(value, dict):
            flat.update(value)
        elif key != "segmentation":
            flat[key] = value
    unknown = set(flat) - {"max_lag", "prmse_floor_mm", "band"}
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    flat["segmentation"] = raw.get("segmentation", {})
    try:
        return PipelineConfig.from_dict(flat)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _config_from_args(args) -> PipelineConfig:
    cfg = load_config(getattr(args, "config", None))
    seg = cfg.segmentation
    try:
        if getattr(args, "max_lag", None) is not None:
            cfg = replace(cfg, max_lag=args.max_lag)
        if getattr(args, "prmse_floor", None) is not None:
            cfg = replace(cfg, prmse_floor_mm=args.prmse_floor)
        if getattr(args, "band", None) is not None:
            cfg = replace(cfg, band=tuple(args.band))
        if getattr(args, "prominence", None) is not None:
            seg = replace(seg, prominence_fraction=args.prominence)
        if getattr(args, "min_separation", None) is not None:
            seg = replace(seg, min_separation=args.min_separation)
        if getattr(args, "smoothing", None) is not None:
            seg = replace(seg, smoothing_window=args.smoothing)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return replace(cfg, segmentation=seg)


def _add_config_flags(p, segmentation_only=False):
    p.add_argument("--config", help=f"TOML config file (default: ${CONFIG_ENV})")
    if not segmentation_only:
        p.add_argument("--max-lag", type=int, help="lag search window, candidate samples")
        p.add_argument("--prmse-floor", type=float, help="PRMSE reference floor, mm")
        p.add_argument("--band", type=float, nargs=2, metavar=("LO", "HI"),
                       help="voluntary movement band, Hz")
    p.add_argument("--prominence", type=float, help="extremum prominence, fraction of range")
    p.add_argument("--min-separation", type=float, help="same-type extremum spacing, s")
    p.add_argument("--smoothing", type=int, help="moving-average window, samples")


def _formats(text):
    fmts = [f.strip() for f in text.split(",") if f.strip()]
    bad = [f for f in fmts if f not in FORMATS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown format(s) {bad}; choose from {FORMATS}")
    return fmts


def _output(report, args):
    if args.out:
        for fmt in args.format:
            emit(report, fmt, args.out)
        if args.debug and "plotdata" not in args.format:
            emit(report, "plotdata", Path(args.out) / "debug")
    else:
        sys.stdout.write(render(report, "json")["report.json"])


def cmd_validate(args):
    config = _config_from_args(args)
    report = run_validation(args.reference, args.candidate, config,
                            trial_id=args.trial_id or Path(args.candidate).stem)
    _output(aggregate([report], config=config), args)
    return 0


def cmd_cohort(args):
    config = _config_from_args(args)
    _output(run_cohort(args.manifest, config), args)
    return 0


def _read_spec_file(path):
    path = Path(path)
    try:
        if path.suffix == ".json":
            raw = json.loads(path.read_text(encoding="utf-8"))
        else:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"{path}: cannot read synthesis spec ({exc})") from None
    try:
        motion = MotionSpec(**raw["motion"])
        degradation = DegradationSpec(**raw.get("degradation", {}))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{path}: invalid synthesis spec ({exc})") from None
    return motion, degradation, raw.get("trial_id", path.stem)


def write_entries(entries, out, candidate_schema="landmark"):
    """Write reference/candidate files, ground-truth sidecars and a manifest."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"version": 1, "trials": []}
    for e in entries:
        ref_name, cand_name, truth_name = (f"{e.trial_id}_reference.csv", f"{e.trial_id}_candidate.csv",
                                           f"{e.trial_id}_truth.json")
        write_trajectory_file(e.gold, out / ref_name)
        if candidate_schema == "landmark":
            write_trajectory_file(e.degraded, out / cand_name, "landmark", landmark_frames(e.degraded))
        else:
            write_trajectory_file(e.degraded, out / cand_name)
        (out / truth_name).write_text(json.dumps(e.ground_truth, sort_keys=True, indent=2) + "\n",
                                      encoding="utf-8")
        manifest["trials"].append({"trial_id": e.trial_id, "reference": ref_name,
                                   "candidate": cand_name, "ground_truth": truth_name})
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n",
                                       encoding="utf-8")
    return out / "manifest.json"


def cmd_synth(args):
    target = args.target
    if target == "suite":
        entries = make_benchmark_suite(args.seed)
    elif target in PRESETS:
        entries = make_benchmark_suite(args.seed, presets=[target])
    else:
        motion, degradation, trial_id = _read_spec_file(target)
        entries = [make_pair(motion, degradation, trial_id)]
    manifest = write_entries(entries, args.out, args.candidate_schema)
    print(manifest)
    return 0


def cmd_segment(args):
    config = _config_from_args(args)
    trial = parse_trajectory_file(args.file)
    task = trial.metadata.task
    label = args.label or SEGMENT_LABEL.get(task)
    if label is None:
        raise HandValError(f"{args.file}: no segmentation distance for task {task}")
    distances = task_distances(trial)
    if label not in distances:
        raise HandValError(f"{args.file}: label {label} not available for task {task}")
    segments = segment(distances[label], config.segmentation, task)
    lines = ["index,t_start_s,t_end_s,rom_cm,dur_s"]
    lines += [f"{i},{s.t_start:.6g},{s.t_end:.6g},{s.rom:.6g},{s.dur:.6g}" for i, s in enumerate(segments)]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="handval", description="Validate markerless hand tracking against a reference system.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="compare one candidate trial with its reference")
    p.add_argument("reference")
    p.add_argument("candidate")
    p.add_argument("--trial-id")
    p.add_argument("--out", help="output directory (default: JSON to stdout)")
    p.add_argument("--format", type=_formats, default=["json", "csv_tables"],
                   help="comma-separated: json, csv_tables, plotdata")
    p.add_argument("--debug", action="store_true", help="also write aligned intermediates")
    _add_config_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("cohort", help="validate every trial in a manifest and pool the results")
    p.add_argument("manifest")
    p.add_argument("--out")
    p.add_argument("--format", type=_formats, default=["json", "csv_tables"])
    p.add_argument("--debug", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=cmd_cohort)

    p = sub.add_parser("synth", help="write synthetic trials: 'suite', a preset name, or a spec file")
    p.add_argument("target")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--candidate-schema", choices=("landmark", "position"), default="landmark")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("segment", help="segment the task distance of one trajectory file")
    p.add_argument("file")
    p.add_argument("--label")
    p.add_argument("--out")
    _add_config_flags(p, segmentation_only=True)
    p.set_defaults(func=cmd_segment)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ConfigError) as exc:
        _report_error(exc)
        return 2
    except HandValError as exc:
        _report_error(exc)
        return 1


def _report_error(exc):
    print(f"handval: error: {exc}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
