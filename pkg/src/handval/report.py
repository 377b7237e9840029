"""Deterministic serialization of validation reports.

Three output flavours: a JSON report, CSV tables mirroring the agreement
tables (lower bound, value, upper bound per coefficient), and plot-ready CSV
data. Floats are written at 6 significant digits and keys are sorted, so
identical inputs give identical bytes.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from .errors import IoError
from .pipeline import CohortReport, TrialReport, aggregate

__all__ = ["FORMATS", "AGREEMENT_HEADER", "report_to_dict", "render", "emit"]

FORMATS = ("json", "csv_tables", "plotdata")
AGREEMENT_HEADER = ("parameter", "ICC_low", "ICC", "ICC_high", "CCC_low", "CCC", "CCC_high")


def _num(x):
    if x is None:
        return None
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(f"{x:.6g}")


def _cell(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return "" if not math.isfinite(x) else f"{x:.6g}"
    return str(x)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    try:
        return _num(obj)
    except (TypeError, ValueError):
        return str(obj)


def _coef(c):
    d = {"value": c.value, "ci_low": c.ci_low, "ci_high": c.ci_high, "n": c.n,
         "high_agreement": bool(c.high_agreement)}
    if c.kind == "ICC":
        d["p_value"] = c.p_value
    return d


def _spectral(s):
    if s is None:
        return None
    return {"f_dom_hz": s.f_dom, "pow_dom": s.pow_dom, "band_hz": list(s.band),
            "resolution_hz": s.resolution}


def _trial_dict(r: TrialReport):
    labels = {}
    for label, res in r.labels.items():
        m = res.metrics
        labels[label] = {
            "lag_samples": res.lag_samples,
            "lag_seconds": res.lag_seconds,
            "vertical_offset_mm": res.vertical_offset_mm,
            "n_dropped": res.n_dropped,
            "metrics": {"rmse_cm": m.rmse, "prmse_pct": m.prmse, "pearson_rho": m.pearson_rho,
                        "n": m.n_samples, "n_excluded_prmse": m.n_excluded_prmse},
            "spectral": {"reference": _spectral(res.spectral_reference),
                         "candidate": _spectral(res.spectral_candidate)},
        }
    n_paired = len(r.parameters["ROM"][0]) if "ROM" in r.parameters else 0
    return {
        "trial_id": r.trial_id,
        "metadata": r.metadata,
        "systems": {"reference": r.reference_system, "candidate": r.candidate_system},
        "labels": labels,
        "segment_label": r.segment_label,
        "segments": {"reference": len(r.segments_reference), "candidate": len(r.segments_candidate),
                     "paired": n_paired},
        "hand_length_cm": r.hand_length_cm or None,
        "warnings": list(r.warnings),
    }


def report_to_dict(report):
    if isinstance(report, TrialReport):
        report = aggregate([report])
    agreement = {}
    for task, params in report.agreement.items():
        agreement[task] = {}
        for name, a in params.items():
            ba = a.bland_altman
            agreement[task][name] = {
                "n": ba.pairs,
                "n_dropped": a.n_dropped,
                "bland_altman": {"bias": ba.bias, "sd_diff": ba.sd_diff, "loa_low": ba.loa_low,
                                 "loa_high": ba.loa_high, "pct_within": ba.pct_within, "n": ba.pairs},
                "icc": _coef(a.icc),
                "ccc": _coef(a.ccc),
            }
    return _clean({
        "provenance": report.provenance,
        "agreement": agreement,
        "unavailable": report.unavailable,
        "strata_keys": list(report.strata_keys),
        "strata": report.strata,
        "trials": [_trial_dict(r) for r in report.trials],
        "warnings": report.warnings,
    })


def _csv(rows, header):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _safe(name):
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in str(name))


def _tables(report: CohortReport):
    files = {}
    rows = []
    for r in report.trials:
        md = r.metadata
        for label, res in r.labels.items():
            m = res.metrics
            sr, sc = res.spectral_reference, res.spectral_candidate
            rows.append([r.trial_id, md["task"], md["speed_bpm"], md["distance_band"],
                         md["viewing_angle"], label, res.lag_samples, res.lag_seconds,
                         res.vertical_offset_mm, m.n_samples, m.rmse, m.prmse, m.n_excluded_prmse,
                         m.pearson_rho, sr and sr.f_dom, sc and sc.f_dom, sr and sr.pow_dom,
                         sc and sc.pow_dom])
    files["trials.csv"] = _csv(rows, [
        "trial_id", "task", "speed_bpm", "distance_band", "viewing_angle", "label", "lag_samples",
        "lag_seconds", "vertical_offset_mm", "n", "rmse_cm", "prmse_pct", "n_excluded_prmse",
        "pearson_rho", "f_dom_ref_hz", "f_dom_cand_hz", "pow_dom_ref", "pow_dom_cand"])

    rows = []
    for r in report.trials:
        for system, segs in (("reference", r.segments_reference), ("candidate", r.segments_candidate)):
            for i, s in enumerate(segs):
                rows.append([r.trial_id, r.segment_label, system, i, s.t_start, s.t_end, s.rom, s.dur])
    files["segments.csv"] = _csv(rows, ["trial_id", "label", "system", "index", "t_start_s",
                                        "t_end_s", "rom_cm", "dur_s"])

    ba_rows = []
    for task, params in report.agreement.items():
        rows = []
        for name, a in params.items():
            rows.append([name, a.icc.ci_low, a.icc.value, a.icc.ci_high,
                         a.ccc.ci_low, a.ccc.value, a.ccc.ci_high])
            ba = a.bland_altman
            ba_rows.append([task, name, ba.pairs, ba.bias, ba.sd_diff, ba.loa_low, ba.loa_high,
                            ba.pct_within])
        files[f"agreement_{_safe(task)}.csv"] = _csv(rows, AGREEMENT_HEADER)
    files["bland_altman.csv"] = _csv(ba_rows, ["task", "parameter", "n", "bias", "sd_diff",
                                               "loa_low", "loa_high", "pct_within"])

    rows = []
    for s in report.strata:
        rows.append([s["keys"][k] for k in report.strata_keys] + [
            s["n"], s["rmse_cm"]["mean"], s["rmse_cm"]["sd"], s["prmse_pct"]["mean"],
            s["prmse_pct"]["sd"], s["pearson_rho"]["mean"], s["pearson_rho"]["sd"]])
    files["strata.csv"] = _csv(rows, list(report.strata_keys) + [
        "n", "rmse_cm_mean", "rmse_cm_sd", "prmse_pct_mean", "prmse_pct_sd", "rho_mean", "rho_sd"])

    rows = [[r.trial_id, system, cm] for r in report.trials
            for system, cm in sorted(r.hand_length_cm.items())]
    if rows:
        files["hand_length.csv"] = _csv(rows, ["trial_id", "system", "hand_length_cm"])
    return files


def _plotdata(report: CohortReport):
    files = {}
    for r in report.trials:
        for label, res in r.labels.items():
            if res.alignment is None:
                continue
            ar, ac = res.alignment.aligned_reference, res.alignment.aligned_candidate
            rows = zip(ar.t.tolist(), ar.d.tolist(), ac.d.tolist())
            files[f"plot_{_safe(r.trial_id)}_{label}.csv"] = _csv(rows, ["t", "ref_d", "cand_d"])
    for task, params in report.agreement.items():
        for name, a in params.items():
            files[f"ba_{_safe(task)}_{name}.csv"] = _csv(a.bland_altman.points, ["mean", "diff"])
    return files


def render(report, fmt):
    """Output files for ``fmt`` as a ``{filename: text}`` mapping."""
    if isinstance(report, TrialReport):
        report = aggregate([report])
    if fmt == "json":
        return {"report.json": json.dumps(report_to_dict(report), sort_keys=True, indent=2) + "\n"}
    if fmt == "csv_tables":
        return _tables(report)
    if fmt == "plotdata":
        return _plotdata(report)
    raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")


def emit(report, fmt, out_dir):
    """Write the ``fmt`` rendering of ``report`` under ``out_dir``; returns the paths."""
    out_dir = Path(out_dir)
    paths = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, text in sorted(render(report, fmt).items()):
            path = out_dir / name
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            paths.append(path)
    except OSError as exc:
        raise IoError(f"cannot write {fmt} output to {out_dir}: {exc.strerror}") from None
    return paths
