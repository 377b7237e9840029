"""Trajectory files: one JSON header line followed by CSV rows.

Two row schemas exist. ``position`` rows carry 3D coordinates in mm::

    t_s,joint,x_mm,y_mm,z_mm

``landmark`` rows carry 2.5D tracker output that is uplifted on load::

    t_s,joint,u_px,v_px,z_im,d_wrist_mm

A missing wrist depth is written as ``hole``. Floats are written with
``repr`` so a write/read cycle is lossless.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path

import numpy as np

from .errors import ParseError, SchemaMismatch, VersionUnsupported
from .kinematics import (
    WB,
    Intrinsics,
    JointTrajectory,
    LandmarkFrame,
    TrackingSystem,
    Trial,
    TrialMetadata,
    uplift_frames,
)

__all__ = ["FORMAT_NAME", "FORMAT_VERSION", "SCHEMAS", "parse_trajectory_file", "parse_trajectory_text",
           "format_trajectory_file", "write_trajectory_file", "file_digest", "HOLE"]

FORMAT_NAME = "handval-trajectory"
FORMAT_VERSION = 1
SUPPORTED_VERSIONS = (1,)
SCHEMAS = {
    "position": ("t_s", "joint", "x_mm", "y_mm", "z_mm"),
    "landmark": ("t_s", "joint", "u_px", "v_px", "z_im", "d_wrist_mm"),
}
HOLE = "hole"


def _num(text, what, line, path):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{what} {text!r} is not a number", line, path) from None
    if not np.isfinite(value):
        raise ParseError(f"{what} is not finite", line, path)
    return value


def _parse_header(first, path):
    try:
        header = json.loads(first)
    except json.JSONDecodeError as exc:
        raise ParseError(f"header is not valid JSON ({exc.msg})", 1, path) from None
    if not isinstance(header, dict):
        raise ParseError("header must be a JSON object", 1, path)
    if header.get("format") != FORMAT_NAME:
        raise ParseError(f"not a {FORMAT_NAME} file", 1, path)
    if "version" not in header:
        raise ParseError("header lacks the mandatory version field", 1, path)
    if header["version"] not in SUPPORTED_VERSIONS:
        raise VersionUnsupported(f"unsupported format version {header['version']!r}", 1, path)
    for key in ("schema", "system", "fps", "metadata"):
        if key not in header:
            raise ParseError(f"header lacks {key!r}", 1, path)
    if header["schema"] not in SCHEMAS:
        raise SchemaMismatch(f"unknown row schema {header['schema']!r}", 1, path)
    return header


def parse_trajectory_text(text, path=None, skip_invalid=False):
    """Parse file contents into a :class:`Trial`. Landmark files come back uplifted."""
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty file", 1, path)
    header = _parse_header(lines[0], path)
    schema = header["schema"]
    columns = SCHEMAS[schema]
    if len(lines) < 2:
        raise ParseError("missing column header", 2, path)
    got = tuple(c.strip() for c in lines[1].split(","))
    if got != columns:
        other = [name for name, cols in SCHEMAS.items() if cols == got]
        reason = (f"column header is the {other[0]!r} schema but the header declares {schema!r}"
                  if other else f"expected columns {','.join(columns)}, got {lines[1]!r}")
        raise SchemaMismatch(reason, 2, path)

    try:
        system = TrackingSystem.parse(header["system"])
        fps = float(header["fps"])
        metadata = TrialMetadata.from_dict(header["metadata"])
        intrinsics = Intrinsics(**header["intrinsics"]) if header.get("intrinsics") else None
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"invalid header: {exc}", 1, path) from None
    if not fps > 0:
        raise ParseError("fps must be positive", 1, path)
    if schema == "landmark" and intrinsics is None:
        raise ParseError("landmark files need camera intrinsics in the header", 1, path)

    last_t = {}
    rows = {}
    reader = csv.reader(lines[2:])
    for offset, fields in enumerate(reader):
        line = offset + 3
        if not fields:
            raise ParseError("blank row", line, path)
        if len(fields) != len(columns):
            raise ParseError(f"expected {len(columns)} fields, got {len(fields)}", line, path)
        t = _num(fields[0], "timestamp", line, path)
        joint = fields[1].strip()
        if not joint:
            raise ParseError("empty joint name", line, path)
        if joint == WB:
            raise ParseError("WB is derived from WIB/WOB and may not appear in input", line, path)
        if joint in last_t and t <= last_t[joint]:
            raise ParseError(f"non-monotone timestamp {t} for joint {joint}", line, path)
        last_t[joint] = t
        if schema == "position":
            values = tuple(_num(f, c, line, path) for f, c in zip(fields[2:], columns[2:]))
        else:
            u, v, z = (_num(f, c, line, path) for f, c in zip(fields[2:5], columns[2:5]))
            dw = fields[5].strip()
            values = (u, v, z, None if dw == HOLE else _num(dw, "d_wrist_mm", line, path))
        rows.setdefault(joint, []).append((t, values, line))

    trial_id = str(header.get("trial_id", ""))
    if schema == "position":
        trajectories = {}
        for joint, samples in sorted(rows.items()):
            ts = np.array([s[0] for s in samples])
            ps = np.array([s[1] for s in samples]).reshape(-1, 3)
            trajectories[joint] = JointTrajectory(joint, system, ts, ps, fps)
        extra = {"schema": "position"}
    else:
        frames = _landmark_frames(rows, intrinsics, path)
        trajectories, holes = uplift_frames(frames, system, fps, skip_invalid=skip_invalid)
        trajectories = dict(sorted(trajectories.items()))
        extra = {"schema": "landmark", "depth_hole_frames": holes}
    return Trial(metadata, system, fps, trajectories, intrinsics, trial_id, extra)


def _landmark_frames(rows, intrinsics, path):
    by_t = {}
    for joint, samples in rows.items():
        for t, (u, v, z, dw), line in samples:
            entry = by_t.setdefault(t, [dw, {}, line])
            if entry[0] != dw:
                raise ParseError(f"rows at t={t} disagree on d_wrist_mm", line, path)
            entry[1][joint] = (u, v, z)
    frames = []
    for t in sorted(by_t):
        dw, lms, line = by_t[t]
        try:
            frames.append(LandmarkFrame(t, lms, dw, intrinsics))
        except ValueError as exc:
            raise ParseError(str(exc), line, path) from None
    return frames


def parse_trajectory_file(path, skip_invalid=False) -> Trial:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read file ({exc.strerror})", None, path) from None
    return parse_trajectory_text(text, path, skip_invalid=skip_invalid)


def _header(trial: Trial, schema, intrinsics):
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "schema": schema,
        "system": str(trial.system),
        "fps": float(trial.fps),
        "intrinsics": intrinsics.to_dict() if intrinsics else None,
        "metadata": trial.metadata.to_dict(),
        "trial_id": trial.trial_id,
    }


def format_trajectory_file(trial: Trial, schema="position", frames=None) -> str:
    """Serialize ``trial``. For the landmark schema pass its 2.5D ``frames``."""
    buf = io.StringIO()
    intrinsics = trial.intrinsics
    if schema == "landmark":
        if frames is None:
            raise ValueError("landmark output needs the frames to write")
        intrinsics = frames[0].intrinsics if frames else intrinsics
    elif schema != "position":
        raise ValueError(f"unknown schema {schema!r}")
    buf.write(json.dumps(_header(trial, schema, intrinsics), sort_keys=True) + "\n")
    buf.write(",".join(SCHEMAS[schema]) + "\n")
    r = repr
    if schema == "position":
        rows = []
        for joint in sorted(trial.trajectories):
            traj = trial.trajectories[joint]
            for t, p in zip(traj.t.tolist(), traj.p.tolist()):
                rows.append((t, joint, p))
        rows.sort(key=lambda row: (row[0], row[1]))
        for t, joint, (x, y, z) in rows:
            buf.write(f"{r(t)},{joint},{r(x)},{r(y)},{r(z)}\n")
    else:
        for frame in frames:
            dw = HOLE if frame.d_wrist is None else r(float(frame.d_wrist))
            for joint in sorted(frame.landmarks):
                u, v, z = frame.landmarks[joint]
                buf.write(f"{r(float(frame.t))},{joint},{r(u)},{r(v)},{r(z)},{dw}\n")
    return buf.getvalue()


def write_trajectory_file(trial: Trial, path, schema="position", frames=None):
    path = Path(path)
    path.write_text(format_trajectory_file(trial, schema, frames), encoding="utf-8")
    return path


def file_digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
