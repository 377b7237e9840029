import json

import numpy as np
import pytest

from handval.errors import ParseError, SchemaMismatch, VersionUnsupported
from handval.fileio import (file_digest, format_trajectory_file, parse_trajectory_file,
                            parse_trajectory_text, write_trajectory_file)
from handval.kinematics import CANDIDATE_RGBD, WRIST
from handval.synth import DegradationSpec, MotionSpec, degrade, generate_trial, landmark_frames


def sft(system=None, **kw):
    spec = MotionSpec("SFT", fps=30, duration_s=6, **kw)
    return generate_trial(spec, system) if system else generate_trial(spec)


def assert_same_trial(a, b, atol=0.0):
    assert a.metadata == b.metadata and a.system == b.system and a.fps == b.fps
    assert a.trial_id == b.trial_id and set(a.trajectories) == set(b.trajectories)
    for j in a.trajectories:
        np.testing.assert_array_equal(a.trajectories[j].t, b.trajectories[j].t)
        np.testing.assert_allclose(a.trajectories[j].p, b.trajectories[j].p, rtol=0, atol=atol)


def test_position_round_trip_is_exact(tmp_path):
    trial = degrade(sft(), DegradationSpec(noise_sigma_mm=2, dropout_rate=0.1, seed=4))
    path = write_trajectory_file(trial, tmp_path / "x.csv")
    back = parse_trajectory_file(path)
    assert_same_trial(trial, back)
    assert format_trajectory_file(back) == path.read_text()


def test_landmark_file_is_uplifted(tmp_path):
    cand = sft(CANDIDATE_RGBD)
    frames = landmark_frames(cand, depth_holes=[cand.trajectories[WRIST].t[5]])
    path = write_trajectory_file(cand, tmp_path / "c.csv", "landmark", frames)
    back = parse_trajectory_file(path)
    assert back.extra["depth_hole_frames"] == 1
    keep = np.ones(len(cand.trajectories[WRIST].t), bool)
    keep[5] = False
    for j, tr in cand.trajectories.items():
        np.testing.assert_allclose(back.trajectories[j].p, tr.p[keep], atol=1e-6)
    assert "hole" in path.read_text().splitlines()[2 + 5 * len(cand.trajectories)]


def _text(trial=None):
    return format_trajectory_file(trial or sft())


def _with_header(text, **changes):
    lines = text.splitlines(keepends=True)
    header = json.loads(lines[0])
    header.update(changes)
    return json.dumps(header) + "\n" + "".join(lines[1:])


def test_unsupported_version():
    with pytest.raises(VersionUnsupported) as err:
        parse_trajectory_text(_with_header(_text(), version=2), "f.csv")
    assert "f.csv: line 1" in str(err.value)


def test_missing_version():
    lines = _text().splitlines(keepends=True)
    header = json.loads(lines[0])
    del header["version"]
    with pytest.raises(ParseError, match="version"):
        parse_trajectory_text(json.dumps(header) + "\n" + "".join(lines[1:]))


def test_schema_mismatch():
    with pytest.raises(SchemaMismatch, match="landmark"):
        parse_trajectory_text(_with_header(_text(), schema="landmark"))
    with pytest.raises(SchemaMismatch):
        parse_trajectory_text(_with_header(_text(), schema="quaternion"))


@pytest.mark.parametrize("bad,reason", [
    ("0.5,IFT,abc,1,2", "not a number"),
    ("0.5,IFT,1,2", "expected 5 fields"),
    ("0.5,WB,1,2,3", "WB"),
    ("0.5,IFT,nan,1,2", "not finite"),
])
def test_bad_rows_name_the_line(bad, reason):
    lines = _text().splitlines()
    lines[4] = bad
    with pytest.raises(ParseError, match=reason) as err:
        parse_trajectory_text("\n".join(lines), "trial.csv")
    assert err.value.line == 5
    assert "trial.csv: line 5" in str(err.value)


def test_non_monotone_timestamps():
    lines = _text().splitlines()
    first_ift = next(i for i, l in enumerate(lines) if ",IFT," in l)
    later = next(i for i, l in enumerate(lines) if ",IFT," in l and i > first_ift)
    lines[later] = lines[first_ift]
    with pytest.raises(ParseError, match="non-monotone"):
        parse_trajectory_text("\n".join(lines))


def test_not_json_header():
    with pytest.raises(ParseError, match="line 1"):
        parse_trajectory_text("t_s,joint\n")


def test_missing_file(tmp_path):
    with pytest.raises(ParseError, match="cannot read"):
        parse_trajectory_file(tmp_path / "nope.csv")


def test_digest_stable(tmp_path):
    p = write_trajectory_file(sft(), tmp_path / "a.csv")
    q = write_trajectory_file(sft(), tmp_path / "b.csv")
    assert file_digest(p) == file_digest(q)
