
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial.transform import Rotation

from handval.errors import (DepthHole, GridMismatch, InvalidIntrinsics, NonPhysicalDepth, ProtocolWarning,
                            TooFewSamples, WrongLabels)
from handval.kinematics import (
    IFT_TT, MT_TT, PT_TT, REFERENCE, RFT_TT, TT_ALL, WRIST,
    DistanceSeries, Intrinsics, JointTrajectory, LandmarkFrame, TrackingSystem, TrialMetadata,
    backproject, derive_wb, distance_series, fuse_depth, fuse_depth_value, hand_length, project,
    tt_all, uplift_frame, uplift_frames,
)

K = Intrinsics(fx=600.0, fy=600.0, cx=320.0, cy=240.0)


def traj(points, joint="IFT", fps=30.0):
    p = np.atleast_2d(np.asarray(points, dtype=float))
    return JointTrajectory(joint, REFERENCE, np.arange(len(p)) / fps, p, fps)


def const_traj(point, n=30, joint="IFT", fps=30.0):
    return traj(np.tile(point, (n, 1)), joint, fps)


def frame(d_wrist=600.0, z=0.1, intrinsics=K):
    return LandmarkFrame(0.0, {WRIST: (320.0, 240.0, 0.0), "IFT": (400.0, 200.0, z)}, d_wrist, intrinsics)


# fusion ---------------------------------------------------------------------

def test_fuse_at_wrist_is_wrist_depth():
    assert fuse_depth(frame(600.0), WRIST) == 600.0


def test_fuse_direct_substitution():
    assert abs(fuse_depth_value(500.0, 0.1) - 550.0) <= 1e-12
    assert abs(fuse_depth(frame(500.0, 0.1), "IFT") - 550.0) <= 1e-12


def test_fuse_non_physical():
    with pytest.raises(NonPhysicalDepth):
        fuse_depth(frame(600.0, -1.05), "IFT")


def test_depth_hole_is_not_zero():
    f = frame(None)
    assert not f.has_depth
    with pytest.raises(DepthHole):
        fuse_depth(f, "IFT")
    with pytest.raises(DepthHole):
        uplift_frame(f)


def test_wrist_must_have_zero_relative_depth():
    with pytest.raises(ValueError):
        LandmarkFrame(0.0, {WRIST: (1.0, 1.0, 0.2)}, 600.0, K)


@given(st.floats(1.0, 5000.0), st.floats(-0.9, 2.0), st.floats(0.01, 50.0))
def test_fuse_linear_in_wrist_depth(d, z, k):
    assert fuse_depth_value(k * d, z) == pytest.approx(k * fuse_depth_value(d, z), rel=1e-12)


# geometry -------------------------------------------------------------------

def test_backproject_examples():
    np.testing.assert_allclose(backproject(K.cx, K.cy, 700.0, K), [0, 0, 700])
    np.testing.assert_allclose(backproject(K.cx + K.fx, K.cy, 500.0, K), [500, 0, 500])
    np.testing.assert_allclose(backproject(K.cx + 100, K.cy - 50, 600.0, K), [100, -50, 600])


def test_invalid_intrinsics():
    with pytest.raises(InvalidIntrinsics):
        backproject(1.0, 1.0, 500.0, Intrinsics(0.0, 600.0, 0.0, 0.0))


def test_uplift_all_zero_relative_depth():
    f = LandmarkFrame(0.0, {WRIST: (320.0, 240.0, 0.0), "IFT": (920.0, 240.0, 0.0)}, 650.0, K)
    out = uplift_frame(f)
    np.testing.assert_allclose(out[WRIST], [0, 0, 650])
    np.testing.assert_allclose(out["IFT"], [650, 0, 650])


def test_project_uplift_round_trip(rng):
    for _ in range(20):
        wrist = rng.uniform([-100, -100, 500], [100, 100, 900])
        pts = {WRIST: wrist, **{j: wrist + rng.normal(0, 60, 3) for j in ("IFT", "TT", "MT")}}
        lms = {}
        for j, p in pts.items():
            u, v, z = project(p, K)
            lms[j] = (float(u), float(v), 0.0 if j == WRIST else float(z / wrist[2] - 1.0))
        out = uplift_frame(LandmarkFrame(0.0, lms, float(wrist[2]), K))
        for j, p in pts.items():
            assert np.max(np.abs(out[j] - p)) < 1e-6


def test_uplift_frames_drops_holes():
    frames = [LandmarkFrame(i / 30, {WRIST: (320.0, 240.0, 0.0)}, None if i == 2 else 600.0, K)
              for i in range(5)]
    trajs, holes = uplift_frames(frames, TrackingSystem("candidate_rgbd"), 30.0)
    assert holes == 1
    assert trajs[WRIST].t.size == 4


def test_uplift_skip_invalid_landmark():
    f = LandmarkFrame(0.0, {WRIST: (320.0, 240.0, 0.0), "IFT": (1.0, 1.0, -2.0)}, 600.0, K)
    with pytest.raises(NonPhysicalDepth):
        uplift_frame(f)
    assert set(uplift_frame(f, skip_invalid=True)) == {WRIST}


# WB and distances -------------------------------------------------------------

def test_derive_wb_examples():
    wb = derive_wb(const_traj([0, 0, 0], joint="WIB"), const_traj([2, 0, 0], joint="WOB"))
    np.testing.assert_allclose(wb.p, np.tile([1, 0, 0], (30, 1)))
    wb = derive_wb(const_traj([1, 2, 3]), const_traj([3, 6, 9]))
    np.testing.assert_allclose(wb.p[0], [2, 4, 6])
    p = const_traj([5, -1, 7])
    np.testing.assert_allclose(derive_wb(p, p).p, p.p)


def test_derive_wb_grid_mismatch():
    with pytest.raises(GridMismatch):
        derive_wb(const_traj([0, 0, 0], n=30), const_traj([0, 0, 0], n=31))


def test_distance_examples():
    a = const_traj([0, 0, 0])
    assert np.all(distance_series(a, a, IFT_TT).d == 0)
    np.testing.assert_allclose(distance_series(a, const_traj([3, 4, 0]), IFT_TT).d, 5.0)
    with pytest.raises(WrongLabels):
        distance_series(a, a, "WHATEVER")


def _isometry(rng):
    return Rotation.random(random_state=rng).as_matrix(), rng.normal(0, 300, 3)


def test_distance_isometry_invariant(rng):
    for _ in range(20):
        a, b = traj(rng.normal(0, 100, (50, 3))), traj(rng.normal(0, 100, (50, 3)))
        R, s = _isometry(rng)
        ta, tb = traj(a.p @ R.T + s), traj(b.p @ R.T + s)
        np.testing.assert_allclose(distance_series(ta, tb, MT_TT).d, distance_series(a, b, MT_TT).d,
                                   atol=1e-9)


def test_derive_wb_commutes_with_rigid_transform(rng):
    a, b = traj(rng.normal(0, 100, (20, 3))), traj(rng.normal(0, 100, (20, 3)))
    R, s = _isometry(rng)
    lhs = derive_wb(a, b).p @ R.T + s
    rhs = derive_wb(traj(a.p @ R.T + s), traj(b.p @ R.T + s)).p
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def _four(values):
    t = np.arange(len(values[0])) / 30.0
    return [DistanceSeries(lab, t, v) for lab, v in zip((IFT_TT, MT_TT, RFT_TT, PT_TT), values)]


def test_tt_all_examples():
    n = 10
    assert np.all(tt_all(*_four([np.ones(n)] * 4)).d == 4)
    s = np.linspace(1, 2, n)
    out = tt_all(*_four([np.zeros(n), np.zeros(n), s, np.zeros(n)]))
    assert out.label == TT_ALL
    np.testing.assert_array_equal(out.d, s)
    t = np.arange(300) / 30
    waves = [30 + 10 * np.sin(2 * np.pi * f * t) for f in (1.0, 1.3, 1.7, 2.1)]
    np.testing.assert_allclose(tt_all(*_four(waves)).d, np.sum(waves, axis=0), atol=1e-12)


def test_tt_all_label_order():
    parts = _four([np.ones(5)] * 4)
    with pytest.raises(WrongLabels):
        tt_all(parts[1], parts[0], parts[2], parts[3])


@given(st.lists(st.lists(st.floats(0, 500), min_size=4, max_size=4), min_size=1, max_size=20))
def test_tt_all_dominates_parts(rows):
    cols = np.array(rows).T
    total = tt_all(*_four(list(cols))).d
    assert np.all(total >= cols.max(axis=0) - 1e-9)


# hand length ------------------------------------------------------------------

def test_hand_length_constant():
    assert hand_length(const_traj([0, 180, 0], joint="MT"), const_traj([0, 0, 0], joint="WB")) == \
        pytest.approx(18.0)


def test_hand_length_mean_of_samples():
    mt = traj([[0, 178, 0], [0, 180, 0], [0, 182, 0]], joint="MT", fps=1.0)
    wb = traj([[0, 0, 0]] * 3, joint="WB", fps=1.0)
    assert hand_length(mt, wb) == pytest.approx(18.0)


def test_hand_length_warns_outside_plausible_band():
    with pytest.warns(ProtocolWarning):
        hand_length(const_traj([0, 300, 0], joint="MT"), const_traj([0, 0, 0], joint="WB"))


def test_hand_length_needs_a_second():
    with pytest.raises(TooFewSamples):
        hand_length(const_traj([0, 180, 0], n=10), const_traj([0, 0, 0], n=10))


# data model -------------------------------------------------------------------

def test_trajectory_validation():
    with pytest.raises(ValueError):
        JointTrajectory("IFT", REFERENCE, [0.0, 0.0], np.zeros((2, 3)), 30.0)
    with pytest.raises(ValueError):
        JointTrajectory("IFT", REFERENCE, [0.0, 1.0], [[0, 0, np.nan], [0, 0, 0]], 30.0)


def test_irregular_steps_flagged():
    t = np.array([0.0, 1 / 30, 2 / 30, 4 / 30])
    tr = JointTrajectory("IFT", REFERENCE, t, np.zeros((4, 3)), 30.0)
    assert list(tr.irregular_steps()) == [2]


def test_trajectory_arrays_read_only():
    tr = const_traj([1, 2, 3])
    with pytest.raises(ValueError):
        tr.p[0, 0] = 9.0


def test_protocol_issues_are_reported_not_raised():
    md = TrialMetadata("MFT", 75, "Near_60_80cm", "Frontal")
    assert md.protocol_issues()
    assert not TrialMetadata("MFT", 115, "Near_60_80cm", "Frontal").protocol_issues()
    assert TrialMetadata("OC", 75, "Near_60_80cm", "Lateral").protocol_issues()
    assert TrialMetadata.from_dict(md.to_dict()) == md


def test_tracking_system_roundtrip():
    assert TrackingSystem.parse(str(REFERENCE)) == REFERENCE
    assert REFERENCE.is_reference
