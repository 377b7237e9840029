import numpy as np
import pytest
from hypothesis import given, strategies as st

from handval.alignment import align, estimate_lag, remove_vertical_offset, resample
from handval.errors import DegenerateSeries, GridMismatch, InsufficientOverlap, OutOfSpan
from handval.kinematics import IFT_TT
from handval.pipeline import task_distances
from handval.synth import DegradationSpec, MotionSpec, make_pair

from conftest import series, tone


def shifted(x, k):
    """``y[n] = x[n - k]`` with the vacated edge filled from ``x`` itself."""
    return np.roll(x, k)


def random_walk(rng, n=450):
    return 100 + np.cumsum(rng.normal(0, 2, n))


# resample ------------------------------------------------------------------

def test_resample_identity_on_same_grid():
    s = tone(1.25)
    assert resample(s, s.t) is s


def test_resample_reproduces_lines():
    t = np.arange(1200) / 120.0
    out = resample(series(t, fps=120.0), np.arange(300) / 30.0)
    np.testing.assert_allclose(out.d, out.t, atol=1e-12)


def test_resample_sinusoid_error():
    hi = tone(1.25, amp=40, fps=120.0)
    out = resample(hi, np.arange(450) / 30.0)
    exact = 60 + 40 * np.cos(2 * np.pi * 1.25 * out.t)
    assert np.max(np.abs(out.d - exact)) < 0.005 * 40


def test_resample_out_of_span():
    with pytest.raises(OutOfSpan):
        resample(tone(1.25, duration=2.0), np.arange(100) / 30.0)


# estimate_lag ----------------------------------------------------------------

def test_lag_zero_for_identical(rng):
    s = series(random_walk(rng))
    assert estimate_lag(s, s) == 0


def test_lag_six_samples(rng):
    x = random_walk(rng)
    assert estimate_lag(series(x), series(shifted(x, 6))) == 6


def test_lag_negative_with_noise(rng):
    x = random_walk(rng)
    y = shifted(x, -13) + rng.normal(0, 0.05 * np.ptp(x), x.size)
    assert estimate_lag(series(x), series(y)) == -13


def test_lag_requires_common_grid(rng):
    x = random_walk(rng)
    with pytest.raises(GridMismatch):
        estimate_lag(series(x), series(x, fps=29.0))


def test_lag_rejects_constant():
    with pytest.raises(DegenerateSeries):
        estimate_lag(series(np.ones(300)), series(np.ones(300)))


@given(st.integers(-40, 40), st.integers(0, 2**31 - 1))
def test_lag_exact_for_any_shift(k, seed):
    x = random_walk(np.random.default_rng(seed), 300)
    assert estimate_lag(series(x), series(shifted(x, k)), max_lag=40) == k


@given(st.integers(-20, 20), st.floats(-100, 100), st.floats(0.1, 10), st.integers(0, 2**31 - 1))
def test_lag_invariant_to_affine(k, c, a, seed):
    rng = np.random.default_rng(seed)
    x = random_walk(rng, 300)
    y = shifted(x, k) + rng.normal(0, 1, x.size)
    base = estimate_lag(series(x), series(y), 30)
    assert estimate_lag(series(a * x + c), series(y), 30) == base
    assert estimate_lag(series(x), series(a * y + c), 30) == base


# vertical offset -------------------------------------------------------------

def test_offset_examples():
    cand = series([10.0, 20.0, 30.0])
    off, ref = remove_vertical_offset(series([15.0, 25.0, 35.0]), cand)
    assert off == pytest.approx(5.0)
    np.testing.assert_allclose(ref.d, cand.d)
    off, _ = remove_vertical_offset(cand, cand)
    assert off == 0.0
    off, _ = remove_vertical_offset(series([13.0, 25.0, 37.0]), cand)
    assert off == pytest.approx(5.0)


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=30), st.floats(-50, 50))
def test_offset_idempotent(values, c):
    ref = series(np.asarray(values) + c)
    cand = series(values)
    _, once = remove_vertical_offset(ref, cand)
    off2, twice = remove_vertical_offset(once, cand)
    assert abs(off2) < 1e-9
    np.testing.assert_allclose(twice.d, once.d, atol=1e-9)


# align -----------------------------------------------------------------------

def test_align_identity(rng):
    s = series(random_walk(rng))
    res = align(s, s)
    assert res.lag_samples == 0 and res.vertical_offset == 0.0 and res.n_dropped == 0
    np.testing.assert_array_equal(res.aligned_reference.d, s.d)
    np.testing.assert_array_equal(res.aligned_candidate.t, s.t)


def test_align_mean_residual_zero(rng):
    x = random_walk(rng)
    res = align(series(x + 7.0), series(shifted(x, 4) + rng.normal(0, 1, x.size)))
    assert abs(np.mean(res.aligned_reference.d - res.aligned_candidate.d)) < 1e-9
    assert abs(res.lag_samples) <= 60


def test_align_cross_rate_sinusoid():
    res = align(tone(1.25, fps=120.0), tone(1.25, fps=30.0))
    assert res.lag_samples == 0
    assert abs(res.vertical_offset) < 0.1


def test_align_synth_pair_lag_and_offset():
    motion = MotionSpec("SFT", bpm=75, seed=3, tempo_jitter=0.03)
    entry = make_pair(motion, DegradationSpec(lag_samples=6, offset_mm=12.0), "t")
    ref = task_distances(entry.gold)[IFT_TT]
    cand = task_distances(entry.degraded)[IFT_TT]
    res = align(ref, cand)
    assert res.lag_samples == 6
    assert -res.vertical_offset == pytest.approx(12.0, abs=0.1)


def test_align_counts_dropped_frames(rng):
    x = random_walk(rng)
    s = series(x)
    keep = np.ones(x.size, bool)
    keep[[50, 51, 52, 200]] = False
    cand = type(s)(s.label, s.t[keep], s.d[keep], s.system, s.fps)
    res = align(s, cand)
    assert res.lag_samples == 0 and res.n_dropped == 4
    assert len(res.aligned_candidate) == keep.sum()


def test_align_insufficient_overlap():
    with pytest.raises(InsufficientOverlap):
        align(tone(1.25, duration=3.0), tone(1.25, duration=3.0))
