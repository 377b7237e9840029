import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from handval.errors import EmptySegmentList, NoExtrema, ProtocolWarning
from handval.kinematics import IFT_TT, TT_ALL
from handval.segmentation import SegmentationConfig, find_extrema, segment, segment_parameters

from conftest import series, tone


def test_sine_extrema_count_and_alternation():
    t = np.arange(450) / 30.0
    mx, mn = find_extrema(series(60 + 40 * np.sin(2 * np.pi * 1.25 * t)))
    assert mx.size in (18, 19)
    order = sorted([(i, True) for i in mx] + [(i, False) for i in mn])
    assert all(a[1] != b[1] for a, b in zip(order, order[1:]))


def test_monotone_ramp_has_no_extrema():
    with pytest.raises(NoExtrema):
        find_extrema(series(np.linspace(0, 100, 300)))


def test_ripple_rejected():
    t = np.arange(450) / 30.0
    base = 60 + 40 * np.sin(2 * np.pi * 1.25 * t)
    ripple = 0.4 * np.sin(2 * np.pi * 12.5 * t + 0.3)
    mx_clean, mn_clean = find_extrema(series(base))
    mx, mn = find_extrema(series(base + ripple))
    assert mx.size == mx_clean.size and mn.size == mn_clean.size
    assert np.max(np.abs(mx - mx_clean)) <= 1


@pytest.mark.parametrize("bpm", [75, 115, 140])
def test_sinusoid_segments(bpm):
    f = bpm / 60.0
    segs = segment(tone(f, amp=40.0, base=60.0))
    expected = 15.0 * f
    assert abs(len(segs) - (expected - 1)) <= 1.5
    for s in segs:
        assert s.rom == pytest.approx(8.0, rel=0.02)
        assert abs(s.dur - 1 / f) <= 1 / 30 + 1e-9
        assert s.t_start < s.t_end


def test_triangle_two_cycles():
    x = np.concatenate([np.linspace(60, 100, 11), np.linspace(100, 20, 21)[1:],
                        np.linspace(20, 100, 21)[1:], np.linspace(100, 60, 11)[1:]])
    segs = segment(series(x))
    assert len(segs) == 1
    assert segs[0].rom == pytest.approx(8.0)


def test_single_cycle_gives_no_segments():
    x = np.concatenate([np.linspace(20, 100, 20), np.linspace(100, 20, 20)[1:]])
    assert segment(series(x)) == []
    with pytest.raises(NoExtrema):
        find_extrema(series(x))


def test_zero_maxima_raises():
    x = np.concatenate([np.linspace(100, 20, 20), np.linspace(20, 100, 20)[1:]])
    with pytest.raises(NoExtrema):
        segment(series(x))


def test_segment_parameters():
    segs = segment(tone(1.25))
    roms, durs = segment_parameters(segs[:1])
    assert roms == [segs[0].rom] and durs == [segs[0].dur]
    with pytest.raises(EmptySegmentList):
        segment_parameters([])


def test_mft_subdistance_warns():
    with pytest.warns(ProtocolWarning):
        segment(tone(1.9, label=IFT_TT), task="MFT")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        segment(tone(1.9, label=TT_ALL), task="MFT")


def test_min_separation_merges_close_peaks():
    # a notch splits each peak into two maxima 0.1 s apart
    t = np.arange(450) / 30.0
    x = 60 + 40 * np.cos(2 * np.pi * 1.0 * t) - 12 * np.exp(-((t % 1.0) - 0.0) ** 2 / 0.001)
    close = segment(series(x), SegmentationConfig(min_separation=0.05))
    merged = segment(series(x), SegmentationConfig(min_separation=0.4))
    assert len(merged) < len(close)
    assert all(abs(s.dur - 1.0) < 0.15 for s in merged)


def test_config_validation():
    with pytest.raises(ValueError):
        SegmentationConfig(prominence_fraction=0.0)
    with pytest.raises(ValueError):
        SegmentationConfig(min_separation=0.0)


def _wobbly(seed, n=300):
    rng = np.random.default_rng(seed)
    t = np.arange(n) / 30.0
    return 60 + 30 * np.sin(2 * np.pi * 1.3 * t + rng.uniform(0, 6)) + rng.normal(0, 3, n)


@given(st.integers(0, 10_000))
def test_extrema_alternate_and_count(seed):
    s = series(_wobbly(seed))
    mx, mn = find_extrema(s)
    order = sorted([(i, 1) for i in mx] + [(i, 0) for i in mn])
    assert all(a[1] != b[1] for a, b in zip(order, order[1:]))
    segs = segment(s)
    assert len(segs) == mx.size - 1
    assert sum(x.dur for x in segs) <= s.duration
    assert all(x.rom >= 0 for x in segs)


@given(st.integers(0, 10_000), st.floats(-50, 50), st.floats(0.1, 10))
def test_segment_shift_and_scale(seed, c, k):
    x = _wobbly(seed)
    base = segment(series(x))
    shifted = segment(series(x + c))
    scaled = segment(series(k * x))
    assert [s.idx_max_start for s in shifted] == [s.idx_max_start for s in base]
    assert [s.dur for s in scaled] == [s.dur for s in base]
    np.testing.assert_allclose([s.rom for s in scaled], [k * s.rom for s in base], rtol=1e-9)
