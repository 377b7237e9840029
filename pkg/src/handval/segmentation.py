"""Repetition segmentation from alternating local extrema.

A segment runs from one retained maximum to the next and encloses exactly one
minimum. Its range of motion is the opening maximum minus that minimum.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import EmptySegmentList, NoExtrema, ProtocolWarning
from .kinematics import TT_ALL, DistanceSeries

__all__ = ["Segment", "SegmentationConfig", "find_extrema", "segment", "segment_parameters"]


@dataclass(frozen=True)
class SegmentationConfig:
    prominence_fraction: float = 0.10
    min_separation: float = 0.2   # seconds
    smoothing_window: int = 0     # samples, 0 disables

    def __post_init__(self):
        if not 0 < self.prominence_fraction < 1:
            raise ValueError("prominence_fraction must lie in (0, 1)")
        if not self.min_separation > 0:
            raise ValueError("min_separation must be positive")
        if self.smoothing_window < 0:
            raise ValueError("smoothing_window must be >= 0")


@dataclass(frozen=True)
class Segment:
    t_start: float
    t_end: float
    idx_max_start: int
    idx_min: int
    idx_max_end: int
    rom: float   # cm
    dur: float   # s


def _smooth(x, window):
    if window <= 1:
        return x
    kernel = np.ones(window) / window
    padded = np.pad(x, (window // 2, window - 1 - window // 2), mode="edge")
    return np.convolve(padded, kernel, mode="valid")


def _zigzag(x, h):
    """Alternating extrema whose swing to each neighbour is at least ``h``.

    Returns a list of ``(index, is_max)``. Plateaus resolve to their leftmost
    sample because candidates only move on strict improvement.
    """
    ext = []
    direction = 0
    imax = imin = 0
    for i in range(1, x.size):
        v = x[i]
        if direction == 0:
            if v > x[imax]:
                imax = i
            if v < x[imin]:
                imin = i
            if x[imax] - v >= h:
                ext.append((imax, True))
                direction, imin = -1, i
            elif v - x[imin] >= h:
                ext.append((imin, False))
                direction, imax = 1, i
        elif direction == 1:
            if v > x[imax]:
                imax = i
            elif x[imax] - v >= h:
                ext.append((imax, True))
                direction, imin = -1, i
        else:
            if v < x[imin]:
                imin = i
            elif v - x[imin] >= h:
                ext.append((imin, False))
                direction, imax = 1, i
    return ext


def _enforce_separation(ext, x, t, min_sep):
    """Merge same-type extrema closer than ``min_sep`` seconds, keeping alternation."""
    changed = True
    while changed:
        changed = False
        for j in range(len(ext) - 2):
            (a, is_max), (b, _) = ext[j], ext[j + 2]
            if t[b] - t[a] >= min_sep:
                continue
            # drop the weaker of the two same-type extrema
            if is_max:
                drop = j + 2 if x[b] <= x[a] else j
            else:
                drop = j + 2 if x[b] >= x[a] else j
            del ext[drop]
            # the two opposite-type neighbours now touch: keep the stronger one
            k = drop - 1 if drop > 0 else 0
            if 0 <= k < len(ext) - 1 and ext[k][1] == ext[k + 1][1]:
                (p, p_max), (q, _) = ext[k], ext[k + 1]
                if p_max:
                    del ext[k + 1 if x[q] <= x[p] else k]
                else:
                    del ext[k + 1 if x[q] >= x[p] else k]
            changed = True
            break
    return ext


def _extrema(series, config):
    x = _smooth(np.asarray(series.d, dtype=float), config.smoothing_window)
    if x.size < 3:
        raise NoExtrema(f"{series.label}: series too short")
    h = config.prominence_fraction * float(np.ptp(x))
    if h <= 0:
        raise NoExtrema(f"{series.label}: constant series")
    ext = [e for e in _zigzag(x, h) if 0 < e[0] < x.size - 1]
    ext = _enforce_separation(ext, x, series.t, config.min_separation)
    maxima = np.array([i for i, is_max in ext if is_max], dtype=int)
    minima = np.array([i for i, is_max in ext if not is_max], dtype=int)
    return maxima, minima


def find_extrema(series: DistanceSeries, config: SegmentationConfig = SegmentationConfig()):
    """Indices of retained ``(maxima, minima)``, strictly alternating in time.

    Each retained extremum differs from its neighbouring extrema by at least
    ``prominence_fraction`` of the global range, and sits at least
    ``min_separation`` seconds from extrema of the same type. Samples at the
    series boundaries are never extrema. Detection runs on the smoothed
    series when ``smoothing_window`` is set.
    """
    maxima, minima = _extrema(series, config)
    if maxima.size < 2:
        raise NoExtrema(f"{series.label}: only {maxima.size} maxima survive the prominence threshold")
    return maxima, minima


def segment(series: DistanceSeries, config: SegmentationConfig = SegmentationConfig(), task=None):
    """Split ``series`` into maximum-to-maximum repetitions.

    ``task`` is only used to flag multi-finger trials segmented on anything
    other than the composite distance.
    """
    if task == "MFT" and series.label != TT_ALL:
        warnings.warn(f"MFT trials are segmented on TT_ALL only, got {series.label}",
                      ProtocolWarning, stacklevel=2)
    maxima, minima = _extrema(series, config)
    if maxima.size == 0:
        raise NoExtrema(f"{series.label}: no maximum survives the prominence threshold")
    d, t = series.d, series.t
    segments = []
    for a, b in zip(maxima[:-1], maxima[1:]):
        inner = minima[(minima > a) & (minima < b)]
        if inner.size != 1:
            continue
        m = int(inner[0])
        segments.append(Segment(
            t_start=float(t[a]), t_end=float(t[b]),
            idx_max_start=int(a), idx_min=m, idx_max_end=int(b),
            rom=float(d[a] - d[m]) / 10.0,
            dur=float(t[b] - t[a]),
        ))
    return segments


def segment_parameters(segments):
    """``(roms_cm, durs_s)`` in segment order."""
    if not segments:
        raise EmptySegmentList("no segments to summarize")
    return [s.rom for s in segments], [s.dur for s in segments]
