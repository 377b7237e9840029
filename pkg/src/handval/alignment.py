"""Temporal and amplitude alignment of a candidate distance series to the reference.

Order of operations in :func:`align`: the reference is resampled onto the
candidate's nominal grid, the integer lag is found by normalized
cross-correlation, both series are cropped to their overlap, and finally the
mean vertical offset is subtracted from the reference.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSeries,
    GridMismatch,
    InsufficientOverlap,
    LengthMismatch,
    OutOfSpan,
)
from .kinematics import DistanceSeries

__all__ = ["AlignmentResult", "resample", "estimate_lag", "remove_vertical_offset", "align",
           "DEFAULT_MAX_LAG", "MIN_OVERLAP_S"]

DEFAULT_MAX_LAG = 60
MIN_OVERLAP_S = 5.0


@dataclass(frozen=True)
class AlignmentResult:
    vertical_offset: float
    lag_samples: int
    lag_seconds: float
    aligned_reference: DistanceSeries
    aligned_candidate: DistanceSeries
    n_dropped: int = 0


def resample(series: DistanceSeries, target_grid) -> DistanceSeries:
    """Linear interpolation of ``series`` at ``target_grid``; ends are clamped."""
    target = np.asarray(target_grid, dtype=float)
    if len(series) == 0:
        raise OutOfSpan("cannot resample an empty series")
    period = 1.0 / series.fps
    lo, hi = series.t[0] - period, series.t[-1] + period
    if target.size and (target[0] < lo - 1e-9 or target[-1] > hi + 1e-9):
        raise OutOfSpan(f"target grid [{target[0]:.4f}, {target[-1]:.4f}] s exceeds source span "
                        f"[{series.t[0]:.4f}, {series.t[-1]:.4f}] s by more than one period")
    if target.shape == series.t.shape and np.array_equal(target, series.t):
        return series
    fps = float(1.0 / np.median(np.diff(target))) if target.size > 1 else series.fps
    d = np.interp(target, series.t, series.d)
    return DistanceSeries(series.label, target, d, series.system, fps)


def _lag_scores(ref, cand, max_lag):
    """Correlation coefficient over the overlap for each lag in ``-max_lag..max_lag``.

    NaNs mark missing samples and are excluded pairwise. A positive lag ``k``
    pairs ``cand[n]`` with ``ref[n - k]``.
    """
    n = ref.size
    lags = np.arange(-max_lag, max_lag + 1)
    scores = np.full(lags.size, -np.inf)
    for i, k in enumerate(lags):
        if k >= 0:
            a, b = ref[:n - k], cand[k:]
        else:
            a, b = ref[-k:], cand[:n + k]
        ok = np.isfinite(a) & np.isfinite(b)
        if ok.sum() < 3:
            continue
        a = a[ok] - a[ok].mean()
        b = b[ok] - b[ok].mean()
        denom = np.sqrt(np.dot(a, a) * np.dot(b, b))
        if denom > 0:
            scores[i] = np.dot(a, b) / denom
    return lags, scores


def _best_lag(lags, scores):
    # ties (up to rounding) go to the smallest |lag|; matters for periodic inputs
    best = np.max(scores)
    if not np.isfinite(best):
        raise DegenerateSeries("no lag leaves enough overlapping samples")
    tied = lags[scores >= best - 1e-9]
    return int(tied[np.lexsort((tied, np.abs(tied)))[0]])


def _check_lag_inputs(ref, cand, max_lag):
    if ref.size != cand.size:
        raise LengthMismatch(f"series lengths differ: {ref.size} vs {cand.size}")
    if max_lag < 0:
        raise ValueError("max_lag must be non-negative")
    if ref.size <= 2 * max_lag:
        raise ValueError(f"series of length {ref.size} too short for max_lag={max_lag}")
    for name, x in (("reference", ref), ("candidate", cand)):
        x = x[np.isfinite(x)]
        if x.size < 2 or np.ptp(x) == 0:
            raise DegenerateSeries(f"{name} series has zero variance")


def estimate_lag(reference: DistanceSeries, candidate: DistanceSeries, max_lag=DEFAULT_MAX_LAG) -> int:
    """Integer lag (in samples) of ``candidate`` behind ``reference``.

    The lag maximizes the normalized cross-correlation of the mean-removed
    series over their overlap. Positive values mean the candidate is late.
    """
    if reference.t.shape != candidate.t.shape or not np.allclose(reference.t, candidate.t, atol=1e-9):
        raise GridMismatch("estimate_lag needs both series on a common grid; resample first")
    ref, cand = reference.d, candidate.d
    _check_lag_inputs(ref, cand, max_lag)
    return _best_lag(*_lag_scores(ref, cand, max_lag))


def remove_vertical_offset(reference: DistanceSeries, candidate: DistanceSeries):
    """Return ``(offset, shifted_reference)`` with ``offset = mean(reference - candidate)``.

    The reference is the series that moves: physical markers sit on top of the
    virtual joints, so the reference carries the constant excess.
    """
    if len(reference) != len(candidate):
        raise LengthMismatch(f"series lengths differ: {len(reference)} vs {len(candidate)}")
    if len(reference) == 0:
        raise LengthMismatch("empty series")
    offset = float(np.mean(reference.d - candidate.d))
    return offset, reference.with_values(reference.d - offset)


def _nominal_grid(series: DistanceSeries):
    """Place ``series`` on a uniform grid at its nominal rate; gaps become NaN."""
    period = 1.0 / series.fps
    idx = np.rint((series.t - series.t[0]) / period).astype(int)
    if np.any(np.diff(idx) <= 0):
        raise GridMismatch(f"{series.label}: samples do not sit on a {series.fps:g} Hz grid")
    grid = series.t[0] + period * np.arange(idx[-1] + 1)
    values = np.full(grid.size, np.nan)
    values[idx] = series.d
    grid[idx] = series.t
    return grid, values


def align(reference: DistanceSeries, candidate: DistanceSeries, max_lag=DEFAULT_MAX_LAG,
          min_overlap_s=MIN_OVERLAP_S) -> AlignmentResult:
    """Remove lag and vertical offset between a reference and a candidate series.

    Candidate samples missing from its nominal grid (dropped frames) are
    excluded pairwise; the count is reported as ``n_dropped``. The aligned
    pair lives on the candidate's timestamps.
    """
    if len(reference) < 2 or len(candidate) < 2:
        raise InsufficientOverlap("need at least two samples per series")
    grid, cand = _nominal_grid(candidate)
    fps = candidate.fps

    inside = (grid >= reference.t[0] - 1e-9) & (grid <= reference.t[-1] + 1e-9)
    if not inside.any():
        raise InsufficientOverlap("reference and candidate spans do not overlap")
    first, last = np.flatnonzero(inside)[[0, -1]]
    grid, cand = grid[first:last + 1], cand[first:last + 1]
    if grid.size / fps < min_overlap_s:
        raise InsufficientOverlap(f"overlap {grid.size / fps:.2f} s is shorter than {min_overlap_s} s")
    ref = resample(reference, grid).d

    max_lag = int(min(max_lag, (grid.size - 1) // 2))
    _check_lag_inputs(ref, cand, max_lag)
    lag = _best_lag(*_lag_scores(ref, cand, max_lag))

    n = grid.size
    if lag >= 0:
        ref_c, cand_c, t_c = ref[:n - lag], cand[lag:], grid[lag:]
    else:
        ref_c, cand_c, t_c = ref[-lag:], cand[:n + lag], grid[:n + lag]
    ok = np.isfinite(cand_c)
    n_dropped = int(np.count_nonzero(~ok))
    if ok.sum() / fps < min_overlap_s:
        raise InsufficientOverlap("too little overlap left after lag correction")

    aligned_ref = DistanceSeries(reference.label, t_c[ok], ref_c[ok], reference.system, fps)
    aligned_cand = DistanceSeries(candidate.label, t_c[ok], cand_c[ok], candidate.system, fps)
    offset, shifted = remove_vertical_offset(aligned_ref, aligned_cand)
    return AlignmentResult(offset, lag, lag / fps, shifted, aligned_cand, n_dropped)
