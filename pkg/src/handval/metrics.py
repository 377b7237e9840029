"""Whole-trajectory error metrics and dominant-frequency features."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AllExcluded, BandEmpty, DegenerateSeries, EmptySeries, LengthMismatch, TooShort
from .kinematics import DistanceSeries

__all__ = ["TrajectoryMetrics", "SpectralFeatures", "rmse", "prmse", "pearson",
           "trajectory_metrics", "spectral_features", "DEFAULT_BAND", "DEFAULT_PRMSE_FLOOR_MM",
           "MIN_SPECTRAL_DURATION_S"]

DEFAULT_BAND = (0.5, 4.0)
DEFAULT_PRMSE_FLOOR_MM = 5.0
MIN_SPECTRAL_DURATION_S = 5.0


@dataclass(frozen=True)
class TrajectoryMetrics:
    rmse: float          # cm
    prmse: float         # percent
    pearson_rho: float
    n_samples: int
    n_excluded_prmse: int


@dataclass(frozen=True)
class SpectralFeatures:
    f_dom: float
    pow_dom: float
    band: tuple
    resolution: float


def _values(x):
    return np.asarray(x.d if isinstance(x, DistanceSeries) else x, dtype=float)


def _paired(reference, candidate):
    ref, cand = _values(reference), _values(candidate)
    if ref.shape != cand.shape:
        raise LengthMismatch(f"series lengths differ: {ref.size} vs {cand.size}")
    if ref.size == 0:
        raise EmptySeries("no samples to compare")
    return ref, cand


def rmse(reference, candidate) -> float:
    """Root mean square difference, in cm (inputs in mm)."""
    ref, cand = _paired(reference, candidate)
    return float(np.sqrt(np.mean((ref - cand) ** 2))) / 10.0


def prmse(reference, candidate, floor=DEFAULT_PRMSE_FLOOR_MM):
    """Percentage RMSE relative to the reference, over samples with ``|reference| >= floor``.

    Returns ``(percent, n_excluded)``. Near-zero reference distances (fingers
    in contact) would make the ratio explode, hence the floor.
    """
    if floor < 0:
        raise ValueError("floor must be non-negative")
    ref, cand = _paired(reference, candidate)
    keep = np.abs(ref) >= floor
    if floor == 0:
        keep &= ref != 0
    n_excluded = int(ref.size - keep.sum())
    if not keep.any():
        raise AllExcluded(f"every reference sample is below the {floor} mm floor")
    rel = (ref[keep] - cand[keep]) / ref[keep]
    return float(np.sqrt(np.mean(rel ** 2)) * 100.0), n_excluded


def pearson(reference, candidate) -> float:
    ref, cand = _paired(reference, candidate)
    a = ref - ref.mean()
    b = cand - cand.mean()
    saa, sbb = np.dot(a, a), np.dot(b, b)
    if saa == 0 or sbb == 0:
        raise DegenerateSeries("Pearson correlation undefined for a constant series")
    return float(np.clip(np.dot(a, b) / np.sqrt(saa * sbb), -1.0, 1.0))


def trajectory_metrics(reference, candidate, floor=DEFAULT_PRMSE_FLOOR_MM) -> TrajectoryMetrics:
    pct, excluded = prmse(reference, candidate, floor)
    return TrajectoryMetrics(
        rmse=rmse(reference, candidate),
        prmse=pct,
        pearson_rho=pearson(reference, candidate),
        n_samples=int(_values(reference).size),
        n_excluded_prmse=excluded,
    )


def _uniform(series: DistanceSeries):
    """Values on a uniform grid; gaps from dropped frames are linearly bridged."""
    period = 1.0 / series.fps
    idx = np.rint((series.t - series.t[0]) / period).astype(int)
    if idx.size and idx[-1] + 1 == idx.size:
        return series.d
    grid = series.t[0] + period * np.arange(idx[-1] + 1)
    return np.interp(grid, series.t, series.d)


def spectral_features(series: DistanceSeries, band=DEFAULT_BAND) -> SpectralFeatures:
    """Dominant frequency and its power from the periodogram of the mean-removed series.

    Power is ``|X_k|^2 / N^2`` with a rectangular window, so a unit-amplitude
    sinusoid sitting exactly on a bin reads 0.25.
    """
    f_lo, f_hi = map(float, band)
    if len(series) < 2:
        raise TooShort("need at least two samples")
    fps = series.fps
    if not 0 < f_lo <= f_hi < fps / 2:
        raise BandEmpty(f"band ({f_lo}, {f_hi}) Hz must lie inside (0, {fps / 2:g}) Hz")
    x = _uniform(series)
    n = x.size
    duration = n / fps
    if duration < MIN_SPECTRAL_DURATION_S - 1e-9:
        raise TooShort(f"spectral features need {MIN_SPECTRAL_DURATION_S} s, got {duration:.2f} s")
    spectrum = np.fft.rfft(x - x.mean())
    power = np.abs(spectrum) ** 2 / n ** 2
    freqs = np.fft.rfftfreq(n, d=1.0 / fps)
    in_band = np.flatnonzero((freqs >= f_lo - 1e-12) & (freqs <= f_hi + 1e-12))
    if in_band.size == 0:
        raise BandEmpty(f"no frequency bin inside ({f_lo}, {f_hi}) Hz at resolution {fps / n:.4f} Hz")
    k = in_band[np.argmax(power[in_band])]
    if power[k] <= 1e-20 * max(1.0, float(np.dot(x, x))):
        raise DegenerateSeries("no spectral power inside the band")
    return SpectralFeatures(float(freqs[k]), float(power[k]), (f_lo, f_hi), float(fps / n))
