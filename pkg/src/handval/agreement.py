"""Two-system agreement on paired parameters: Bland-Altman, Lin's CCC, ICC(2,1).

``x`` is always the reference system and ``y`` the candidate.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import DegenerateInput, TooFewPairs

__all__ = ["BlandAltman", "AgreementCoefficient", "AgreementReport", "bland_altman", "ccc",
           "icc", "agreement_report", "paired", "LOA_MULTIPLIER", "CCC_HIGH", "ICC_HIGH",
           "ICC_FORM"]

LOA_MULTIPLIER = 1.96
CCC_HIGH = 0.8
ICC_HIGH = 0.75
ICC_FORM = "ICC(2,1): two-way random effects, absolute agreement, single rater"
_Z975 = stats.norm.ppf(0.975)


@dataclass(frozen=True)
class BlandAltman:
    bias: float
    sd_diff: float
    loa_low: float
    loa_high: float
    pct_within: float
    pairs: int
    points: tuple = field(default=(), repr=False)   # (mean, diff) per pair


@dataclass(frozen=True)
class AgreementCoefficient:
    kind: str
    value: float
    ci_low: float
    ci_high: float
    n: int
    p_value: float = None
    high_agreement: bool = False


@dataclass(frozen=True)
class AgreementReport:
    parameter: str
    bland_altman: BlandAltman
    icc: AgreementCoefficient
    ccc: AgreementCoefficient
    n_dropped: int = 0


def paired(x, y):
    """Listwise deletion of pairs with a missing side. Returns ``(x, y, n_dropped)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"expected two 1-D vectors of equal length, got {x.shape} and {y.shape}")
    ok = np.isfinite(x) & np.isfinite(y)
    return x[ok], y[ok], int(np.count_nonzero(~ok))


def _require(n, minimum=3):
    if n < minimum:
        raise TooFewPairs(f"need at least {minimum} pairs, got {n}")


def bland_altman(x, y) -> BlandAltman:
    x, y, _ = paired(x, y)
    _require(x.size)
    diffs = y - x
    bias = float(diffs.mean())
    sd = float(diffs.std(ddof=1))
    lo, hi = bias - LOA_MULTIPLIER * sd, bias + LOA_MULTIPLIER * sd
    # inclusive bounds, with a hair of slack for rounding at the limits
    slack = 1e-12 * max(1.0, abs(lo), abs(hi))
    within = np.count_nonzero((diffs >= lo - slack) & (diffs <= hi + slack))
    points = tuple(zip(((x + y) / 2).tolist(), diffs.tolist()))
    return BlandAltman(bias, sd, lo, hi, 100.0 * within / x.size, int(x.size), points)


def ccc(x, y) -> AgreementCoefficient:
    """Lin's concordance correlation with a Fisher-z 95% interval.

    Moments use the n denominator. The standard error of z follows Lin (1989).
    """
    x, y, _ = paired(x, y)
    n = x.size
    _require(n)
    mx, my = x.mean(), y.mean()
    vx, vy = x.var(), y.var()
    if vx == 0 or vy == 0:
        raise DegenerateInput("CCC undefined when either vector is constant")
    sxy = np.mean((x - mx) * (y - my))
    denom = vx + vy + (mx - my) ** 2
    value = float(np.clip(2 * sxy / denom, -1.0, 1.0))
    r = sxy / np.sqrt(vx * vy)

    if abs(value) >= 1.0 - 1e-15:
        lo = hi = value
    else:
        # bias-correction factor C_b = ccc / r, written to avoid dividing by r
        cb = 2 * np.sqrt(vx * vy) / denom
        u2 = (mx - my) ** 2 / np.sqrt(vx * vy)
        c2 = value ** 2
        one_minus_c2 = 1.0 - c2
        var_z = ((1 - r ** 2) * cb ** 2 / one_minus_c2
                 + 2 * c2 * cb * (1 - value) * u2 / one_minus_c2 ** 2
                 - c2 * cb ** 2 * u2 ** 2 / (2 * one_minus_c2 ** 2)) / (n - 2)
        z = np.arctanh(value)
        se = np.sqrt(max(var_z, 0.0))
        lo, hi = float(np.tanh(z - _Z975 * se)), float(np.tanh(z + _Z975 * se))
    return AgreementCoefficient("CCC", value, min(lo, value), max(hi, value), int(n),
                                None, value >= CCC_HIGH)


def _anova_two_way(data):
    """Mean squares for an ``n x k`` subjects-by-raters table without replication."""
    n, k = data.shape
    grand = data.mean()
    ss_rows = k * np.sum((data.mean(axis=1) - grand) ** 2)
    ss_cols = n * np.sum((data.mean(axis=0) - grand) ** 2)
    ss_total = np.sum((data - grand) ** 2)
    ss_err = max(ss_total - ss_rows - ss_cols, 0.0)
    return ss_rows / (n - 1), ss_cols / (k - 1), ss_err / ((n - 1) * (k - 1))


def icc(x, y) -> AgreementCoefficient:
    """ICC(2,1) with the McGraw & Wong F-based 95% interval.

    The p-value tests ICC = 0 with ``F = MSR / MSE`` on ``(n-1, (n-1)(k-1))``
    degrees of freedom.
    """
    x, y, _ = paired(x, y)
    n = x.size
    _require(n)
    k = 2
    data = np.column_stack([x, y])
    msr, msc, mse = _anova_two_way(data)
    # guard against ulp-level residue in perfectly agreeing tables
    scale = max(msr, msc, 1e-300)
    if mse < 1e-13 * scale:
        mse = 0.0
    if msc < 1e-13 * scale:
        msc = 0.0
    if msr == 0:
        raise DegenerateInput("ICC undefined when there is no between-subject variance")

    value = (msr - mse) / (msr + (k - 1) * mse + k * (msc - mse) / n)
    df1, df2 = n - 1, (n - 1) * (k - 1)
    p_value = 0.0 if mse == 0 else float(stats.f.sf(msr / mse, df1, df2))

    if mse == 0 and msc == 0:
        lo = hi = 1.0
    else:
        a = k * value / (n * (1 - value))
        b = 1 + k * value * (n - 1) / (n * (1 - value))
        num = (a * msc + b * mse) ** 2
        den = (a * msc) ** 2 / (k - 1) + (b * mse) ** 2 / ((n - 1) * (k - 1))
        v = num / den
        f_lo = stats.f.ppf(0.975, n - 1, v)
        f_hi = stats.f.ppf(0.975, v, n - 1)
        lo = n * (msr - f_lo * mse) / (f_lo * (k * msc + (k * n - k - n) * mse) + n * msr)
        hi = n * (f_hi * msr - mse) / (k * msc + (k * n - k - n) * mse + n * f_hi * msr)
    value = float(value)
    return AgreementCoefficient("ICC", value, float(min(lo, value)), float(min(max(hi, value), 1.0)),
                                int(n), p_value, value >= ICC_HIGH)


def agreement_report(parameter, x, y) -> AgreementReport:
    """Bland-Altman, ICC and CCC for one parameter (ROM, DUR, F_DOM or POW_DOM)."""
    xs, ys, dropped = paired(x, y)
    return AgreementReport(parameter, bland_altman(xs, ys), icc(xs, ys), ccc(xs, ys), dropped)
