"""Relative fatigue risk and distribution-weighted hazard expectations.

Risk scales inversely with effectiveness (risk = b / E with b calibrated
at 79.6 +/- 3.0%), so risk curves follow directly from fitted
effectiveness curves. Monthly hazard-area expectations weight the fitted
hazard parabola by each month's WOCL-operation distribution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .lsq import FitResult, curve_covariance, predict_with_ci, propagate_ratio
from .timebase import MINUTES_PER_DAY


@dataclass(frozen=True)
class RiskParam:
    b: float = 79.6
    sigma_b: float = 3.0

    def __post_init__(self):
        if self.b <= 0:
            raise ValueError("risk scale b must be positive")


DEFAULT_RISK = RiskParam()


def relative_risk(effectiveness, param: RiskParam = DEFAULT_RISK):
    """Relative probability of a fatigue-related mishap at a given
    effectiveness score (percent in (0, 100])."""
    e = np.asarray(effectiveness, dtype=float)
    if np.any(e <= 0) or np.any(e > 100):
        raise ValueError("effectiveness must lie in (0, 100]")
    out = param.b / e
    return float(out) if np.isscalar(effectiveness) else out


def rfr_vs_nightshifts(fit: FitResult, x, param: RiskParam = DEFAULT_RISK):
    """Risk curve b/f(x) from a fitted effectiveness curve.

    The 95% band propagates the curve sigma and sigma_b independently.
    Returns (rfr, ci_low, ci_high) as arrays (scalars for scalar x).
    """
    y, sigma_f, _, _ = predict_with_ci(fit, np.atleast_1d(x))
    if np.any(y <= 0):
        raise ValueError("fitted effectiveness is non-positive on the requested range")
    rfr = param.b / y
    var = (param.sigma_b / y) ** 2 + (param.b * sigma_f / y ** 2) ** 2
    half = 2.0 * np.sqrt(var)
    lo, hi = rfr - half, rfr + half
    if np.isscalar(x):
        return float(rfr[0]), float(lo[0]), float(hi[0])
    return rfr, lo, hi


def rfr_ratio(fit: FitResult, x_hi: float, x_lo: float) -> tuple[float, float]:
    """RFR(x_hi)/RFR(x_lo) = f(x_lo)/f(x_hi); b cancels exactly, so only the
    curve covariance enters the uncertainty."""
    f_lo, s_lo, _, _ = predict_with_ci(fit, x_lo)
    f_hi, s_hi, _, _ = predict_with_ci(fit, x_hi)
    if f_lo <= 0 or f_hi <= 0:
        raise ValueError("fitted effectiveness is non-positive at the ratio points")
    cov = curve_covariance(fit, x_lo, x_hi)
    return propagate_ratio(f_lo, s_lo, f_hi, s_hi, cov)


@dataclass(frozen=True)
class WoclDistribution:
    """Normalized monthly distribution of WOCL-operation counts; index i
    holds the number of rosters with i operations."""

    label: str
    counts: tuple[int, ...]

    def __post_init__(self):
        if not self.counts or any(c < 0 for c in self.counts):
            raise ValueError("counts must be non-negative and non-empty")
        if sum(self.counts) <= 0:
            raise ValueError("distribution has no events")

    @property
    def total(self) -> int:
        return sum(self.counts)

    def weights(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.total

    def weight_sigmas(self) -> np.ndarray:
        """Counting uncertainty W/sqrt(n) per bin; zero for empty bins."""
        n = np.asarray(self.counts, dtype=float)
        w = self.weights()
        return np.divide(w, np.sqrt(n), out=np.zeros_like(w), where=n > 0)

    @classmethod
    def from_values(cls, label: str, values: Sequence[int]) -> "WoclDistribution":
        vmax = max(values)
        counts = [0] * (vmax + 1)
        for v in values:
            if v < 0:
                raise ValueError("negative count")
            counts[v] += 1
        return cls(label, tuple(counts))


@dataclass(frozen=True)
class ExpectedHazard:
    label: str
    value: float
    sigma_full_cov: float     # curve errors fully covariant across x
    sigma_independent: float  # curve errors treated independently per x

    def ci(self, which: str = "full") -> tuple[float, float]:
        s = self.sigma_full_cov if which == "full" else self.sigma_independent
        return self.value - 2.0 * s, self.value + 2.0 * s


def expected_fha(dist: WoclDistribution, fit: FitResult) -> ExpectedHazard:
    """Distribution-weighted expectation sum_i W(x_i) f(x_i).

    Both uncertainty treatments are reported: the curve values at
    different x share the fitted coefficients, so the full-covariance
    variant is the default; the independent variant ignores the cross-x
    terms. The weight uncertainty W/sqrt(n) enters both.
    """
    w = dist.weights()
    xs = np.arange(w.size, dtype=float)
    f, sigma_f, _, _ = predict_with_ci(fit, xs)
    value = float(w @ f)

    basis = np.vander(xs, fit.degree + 1, increasing=True)
    g = w @ basis
    var_curve_full = float(g @ fit.covariance @ g)
    var_curve_indep = float(np.sum((w * sigma_f) ** 2))
    var_weights = float(np.sum((f * dist.weight_sigmas()) ** 2))

    return ExpectedHazard(
        label=dist.label,
        value=value,
        sigma_full_cov=float(np.sqrt(var_curve_full + var_weights)),
        sigma_independent=float(np.sqrt(var_curve_indep + var_weights)),
    )


@dataclass(frozen=True)
class ClockBins:
    """Per-bin mean effectiveness over the day; empty bins stay NaN."""

    bin_minutes: int
    starts: np.ndarray        # bin start, minutes of day
    mean: np.ndarray
    sem: np.ndarray
    count: np.ndarray

    def empty_bins(self) -> np.ndarray:
        return self.starts[self.count == 0]


def effectiveness_by_clock(times, values, bin_minutes: int = 30) -> ClockBins:
    """Group effectiveness samples by wall-clock bin (mean and standard
    error per bin). Empty bins are flagged NaN, never interpolated."""
    if MINUTES_PER_DAY % bin_minutes != 0:
        raise ValueError("bin size must divide the day")
    t = np.asarray(times, dtype=int)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape:
        raise ValueError("times and values must align")
    n_bins = MINUTES_PER_DAY // bin_minutes
    bins = (t % MINUTES_PER_DAY) // bin_minutes

    count = np.bincount(bins, minlength=n_bins).astype(int)
    mean = np.full(n_bins, np.nan)
    sem = np.full(n_bins, np.nan)
    sums = np.bincount(bins, weights=v, minlength=n_bins)
    nz = count > 0
    mean[nz] = sums[nz] / count[nz]
    sq = np.bincount(bins, weights=v * v, minlength=n_bins)
    multi = count > 1
    variance = np.zeros(n_bins)
    variance[multi] = (sq[multi] - count[multi] * mean[multi] ** 2) / (count[multi] - 1)
    variance = np.maximum(variance, 0.0)
    sem[nz] = 0.0
    sem[multi] = np.sqrt(variance[multi] / count[multi])

    starts = np.arange(n_bins) * bin_minutes
    return ClockBins(bin_minutes, starts, mean, sem, count)


def rfr_by_clock(bins: ClockBins, param: RiskParam = DEFAULT_RISK):
    """Risk per clock bin, b/<E>; the band carries sigma_b plus the bin
    standard error. Empty bins propagate NaN."""
    mean = bins.mean
    rfr = param.b / mean
    var = (param.sigma_b / mean) ** 2 + (param.b * bins.sem / mean ** 2) ** 2
    half = 2.0 * np.sqrt(var)
    return rfr, rfr - half, rfr + half


def normalize_rfr(
    values: np.ndarray,
    bin_starts: np.ndarray,
    window: tuple[int, int] = (18 * 60, MINUTES_PER_DAY),
) -> tuple[np.ndarray, float]:
    """Scale a clock curve so its average inside the window is one.

    Returns (normalized values, the divisor). NaN bins are ignored in the
    window average; an empty or zero-average window is an error.
    """
    starts = np.asarray(bin_starts)
    sel = (starts >= window[0]) & (starts < window[1])
    v = np.asarray(values, dtype=float)
    windowed = v[sel]
    windowed = windowed[~np.isnan(windowed)]
    if windowed.size == 0:
        raise ValueError("normalization window holds no filled bins")
    norm = float(windowed.mean())
    if norm == 0.0:
        raise ValueError("normalization window averages to zero")
    return v / norm, norm


def event_proportion_by_clock(
    times,
    bin_edges: Sequence[int] = (0, 360, 720, 1080, MINUTES_PER_DAY),
) -> list[tuple[int, int, float]]:
    """Percentage of events per clock bin [edge_i, edge_{i+1}); the
    percentages sum to 100."""
    edges = list(bin_edges)
    if sorted(edges) != edges or edges[0] < 0 or edges[-1] > MINUTES_PER_DAY:
        raise ValueError("bin edges must ascend within one day")
    t = np.asarray(times, dtype=int) % MINUTES_PER_DAY
    if t.size == 0:
        raise ValueError("no events to bin")
    out = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        frac = float(np.count_nonzero((t >= lo) & (t < hi))) / t.size
        out.append((lo, hi, 100.0 * frac))
    return out


def average_curve_in_bins(
    values: np.ndarray,
    bin_starts: np.ndarray,
    bin_edges: Sequence[int],
) -> list[Optional[float]]:
    """Average a fine clock curve inside coarser bins (NaN-aware)."""
    starts = np.asarray(bin_starts)
    v = np.asarray(values, dtype=float)
    out: list[Optional[float]] = []
    for lo, hi in zip(bin_edges[:-1], bin_edges[1:]):
        sel = (starts >= lo) & (starts < hi)
        vals = v[sel]
        vals = vals[~np.isnan(vals)]
        out.append(float(vals.mean()) if vals.size else None)
    return out
