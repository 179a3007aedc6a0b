"""Three-process effectiveness simulation at one-minute resolution.

The sleep reservoir depletes linearly while awake (0.5 units/min against
a 2880-unit capacity) and refills in proportion to the outstanding
deficit while asleep. Effectiveness stacks the reservoir percentage, a
two-harmonic circadian rhythm whose amplitude grows with sleep debt, and
a short exponential inertia penalty after waking; the score is clamped
to 0..100%.

The update is the explicit per-minute recurrence

    awake:  R <- max(R - depletion, 0)
    asleep: R <- R + rate * (capacity - R)

evaluated here with segment-wise closed forms (exact for the linear
branch, equal to the loop within float rounding for the saturating
branch), which keeps month-long simulations cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .sleep import SLEEP_KINDS, ScheduleTimeline
from .timebase import MINUTES_PER_DAY


@dataclass(frozen=True)
class EngineParams:
    reservoir_capacity: float = 2880.0
    wake_depletion_per_min: float = 0.5
    sleep_recovery_rate: float = 0.0055     # per-minute fraction of deficit
    circadian_peak_hour: float = 18.0
    circadian_second_peak_hour: float = 3.0
    harmonic_weight: float = 0.5
    amplitude_base_pct: float = 7.0
    amplitude_debt_pct: float = 5.0
    inertia_max_pct: float = 5.0
    inertia_tau_minutes: float = 36.5
    inertia_window_minutes: int = 120
    tick_minutes: int = 1
    sample_minutes: int = 30

    def __post_init__(self):
        if self.reservoir_capacity <= 0 or self.wake_depletion_per_min <= 0:
            raise ValueError("capacity and depletion must be positive")
        if not 0.0 <= self.harmonic_weight <= 1.0:
            raise ValueError("harmonic weight must lie in [0, 1]")
        if self.sleep_recovery_rate <= 0 or not (self.amplitude_base_pct > 0
                                                 and self.amplitude_debt_pct > 0
                                                 and self.inertia_max_pct > 0):
            raise ValueError("rates and amplitudes must be positive")
        # The update law is defined on a one-minute grid; the field exists
        # so run manifests can record it, not to change the resolution.
        if self.tick_minutes != 1:
            raise ValueError("the engine is defined on a 1-minute tick")
        if self.sample_minutes < 1:
            raise ValueError("sample interval must be positive")


DEFAULT_PARAMS = EngineParams()


def reservoir_to_sleep_debt(reservoir_pct):
    """Hours of equivalent lost sleep for a reservoir level in percent.

    A 75% reservoir corresponds to 8 h of debt; the map is linear with a
    32 h full-depletion scale.
    """
    r = np.asarray(reservoir_pct, dtype=float)
    if np.any((r < 0) | (r > 100)):
        raise ValueError("reservoir percentage must lie in [0, 100]")
    out = 32.0 * (1.0 - r / 100.0)
    return float(out) if np.isscalar(reservoir_pct) else out


def reservoir_to_time_awake(reservoir_pct):
    """Equivalent continuous hours awake; exactly three times the sleep debt
    (capacity / depletion-per-hour = 2880 / 30 = 96 h full scale)."""
    r = np.asarray(reservoir_pct, dtype=float)
    if np.any((r < 0) | (r > 100)):
        raise ValueError("reservoir percentage must lie in [0, 100]")
    out = 96.0 * (1.0 - r / 100.0)
    return float(out) if np.isscalar(reservoir_pct) else out


def circadian_shape(clock_hours, params: EngineParams = DEFAULT_PARAMS):
    """Dimensionless two-harmonic daily rhythm (24 h + weighted 12 h)."""
    t = np.asarray(clock_hours, dtype=float)
    c = (np.cos(2.0 * np.pi * (t - params.circadian_peak_hour) / 24.0)
         + params.harmonic_weight
         * np.cos(4.0 * np.pi * (t - params.circadian_second_peak_hour) / 24.0))
    return float(c) if np.isscalar(clock_hours) else c


def circadian(clock_hours, debt_frac, params: EngineParams = DEFAULT_PARAMS):
    """Circadian contribution to effectiveness, in percent. The amplitude
    grows from the base value with the fractional reservoir deficit."""
    shape = circadian_shape(clock_hours, params)
    amp = params.amplitude_base_pct + params.amplitude_debt_pct * np.asarray(debt_frac, dtype=float)
    out = shape * amp
    return float(out) if np.isscalar(clock_hours) and np.isscalar(debt_frac) else out


@dataclass(frozen=True)
class EffectivenessSeries:
    """Minute-grid state for one simulated crew member.

    Arrays are indexed by tick; tick k is the state at minute start + k
    (reservoir after k one-minute updates). ``asleep`` marks the minute
    beginning at each tick; the final tick repeats False.
    """

    crew_id: str
    start: int
    reservoir: np.ndarray
    effectiveness: np.ndarray
    circadian_shape: np.ndarray
    inertia: np.ndarray
    asleep: np.ndarray
    minutes_awake: np.ndarray
    capacity: float

    def __len__(self) -> int:
        return self.reservoir.shape[0]

    @property
    def end(self) -> int:
        return self.start + len(self) - 1

    def times(self) -> np.ndarray:
        return self.start + np.arange(len(self))

    def reservoir_pct(self) -> np.ndarray:
        return 100.0 * self.reservoir / self.capacity

    def to_csv(self) -> str:
        lines = ["t,reservoir,effectiveness,circadian,inertia,asleep"]
        for k in range(len(self)):
            lines.append(
                f"{self.start + k},{self.reservoir[k]:.6f},"
                f"{self.effectiveness[k]:.6f},{self.circadian_shape[k]:.6f},"
                f"{self.inertia[k]:.6f},{int(self.asleep[k])}")
        return "\n".join(lines) + "\n"


def _asleep_minute_mask(timeline: ScheduleTimeline, start: int, n_minutes: int) -> np.ndarray:
    mask = np.zeros(n_minutes, dtype=bool)
    for iv in timeline.intervals:
        if iv.kind not in SLEEP_KINDS:
            continue
        lo = max(iv.start - start, 0)
        hi = min(iv.end - start, n_minutes)
        if lo < hi:
            mask[lo:hi] = True
    return mask


def simulate(
    timeline: ScheduleTimeline,
    params: EngineParams = DEFAULT_PARAMS,
    initial_reservoir: Optional[float] = None,
    start: Optional[int] = None,
    end: Optional[int] = None,
) -> EffectivenessSeries:
    """Run the per-minute recurrence over the timeline span.

    The span defaults to the timeline's epoch (or, failing that, its
    interval hull); explicit bounds override. Minutes not covered by a
    sleep interval count as awake.
    """
    span = timeline.span()
    if start is None or end is None:
        if span is None:
            raise ValueError("timeline has no epoch or intervals; pass explicit start/end")
        start = span[0] if start is None else start
        end = span[1] if end is None else end
    if end <= start:
        raise ValueError("simulation span is empty")

    cap = params.reservoir_capacity
    dep = params.wake_depletion_per_min
    rate = params.sleep_recovery_rate
    r0 = cap if initial_reservoir is None else float(initial_reservoir)
    if not 0.0 <= r0 <= cap:
        raise ValueError("initial reservoir outside [0, capacity]")

    n = end - start
    minute_asleep = _asleep_minute_mask(timeline, start, n)

    reservoir = np.empty(n + 1)
    reservoir[0] = r0
    # Segment-wise closed forms of the per-minute recurrence.
    edges = np.flatnonzero(np.diff(minute_asleep)) + 1
    bounds = np.concatenate(([0], edges, [n]))
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        k = np.arange(1, hi - lo + 1)
        r_seg = reservoir[lo]
        if minute_asleep[lo]:
            reservoir[lo + 1:hi + 1] = cap - (cap - r_seg) * (1.0 - rate) ** k
        else:
            reservoir[lo + 1:hi + 1] = np.maximum(r_seg - dep * k, 0.0)

    ticks = np.arange(n + 1)
    asleep_now = np.concatenate((minute_asleep, [False]))
    prev_asleep = np.concatenate(([False], minute_asleep))

    # Consecutive awake minutes ending at each tick (0 while asleep).
    reset = prev_asleep.copy()
    reset[0] = True
    last_reset = np.maximum.accumulate(np.where(reset, ticks, 0))
    minutes_awake = np.where(asleep_now, 0, ticks - last_reset)

    slept_before = np.concatenate(([False], np.cumsum(minute_asleep) > 0))

    clock_hours = ((start + ticks) % MINUTES_PER_DAY) / 60.0
    shape = circadian_shape(clock_hours, params)
    debt_frac = (cap - reservoir) / cap

    inertia = np.where(
        slept_before & ~asleep_now & (minutes_awake <= params.inertia_window_minutes),
        params.inertia_max_pct * np.exp(-minutes_awake / params.inertia_tau_minutes),
        0.0,
    )

    effectiveness = np.clip(
        100.0 * reservoir / cap
        + shape * (params.amplitude_base_pct + params.amplitude_debt_pct * debt_frac)
        - inertia,
        0.0, 100.0,
    )

    return EffectivenessSeries(
        crew_id=timeline.crew_id,
        start=start,
        reservoir=reservoir,
        effectiveness=effectiveness,
        circadian_shape=shape,
        inertia=inertia,
        asleep=asleep_now,
        minutes_awake=minutes_awake.astype(float),
        capacity=cap,
    )


def sample_series(
    series: EffectivenessSeries,
    every: int = 30,
    origin: Optional[int] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Effectiveness at instants aligned to ``origin`` (default: series
    start), one sample per complete interval: floor(duration/every)."""
    if len(series) == 0:
        raise ValueError("empty series")
    origin = series.start if origin is None else origin
    duration = len(series) - 1
    first = series.start + (-(series.start - origin)) % every
    stop = series.start + (duration // every) * every
    t = np.arange(first, stop, every)
    return t, series.effectiveness[t - series.start]
