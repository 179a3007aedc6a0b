"""Per-roster fatigue KPIs over critical phases of flight, plus workload
(productivity) counters.

Critical phases are the first and last 30 minutes of each flight sector.
The hazard area accumulates, minute by minute, the fractional depth of
the effectiveness curve below a threshold inside those phases, so a full
outage scores one minute per minute.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, fields
from typing import Optional, Sequence

import numpy as np

from .engine import EffectivenessSeries, reservoir_to_sleep_debt, reservoir_to_time_awake
from .roster import EventKind, RosterEvent, ValidatedRoster, resolve_duty_bounds
from .timebase import MINUTES_PER_DAY, clock_minutes, day_index

CRITICAL_PHASE_MINUTES = 30
NIGHT_END_CLOCK = 6 * 60          # night shift window is 00:00..06:00
WOCL_WINDOW = (2 * 60, 6 * 60)    # departures/arrivals in [02:00, 06:00)


def critical_windows(events: Sequence[RosterEvent]) -> list[tuple[int, int]]:
    """First/last 30 minutes of each flight; short sectors collapse to one
    window covering the whole flight."""
    windows: list[tuple[int, int]] = []
    for e in events:
        if e.kind is not EventKind.CREWING:
            continue
        if e.end - e.start < 2 * CRITICAL_PHASE_MINUTES:
            windows.append((e.start, e.end))
        else:
            windows.append((e.start, e.start + CRITICAL_PHASE_MINUTES))
            windows.append((e.end - CRITICAL_PHASE_MINUTES, e.end))
    windows.sort()
    return windows


def _window_ticks(series: EffectivenessSeries, windows: Sequence[tuple[int, int]]) -> np.ndarray:
    idx: list[np.ndarray] = []
    for s, e in windows:
        if s < series.start or e > series.end + 1:
            raise ValueError(f"window {s}..{e} outside series span "
                             f"{series.start}..{series.end}")
        idx.append(np.arange(s - series.start, e - series.start))
    if not idx:
        return np.empty(0, dtype=int)
    return np.concatenate(idx)


def min_effectiveness_critical(
    series: EffectivenessSeries, windows: Sequence[tuple[int, int]],
) -> Optional[float]:
    """Lowest effectiveness over all in-window minutes; None when there are
    no windows (the KPI record is then flagged undefined)."""
    ticks = _window_ticks(series, windows)
    if ticks.size == 0:
        return None
    return float(series.effectiveness[ticks].min())


def min_reservoir_critical(
    series: EffectivenessSeries, windows: Sequence[tuple[int, int]],
) -> Optional[float]:
    """Lowest reservoir level (percent of capacity) over in-window minutes."""
    ticks = _window_ticks(series, windows)
    if ticks.size == 0:
        return None
    return float(series.reservoir_pct()[ticks].min())


def fatigue_hazard_area(
    series: EffectivenessSeries,
    windows: Sequence[tuple[int, int]],
    threshold: float = 77.0,
) -> float:
    """Minutes of threshold-normalised area below ``threshold`` inside the
    windows: sum of max(0, (T - E)/T) per in-window minute."""
    if not 0.0 < threshold <= 100.0:
        raise ValueError("threshold must lie in (0, 100]")
    ticks = _window_ticks(series, windows)
    if ticks.size == 0:
        return 0.0
    depth = np.maximum(0.0, (threshold - series.effectiveness[ticks]) / threshold)
    return float(depth.sum())


@dataclass(frozen=True)
class ProductivityMetrics:
    night_shifts: int
    consecutive_night_shifts: int
    duty_hours: float
    crewing_events: int
    working_events: int
    wocl_events: int


def _merged_duty_periods(events: Sequence[RosterEvent]) -> list[tuple[int, int]]:
    spans = sorted((e.duty_start, e.duty_end) for e in events)
    merged: list[tuple[int, int]] = []
    for s, e in spans:
        if merged and s < merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], e))
        else:
            merged.append((s, e))
    return merged


def _is_night_shift(start: int, end: int) -> bool:
    for d in range(day_index(start), day_index(end - 1) + 1):
        lo = d * MINUTES_PER_DAY
        if start < lo + NIGHT_END_CLOCK and end > lo:
            return True
    return False


def productivity_metrics(
    roster: ValidatedRoster,
    wocl_window: tuple[int, int] = WOCL_WINDOW,
    cns_mode: str = "pairs",
) -> ProductivityMetrics:
    """Workload counters for one validated roster.

    A shift is a merged duty period; it is a night shift when any portion
    falls between mid-night and 06:00. Consecutive night shifts count, in
    ``pairs`` mode, the night shifts whose immediately preceding duty is
    also a night shift starting within the previous 24 h; ``runs`` mode
    counts maximal chains of length >= 2 instead.
    """
    if cns_mode not in ("pairs", "runs"):
        raise ValueError(f"unknown cns_mode {cns_mode!r}")
    events = resolve_duty_bounds(roster.events)
    shifts = _merged_duty_periods(events)
    nights = [_is_night_shift(s, e) for s, e in shifts]

    night_shifts = sum(nights)
    cns = 0
    if cns_mode == "pairs":
        for i in range(1, len(shifts)):
            if (nights[i] and nights[i - 1]
                    and shifts[i][0] - shifts[i - 1][0] <= MINUTES_PER_DAY):
                cns += 1
    else:
        run = 1 if nights and nights[0] else 0
        for i in range(1, len(shifts)):
            chained = (nights[i] and nights[i - 1]
                       and shifts[i][0] - shifts[i - 1][0] <= MINUTES_PER_DAY)
            if chained:
                run += 1
            else:
                if run >= 2:
                    cns += 1
                run = 1 if nights[i] else 0
        if run >= 2:
            cns += 1

    duty_hours = sum(e - s for s, e in shifts) / 60.0

    wlo, whi = wocl_window
    wocl = 0
    for e in events:
        if e.kind is not EventKind.CREWING:
            continue
        if wlo <= clock_minutes(e.start) < whi:
            wocl += 1
        if wlo <= clock_minutes(e.end) < whi:
            wocl += 1

    return ProductivityMetrics(
        night_shifts=night_shifts,
        consecutive_night_shifts=cns,
        duty_hours=duty_hours,
        crewing_events=sum(1 for e in events if e.kind is EventKind.CREWING),
        working_events=sum(1 for e in events if e.kind is EventKind.WORKING),
        wocl_events=wocl,
    )


@dataclass(frozen=True)
class KpiRecord:
    """One scorecard row per (crew member, epoch)."""

    crew_id: str
    epoch: str
    min_effectiveness: Optional[float]
    min_reservoir: Optional[float]
    hazard_area: Optional[float]
    max_sleep_debt: Optional[float]
    max_time_awake: Optional[float]
    night_shifts: int
    consecutive_night_shifts: int
    duty_hours: float
    crewing_events: int
    working_events: int
    wocl_events: int

    @property
    def flagged(self) -> bool:
        """True when the roster had no critical-phase minutes (no flights)."""
        return self.min_effectiveness is None


KPI_COLUMNS = tuple(f.name for f in fields(KpiRecord))


def compute_kpis(
    roster: ValidatedRoster,
    series: EffectivenessSeries,
    fha_threshold: float = 77.0,
    wocl_window: tuple[int, int] = WOCL_WINDOW,
    cns_mode: str = "pairs",
) -> KpiRecord:
    windows = critical_windows(roster.events)
    em = min_effectiveness_critical(series, windows)
    rm = min_reservoir_critical(series, windows)
    fha = fatigue_hazard_area(series, windows, fha_threshold) if windows else None
    prod = productivity_metrics(roster, wocl_window, cns_mode)
    return KpiRecord(
        crew_id=roster.crew_id,
        epoch=roster.epoch.label,
        min_effectiveness=em,
        min_reservoir=rm,
        hazard_area=fha,
        max_sleep_debt=reservoir_to_sleep_debt(rm) if rm is not None else None,
        max_time_awake=reservoir_to_time_awake(rm) if rm is not None else None,
        night_shifts=prod.night_shifts,
        consecutive_night_shifts=prod.consecutive_night_shifts,
        duty_hours=prod.duty_hours,
        crewing_events=prod.crewing_events,
        working_events=prod.working_events,
        wocl_events=prod.wocl_events,
    )


def write_kpi_csv(records: Sequence[KpiRecord]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(KPI_COLUMNS)
    for r in records:
        writer.writerow([
            r.crew_id, r.epoch,
            *("" if v is None else repr(float(v)) for v in
              (r.min_effectiveness, r.min_reservoir, r.hazard_area,
               r.max_sleep_debt, r.max_time_awake)),
            r.night_shifts, r.consecutive_night_shifts, repr(float(r.duty_hours)),
            r.crewing_events, r.working_events, r.wocl_events,
        ])
    return out.getvalue()


def read_kpi_csv(text: str) -> list[KpiRecord]:
    reader = csv.DictReader(io.StringIO(text))
    records = []
    for row in reader:
        def opt(col: str) -> Optional[float]:
            return float(row[col]) if row[col] != "" else None

        records.append(KpiRecord(
            crew_id=row["crew_id"],
            epoch=row["epoch"],
            min_effectiveness=opt("min_effectiveness"),
            min_reservoir=opt("min_reservoir"),
            hazard_area=opt("hazard_area"),
            max_sleep_debt=opt("max_sleep_debt"),
            max_time_awake=opt("max_time_awake"),
            night_shifts=int(row["night_shifts"]),
            consecutive_night_shifts=int(row["consecutive_night_shifts"]),
            duty_hours=float(row["duty_hours"]),
            crewing_events=int(row["crewing_events"]),
            working_events=int(row["working_events"]),
            wocl_events=int(row["wocl_events"]),
        ))
    return records
