"""Predicted-sleep timeline construction from a validated roster.

Duty blocks are wrapped with preparation and commuting, then sleep is
laid in by rule: a main sleep anchored at the habitual bedtime (advanced
before early starts when enabled), afternoon naps before night duties
keyed to hours awake, and recovery naps after late-ending duties. All
rules are deterministic; the same roster and profile always produce the
same timeline.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Optional, Sequence

from .roster import DutyPolicy, EventKind, ValidatedRoster, resolve_duty_bounds
from .timebase import MINUTES_PER_DAY, clock_minutes, day_index, format_minutes


class IntervalKind(Enum):
    DUTY = "Duty"
    FLIGHT = "Flight"
    COMMUTE = "Commute"
    PREPARE = "Prepare"
    SLEEP = "Sleep"
    NAP = "Nap"
    RECOVERY_NAP = "RecoveryNap"
    FREE = "Free"


WORK_KINDS = frozenset({IntervalKind.DUTY, IntervalKind.FLIGHT,
                        IntervalKind.COMMUTE, IntervalKind.PREPARE})
SLEEP_KINDS = frozenset({IntervalKind.SLEEP, IntervalKind.NAP,
                         IntervalKind.RECOVERY_NAP})


@dataclass(frozen=True)
class Interval:
    start: int
    end: int
    kind: IntervalKind

    def __post_init__(self):
        if self.end <= self.start:
            raise ValueError(f"empty interval {self.start}..{self.end}")

    @property
    def minutes(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class BehaviorProfile:
    """Sleep-behaviour knobs driving timeline construction."""

    auto_nap: bool = True
    advanced_bedtime: bool = True
    commute_minutes: int = 60          # 60 standard, 120 extended
    preparation_minutes: int = 60
    normal_bedtime_minutes: int = 23 * 60
    min_sleep_minutes: int = 60
    max_workday_sleep_minutes: int = 480
    max_restday_sleep_minutes: int = 540
    max_recovery_nap_minutes: int = 210
    awake_zone_start_minutes: int = 13 * 60
    awake_zone_end_minutes: int = 20 * 60

    def __post_init__(self):
        durations = (self.commute_minutes, self.preparation_minutes,
                     self.min_sleep_minutes, self.max_workday_sleep_minutes,
                     self.max_restday_sleep_minutes, self.max_recovery_nap_minutes)
        if any(d <= 0 for d in durations):
            raise ValueError("profile durations must be positive")
        if not 0 <= self.awake_zone_start_minutes < self.awake_zone_end_minutes < MINUTES_PER_DAY:
            raise ValueError("awake zone must be an ordered same-day interval")
        if not 0 <= self.normal_bedtime_minutes < MINUTES_PER_DAY:
            raise ValueError("bedtime must be a clock time")


@dataclass(frozen=True)
class ScheduleTimeline:
    """Ordered, non-overlapping intervals for one crew member."""

    crew_id: str
    epoch: Optional[object]  # roster.Epoch or None for ad-hoc timelines
    intervals: tuple[Interval, ...] = ()

    def __post_init__(self):
        ivs = tuple(sorted(self.intervals, key=lambda i: (i.start, i.end)))
        for prev, cur in zip(ivs, ivs[1:]):
            if cur.start < prev.end:
                raise ValueError(
                    f"overlapping intervals {prev.kind.value}@{prev.start} "
                    f"and {cur.kind.value}@{cur.start}")
        object.__setattr__(self, "intervals", ivs)

    def of_kind(self, kinds: frozenset[IntervalKind]) -> list[Interval]:
        return [i for i in self.intervals if i.kind in kinds]

    def span(self) -> Optional[tuple[int, int]]:
        bounds = []
        if self.epoch is not None:
            bounds.append((self.epoch.begin, self.epoch.end))
        if self.intervals:
            bounds.append((self.intervals[0].start,
                           max(i.end for i in self.intervals)))
        if not bounds:
            return None
        return min(b[0] for b in bounds), max(b[1] for b in bounds)

    def total_minutes(self, kinds: frozenset[IntervalKind]) -> int:
        return sum(i.minutes for i in self.of_kind(kinds))

    def with_free_filled(self, start: int, end: int) -> "ScheduleTimeline":
        """Fill gaps inside [start, end) with explicit Free intervals."""
        out: list[Interval] = []
        cursor = start
        for iv in self.intervals:
            if iv.end <= start or iv.start >= end:
                out.append(iv)
                continue
            if iv.start > cursor:
                out.append(Interval(cursor, iv.start, IntervalKind.FREE))
            out.append(iv)
            cursor = max(cursor, iv.end)
        if cursor < end:
            out.append(Interval(cursor, end, IntervalKind.FREE))
        return replace(self, intervals=tuple(out))

    def to_csv(self) -> str:
        lines = ["crew_id,start,end,kind"]
        for iv in self.intervals:
            lines.append(f"{self.crew_id},{format_minutes(iv.start)},"
                         f"{format_minutes(iv.end)},{iv.kind.value}")
        return "\n".join(lines) + "\n"


def _merge_spans(spans: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
    """Union of intervals; touching spans merge."""
    merged: list[tuple[int, int]] = []
    for s, e in sorted(spans):
        if merged and s <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], e))
        else:
            merged.append((s, e))
    return merged


def _night_portion(start: int, end: int, night_end_clock: int = 360) -> bool:
    """Does [start, end) intersect any daily 00:00..night_end window?"""
    for d in range(day_index(start), day_index(end - 1) + 1):
        lo = d * MINUTES_PER_DAY
        if start < lo + night_end_clock and end > lo:
            return True
    return False


def insert_duty_envelopes(
    roster: ValidatedRoster,
    profile: BehaviorProfile,
    duty_policy: DutyPolicy = DutyPolicy(),
) -> ScheduleTimeline:
    """Lay down duty blocks plus their preparation/commute envelopes.

    Duty periods that overlap merge into one block; flights are kept as
    distinct Flight intervals inside their block. Blocks whose gap cannot
    hold commute + preparation + commute are treated as one continuous
    work block (the short gap becomes duty time, and no envelope is
    inserted inside it). Unwind time is zero.
    """
    if roster.rejected:
        raise ValueError(f"roster {roster.crew_id!r} was rejected "
                         f"({roster.reject_reason.value})")
    events = resolve_duty_bounds(roster.events, duty_policy)

    blocks = _merge_spans((e.duty_start, e.duty_end) for e in events)

    # Merge blocks separated by less than a full inter-duty envelope chain.
    chain = 2 * profile.commute_minutes + profile.preparation_minutes
    grouped: list[tuple[int, int]] = []
    for s, e in blocks:
        if grouped and s - grouped[-1][1] < chain:
            grouped[-1] = (grouped[-1][0], e)
        else:
            grouped.append((s, e))

    flights = _merge_spans(
        (e.start, e.end) for e in events if e.kind is EventKind.CREWING)

    intervals: list[Interval] = []
    for gs, ge in grouped:
        intervals.append(Interval(gs - profile.commute_minutes - profile.preparation_minutes,
                                  gs - profile.commute_minutes, IntervalKind.PREPARE))
        intervals.append(Interval(gs - profile.commute_minutes, gs, IntervalKind.COMMUTE))
        intervals.append(Interval(ge, ge + profile.commute_minutes, IntervalKind.COMMUTE))
        cursor = gs
        for fs, fe in flights:
            if fe <= gs or fs >= ge:
                continue
            fs, fe = max(fs, gs), min(fe, ge)
            if fs > cursor:
                intervals.append(Interval(cursor, fs, IntervalKind.DUTY))
            intervals.append(Interval(fs, fe, IntervalKind.FLIGHT))
            cursor = fe
        if cursor < ge:
            intervals.append(Interval(cursor, ge, IntervalKind.DUTY))

    return ScheduleTimeline(roster.crew_id, roster.epoch, tuple(intervals))


def _first_blocker(intervals: Sequence[Interval], start: int, end: int) -> Optional[Interval]:
    for iv in intervals:
        if iv.start < end and iv.end > start:
            return iv
        if iv.start >= end:
            break
    return None


def _push_past_blockers(intervals: Sequence[Interval], t: int) -> int:
    """Smallest free instant >= t."""
    moved = True
    while moved:
        moved = False
        for iv in intervals:
            if iv.start <= t < iv.end:
                t = iv.end
                moved = True
            elif iv.start > t:
                break
    return t


def _next_block_start(intervals: Sequence[Interval], t: int) -> Optional[int]:
    for iv in intervals:
        if iv.start >= t:
            return iv.start
    return None


def _day_range(timeline: ScheduleTimeline) -> range:
    span = timeline.span()
    if span is None:
        return range(0)
    return range(day_index(span[0]) - 1, day_index(span[1] - 1) + 1)


def _is_workday(intervals: Sequence[Interval], day: int) -> bool:
    lo, hi = day * MINUTES_PER_DAY, (day + 1) * MINUTES_PER_DAY
    return any(iv.kind in WORK_KINDS and iv.start < hi and iv.end > lo
               for iv in intervals)


def predict_main_sleep(timeline: ScheduleTimeline, profile: BehaviorProfile) -> ScheduleTimeline:
    """Place one main sleep per night.

    Sleep starts at the habitual bedtime (pushed later when blocked) and
    runs to the workday/rest-day cap or the next scheduled block. With the
    advanced-bedtime rule, an early-start envelope (one beginning after
    bedtime but within eight hours of it) pulls sleep onset earlier, to
    fit up to eight hours, never before the awake zone ends. Envelopes
    already covering the bedtime are night duties; those are the nap
    rules' business, not an early start.
    """
    intervals = list(timeline.intervals)
    for day in _day_range(timeline):
        base = day * MINUTES_PER_DAY
        bedtime = base + profile.normal_bedtime_minutes
        zone_end = base + profile.awake_zone_end_minutes

        placed = None
        if profile.advanced_bedtime:
            candidates = [iv.start for iv in intervals
                          if bedtime < iv.start < bedtime + 480]
            for env_start in sorted(set(candidates)):
                onset = max(env_start - 480, zone_end)
                while True:
                    blk = _first_blocker(intervals, onset, env_start)
                    if blk is None:
                        break
                    onset = blk.end
                if env_start - onset >= profile.min_sleep_minutes:
                    placed = Interval(onset, env_start, IntervalKind.SLEEP)
                    break

        if placed is None:
            onset = _push_past_blockers(intervals, bedtime)
            zone = (profile.awake_zone_start_minutes, profile.awake_zone_end_minutes)
            if zone[0] <= clock_minutes(onset) < zone[1]:
                continue  # pushed into the awake zone: no main sleep tonight
            cap = (profile.max_workday_sleep_minutes if _is_workday(intervals, day)
                   else profile.max_restday_sleep_minutes)
            limit = bedtime + cap
            nxt = _next_block_start(intervals, onset)
            end = min(limit, nxt) if nxt is not None else limit
            if end - onset >= profile.min_sleep_minutes:
                placed = Interval(onset, end, IntervalKind.SLEEP)

        if placed is not None:
            intervals.append(placed)
            intervals.sort(key=lambda i: (i.start, i.end))

    return replace(timeline, intervals=tuple(intervals))


def _work_groups(intervals: Sequence[Interval]) -> list[tuple[int, int]]:
    """Contiguous runs of work intervals (envelope + duty blocks)."""
    return _merge_spans((iv.start, iv.end) for iv in intervals
                        if iv.kind in WORK_KINDS)


def _nap_minutes(hours_awake: float) -> int:
    if hours_awake < 8:
        return 0
    if hours_awake < 10:
        return 60
    if hours_awake < 12:
        return 90
    if hours_awake < 14:
        return 120
    return 180


def insert_auto_naps(timeline: ScheduleTimeline, profile: BehaviorProfile) -> ScheduleTimeline:
    """Add an afternoon nap before each night duty, sized by hours awake.

    The nap ends at the duty envelope start, shifts earlier around
    blockers, and never starts before the awake zone opens.
    """
    if not profile.auto_nap:
        return timeline

    intervals = list(timeline.intervals)
    for gs, ge in _work_groups(intervals):
        duty_spans = [(iv.start, iv.end) for iv in intervals
                      if iv.kind in (IntervalKind.DUTY, IntervalKind.FLIGHT)
                      and gs <= iv.start < ge]
        if not duty_spans or not any(_night_portion(s, e) for s, e in duty_spans):
            continue

        sleep_ends = [iv.end for iv in intervals
                      if iv.kind in SLEEP_KINDS and iv.end <= gs]
        if not sleep_ends:
            continue
        duration = _nap_minutes((gs - max(sleep_ends)) / 60.0)
        if duration == 0:
            continue

        end = gs
        while True:
            blk = _first_blocker(intervals, end - duration, end)
            if blk is None or blk.start >= end:
                break
            end = blk.start
        zone_open = day_index(end - 1) * MINUTES_PER_DAY + profile.awake_zone_start_minutes
        start = max(end - duration, zone_open)
        if end - start >= profile.min_sleep_minutes:
            intervals.append(Interval(start, end, IntervalKind.NAP))
            intervals.sort(key=lambda i: (i.start, i.end))

    return replace(timeline, intervals=tuple(intervals))


def insert_recovery_naps(timeline: ScheduleTimeline, profile: BehaviorProfile) -> ScheduleTimeline:
    """Add recovery sleep after duties ending between bedtime and the awake
    zone when the previous 16 h held less than 8 h of sleep."""
    intervals = list(timeline.intervals)
    for gs, ge in _work_groups(intervals):
        duty_ends = [iv.end for iv in intervals
                     if iv.kind in (IntervalKind.DUTY, IntervalKind.FLIGHT)
                     and gs <= iv.start < ge]
        if not duty_ends:
            continue
        duty_end = max(duty_ends)
        c = clock_minutes(duty_end)
        if not (c >= profile.normal_bedtime_minutes or c < profile.awake_zone_start_minutes):
            continue

        window_lo = duty_end - 960
        slept = sum(min(iv.end, duty_end) - max(iv.start, window_lo)
                    for iv in intervals
                    if iv.kind in SLEEP_KINDS and iv.start < duty_end and iv.end > window_lo)
        deficit = 480 - slept
        if deficit <= 0:
            continue

        start = ge
        end = start + min(profile.max_recovery_nap_minutes, deficit)
        nxt = _next_block_start(intervals, start)
        if nxt is not None:
            end = min(end, nxt)
        if end - start >= profile.min_sleep_minutes:
            intervals.append(Interval(start, end, IntervalKind.RECOVERY_NAP))
            intervals.sort(key=lambda i: (i.start, i.end))

    return replace(timeline, intervals=tuple(intervals))


def build_timeline(
    roster: ValidatedRoster,
    profile: BehaviorProfile = BehaviorProfile(),
    duty_policy: DutyPolicy = DutyPolicy(),
) -> ScheduleTimeline:
    """Full estimator: envelopes, main sleep, afternoon naps, recovery naps."""
    timeline = insert_duty_envelopes(roster, profile, duty_policy)
    timeline = predict_main_sleep(timeline, profile)
    timeline = insert_auto_naps(timeline, profile)
    timeline = insert_recovery_naps(timeline, profile)
    return timeline
