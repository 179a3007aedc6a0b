"""Deterministic synthetic roster populations with planted workload counts.

Each crew member's night-shift and WOCL-operation counts are drawn from
configured distributions and then scheduled constructively, so the
planted counts are exact ground truth for pipeline tests. Streams come
from the counter-based Philox generator (one jumped stream per roster),
which makes output a pure function of the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .roster import (CrewRank, Epoch, EventKind, EventSubkind, RejectReason,
                     RosterEvent, ValidatedRoster, serialize_roster_csv)
from .timebase import MINUTES_PER_DAY, parse_minutes

DEFAULT_AIRPORTS = ("CGH", "GRU", "VCP", "CNF", "SDU", "BSB", "POA", "REC",
                    "SSA", "FOR", "CWB", "GIG")


class SynthError(Exception):
    """Target counts cannot be scheduled."""


@dataclass(frozen=True)
class DistSpec:
    """Discrete distribution over integer values; weights normalise on
    construction."""

    values: tuple[int, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != len(self.probs) or not self.values:
            raise ValueError("values and probs must align and be non-empty")
        if any(p < 0 for p in self.probs):
            raise ValueError("negative probability")
        total = sum(self.probs)
        if total <= 0:
            raise ValueError("probabilities sum to zero")
        object.__setattr__(self, "probs", tuple(p / total for p in self.probs))

    def draw(self, rng: np.random.Generator) -> int:
        return int(self.values[rng.choice(len(self.values), p=self.probs)])

    @classmethod
    def from_string(cls, text: str) -> "DistSpec":
        """Parse 'value:weight,value:weight,...'."""
        pairs = []
        for chunk in text.split(","):
            v, w = chunk.split(":")
            pairs.append((int(v.strip()), float(w.strip())))
        pairs.sort()
        return cls(tuple(v for v, _ in pairs), tuple(w for _, w in pairs))

    @classmethod
    def single(cls, value: int) -> "DistSpec":
        return cls((value,), (1.0,))


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 20190101
    n_crew: int = 50
    epoch: Epoch = field(default_factory=lambda: Epoch(
        "Jan-19", parse_minutes("2019-01-01T00:00"), 30))
    # Compatible by construction: max WOCL target (8) fits the smallest
    # night-shift target (4 shifts, two operations each).
    target_night_shifts: DistSpec = DistSpec.from_string(
        "4:0.14,5:0.17,6:0.17,7:0.14,8:0.11,9:0.09,10:0.08,11:0.05,12:0.03,13:0.02")
    target_wocl_events: DistSpec = DistSpec.from_string(
        "0:0.1,1:0.13,2:0.15,3:0.16,4:0.16,5:0.14,6:0.1,7:0.04,8:0.02")
    target_day_flights: DistSpec = DistSpec.from_string(
        "8:0.2,10:0.25,12:0.25,14:0.2,16:0.1")
    target_working_events: DistSpec = DistSpec.from_string("0:0.3,1:0.4,2:0.3")
    sector_minutes: DistSpec = DistSpec.from_string(
        "60:0.3,75:0.2,90:0.2,120:0.15,150:0.1,180:0.05")
    airports: tuple[str, ...] = DEFAULT_AIRPORTS


@dataclass(frozen=True)
class PlantedCounts:
    crew_id: str
    night_shifts: int
    wocl_events: int
    crewing_events: int
    working_events: int


@dataclass(frozen=True)
class SynthRoster:
    roster: ValidatedRoster
    planted: PlantedCounts


def _route(rng: np.random.Generator, airports: Sequence[str]) -> tuple[str, str]:
    i = int(rng.choice(len(airports)))
    j = int(rng.choice(len(airports) - 1))
    if j >= i:
        j += 1
    return airports[i], airports[j]


def _first_night_legs(day_base: int, wocl_ops: int, sector: int):
    """Single-sector evening duty opening a night run, carrying exactly
    wocl_ops departures+arrivals inside 02:00..06:00."""
    if wocl_ops == 0:
        # Departs 23:00; lands before 02:00.
        dep = day_base + 23 * 60
        arr = dep + min(max(sector, 60), 170)
    elif wocl_ops == 1:
        # Departs 01:00 (outside the window); lands inside it.
        dep = day_base + MINUTES_PER_DAY + 60
        arr = dep + min(max(sector, 60), 290)
    else:
        # Departs 02:30 and lands inside the window.
        dep = day_base + MINUTES_PER_DAY + 150
        arr = dep + min(max(sector, 60), 200)
    return [(dep, arr)], dep - 60, arr + 30


def _late_night_legs(day_base: int, wocl_ops: int, rng: np.random.Generator,
                     sector_dist: DistSpec):
    """Multi-sector duty for later nights of a run: starts in the evening
    and, for wocl_ops > 0, stretches into the early-morning window. Early
    sectors stay clear of 02:00..06:00; only the last one touches it."""
    midnight = day_base + MINUTES_PER_DAY
    duty_start = day_base + int(rng.choice((1230, 1260, 1290)))  # 20:30-21:30
    dep1 = duty_start + 60
    arr1 = dep1 + min(max(sector_dist.draw(rng), 60), 75)
    dep2 = arr1 + _TURNAROUND_MINUTES
    cap2 = midnight + (75 if wocl_ops == 1 else 115)   # land 01:15 / 01:55
    arr2 = dep2 + min(max(sector_dist.draw(rng), 45), cap2 - dep2)
    legs = [(dep1, arr1), (dep2, arr2)]
    if wocl_ops == 0:
        return legs, duty_start, arr2 + 30
    if wocl_ops == 1:
        dep3 = arr2 + _TURNAROUND_MINUTES               # still before 02:00
    else:
        dep3 = max(arr2 + _TURNAROUND_MINUTES, midnight + 150)
    lo = max(60, midnight + 150 - dep3)                 # land 02:30 at soonest
    arr3 = dep3 + min(max(sector_dist.draw(rng), lo), midnight + 350 - dep3)
    legs.append((dep3, arr3))
    return legs, duty_start, arr3 + 30


def _night_duty_legs(day_base: int, wocl_ops: int, first_of_run: bool,
                     rng: np.random.Generator, sector_dist: DistSpec):
    if not 0 <= wocl_ops <= 2:
        raise SynthError(f"a night duty carries at most 2 WOCL operations, "
                         f"asked for {wocl_ops}")
    if first_of_run:
        return _first_night_legs(day_base, wocl_ops, sector_dist.draw(rng))
    return _late_night_legs(day_base, wocl_ops, rng, sector_dist)


_DAY_DEP_CLOCKS = (7 * 60, 8 * 60, 9 * 60, 10 * 60, 11 * 60, 12 * 60, 13 * 60)
_TURNAROUND_MINUTES = 40


def _night_run_days(n_night: int, days: int,
                    rng: np.random.Generator) -> list[tuple[int, bool]]:
    """(anchor day, first-of-run) pairs for night duties, scheduled in
    consecutive runs of 1-3 separated by at least two nights off (like
    real rotations)."""
    if n_night == 0:
        return []
    lengths: list[int] = []
    remaining = n_night
    while remaining > 0:
        run = int(rng.choice((1, 2, 3), p=(0.35, 0.4, 0.25)))
        run = min(run, remaining)
        lengths.append(run)
        remaining -= run
    gaps = [int(rng.choice((2, 3))) for _ in range(len(lengths) - 1)]
    # A night anchored on day d spills into day d+1, so the last anchor
    # must be at most days-2.
    def total(gap_list):
        return sum(lengths) + sum(gap_list)

    if total(gaps) > days - 1:
        gaps = [2] * (len(lengths) - 1)
    if total(gaps) > days - 1:
        # Many short runs do not pack; fall back to maximal runs of three.
        lengths = [3] * (n_night // 3) + ([n_night % 3] if n_night % 3 else [])
        gaps = [2] * (len(lengths) - 1)
    if total(gaps) > days - 1:
        raise SynthError(
            f"{n_night} night shifts in runs do not fit a {days}-day epoch")
    start = int(rng.choice(days - 1 - total(gaps) + 1))
    anchors: list[tuple[int, bool]] = []
    d = start
    for i, run in enumerate(lengths):
        anchors.extend((d + k, k == 0) for k in range(run))
        d += run + (gaps[i] if i < len(gaps) else 0)
    return anchors


def _build_roster(crew_id: str, config: SynthConfig, rng: np.random.Generator) -> SynthRoster:
    epoch = config.epoch
    days = epoch.days

    n_night = config.target_night_shifts.draw(rng)
    n_wocl = config.target_wocl_events.draw(rng)
    n_day = config.target_day_flights.draw(rng)
    n_work = config.target_working_events.draw(rng)

    if n_wocl > 2 * n_night:
        raise SynthError(
            f"target WOCL operations ({n_wocl}) exceed schedulable slots: "
            f"at most 2 per night shift ({n_night} night shifts)")
    night_days = _night_run_days(n_night, days, rng)

    # Spread WOCL operations over the night duties: as many 2s as needed.
    ops = [0] * n_night
    remaining = n_wocl
    order = list(rng.permutation(n_night)) if n_night else []
    for idx in order:
        take = min(2, remaining)
        ops[idx] = take
        remaining -= take
    assert remaining == 0

    # Day duties fly two sectors where possible.
    n_day_duties = (n_day + 1) // 2
    blocked = {d for d, _ in night_days} | {d + 1 for d, _ in night_days}
    day_pool = [d for d in range(days) if d not in blocked]
    if n_day_duties > len(day_pool):
        raise SynthError(f"{n_day} day flights ({n_day_duties} duties) do not "
                         f"fit in {len(day_pool)} free days")
    day_days = sorted(int(day_pool[i]) for i in
                      rng.choice(len(day_pool), size=n_day_duties, replace=False))

    work_pool = [d for d in day_pool if d not in day_days]
    if n_work > len(work_pool):
        raise SynthError(f"{n_work} working events do not fit in "
                         f"{len(work_pool)} remaining days")
    work_days = sorted(int(work_pool[i]) for i in
                       rng.choice(len(work_pool), size=n_work, replace=False))

    events: list[RosterEvent] = []
    rank = CrewRank(["Captain", "FirstOfficer", "CabinCrew"][int(rng.choice(3))])

    def add_flight(dep: int, arr: int, duty_start: int, duty_end: int):
        origin, dest = _route(rng, config.airports)
        events.append(RosterEvent(
            crew_id, EventKind.CREWING, EventSubkind.FLIGHT, dep, arr,
            origin, dest, duty_start=duty_start, duty_end=duty_end, rank=rank))

    night_sectors = 0
    for (day, first), w in zip(night_days, ops):
        base = epoch.begin + day * MINUTES_PER_DAY
        legs, duty_start, duty_end = _night_duty_legs(
            base, w, first, rng, config.sector_minutes)
        for dep, arr in legs:
            add_flight(dep, arr, duty_start, duty_end)
        night_sectors += len(legs)

    sectors_left = n_day
    for i, day in enumerate(day_days):
        base = epoch.begin + day * MINUTES_PER_DAY
        per_duty = min(2, sectors_left - (len(day_days) - 1 - i))
        dep = base + int(_DAY_DEP_CLOCKS[rng.choice(len(_DAY_DEP_CLOCKS))])
        legs = []
        cursor = dep
        for _ in range(per_duty):
            length = min(max(config.sector_minutes.draw(rng), 45), 180)
            legs.append((cursor, cursor + length))
            cursor = cursor + length + _TURNAROUND_MINUTES
        duty_start = dep - 60
        duty_end = legs[-1][1] + 30
        for leg_dep, leg_arr in legs:
            add_flight(leg_dep, leg_arr, duty_start, duty_end)
        sectors_left -= per_duty
    assert sectors_left == 0

    for day in work_days:
        base = epoch.begin + day * MINUTES_PER_DAY
        start = base + 9 * 60
        end = base + 17 * 60
        origin, dest = _route(rng, config.airports)
        events.append(RosterEvent(
            crew_id, EventKind.WORKING, EventSubkind.TRAINING, start, end,
            origin, dest, duty_start=start, duty_end=end, rank=rank))

    events.sort(key=lambda e: (e.start, e.end))
    roster = ValidatedRoster(crew_id, epoch, tuple(events), False, RejectReason.NONE)
    planted = PlantedCounts(
        crew_id=crew_id,
        night_shifts=n_night,
        wocl_events=n_wocl,
        crewing_events=night_sectors + n_day,
        working_events=n_work,
    )
    return SynthRoster(roster, planted)


def generate_detailed(config: SynthConfig) -> list[SynthRoster]:
    """Rosters plus their planted ground-truth counts."""
    base = np.random.Philox(key=config.seed)
    out = []
    for i in range(config.n_crew):
        rng = np.random.Generator(base.jumped(i))
        out.append(_build_roster(f"C{i + 1:04d}", config, rng))
    return out


def generate(config: SynthConfig) -> list[ValidatedRoster]:
    """Deterministic synthetic population; same seed, same rosters."""
    return [sr.roster for sr in generate_detailed(config)]


def rosters_to_csv(rosters: Sequence[ValidatedRoster]) -> str:
    """Emit the population in the ingestion CSV format."""
    events = [e for r in rosters for e in r.events]
    events.sort(key=lambda e: (e.crew_id, e.start, e.end))
    return serialize_roster_csv(events)


def planted_to_csv(planted: Sequence[PlantedCounts]) -> str:
    lines = ["crew_id,night_shifts,wocl_events,crewing_events,working_events"]
    for p in planted:
        lines.append(f"{p.crew_id},{p.night_shifts},{p.wocl_events},"
                     f"{p.crewing_events},{p.working_events}")
    return "\n".join(lines) + "\n"
