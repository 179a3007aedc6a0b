"""Roster CSV ingestion: parsing, validation, epoch clipping and duty bounds.

Input files are comma-separated with a header row and one event per line:

    id,kind,subkind,start,end,origin,destination,duty_start,duty_end,rank

Timestamps are local 'YYYY-MM-DDTHH:MM'. Malformed rows never abort a
parse; they are reported as structured diagnostics and skipped. Whole
rosters are only rejected later, when filters find an empty or
conflicting event set for an analysis epoch.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from importlib import resources
from typing import Iterable, Mapping, Optional, Sequence

from .timebase import MINUTES_PER_DAY, format_minutes, parse_minutes


class RosterFormatError(Exception):
    """File-level problem (bad encoding, missing header column)."""


class EventKind(Enum):
    CREWING = "Crewing"
    WORKING = "Working"


class EventSubkind(Enum):
    FLIGHT = "Flight"
    HOME_STANDBY = "HomeStandby"
    TRAINING = "Training"
    DEADHEAD = "Deadhead"
    OTHER = "Other"


class CrewRank(Enum):
    CAPTAIN = "Captain"
    FIRST_OFFICER = "FirstOfficer"
    CABIN_CREW = "CabinCrew"
    UNKNOWN = "Unknown"


class RejectReason(Enum):
    PARSE_ERROR = "ParseError"
    OVERLAP_CONFLICT = "OverlapConflict"
    EMPTY_AFTER_FILTER = "EmptyAfterFilter"
    NONE = "None"


@dataclass(frozen=True)
class RosterEvent:
    """One Crewing/Working record on the reference clock (minutes)."""

    crew_id: str
    kind: EventKind
    subkind: EventSubkind
    start: int
    end: int
    origin: str = ""
    destination: str = ""
    duty_start: Optional[int] = None
    duty_end: Optional[int] = None
    rank: CrewRank = CrewRank.UNKNOWN


@dataclass(frozen=True)
class Epoch:
    """Exact 30- or 15-day analysis window; cumulative metrics depend on it."""

    label: str
    begin: int
    days: int

    def __post_init__(self):
        if self.days not in (15, 30):
            raise ValueError(f"epoch must span 15 or 30 days, got {self.days}")

    @property
    def end(self) -> int:
        return self.begin + self.days * MINUTES_PER_DAY


@dataclass(frozen=True)
class ValidatedRoster:
    crew_id: str
    epoch: Epoch
    events: tuple[RosterEvent, ...]
    rejected: bool = False
    reject_reason: RejectReason = RejectReason.NONE


@dataclass(frozen=True)
class ParseDiagnostic:
    row: int
    field: str
    reason: str
    crew_id: str = ""

    def to_json(self) -> str:
        return json.dumps(
            {"row": self.row, "field": self.field, "reason": self.reason,
             "crew_id": self.crew_id},
            sort_keys=True,
        )


@dataclass(frozen=True)
class ColumnMap:
    """Names of the CSV columns holding each event field."""

    crew_id: str = "id"
    kind: str = "kind"
    subkind: str = "subkind"
    start: str = "start"
    end: str = "end"
    origin: str = "origin"
    destination: str = "destination"
    duty_start: str = "duty_start"
    duty_end: str = "duty_end"
    rank: str = "rank"

    def columns(self) -> tuple[str, ...]:
        return tuple(getattr(self, f.name) for f in fields(self))


COLUMN_ORDER = ColumnMap().columns()


@dataclass(frozen=True)
class FilterPolicy:
    drop_home_standby: bool = True


def _load_airport_countries() -> dict[str, str]:
    ref = resources.files(__package__).joinpath("data/airport_countries.csv")
    table: dict[str, str] = {}
    with ref.open("r", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            table[row["iata"].strip().upper()] = row["country"].strip().upper()
    return table


_AIRPORT_COUNTRIES: Optional[dict[str, str]] = None


def airport_countries() -> Mapping[str, str]:
    global _AIRPORT_COUNTRIES
    if _AIRPORT_COUNTRIES is None:
        _AIRPORT_COUNTRIES = _load_airport_countries()
    return _AIRPORT_COUNTRIES


@dataclass(frozen=True)
class DutyPolicy:
    """Check-in/check-out margins used when the roster omits duty bounds."""

    pre_duty_minutes: int = 60
    post_duty_domestic_minutes: int = 30
    post_duty_international_minutes: int = 45
    domestic_countries: tuple[str, ...] = ("BR",)
    airports: Mapping[str, str] = field(default_factory=airport_countries)

    def is_domestic(self, airport: str) -> bool:
        # Unknown airports default to domestic.
        country = self.airports.get(airport.strip().upper())
        return country is None or country in self.domestic_countries


_RANK_TOKENS = {r.value: r for r in CrewRank}
_KIND_TOKENS = {k.value: k for k in EventKind}
_SUBKIND_TOKENS = {s.value: s for s in EventSubkind}


def _parse_row(rownum: int, row: Mapping[str, str], schema: ColumnMap):
    """Parse one CSV row; returns (event, diagnostics). Event is None when
    any diagnostic was raised."""
    diags: list[ParseDiagnostic] = []

    def cell(col: str) -> str:
        return (row.get(col) or "").strip()

    crew_id = cell(schema.crew_id)
    if not crew_id:
        diags.append(ParseDiagnostic(rownum, schema.crew_id, "empty crew id"))

    kind_txt = cell(schema.kind)
    kind = _KIND_TOKENS.get(kind_txt)
    if kind is None:
        diags.append(ParseDiagnostic(
            rownum, schema.kind, f"unknown kind {kind_txt!r}", crew_id))

    subkind_txt = cell(schema.subkind)
    if subkind_txt:
        subkind = _SUBKIND_TOKENS.get(subkind_txt)
        if subkind is None:
            diags.append(ParseDiagnostic(
                rownum, schema.subkind, f"unknown subkind {subkind_txt!r}", crew_id))
    else:
        subkind = EventSubkind.FLIGHT if kind is EventKind.CREWING else EventSubkind.OTHER

    def stamp(col: str, required: bool) -> Optional[int]:
        txt = cell(col)
        if not txt:
            if required:
                diags.append(ParseDiagnostic(rownum, col, "missing timestamp", crew_id))
            return None
        try:
            return parse_minutes(txt)
        except ValueError:
            diags.append(ParseDiagnostic(
                rownum, col, f"unparseable timestamp {txt!r}", crew_id))
            return None

    start = stamp(schema.start, required=True)
    end = stamp(schema.end, required=True)
    if start is not None and end is not None and end <= start:
        diags.append(ParseDiagnostic(rownum, schema.end, "negative duration", crew_id))

    origin = cell(schema.origin).upper()
    destination = cell(schema.destination).upper()
    if kind is EventKind.CREWING and (not origin or not destination):
        diags.append(ParseDiagnostic(
            rownum, schema.origin, "crewing event without origin/destination", crew_id))

    duty_start = stamp(schema.duty_start, required=False)
    duty_end = stamp(schema.duty_end, required=False)
    if duty_start is not None and duty_end is not None and duty_end <= duty_start:
        diags.append(ParseDiagnostic(rownum, schema.duty_end, "negative duty duration", crew_id))

    rank = _RANK_TOKENS.get(cell(schema.rank), CrewRank.UNKNOWN)

    if diags:
        return None, diags
    return RosterEvent(
        crew_id=crew_id, kind=kind, subkind=subkind, start=start, end=end,
        origin=origin, destination=destination,
        duty_start=duty_start, duty_end=duty_end, rank=rank,
    ), diags


def parse_roster_csv(
    data: bytes | str,
    schema: ColumnMap = ColumnMap(),
) -> tuple[list[RosterEvent], list[ParseDiagnostic]]:
    """Parse a roster CSV into events sorted by (crew_id, start).

    Malformed rows are skipped and reported; a missing header column is a
    hard RosterFormatError naming the column.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise RosterFormatError(f"input is not UTF-8 text: {exc}") from exc
    else:
        text = data

    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames or []
    for col in schema.columns():
        if col not in header:
            raise RosterFormatError(f"missing mandatory column {col!r}")

    events: list[RosterEvent] = []
    diagnostics: list[ParseDiagnostic] = []
    for rownum, row in enumerate(reader, start=2):  # row 1 is the header
        event, diags = _parse_row(rownum, row, schema)
        diagnostics.extend(diags)
        if event is not None:
            events.append(event)

    events.sort(key=lambda e: (e.crew_id, e.start, e.end))
    return events, diagnostics


def serialize_roster_csv(events: Iterable[RosterEvent]) -> str:
    """Emit events in the canonical column order; parse/serialize round-trips
    byte-stably (LF line endings, fixed timestamp form)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(COLUMN_ORDER)
    for e in events:
        writer.writerow([
            e.crew_id, e.kind.value, e.subkind.value,
            format_minutes(e.start), format_minutes(e.end),
            e.origin, e.destination,
            format_minutes(e.duty_start) if e.duty_start is not None else "",
            format_minutes(e.duty_end) if e.duty_end is not None else "",
            e.rank.value,
        ])
    return out.getvalue()


def _clip(value: Optional[int], lo: int, hi: int) -> Optional[int]:
    if value is None:
        return None
    return min(max(value, lo), hi)


def apply_filters(
    events: Sequence[RosterEvent],
    epoch: Epoch,
    policy: FilterPolicy = FilterPolicy(),
) -> ValidatedRoster:
    """Drop standbys, clip events to the epoch and validate the survivors.

    Boundary-straddling events are truncated at the epoch edge (duty bounds
    too, preserving duty-time additivity across epochs). The roster is
    rejected when Crewing events still overlap or nothing survives.
    """
    crew_id = events[0].crew_id if events else ""
    kept: list[RosterEvent] = []
    for e in events:
        if policy.drop_home_standby and e.subkind is EventSubkind.HOME_STANDBY:
            continue
        start = max(e.start, epoch.begin)
        end = min(e.end, epoch.end)
        if start >= end:
            continue
        kept.append(replace(
            e, start=start, end=end,
            duty_start=_clip(e.duty_start, epoch.begin, epoch.end),
            duty_end=_clip(e.duty_end, epoch.begin, epoch.end),
        ))

    kept.sort(key=lambda e: (e.start, e.end))
    if not kept:
        return ValidatedRoster(crew_id, epoch, (), True, RejectReason.EMPTY_AFTER_FILTER)

    crewing = [e for e in kept if e.kind is EventKind.CREWING]
    for prev, cur in zip(crewing, crewing[1:]):
        if cur.start < prev.end:
            return ValidatedRoster(crew_id, epoch, tuple(kept), True,
                                   RejectReason.OVERLAP_CONFLICT)

    return ValidatedRoster(crew_id, epoch, tuple(kept), False, RejectReason.NONE)


def default_duty_bounds(event: RosterEvent, policy: DutyPolicy = DutyPolicy()) -> tuple[int, int]:
    """Resolve the duty period of an event.

    Explicit bounds pass through unchanged. Crewing events without them get
    check-in 60 min before take-off and check-out 30 min (domestic) or
    45 min (international destination) after landing. Working events
    default to their own start/end.
    """
    duty_start = event.duty_start
    duty_end = event.duty_end
    if duty_start is None:
        if event.kind is EventKind.CREWING:
            duty_start = event.start - policy.pre_duty_minutes
        else:
            duty_start = event.start
    if duty_end is None:
        if event.kind is EventKind.CREWING:
            if policy.is_domestic(event.destination):
                duty_end = event.end + policy.post_duty_domestic_minutes
            else:
                duty_end = event.end + policy.post_duty_international_minutes
        else:
            duty_end = event.end
    return duty_start, duty_end


def resolve_duty_bounds(
    events: Sequence[RosterEvent],
    policy: DutyPolicy = DutyPolicy(),
) -> list[RosterEvent]:
    """Fill in every event's duty period.

    Run this before epoch clipping so defaulted duty margins get truncated
    at epoch edges like everything else.
    """
    resolved = []
    for e in events:
        ds, de = default_duty_bounds(e, policy)
        resolved.append(replace(e, duty_start=ds, duty_end=de))
    return resolved
