"""Minute-resolution schedule time on a single reference clock.

Every timestamp in the pipeline is an integer count of minutes since
1970-01-01 00:00 of one configured legal time. There is no per-airport
timezone conversion: rosters, sleep windows and circadian clock all live
on the same wall clock.
"""

from datetime import date, datetime

MINUTES_PER_DAY = 1440
MINUTES_PER_HOUR = 60

_ORIGIN_ORDINAL = date(1970, 1, 1).toordinal()


def parse_minutes(text: str) -> int:
    """Parse a local 'YYYY-MM-DDTHH:MM' timestamp into minutes since origin."""
    dt = datetime.strptime(text.strip(), "%Y-%m-%dT%H:%M")
    days = dt.date().toordinal() - _ORIGIN_ORDINAL
    return days * MINUTES_PER_DAY + dt.hour * MINUTES_PER_HOUR + dt.minute


def format_minutes(t: int) -> str:
    """Inverse of parse_minutes; emits the canonical 'YYYY-MM-DDTHH:MM' form."""
    days, rem = divmod(int(t), MINUTES_PER_DAY)
    d = date.fromordinal(_ORIGIN_ORDINAL + days)
    return f"{d.isoformat()}T{rem // 60:02d}:{rem % 60:02d}"


def clock_minutes(t: int) -> int:
    """Wall-clock minute of day in [0, 1440)."""
    return int(t) % MINUTES_PER_DAY


def day_index(t: int) -> int:
    """Calendar day number containing minute t (floor division, so negative
    timestamps stay consistent)."""
    return int(t) // MINUTES_PER_DAY


def parse_clock(text: str) -> int:
    """Parse 'HH:MM' into a minute of day."""
    hh, mm = text.strip().split(":")
    m = int(hh) * MINUTES_PER_HOUR + int(mm)
    if not 0 <= m < MINUTES_PER_DAY:
        raise ValueError(f"clock time out of range: {text!r}")
    return m


def format_clock(m: int) -> str:
    return f"{int(m) // 60:02d}:{int(m) % 60:02d}"
