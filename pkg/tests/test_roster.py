import random

import pytest

from crewfatigue.roster import (ColumnMap, DutyPolicy, Epoch, EventKind,
                                EventSubkind, FilterPolicy, RejectReason,
                                RosterEvent, RosterFormatError, apply_filters,
                                default_duty_bounds, parse_roster_csv,
                                serialize_roster_csv)
from crewfatigue.timebase import parse_minutes

HEADER = "id,kind,subkind,start,end,origin,destination,duty_start,duty_end,rank"


def mins(text):
    return parse_minutes(text)


def test_parse_minimal_crewing_row():
    csv_text = (HEADER + "\n"
                "P1,Crewing,Flight,2019-01-05T10:00,2019-01-05T11:00,CGH,GRU,,,Captain\n")
    events, diags = parse_roster_csv(csv_text)
    assert diags == []
    assert len(events) == 1
    e = events[0]
    assert e.crew_id == "P1"
    assert e.kind is EventKind.CREWING
    assert e.subkind is EventSubkind.FLIGHT
    assert e.start == mins("2019-01-05T10:00")
    assert e.end - e.start == 60
    assert (e.origin, e.destination) == ("CGH", "GRU")
    assert e.duty_start is None and e.duty_end is None


def test_parse_negative_duration_row():
    csv_text = (HEADER + "\n"
                "P1,Crewing,Flight,2019-01-05T11:00,2019-01-05T10:00,CGH,GRU,,,\n")
    events, diags = parse_roster_csv(csv_text)
    assert events == []
    assert len(diags) == 1
    assert diags[0].reason == "negative duration"
    assert diags[0].row == 2


def _fixture_rows():
    # 12 data rows, rows 7 and 11 malformed (bad timestamp / end < start).
    return [
        "A1,Crewing,Flight,2019-01-02T08:00,2019-01-02T09:10,CGH,SDU,2019-01-02T07:00,2019-01-02T09:40,Captain",
        "A1,Crewing,Flight,2019-01-02T10:00,2019-01-02T11:10,SDU,CGH,2019-01-02T07:00,2019-01-02T11:40,Captain",
        "A1,Working,Training,2019-01-03T09:00,2019-01-03T17:00,CGH,CGH,,,Captain",
        "A1,Crewing,Flight,2019-01-04T23:00,2019-01-05T00:10,CGH,GRU,,,Captain",
        "B2,Crewing,Flight,2019-01-02T14:00,2019-01-02T15:30,BSB,GRU,,,FirstOfficer",
        "B2,Working,HomeStandby,2019-01-03T08:00,2019-01-03T20:00,,,,,FirstOfficer",
        "B2,Crewing,Flight,2019-01-04T14:00,2019-01-04Tnoon,GRU,BSB,,,FirstOfficer",
        "B2,Crewing,Flight,2019-01-05T14:00,2019-01-05T15:30,GRU,BSB,,,FirstOfficer",
        "C3,Crewing,Flight,2019-01-06T02:30,2019-01-06T04:00,GRU,EZE,,,CabinCrew",
        "C3,Working,Deadhead,2019-01-07T08:00,2019-01-07T10:00,EZE,GRU,,,CabinCrew",
        "C3,Crewing,Flight,2019-01-08T12:00,2019-01-08T11:00,GRU,POA,,,CabinCrew",
        "C3,Crewing,Flight,2019-01-09T12:00,2019-01-09T13:00,GRU,POA,,,CabinCrew",
    ]


def test_parse_fixture_with_two_malformed_rows():
    csv_text = HEADER + "\n" + "\n".join(_fixture_rows()) + "\n"
    events, diags = parse_roster_csv(csv_text)
    assert len(events) == 10
    assert len(diags) == 2
    assert {d.row for d in diags} == {8, 12}  # header is row 1

    # Hand-parsed expectation for the surviving rows, sorted by (id, start).
    expected = [
        ("A1", EventKind.CREWING, "2019-01-02T08:00"),
        ("A1", EventKind.CREWING, "2019-01-02T10:00"),
        ("A1", EventKind.WORKING, "2019-01-03T09:00"),
        ("A1", EventKind.CREWING, "2019-01-04T23:00"),
        ("B2", EventKind.CREWING, "2019-01-02T14:00"),
        ("B2", EventKind.WORKING, "2019-01-03T08:00"),
        ("B2", EventKind.CREWING, "2019-01-05T14:00"),
        ("C3", EventKind.CREWING, "2019-01-06T02:30"),
        ("C3", EventKind.WORKING, "2019-01-07T08:00"),
        ("C3", EventKind.CREWING, "2019-01-09T12:00"),
    ]
    got = [(e.crew_id, e.kind, e.start) for e in events]
    assert got == [(i, k, mins(t)) for i, k, t in expected]
    assert events[0].duty_start == mins("2019-01-02T07:00")
    assert events[5].subkind is EventSubkind.HOME_STANDBY


def test_missing_column_is_hard_error():
    bad = "id,kind,start,end,origin,destination,duty_start,duty_end,rank\n"
    with pytest.raises(RosterFormatError, match="subkind"):
        parse_roster_csv(bad)


def test_non_utf8_is_hard_error():
    with pytest.raises(RosterFormatError, match="UTF-8"):
        parse_roster_csv(b"\xff\xfe" + HEADER.encode())


def test_custom_column_map():
    csv_text = ("member,type,sub,from,to,dep,arr,ds,de,role\n"
                "P1,Crewing,Flight,2019-01-05T10:00,2019-01-05T11:00,CGH,GRU,,,\n")
    schema = ColumnMap(crew_id="member", kind="type", subkind="sub",
                       start="from", end="to", origin="dep", destination="arr",
                       duty_start="ds", duty_end="de", rank="role")
    events, diags = parse_roster_csv(csv_text, schema)
    assert len(events) == 1 and not diags


def test_roundtrip_parse_serialize_parse():
    csv_text = HEADER + "\n" + "\n".join(_fixture_rows()) + "\n"
    events, _ = parse_roster_csv(csv_text)
    emitted = serialize_roster_csv(events)
    events2, diags2 = parse_roster_csv(emitted)
    assert diags2 == []
    assert events2 == events
    # Byte-stable emission.
    assert serialize_roster_csv(events2) == emitted


def make_event(crew, start, end, kind=EventKind.CREWING,
               subkind=EventSubkind.FLIGHT, **kw):
    kw.setdefault("origin", "CGH")
    kw.setdefault("destination", "GRU")
    return RosterEvent(crew, kind, subkind, start, end, **kw)


EPOCH = Epoch("Jan-19", parse_minutes("2019-01-01T00:00"), 30)


def test_filters_drop_home_standby():
    t0 = EPOCH.begin
    events = [
        make_event("A", t0 + 600, t0 + 660),
        make_event("A", t0 + 2040, t0 + 2100),
        make_event("A", t0 + 3480, t0 + 4200, kind=EventKind.WORKING,
                   subkind=EventSubkind.HOME_STANDBY, origin="", destination=""),
        make_event("A", t0 + 4920, t0 + 4980),
        make_event("A", t0 + 6360, t0 + 6420),
    ]
    roster = apply_filters(events, EPOCH)
    assert not roster.rejected
    assert len(roster.events) == 4
    assert all(e.subkind is not EventSubkind.HOME_STANDBY for e in roster.events)


def test_filters_empty_after_filter():
    t0 = EPOCH.begin
    events = [make_event("A", t0 - 600, t0 - 500)]
    roster = apply_filters(events, EPOCH)
    assert roster.rejected
    assert roster.reject_reason is RejectReason.EMPTY_AFTER_FILTER


def test_filters_overlap_conflict():
    t0 = EPOCH.begin
    events = [
        make_event("A", t0 + 600, t0 + 720),
        make_event("A", t0 + 660, t0 + 780),
    ]
    roster = apply_filters(events, EPOCH)
    assert roster.rejected
    assert roster.reject_reason is RejectReason.OVERLAP_CONFLICT


def test_filters_truncate_straddling_event():
    t0 = EPOCH.begin
    events = [make_event("A", t0 - 30, t0 + 60,
                         duty_start=t0 - 90, duty_end=t0 + 90)]
    roster = apply_filters(events, EPOCH)
    assert not roster.rejected
    e = roster.events[0]
    assert e.start == t0 and e.end == t0 + 60
    assert e.duty_start == t0 and e.duty_end == t0 + 90


def test_filters_idempotent():
    t0 = EPOCH.begin
    events = [
        make_event("A", t0 - 30, t0 + 60),
        make_event("A", t0 + 600, t0 + 660),
        make_event("A", t0 + 700, t0 + 800, kind=EventKind.WORKING,
                   subkind=EventSubkind.HOME_STANDBY, origin="", destination=""),
    ]
    once = apply_filters(events, EPOCH)
    twice = apply_filters(list(once.events), EPOCH)
    assert once.events == twice.events
    assert once.reject_reason == twice.reject_reason


def test_total_event_time_within_epoch():
    rng = random.Random(7)
    for _ in range(50):
        events = []
        cursor = EPOCH.begin - 1000
        for _ in range(rng.randint(1, 40)):
            cursor += rng.randint(30, 900)
            dur = rng.randint(30, 600)
            events.append(make_event("A", cursor, cursor + dur))
            cursor += dur
        roster = apply_filters(events, EPOCH)
        if roster.rejected:
            continue
        total = sum(e.end - e.start for e in roster.events)
        assert total <= EPOCH.days * 1440


def test_epoch_validation():
    with pytest.raises(ValueError):
        Epoch("bad", 0, 20)
    e = Epoch("ok", 0, 15)
    assert e.end - e.begin == 15 * 1440


def test_duty_bounds_domestic():
    e = make_event("A", mins("2019-01-05T10:00"), mins("2019-01-05T11:00"))
    ds, de = default_duty_bounds(e)
    assert ds == mins("2019-01-05T09:00")
    assert de == mins("2019-01-05T11:30")


def test_duty_bounds_international():
    e = make_event("A", mins("2019-01-05T10:00"), mins("2019-01-05T13:00"),
                   origin="GRU", destination="EZE")
    ds, de = default_duty_bounds(e)
    assert ds == mins("2019-01-05T09:00")
    assert de == mins("2019-01-05T13:45")


def test_duty_bounds_unknown_airport_is_domestic():
    e = make_event("A", 1000, 1100, origin="CGH", destination="ZZZ")
    _, de = default_duty_bounds(e)
    assert de == 1100 + 30


def test_duty_bounds_passthrough():
    e = make_event("A", 1000, 1100, duty_start=900, duty_end=1200)
    assert default_duty_bounds(e) == (900, 1200)


def test_duty_bounds_policy_override():
    policy = DutyPolicy(pre_duty_minutes=45, post_duty_domestic_minutes=20,
                        domestic_countries=("AR",), airports={"EZE": "AR"})
    e = make_event("A", 1000, 1100, origin="AEP", destination="EZE")
    ds, de = default_duty_bounds(e, policy)
    assert (ds, de) == (955, 1120)


def test_filter_policy_keeps_standby_when_disabled():
    t0 = EPOCH.begin
    events = [make_event("A", t0 + 600, t0 + 700, kind=EventKind.WORKING,
                         subkind=EventSubkind.HOME_STANDBY,
                         origin="", destination="")]
    roster = apply_filters(events, EPOCH, FilterPolicy(drop_home_standby=False))
    assert not roster.rejected
    assert len(roster.events) == 1
