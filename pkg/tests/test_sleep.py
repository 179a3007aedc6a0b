from crewfatigue.roster import (Epoch, EventKind, EventSubkind, RejectReason,
                                RosterEvent, ValidatedRoster)
from crewfatigue.sleep import (SLEEP_KINDS, BehaviorProfile, Interval,
                               IntervalKind, ScheduleTimeline, build_timeline,
                               insert_auto_naps, insert_duty_envelopes,
                               insert_recovery_naps, predict_main_sleep)
from crewfatigue.synth import SynthConfig, generate
from crewfatigue.timebase import parse_minutes

EPOCH = Epoch("Jan-19", parse_minutes("2019-01-01T00:00"), 30)
T0 = EPOCH.begin


def hm(day, hh, mm=0):
    return T0 + day * 1440 + hh * 60 + mm


def working_duty(crew, start, end):
    return RosterEvent(crew, EventKind.WORKING, EventSubkind.TRAINING,
                       start, end, duty_start=start, duty_end=end)


def roster_of(*events):
    evs = tuple(sorted(events, key=lambda e: e.start))
    return ValidatedRoster(evs[0].crew_id, EPOCH, evs, False, RejectReason.NONE)


def kinds_at(timeline, kind):
    return [(iv.start, iv.end) for iv in timeline.intervals if iv.kind is kind]


def test_envelopes_standard_commute():
    roster = roster_of(working_duty("A", hm(1, 9), hm(1, 17)))
    tl = insert_duty_envelopes(roster, BehaviorProfile())
    assert kinds_at(tl, IntervalKind.PREPARE) == [(hm(1, 7), hm(1, 8))]
    assert kinds_at(tl, IntervalKind.COMMUTE) == [(hm(1, 8), hm(1, 9)),
                                                  (hm(1, 17), hm(1, 18))]
    assert kinds_at(tl, IntervalKind.DUTY) == [(hm(1, 9), hm(1, 17))]


def test_envelopes_extended_commute_starts_earlier():
    roster = roster_of(working_duty("A", hm(1, 9), hm(1, 17)))
    tl = insert_duty_envelopes(roster, BehaviorProfile(commute_minutes=120))
    assert kinds_at(tl, IntervalKind.PREPARE) == [(hm(1, 6), hm(1, 7))]
    assert kinds_at(tl, IntervalKind.COMMUTE)[0] == (hm(1, 7), hm(1, 9))


def test_envelopes_merge_small_gap():
    roster = roster_of(working_duty("A", hm(1, 9), hm(1, 12)),
                       working_duty("A", hm(1, 12, 30), hm(1, 17)))
    tl = insert_duty_envelopes(roster, BehaviorProfile())
    # Nothing inserted inside the 30-minute gap; it is absorbed as duty.
    assert kinds_at(tl, IntervalKind.PREPARE) == [(hm(1, 7), hm(1, 8))]
    assert kinds_at(tl, IntervalKind.COMMUTE) == [(hm(1, 8), hm(1, 9)),
                                                  (hm(1, 17), hm(1, 18))]
    assert kinds_at(tl, IntervalKind.DUTY) == [(hm(1, 9), hm(1, 17))]


def test_envelopes_flights_punched_out():
    flight = RosterEvent("A", EventKind.CREWING, EventSubkind.FLIGHT,
                         hm(1, 10), hm(1, 11), "CGH", "GRU",
                         duty_start=hm(1, 9), duty_end=hm(1, 11, 30))
    tl = insert_duty_envelopes(roster_of(flight), BehaviorProfile())
    assert kinds_at(tl, IntervalKind.FLIGHT) == [(hm(1, 10), hm(1, 11))]
    assert kinds_at(tl, IntervalKind.DUTY) == [(hm(1, 9), hm(1, 10)),
                                               (hm(1, 11), hm(1, 11, 30))]


def test_envelopes_resolve_missing_duty_bounds():
    flight = RosterEvent("A", EventKind.CREWING, EventSubkind.FLIGHT,
                         hm(1, 10), hm(1, 11), "CGH", "GRU")
    tl = insert_duty_envelopes(roster_of(flight), BehaviorProfile())
    assert kinds_at(tl, IntervalKind.PREPARE) == [(hm(1, 7), hm(1, 8))]
    assert kinds_at(tl, IntervalKind.DUTY) == [(hm(1, 9), hm(1, 10)),
                                               (hm(1, 11), hm(1, 11, 30))]


def test_envelopes_reject_rejected_roster():
    import pytest
    from crewfatigue.roster import ValidatedRoster as VR
    bad = VR("A", EPOCH, (), True, RejectReason.EMPTY_AFTER_FILTER)
    with pytest.raises(ValueError, match="rejected"):
        insert_duty_envelopes(bad, BehaviorProfile())


def envelope_group(day, start_hh, end_day, end_hh, profile=BehaviorProfile()):
    """Prepare+commute+duty+commute intervals for a duty block."""
    gs = hm(day, start_hh)
    ge = hm(end_day, end_hh)
    c, p = profile.commute_minutes, profile.preparation_minutes
    return [
        Interval(gs - c - p, gs - c, IntervalKind.PREPARE),
        Interval(gs - c, gs, IntervalKind.COMMUTE),
        Interval(gs, ge, IntervalKind.DUTY),
        Interval(ge, ge + c, IntervalKind.COMMUTE),
    ]


def test_main_sleep_free_night_rest_day_cap():
    # Next envelope 10:00 the following day: rest-day cap ends sleep at 08:00.
    ivs = envelope_group(1, 12, 1, 20)  # duty next day at noon, envelope 10:00
    tl = ScheduleTimeline("A", EPOCH, tuple(ivs))
    out = predict_main_sleep(tl, BehaviorProfile())
    sleeps = kinds_at(out, IntervalKind.SLEEP)
    assert (hm(0, 23), hm(1, 8)) in sleeps
    assert hm(1, 8) - hm(0, 23) == 540


def test_main_sleep_advanced_bedtime_early_start():
    # Envelope at 05:00: advance to 21:00 so eight hours fit.
    ivs = envelope_group(1, 7, 1, 15)  # duty 07:00, envelope starts 05:00
    tl = ScheduleTimeline("A", EPOCH, tuple(ivs))
    out = predict_main_sleep(tl, BehaviorProfile(advanced_bedtime=True))
    assert (hm(0, 21), hm(1, 5)) in kinds_at(out, IntervalKind.SLEEP)


def test_main_sleep_advanced_bedtime_off():
    ivs = envelope_group(1, 7, 1, 15)
    tl = ScheduleTimeline("A", EPOCH, tuple(ivs))
    out = predict_main_sleep(tl, BehaviorProfile(advanced_bedtime=False))
    assert (hm(0, 23), hm(1, 5)) in kinds_at(out, IntervalKind.SLEEP)


def test_main_sleep_never_starts_in_awake_zone():
    # Duty runs through the night and ends 14:00: pushed bedtime would land
    # inside the awake zone, so no main sleep is anchored to that night.
    ivs = envelope_group(1, 22, 2, 14)
    tl = ScheduleTimeline("A", EPOCH, tuple(ivs))
    out = predict_main_sleep(tl, BehaviorProfile())
    for s, e in kinds_at(out, IntervalKind.SLEEP):
        clock = s % 1440
        assert not (13 * 60 <= clock < 20 * 60)


def night_duty_group(day, env_start_hh, duty_start_hh, duty_end_hh_next):
    gs = hm(day, env_start_hh)
    duty_start = hm(day, duty_start_hh)
    duty_end = hm(day + 1, duty_end_hh_next)
    return [
        Interval(gs, gs + 60, IntervalKind.PREPARE),
        Interval(gs + 60, duty_start, IntervalKind.COMMUTE),
        Interval(duty_start, duty_end, IntervalKind.DUTY),
        Interval(duty_end, duty_end + 60, IntervalKind.COMMUTE),
    ]


def test_auto_nap_90_minutes_for_11h_span():
    ivs = [Interval(hm(0, 23), hm(1, 7), IntervalKind.SLEEP)]
    ivs += night_duty_group(1, 18, 20, 4)
    tl = ScheduleTimeline("A", EPOCH, tuple(ivs))
    out = insert_auto_naps(tl, BehaviorProfile())
    assert kinds_at(out, IntervalKind.NAP) == [(hm(1, 16, 30), hm(1, 18))]


def test_auto_nap_skipped_below_8h():
    ivs = [Interval(hm(1, 3), hm(1, 11), IntervalKind.SLEEP)]
    ivs += night_duty_group(1, 18, 20, 4)
    tl = ScheduleTimeline("A", EPOCH, tuple(ivs))
    out = insert_auto_naps(tl, BehaviorProfile())
    assert kinds_at(out, IntervalKind.NAP) == []


def test_auto_nap_off_even_when_very_awake():
    ivs = [Interval(hm(0, 19), hm(1, 3), IntervalKind.SLEEP)]
    ivs += night_duty_group(1, 18, 20, 4)
    tl = ScheduleTimeline("A", EPOCH, tuple(ivs))
    out = insert_auto_naps(tl, BehaviorProfile(auto_nap=False))
    assert kinds_at(out, IntervalKind.NAP) == []


def test_auto_nap_band_edges():
    profile = BehaviorProfile()
    for wake_h, expected in ((8, 60), (10, 90), (12, 120), (14, 180)):
        sleep_end = hm(1, 18 - wake_h)
        ivs = [Interval(sleep_end - 480, sleep_end, IntervalKind.SLEEP)]
        ivs += night_duty_group(1, 18, 20, 4)
        out = insert_auto_naps(ScheduleTimeline("A", EPOCH, tuple(ivs)), profile)
        naps = kinds_at(out, IntervalKind.NAP)
        assert naps == [(hm(1, 18) - expected, hm(1, 18))], wake_h


def test_auto_nap_only_before_night_duties():
    # Daytime duty: same wakefulness, no nap.
    ivs = [Interval(hm(0, 20), hm(1, 4), IntervalKind.SLEEP)]
    gs = hm(1, 16)
    ivs += [Interval(gs, gs + 60, IntervalKind.PREPARE),
            Interval(gs + 60, gs + 120, IntervalKind.COMMUTE),
            Interval(hm(1, 18), hm(1, 21), IntervalKind.DUTY),
            Interval(hm(1, 21), hm(1, 22), IntervalKind.COMMUTE)]
    out = insert_auto_naps(ScheduleTimeline("A", EPOCH, tuple(ivs)),
                           BehaviorProfile())
    assert kinds_at(out, IntervalKind.NAP) == []


def test_recovery_nap_after_late_duty():
    # Duty ends 03:00 with no sleep in the prior 16 h: 210-minute nap.
    ivs = [Interval(hm(0, 19), hm(1, 3), IntervalKind.DUTY)]
    tl = ScheduleTimeline("A", EPOCH, tuple(ivs))
    out = insert_recovery_naps(tl, BehaviorProfile())
    assert kinds_at(out, IntervalKind.RECOVERY_NAP) == [(hm(1, 3), hm(1, 6, 30))]


def test_recovery_nap_gate_on_daytime_end():
    ivs = [Interval(hm(1, 7), hm(1, 15), IntervalKind.DUTY)]
    out = insert_recovery_naps(ScheduleTimeline("A", EPOCH, tuple(ivs)),
                               BehaviorProfile())
    assert kinds_at(out, IntervalKind.RECOVERY_NAP) == []


def test_recovery_nap_skipped_when_sleep_optimal():
    ivs = [Interval(hm(0, 11), hm(0, 19), IntervalKind.SLEEP),
           Interval(hm(0, 19), hm(1, 3), IntervalKind.DUTY)]
    out = insert_recovery_naps(ScheduleTimeline("A", EPOCH, tuple(ivs)),
                               BehaviorProfile())
    assert kinds_at(out, IntervalKind.RECOVERY_NAP) == []


def test_recovery_nap_clipped_by_next_block():
    # Second duty ends inside the awake zone, so only the first one naps,
    # and its nap is clipped at the next block.
    ivs = [Interval(hm(0, 19), hm(1, 3), IntervalKind.DUTY),
           Interval(hm(1, 5), hm(1, 14), IntervalKind.DUTY)]
    out = insert_recovery_naps(ScheduleTimeline("A", EPOCH, tuple(ivs)),
                               BehaviorProfile())
    assert kinds_at(out, IntervalKind.RECOVERY_NAP) == [(hm(1, 3), hm(1, 5))]


def _synth_rosters(n=12, seed=5):
    return generate(SynthConfig(seed=seed, n_crew=n))


def test_timeline_invariants_on_synthetic_set():
    for roster in _synth_rosters():
        tl = build_timeline(roster)
        # Ordered, non-overlapping (enforced at construction), sleeps >= 60.
        for iv in tl.intervals:
            if iv.kind in SLEEP_KINDS:
                assert iv.minutes >= 60
        # Duty time preserved: every minute of every input duty period is
        # covered by Duty/Flight intervals.
        duty_cover = sorted((iv.start, iv.end) for iv in tl.intervals
                            if iv.kind in (IntervalKind.DUTY, IntervalKind.FLIGHT))
        for e in roster.events:
            t = e.duty_start
            for s, ee in duty_cover:
                if s <= t < ee:
                    t = ee
                if t >= e.duty_end:
                    break
            assert t >= e.duty_end, (roster.crew_id, e)


def test_auto_nap_off_removes_all_nap_time():
    for roster in _synth_rosters():
        tl = build_timeline(roster, BehaviorProfile(auto_nap=False))
        assert tl.total_minutes(frozenset({IntervalKind.NAP})) == 0


def test_advanced_bedtime_off_never_increases_sleep():
    for roster in _synth_rosters(16, seed=11):
        on = build_timeline(roster, BehaviorProfile(advanced_bedtime=True))
        off = build_timeline(roster, BehaviorProfile(advanced_bedtime=False))
        assert off.total_minutes(SLEEP_KINDS) <= on.total_minutes(SLEEP_KINDS)


def test_estimator_deterministic():
    for roster in _synth_rosters(4):
        assert build_timeline(roster) == build_timeline(roster)


def test_free_fill_and_csv_export():
    ivs = envelope_group(1, 12, 1, 20)
    tl = ScheduleTimeline("A", EPOCH, tuple(ivs))
    filled = tl.with_free_filled(T0, T0 + 2 * 1440)
    covered = 0
    prev_end = T0
    for iv in filled.intervals:
        assert iv.start == prev_end
        prev_end = iv.end
        covered += iv.minutes
    assert covered == 2 * 1440
    text = filled.to_csv()
    assert text.splitlines()[0] == "crew_id,start,end,kind"
    assert "Free" in text
