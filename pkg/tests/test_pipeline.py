import numpy as np
import pytest

from crewfatigue.config import EPOCH_PRESETS, RunConfig
from crewfatigue.kpi import read_kpi_csv
from crewfatigue import pipeline
from crewfatigue.pipeline import InsufficientBinsError, fit_kpi_table
from crewfatigue.roster import Epoch
from crewfatigue.synth import DistSpec, SynthConfig, generate, rosters_to_csv
from crewfatigue.timebase import parse_minutes

HEADER = "id,kind,subkind,start,end,origin,destination,duty_start,duty_end,rank"


def test_analyze_crlf_input_parses():
    rows = [HEADER,
            "P1,Crewing,Flight,2019-01-05T10:00,2019-01-05T11:00,CGH,GRU,,,Captain"]
    text = "\r\n".join(rows) + "\r\n"
    cfg = RunConfig(epochs=(EPOCH_PRESETS["Jan-19"],))
    result = pipeline.analyze_csv(text, cfg)
    assert result.manifest["accepted"] == 1
    assert result.diagnostics == []


def test_analyze_multiple_epochs_one_row_each():
    jan = EPOCH_PRESETS["Jan-19"]
    feb = EPOCH_PRESETS["Feb-19"]
    rows = [HEADER]
    # One flight in January, one in February, plus a short flight straddling
    # the boundary (clipped into both periods).
    rows.append("P1,Crewing,Flight,2019-01-10T10:00,2019-01-10T11:00,CGH,GRU,,,Captain")
    rows.append("P1,Crewing,Flight,2019-02-10T10:00,2019-02-10T11:00,GRU,CGH,,,Captain")
    rows.append("P1,Crewing,Flight,2019-01-30T23:30,2019-01-31T00:30,CGH,POA,,,Captain")
    cfg = RunConfig(epochs=(jan, feb))
    result = pipeline.analyze_csv("\n".join(rows) + "\n", cfg)
    assert result.manifest["accepted"] == 2
    by_epoch = {r.epoch: r for r in result.records}
    assert set(by_epoch) == {"Jan-19", "Feb-19"}
    # The straddling flight contributes one clipped sector to each period.
    assert by_epoch["Jan-19"].crewing_events == 2
    assert by_epoch["Feb-19"].crewing_events == 2
    # Night-shift accounting follows the clipped duty periods.
    assert by_epoch["Jan-19"].night_shifts == 0
    assert by_epoch["Feb-19"].night_shifts == 1


def test_analyze_skips_epochs_without_presence():
    cfg = RunConfig(epochs=(EPOCH_PRESETS["Jan-19"], EPOCH_PRESETS["Jun-19"]))
    rows = [HEADER,
            "P1,Crewing,Flight,2019-01-10T10:00,2019-01-10T11:00,CGH,GRU,,,Captain"]
    result = pipeline.analyze_csv("\n".join(rows) + "\n", cfg)
    assert result.manifest["rosters_considered"] == 1
    assert result.manifest["rejected"] == 0


def test_fit_outputs_are_deterministic(tmp_path):
    rosters = generate(SynthConfig(seed=31, n_crew=60))
    cfg = RunConfig(epochs=(rosters[0].epoch,))
    result = pipeline.analyze_csv(rosters_to_csv(rosters), cfg)
    records = read_kpi_csv(result.kpi_csv())
    a = fit_kpi_table(records, "emc_vs_nns")
    b = fit_kpi_table(records, "emc_vs_nns")
    assert a.curve_csv() == b.curve_csv()
    assert a.fit.to_json() == b.fit.to_json()


def test_fit_requires_enough_bins_for_gof():
    rosters = generate(SynthConfig(
        seed=5, n_crew=30,
        target_night_shifts=DistSpec.from_string("5:0.5,6:0.5")))
    cfg = RunConfig(epochs=(rosters[0].epoch,))
    result = pipeline.analyze_csv(rosters_to_csv(rosters), cfg)
    with pytest.raises(InsufficientBinsError):
        fit_kpi_table(result.records, "emc_vs_nns")


def test_wocl_distributions_grouped_by_epoch():
    rosters = generate(SynthConfig(seed=8, n_crew=20))
    cfg = RunConfig(epochs=(rosters[0].epoch,))
    result = pipeline.analyze_csv(rosters_to_csv(rosters), cfg)
    dists = pipeline.wocl_distributions(result.records)
    assert set(dists) == {"Jan-19"}
    dist = dists["Jan-19"]
    assert dist.total == 20
    counts = np.zeros(len(dist.counts), dtype=int)
    for r in result.records:
        counts[r.wocl_events] += 1
    assert tuple(counts) == dist.counts


def test_timelines_csv_covers_accepted_rosters():
    rosters = generate(SynthConfig(seed=12, n_crew=4))
    cfg = RunConfig(epochs=(rosters[0].epoch,))
    result = pipeline.analyze_csv(rosters_to_csv(rosters), cfg)
    text = result.timelines_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "crew_id,epoch,start,end,kind"
    crews = {line.split(",")[0] for line in lines[1:]}
    assert crews == {r.crew_id for r in result.records}
    kinds = {line.split(",")[4] for line in lines[1:]}
    assert "Sleep" in kinds and ("Duty" in kinds or "Flight" in kinds)


def test_custom_epoch_at_odd_origin_alignment():
    # An epoch starting mid-year still samples on its own 30-minute grid.
    epoch = Epoch("odd", parse_minutes("2019-06-10T00:00"), 15)
    synth = SynthConfig(seed=2, n_crew=3, epoch=epoch,
                        target_night_shifts=DistSpec.from_string("4:1"),
                        target_wocl_events=DistSpec.from_string("2:1"))
    rosters = generate(synth)
    cfg = RunConfig(epochs=(epoch,))
    result = pipeline.analyze_csv(rosters_to_csv(rosters), cfg)
    assert result.manifest["accepted"] == 3
    ts = {s.t for s in result.samples}
    assert all((t - epoch.begin) % 30 == 0 for t in ts)
    assert min(ts) >= epoch.begin
    assert max(ts) < epoch.end
