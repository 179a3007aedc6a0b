import pytest

from crewfatigue.config import (DEFAULT_EPOCHS, EPOCH_PRESETS, ConfigError,
                                RunConfig, config_digest, load_config)
from crewfatigue.engine import EngineParams
from crewfatigue.timebase import parse_minutes


def test_epoch_presets_match_extraction_table():
    expected = {
        "Jan-19": ("2019-01-01T00:00", 30),
        "Feb-19": ("2019-01-31T00:00", 30),
        "Mar-19": ("2019-03-02T00:00", 30),
        "Jun-19": ("2019-05-31T00:00", 30),
        "Sep-19": ("2019-08-31T00:00", 30),
        "Nov-19": ("2019-10-31T00:00", 30),
        "Feb-20": ("2020-01-31T00:00", 30),
        "Mar-19-h1": ("2019-03-01T00:00", 15),
        "Mar-20-h1": ("2020-03-01T00:00", 15),
    }
    for label, (begin, days) in expected.items():
        e = EPOCH_PRESETS[label]
        assert e.begin == parse_minutes(begin), label
        assert e.days == days, label
    assert len(EPOCH_PRESETS) == 16


def test_default_epochs_are_non_overlapping_30_day_set():
    assert len(DEFAULT_EPOCHS) == 14
    ordered = sorted(DEFAULT_EPOCHS, key=lambda e: e.begin)
    for prev, cur in zip(ordered, ordered[1:]):
        assert cur.begin >= prev.end
    assert all(e.days == 30 for e in DEFAULT_EPOCHS)


def test_runconfig_rejects_overlapping_epochs():
    with pytest.raises(ConfigError, match="overlap"):
        RunConfig(epochs=(EPOCH_PRESETS["Feb-19"], EPOCH_PRESETS["Mar-19-h1"]))


def test_load_config_defaults_without_file():
    cfg = load_config(None)
    assert cfg.fha_threshold == 77.0
    assert cfg.wocl_window == (120, 360)
    assert cfg.profile.auto_nap and cfg.profile.advanced_bedtime
    assert cfg.engine.reservoir_capacity == 2880.0
    assert cfg.risk.b == 79.6


def test_load_config_overrides(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(
        "[run]\nfha_threshold = 80\nwocl_window = 01:30-05:30\n"
        "[engine]\nsleep_recovery_rate = 0.006\n"
        "[profile]\ncommute_minutes = 120\nawake_zone = 12:00-19:00\n"
        "[risk]\nsigma_b = 2.5\n"
        "[synth]\nseed = 9\nn_crew = 5\n")
    cfg = load_config(str(path))
    assert cfg.fha_threshold == 80.0
    assert cfg.wocl_window == (90, 330)
    assert cfg.engine.sleep_recovery_rate == 0.006
    assert cfg.profile.commute_minutes == 120
    assert cfg.profile.awake_zone_start_minutes == 720
    assert cfg.risk.sigma_b == 2.5
    assert cfg.synth.seed == 9 and cfg.synth.n_crew == 5


def test_load_config_rejects_unknown_keys(tmp_path):
    for body in ("[engine]\nwarp_drive = 9\n",
                 "[nonsense]\nx = 1\n",
                 "[profile]\nauto_nap = maybe\n"):
        path = tmp_path / "bad.ini"
        path.write_text(body)
        with pytest.raises(ConfigError):
            load_config(str(path))


def test_config_digest_tracks_content(tmp_path):
    a = config_digest(load_config(None))
    b = config_digest(load_config(None))
    assert a == b
    path = tmp_path / "run.ini"
    path.write_text("[run]\nfha_threshold = 76\n")
    assert config_digest(load_config(str(path))) != a


def test_engine_tick_is_fixed():
    with pytest.raises(ValueError, match="1-minute"):
        EngineParams(tick_minutes=5)
