"""Run configuration: INI file with [run], [epochs], [engine], [profile],
[duty], [filters], [risk] and [synth] sections.

Every default reproduces the standard parametrization, so a bare run
needs no file at all. File values override field by field; unknown keys
are configuration errors, not warnings.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field, fields, replace
from typing import Optional

from .engine import EngineParams
from .risk import RiskParam
from .roster import ColumnMap, DutyPolicy, Epoch, FilterPolicy
from .sleep import BehaviorProfile
from .synth import DistSpec, SynthConfig
from .timebase import format_clock, format_minutes, parse_clock, parse_minutes


class ConfigError(Exception):
    pass


def _epoch(label: str, begin: str, days: int) -> Epoch:
    return Epoch(label, parse_minutes(begin), days)


# Monthly extraction windows. The 30-day set is mutually non-overlapping
# and is the default for a run; the 15-day mid-March halves overlap the
# February/March windows, so they ship as presets to be selected
# explicitly.
EPOCH_PRESETS: dict[str, Epoch] = {e.label: e for e in [
    _epoch("Jan-19", "2019-01-01T00:00", 30),
    _epoch("Feb-19", "2019-01-31T00:00", 30),
    _epoch("Mar-19", "2019-03-02T00:00", 30),
    _epoch("Apr-19", "2019-04-01T00:00", 30),
    _epoch("May-19", "2019-05-01T00:00", 30),
    _epoch("Jun-19", "2019-05-31T00:00", 30),
    _epoch("Jul-19", "2019-07-01T00:00", 30),
    _epoch("Aug-19", "2019-08-01T00:00", 30),
    _epoch("Sep-19", "2019-08-31T00:00", 30),
    _epoch("Oct-19", "2019-10-01T00:00", 30),
    _epoch("Nov-19", "2019-10-31T00:00", 30),
    _epoch("Dec-19", "2019-12-01T00:00", 30),
    _epoch("Jan-20", "2020-01-01T00:00", 30),
    _epoch("Feb-20", "2020-01-31T00:00", 30),
    _epoch("Mar-19-h1", "2019-03-01T00:00", 15),
    _epoch("Mar-20-h1", "2020-03-01T00:00", 15),
]}

DEFAULT_EPOCHS: tuple[Epoch, ...] = tuple(
    e for e in EPOCH_PRESETS.values() if e.days == 30)


@dataclass(frozen=True)
class RunConfig:
    epochs: tuple[Epoch, ...] = DEFAULT_EPOCHS
    engine: EngineParams = EngineParams()
    profile: BehaviorProfile = BehaviorProfile()
    duty: DutyPolicy = field(default_factory=DutyPolicy)
    filters: FilterPolicy = FilterPolicy()
    columns: ColumnMap = ColumnMap()
    risk: RiskParam = RiskParam()
    synth: SynthConfig = field(default_factory=SynthConfig)
    fha_threshold: float = 77.0
    wocl_window: tuple[int, int] = (2 * 60, 6 * 60)
    cns_mode: str = "pairs"
    pool_above: Optional[int] = None
    reference_timezone: str = "America/Sao_Paulo"

    def __post_init__(self):
        ordered = sorted(self.epochs, key=lambda e: e.begin)
        for prev, cur in zip(ordered, ordered[1:]):
            if cur.begin < prev.end:
                raise ConfigError(
                    f"epochs {prev.label!r} and {cur.label!r} overlap")
        if not 0 < self.fha_threshold <= 100:
            raise ConfigError("fha_threshold must lie in (0, 100]")
        if self.cns_mode not in ("pairs", "runs"):
            raise ConfigError(f"unknown cns_mode {self.cns_mode!r}")


def _parse_bool(text: str, key: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def _parse_window(text: str, key: str) -> tuple[int, int]:
    try:
        lo, hi = text.split("-")
        return parse_clock(lo), parse_clock(hi)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected 'HH:MM-HH:MM', got {text!r}") from exc


def _apply_typed(obj, section: configparser.SectionProxy, section_name: str,
                 converters: dict):
    values = {}
    for key, raw in section.items():
        if key not in converters:
            raise ConfigError(f"[{section_name}] unknown key {key!r}")
        try:
            values[key] = converters[key](raw)
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(f"[{section_name}] bad value for {key!r}: {exc}") from exc
    return replace(obj, **values) if values else obj


def _parse_epochs(section: configparser.SectionProxy) -> tuple[Epoch, ...]:
    epochs = []
    for label, raw in section.items():
        raw = raw.strip()
        if raw in ("preset", ""):
            preset = EPOCH_PRESETS.get(label) or next(
                (e for k, e in EPOCH_PRESETS.items() if k.lower() == label), None)
            if preset is None:
                raise ConfigError(f"[epochs] unknown preset {label!r}")
            epochs.append(preset)
            continue
        try:
            begin_txt, days_txt = (s.strip() for s in raw.split(","))
            epochs.append(Epoch(label, parse_minutes(begin_txt), int(days_txt)))
        except (ValueError, ConfigError) as exc:
            raise ConfigError(
                f"[epochs] {label!r}: expected 'YYYY-MM-DDTHH:MM,days' "
                f"or 'preset' ({exc})") from exc
    if not epochs:
        raise ConfigError("[epochs] section is empty")
    return tuple(epochs)


def load_config(path: Optional[str] = None) -> RunConfig:
    cfg = RunConfig()
    if path is None:
        return cfg

    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")

    known = {"run", "epochs", "engine", "profile", "duty", "filters",
             "columns", "risk", "synth"}
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"unknown config section [{section}]")

    epochs = cfg.epochs
    if parser.has_section("epochs"):
        epochs = _parse_epochs(parser["epochs"])

    engine = cfg.engine
    if parser.has_section("engine"):
        float_keys = ("reservoir_capacity", "wake_depletion_per_min",
                      "sleep_recovery_rate", "circadian_peak_hour",
                      "circadian_second_peak_hour", "harmonic_weight",
                      "amplitude_base_pct", "amplitude_debt_pct",
                      "inertia_max_pct", "inertia_tau_minutes")
        conv = {k: float for k in float_keys}
        conv.update({k: int for k in ("inertia_window_minutes", "tick_minutes",
                                      "sample_minutes")})
        engine = _apply_typed(engine, parser["engine"], "engine", conv)

    profile = cfg.profile
    if parser.has_section("profile"):
        conv = {
            "auto_nap": lambda v: _parse_bool(v, "auto_nap"),
            "advanced_bedtime": lambda v: _parse_bool(v, "advanced_bedtime"),
            "commute_minutes": int,
            "preparation_minutes": int,
            "normal_bedtime": parse_clock,
            "min_sleep_minutes": int,
            "max_workday_sleep_minutes": int,
            "max_restday_sleep_minutes": int,
            "max_recovery_nap_minutes": int,
            "awake_zone": lambda v: _parse_window(v, "awake_zone"),
        }
        sec = parser["profile"]
        values = {}
        for key, raw in sec.items():
            if key not in conv:
                raise ConfigError(f"[profile] unknown key {key!r}")
            values[key] = conv[key](raw)
        if "normal_bedtime" in values:
            values["normal_bedtime_minutes"] = values.pop("normal_bedtime")
        if "awake_zone" in values:
            zone = values.pop("awake_zone")
            values["awake_zone_start_minutes"] = zone[0]
            values["awake_zone_end_minutes"] = zone[1]
        profile = replace(profile, **values) if values else profile

    duty = cfg.duty
    if parser.has_section("duty"):
        conv = {
            "pre_duty_minutes": int,
            "post_duty_domestic_minutes": int,
            "post_duty_international_minutes": int,
            "domestic_countries": lambda v: tuple(
                s.strip().upper() for s in v.split(",") if s.strip()),
        }
        duty = _apply_typed(duty, parser["duty"], "duty", conv)

    filters = cfg.filters
    if parser.has_section("filters"):
        conv = {"drop_home_standby": lambda v: _parse_bool(v, "drop_home_standby")}
        filters = _apply_typed(filters, parser["filters"], "filters", conv)

    columns = cfg.columns
    if parser.has_section("columns"):
        valid = {f.name for f in fields(ColumnMap)}
        values = {}
        for key, raw in parser["columns"].items():
            if key not in valid:
                raise ConfigError(f"[columns] unknown field {key!r}")
            values[key] = raw.strip()
        columns = replace(columns, **values) if values else columns

    risk = cfg.risk
    if parser.has_section("risk"):
        conv = {"b": float, "sigma_b": float}
        risk = _apply_typed(risk, parser["risk"], "risk", conv)

    synth = cfg.synth
    if parser.has_section("synth"):
        def parse_epoch_value(v: str) -> Epoch:
            v = v.strip()
            if v in EPOCH_PRESETS:
                return EPOCH_PRESETS[v]
            label, begin_txt, days_txt = (s.strip() for s in v.split(","))
            return Epoch(label, parse_minutes(begin_txt), int(days_txt))

        conv = {
            "seed": int,
            "n_crew": int,
            "epoch": parse_epoch_value,
            "night_shifts_dist": DistSpec.from_string,
            "wocl_dist": DistSpec.from_string,
            "day_flights_dist": DistSpec.from_string,
            "working_dist": DistSpec.from_string,
            "sector_dist": DistSpec.from_string,
            "airports": lambda v: tuple(s.strip().upper() for s in v.split(",") if s.strip()),
        }
        sec = parser["synth"]
        values = {}
        rename = {"night_shifts_dist": "target_night_shifts",
                  "wocl_dist": "target_wocl_events",
                  "day_flights_dist": "target_day_flights",
                  "working_dist": "target_working_events",
                  "sector_dist": "sector_minutes"}
        for key, raw in sec.items():
            if key not in conv:
                raise ConfigError(f"[synth] unknown key {key!r}")
            values[rename.get(key, key)] = conv[key](raw)
        synth = replace(synth, **values) if values else synth

    run_kwargs = {}
    if parser.has_section("run"):
        conv = {
            "fha_threshold": float,
            "wocl_window": lambda v: _parse_window(v, "wocl_window"),
            "cns_mode": str.strip,
            "pool_above": lambda v: None if v.strip().lower() in ("", "none") else int(v),
            "reference_timezone": str.strip,
        }
        sec = parser["run"]
        for key, raw in sec.items():
            if key not in conv:
                raise ConfigError(f"[run] unknown key {key!r}")
            try:
                run_kwargs[key] = conv[key](raw)
            except ConfigError:
                raise
            except Exception as exc:
                raise ConfigError(f"[run] bad value for {key!r}: {exc}") from exc

    return RunConfig(epochs=epochs, engine=engine, profile=profile, duty=duty,
                     filters=filters, columns=columns, risk=risk, synth=synth,
                     **run_kwargs)


def config_digest(cfg: RunConfig) -> str:
    """Stable hash of the resolved configuration for the run manifest."""
    payload = {
        "epochs": [(e.label, e.begin, e.days) for e in cfg.epochs],
        "engine": {f.name: getattr(cfg.engine, f.name) for f in fields(cfg.engine)},
        "profile": {f.name: getattr(cfg.profile, f.name) for f in fields(cfg.profile)},
        "duty": {
            "pre": cfg.duty.pre_duty_minutes,
            "post_dom": cfg.duty.post_duty_domestic_minutes,
            "post_intl": cfg.duty.post_duty_international_minutes,
            "domestic": list(cfg.duty.domestic_countries),
        },
        "filters": {"drop_home_standby": cfg.filters.drop_home_standby},
        "columns": list(cfg.columns.columns()),
        "risk": {"b": cfg.risk.b, "sigma_b": cfg.risk.sigma_b},
        "synth": {
            "seed": cfg.synth.seed,
            "n_crew": cfg.synth.n_crew,
            "epoch": (cfg.synth.epoch.label, cfg.synth.epoch.begin, cfg.synth.epoch.days),
            "dists": [
                (list(d.values), list(d.probs)) for d in (
                    cfg.synth.target_night_shifts, cfg.synth.target_wocl_events,
                    cfg.synth.target_day_flights, cfg.synth.target_working_events,
                    cfg.synth.sector_minutes)
            ],
            "airports": list(cfg.synth.airports),
        },
        "fha_threshold": cfg.fha_threshold,
        "wocl_window": list(cfg.wocl_window),
        "cns_mode": cfg.cns_mode,
        "pool_above": cfg.pool_above,
        "reference_timezone": cfg.reference_timezone,
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def describe_epoch(e: Epoch) -> str:
    return f"{e.label}: {format_minutes(e.begin)} +{e.days}d"


def describe_window(window: tuple[int, int]) -> str:
    return f"{format_clock(window[0])}-{format_clock(window[1])}"
