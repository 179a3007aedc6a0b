"""Roster-to-fatigue-risk analytics.

Reconstructs predicted sleep from aircrew duty rosters, simulates a
three-process effectiveness time series, extracts fatigue/productivity
KPIs, and provides the statistical machinery (weighted least squares
with covariance bands, relative-fatigue-risk curves, distribution-
weighted hazard expectations, nonparametric group tests) to turn KPI
tables into risk reports.
"""

from .engine import (EffectivenessSeries, EngineParams, circadian,
                     circadian_shape, reservoir_to_sleep_debt,
                     reservoir_to_time_awake, sample_series, simulate)
from .kpi import (KpiRecord, compute_kpis, critical_windows,
                  fatigue_hazard_area, min_effectiveness_critical,
                  min_reservoir_critical, productivity_metrics)
from .lsq import (FitResult, WeightedPoint, chi2_pvalue, fit_polynomial,
                  predict_with_ci, propagate_ratio)
from .risk import (RiskParam, WoclDistribution, effectiveness_by_clock,
                   event_proportion_by_clock, expected_fha, normalize_rfr,
                   relative_risk, rfr_by_clock, rfr_ratio, rfr_vs_nightshifts)
from .roster import (ColumnMap, DutyPolicy, Epoch, FilterPolicy, RosterEvent,
                     ValidatedRoster, apply_filters, default_duty_bounds,
                     parse_roster_csv, serialize_roster_csv)
from .sleep import (BehaviorProfile, Interval, IntervalKind, ScheduleTimeline,
                    build_timeline, insert_auto_naps, insert_duty_envelopes,
                    insert_recovery_naps, predict_main_sleep)
from .stats import (TestReport, cohens_dz, mann_whitney_u, pearson_rho,
                    wilcoxon_signed_rank)
from .synth import DistSpec, SynthConfig, generate, generate_detailed

__version__ = "0.1.0"
