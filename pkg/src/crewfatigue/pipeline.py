"""End-to-end wiring: roster CSV -> timelines -> simulation -> KPI table,
plus the batch helpers behind the fit/compare CLI stages.

Per-roster problems never abort a batch; they are recorded in the run
manifest with the same accounting identity throughout: accepted +
rejected = rosters considered.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kpi as kpi_mod
from .config import RunConfig, config_digest, describe_window
from .engine import EffectivenessSeries, sample_series, simulate
from .kpi import KpiRecord, compute_kpis
from .lsq import FitResult, WeightedPoint, fit_polynomial, predict_with_ci
from .roster import (EventKind, ParseDiagnostic, RejectReason,
                     ValidatedRoster, apply_filters, parse_roster_csv,
                     resolve_duty_bounds)
from .sleep import ScheduleTimeline, build_timeline
from .stats import TestReport, cohens_dz, mann_whitney_u, pearson_rho, wilcoxon_signed_rank
from .timebase import MINUTES_PER_DAY, format_minutes


@dataclass(frozen=True)
class SampleRow:
    crew_id: str
    epoch: str
    t: int
    effectiveness: float
    in_flight: bool


@dataclass(frozen=True)
class RejectedRoster:
    crew_id: str
    epoch: str
    reason: RejectReason


@dataclass
class AnalyzeResult:
    records: list[KpiRecord]
    samples: list[SampleRow]
    rejected: list[RejectedRoster]
    diagnostics: list[ParseDiagnostic]
    manifest: dict
    timelines: list[ScheduleTimeline]

    def timelines_csv(self) -> str:
        """Audit export of every accepted roster's schedule intervals."""
        lines = ["crew_id,epoch,start,end,kind"]
        for record, tl in zip(self.records, self.timelines):
            for iv in tl.intervals:
                lines.append(f"{tl.crew_id},{record.epoch},"
                             f"{format_minutes(iv.start)},"
                             f"{format_minutes(iv.end)},{iv.kind.value}")
        return "\n".join(lines) + "\n"

    def kpi_csv(self) -> str:
        return kpi_mod.write_kpi_csv(self.records)

    def samples_csv(self) -> str:
        lines = ["crew_id,epoch,t,clock_minutes,effectiveness,in_flight"]
        for s in self.samples:
            lines.append(f"{s.crew_id},{s.epoch},{s.t},{s.t % MINUTES_PER_DAY},"
                         f"{s.effectiveness!r},{int(s.in_flight)}")
        return "\n".join(lines) + "\n"

    def diagnostics_jsonl(self) -> str:
        return "".join(d.to_json() + "\n" for d in self.diagnostics)

    def manifest_json(self) -> str:
        return json.dumps(self.manifest, indent=2, sort_keys=True) + "\n"


def analyze_roster(
    roster: ValidatedRoster,
    cfg: RunConfig,
) -> tuple[KpiRecord, EffectivenessSeries, ScheduleTimeline]:
    """Simulate one accepted roster and extract its KPI record."""
    timeline = build_timeline(roster, cfg.profile, cfg.duty)
    span = timeline.span()
    start = min(roster.epoch.begin, span[0]) if span else roster.epoch.begin
    series = simulate(timeline, cfg.engine, start=start, end=roster.epoch.end)
    record = compute_kpis(roster, series, cfg.fha_threshold, cfg.wocl_window,
                          cfg.cns_mode)
    return record, series, timeline


def _flight_sample_flags(roster: ValidatedRoster, times: np.ndarray) -> np.ndarray:
    flags = np.zeros(times.shape, dtype=bool)
    for e in roster.events:
        if e.kind is EventKind.CREWING:
            flags |= (times >= e.start) & (times < e.end)
    return flags


def analyze_csv(data: bytes | str, cfg: RunConfig) -> AnalyzeResult:
    """Run the full pipeline over a roster file for every configured epoch."""
    events, diagnostics = parse_roster_csv(data, cfg.columns)
    bad_crews = {d.crew_id for d in diagnostics if d.crew_id}
    had_anonymous_diag = any(not d.crew_id for d in diagnostics)

    by_crew: dict[str, list] = {}
    for e in events:
        by_crew.setdefault(e.crew_id, []).append(e)
    for crew_id in bad_crews:
        # Keep crews whose every row was malformed visible to the
        # accounting below.
        by_crew.setdefault(crew_id, [])

    records: list[KpiRecord] = []
    samples: list[SampleRow] = []
    rejected: list[RejectedRoster] = []
    timelines: list[ScheduleTimeline] = []

    for epoch in cfg.epochs:
        for crew_id in sorted(by_crew):
            crew_events = by_crew[crew_id]
            # A crew without any event touching the epoch has no roster in
            # that period at all; skip silently rather than rejecting. A
            # crew left with no parseable events anywhere stays visible as
            # a parse reject.
            if crew_events and not any(e.end > epoch.begin and e.start < epoch.end
                                       for e in crew_events):
                continue
            # A roster with any malformed row is excluded outright.
            if crew_id in bad_crews:
                rejected.append(RejectedRoster(crew_id, epoch.label,
                                               RejectReason.PARSE_ERROR))
                continue
            resolved = resolve_duty_bounds(crew_events, cfg.duty)
            roster = apply_filters(resolved, epoch, cfg.filters)
            if roster.rejected:
                rejected.append(RejectedRoster(crew_id, epoch.label,
                                               roster.reject_reason))
                continue
            record, series, timeline = analyze_roster(roster, cfg)
            records.append(record)
            timelines.append(timeline)
            t, eff = sample_series(series, cfg.engine.sample_minutes,
                                   origin=epoch.begin)
            keep = t >= epoch.begin
            t, eff = t[keep], eff[keep]
            flags = _flight_sample_flags(roster, t)
            for tk, ek, fk in zip(t, eff, flags):
                samples.append(SampleRow(crew_id, epoch.label, int(tk),
                                         float(ek), bool(fk)))

    considered = len(records) + len(rejected)
    by_reason: dict[str, int] = {}
    for r in rejected:
        by_reason[r.reason.value] = by_reason.get(r.reason.value, 0) + 1

    manifest = {
        "config_hash": config_digest(cfg),
        "epochs": [e.label for e in cfg.epochs],
        "events_parsed": len(events),
        "parse_diagnostics": len(diagnostics),
        "parse_diagnostics_without_crew": had_anonymous_diag,
        "rosters_considered": considered,
        "accepted": len(records),
        "rejected": len(rejected),
        "rejected_by_reason": dict(sorted(by_reason.items())),
        "fha_threshold_pct": cfg.fha_threshold,
        "fha_integrand": "max(0, (threshold - E)/threshold) per in-window minute",
        "wocl_window": describe_window(cfg.wocl_window),
        "cns_mode": cfg.cns_mode,
        "rank_tests": "two-sided; exact enumeration to n<=12, else "
                      "tie-corrected normal approximation (continuity "
                      "correction + Edgeworth moment term)",
        "reference_timezone": cfg.reference_timezone,
    }
    return AnalyzeResult(records, samples, rejected, diagnostics, manifest,
                         timelines)


# --- fitting stage ---------------------------------------------------------

FIT_MODELS: dict[str, tuple[str, str, int]] = {
    # model name -> (y column, x column, polynomial degree)
    "emc_vs_nns": ("min_effectiveness", "night_shifts", 3),
    "tawake_vs_nns": ("max_time_awake", "night_shifts", 3),
    "fha_vs_nwocl": ("hazard_area", "wocl_events", 2),
}


class InsufficientBinsError(Exception):
    pass


@dataclass(frozen=True)
class BinnedFit:
    model: str
    x_column: str
    y_column: str
    points: list[WeightedPoint]
    bin_counts: list[int]
    fit: FitResult

    def curve(self, step: float = 0.25):
        xs = [p.x for p in self.points]
        grid = np.arange(min(xs), max(xs) + step / 2, step)
        y, sigma, lo, hi = predict_with_ci(self.fit, grid)
        return grid, y, sigma, lo, hi

    def curve_csv(self, step: float = 0.25) -> str:
        grid, y, sigma, lo, hi = self.curve(step)
        lines = ["x,y,sigma_f,ci_low,ci_high"]
        for row in zip(grid, y, sigma, lo, hi):
            lines.append(",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"

    def points_csv(self) -> str:
        lines = ["x,y,sigma_y,n"]
        for p, n in zip(self.points, self.bin_counts):
            lines.append(f"{p.x!r},{p.y!r},{p.sigma_y!r},{n}")
        return "\n".join(lines) + "\n"


def _mean_se(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def fit_kpi_table(
    records: Sequence[KpiRecord],
    model: str,
    pool_above: Optional[int] = None,
) -> BinnedFit:
    """Group a KPI table by integer x, fit the model polynomial to the bin
    means weighted by their standard errors.

    Bins need at least two rosters. With ``pool_above`` set, rosters in the
    sparse tail merge into one point at their mean x; the x spread is
    propagated onto sigma_y through a preliminary fit's slope before the
    final fit.
    """
    if model not in FIT_MODELS:
        raise ValueError(f"unknown model {model!r}; choose from {sorted(FIT_MODELS)}")
    y_col, x_col, degree = FIT_MODELS[model]

    groups: dict[int, list[float]] = {}
    tail: list[tuple[int, float]] = []
    for r in records:
        y = getattr(r, y_col)
        if y is None:
            continue
        x = int(getattr(r, x_col))
        if pool_above is not None and x > pool_above:
            tail.append((x, float(y)))
        else:
            groups.setdefault(x, []).append(float(y))

    points: list[WeightedPoint] = []
    counts: list[int] = []
    for x in sorted(groups):
        values = groups[x]
        if len(values) < 2:
            continue
        mean, se = _mean_se(values)
        if se == 0.0:
            continue  # degenerate bin: identical KPI values carry no weight
        points.append(WeightedPoint(float(x), mean, se))
        counts.append(len(values))

    n_par = degree + 1
    if len(points) < n_par + 1:
        raise InsufficientBinsError(
            f"{len(points)} usable bins cannot constrain a degree-{degree} "
            f"fit with a goodness-of-fit check")

    if tail and len(tail) >= 2:
        xs = [float(x) for x, _ in tail]
        ys = [y for _, y in tail]
        x_mean, x_se = _mean_se(xs)
        y_mean, y_se = _mean_se(ys)
        if y_se > 0.0:
            prelim = fit_polynomial(points, degree)
            eps = 1e-6
            f_hi, _, _, _ = predict_with_ci(prelim, x_mean + eps)
            f_lo, _, _, _ = predict_with_ci(prelim, x_mean - eps)
            slope = (f_hi - f_lo) / (2 * eps)
            sigma = math.hypot(y_se, slope * x_se)
            points.append(WeightedPoint(x_mean, y_mean, sigma))
            counts.append(len(tail))

    fit = fit_polynomial(points, degree)
    return BinnedFit(model, x_col, y_col, points, counts, fit)


# --- comparison stage ------------------------------------------------------

COMPARE_METRICS = ("min_effectiveness", "min_reservoir", "hazard_area",
                   "max_sleep_debt", "max_time_awake", "night_shifts",
                   "consecutive_night_shifts", "duty_hours", "crewing_events",
                   "working_events", "wocl_events")


@dataclass(frozen=True)
class ComparisonRow:
    metric: str
    n_a: int
    n_b: int
    mean_a: float
    sd_a: float
    mean_b: float
    sd_b: float
    ratio: Optional[float]
    report: TestReport
    rho: Optional[float] = None
    dz: Optional[float] = None


def _mean_sd(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def compare_kpi_tables(
    records_a: Sequence[KpiRecord],
    records_b: Sequence[KpiRecord],
    paired: bool,
) -> list[ComparisonRow]:
    """Per-metric ratio-of-means plus the appropriate rank test.

    Unpaired comparisons use the Mann-Whitney test; paired ones match rows
    by crew id and use the Wilcoxon signed-rank test with correlation and
    effect size.
    """
    rows: list[ComparisonRow] = []
    if paired:
        a_by_id = {r.crew_id: r for r in records_a}
        b_by_id = {r.crew_id: r for r in records_b}
        if set(a_by_id) != set(b_by_id):
            only_a = sorted(set(a_by_id) - set(b_by_id))[:3]
            only_b = sorted(set(b_by_id) - set(a_by_id))[:3]
            raise ValueError(f"paired comparison with mismatched crew ids "
                             f"(e.g. only in a: {only_a}, only in b: {only_b})")

    for metric in COMPARE_METRICS:
        if paired:
            pairs = [(getattr(a_by_id[k], metric), getattr(b_by_id[k], metric))
                     for k in sorted(a_by_id)]
            pairs = [(float(a), float(b)) for a, b in pairs
                     if a is not None and b is not None]
            if not pairs:
                continue
            va = [a for a, _ in pairs]
            vb = [b for _, b in pairs]
            report = wilcoxon_signed_rank([b - a for a, b in pairs])
            try:
                rho = pearson_rho(va, vb)
            except ValueError:
                rho = None
            try:
                dz = cohens_dz([b - a for a, b in pairs])
            except ValueError:
                dz = None
        else:
            va = [float(getattr(r, metric)) for r in records_a
                  if getattr(r, metric) is not None]
            vb = [float(getattr(r, metric)) for r in records_b
                  if getattr(r, metric) is not None]
            if not va or not vb:
                continue
            report = mann_whitney_u(va, vb)
            rho = dz = None

        mean_a, sd_a = _mean_sd(va)
        mean_b, sd_b = _mean_sd(vb)
        ratio = mean_b / mean_a if mean_a != 0 else None
        rows.append(ComparisonRow(metric, len(va), len(vb), mean_a, sd_a,
                                  mean_b, sd_b, ratio, report, rho, dz))
    return rows


def comparison_csv(rows: Sequence[ComparisonRow]) -> str:
    lines = ["metric,n_a,n_b,mean_a,sd_a,mean_b,sd_b,ratio_b_over_a,"
             "statistic,p_value,method,degenerate,pearson_rho,effect_size_dz"]
    for r in rows:
        ratio = "" if r.ratio is None else repr(r.ratio)
        rho = "" if r.rho is None else repr(r.rho)
        dz = "" if r.dz is None else repr(r.dz)
        lines.append(
            f"{r.metric},{r.n_a},{r.n_b},{r.mean_a!r},{r.sd_a!r},"
            f"{r.mean_b!r},{r.sd_b!r},{ratio},{r.report.statistic!r},"
            f"{r.report.p_value!r},{r.report.method.value},"
            f"{int(r.report.degenerate)},{rho},{dz}")
    return "\n".join(lines) + "\n"


def wocl_distributions(records: Sequence[KpiRecord]):
    """Per-epoch WOCL-count distributions from a KPI table."""
    from .risk import WoclDistribution

    by_epoch: dict[str, list[int]] = {}
    for r in records:
        by_epoch.setdefault(r.epoch, []).append(r.wocl_events)
    return {label: WoclDistribution.from_values(label, values)
            for label, values in sorted(by_epoch.items())}
