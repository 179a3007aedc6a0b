"""Batch command-line front end.

Subcommands wire the pipeline stages together:

    synth    write a deterministic synthetic roster population
    analyze  roster CSV -> KPI table, effectiveness samples, run manifest
    fit      KPI table -> binned polynomial fit (JSON + curve CSV + figure)
    compare  two KPI tables -> ratio/rank-test report
    risk     fitted curves / samples -> relative-fatigue-risk reports

Exit codes: 0 success, 1 configuration error, 2 input error. Per-roster
problems never abort a batch; they land in the manifest.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace
from typing import Optional

import numpy as np

from . import pipeline, plots, risk as risk_mod
from .config import ConfigError, RunConfig, load_config
from .kpi import read_kpi_csv
from .lsq import FitResult
from .pipeline import FIT_MODELS, InsufficientBinsError
from .roster import RosterFormatError
from .synth import SynthError, generate_detailed, planted_to_csv, rosters_to_csv
from .timebase import MINUTES_PER_DAY


class InputError(Exception):
    pass


def _read_file(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path!r}: {exc}") from exc


def _write(out_dir: str, name: str, text: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _load_fit(path: str) -> FitResult:
    try:
        return FitResult.from_json_dict(json.loads(_read_file(path)))
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"{path!r} is not a fit result: {exc}") from exc


def _csv_row(*values) -> str:
    cells = []
    for v in values:
        if isinstance(v, str):
            cells.append(v)
        elif v is None:
            cells.append("")
        elif isinstance(v, (int, np.integer)):
            cells.append(str(int(v)))
        else:
            f = float(v)
            cells.append("" if math.isnan(f) else repr(f))
    return ",".join(cells)


def cmd_synth(args, cfg: RunConfig) -> int:
    synth_cfg = cfg.synth
    if args.seed is not None:
        synth_cfg = replace(synth_cfg, seed=args.seed)
    detailed = generate_detailed(synth_cfg)
    _write(args.out, "rosters.csv", rosters_to_csv([d.roster for d in detailed]))
    _write(args.out, "planted.csv", planted_to_csv([d.planted for d in detailed]))
    manifest = {
        "seed": synth_cfg.seed,
        "n_crew": synth_cfg.n_crew,
        "epoch": synth_cfg.epoch.label,
        "generator": "Philox4x64-10, one jumped stream per roster",
    }
    _write(args.out, "synth_manifest.json",
           json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote {synth_cfg.n_crew} rosters to {args.out}/rosters.csv")
    return 0


def cmd_analyze(args, cfg: RunConfig) -> int:
    result = pipeline.analyze_csv(_read_file(args.rosters), cfg)
    _write(args.out, "kpi.csv", result.kpi_csv())
    _write(args.out, "samples.csv", result.samples_csv())
    if args.timelines:
        _write(args.out, "timelines.csv", result.timelines_csv())
    if result.diagnostics:
        _write(args.out, "diagnostics.jsonl", result.diagnostics_jsonl())
    _write(args.out, "manifest.json", result.manifest_json())
    m = result.manifest
    print(f"accepted {m['accepted']} / {m['rosters_considered']} rosters "
          f"({m['rejected']} rejected)")
    return 0


def cmd_fit(args, cfg: RunConfig) -> int:
    records = read_kpi_csv(_read_file(args.kpi))
    pool_above = args.pool_above if args.pool_above is not None else cfg.pool_above
    binned = pipeline.fit_kpi_table(records, args.model, pool_above)
    base = f"fit_{args.model}"
    _write(args.out, base + ".json", binned.fit.to_json())
    _write(args.out, base + "_points.csv", binned.points_csv())
    _write(args.out, base + "_curve.csv", binned.curve_csv())
    if not args.no_figures:
        grid, y, _, lo, hi = binned.curve()
        plots.save_curve_figure(
            os.path.join(args.out, base + ".png"),
            grid, y, lo, hi,
            points=[(p.x, p.y, p.sigma_y) for p in binned.points],
            xlabel=binned.x_column, ylabel=binned.y_column,
            title=f"{binned.y_column} vs {binned.x_column} "
                  f"(chi2={binned.fit.chi2:.2f}, dof={binned.fit.dof}, "
                  f"p={binned.fit.p_value:.3f})")
    print(f"{args.model}: chi2={binned.fit.chi2:.3f} dof={binned.fit.dof} "
          f"p={binned.fit.p_value:.3f}")
    return 0


def cmd_compare(args, cfg: RunConfig) -> int:
    a = read_kpi_csv(_read_file(args.kpi_a))
    b = read_kpi_csv(_read_file(args.kpi_b))
    try:
        rows = pipeline.compare_kpi_tables(a, b, args.paired)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    _write(args.out, "comparison.csv", pipeline.comparison_csv(rows))
    for r in rows:
        ratio = "n/a" if r.ratio is None else f"{r.ratio:.3f}"
        print(f"{r.metric}: ratio={ratio} p={r.report.p_value:.4g}")
    return 0


def _risk_nns(args, cfg: RunConfig) -> int:
    fit = _load_fit(args.inputs[0])
    grid = np.arange(args.x_lo, args.x_hi + args.x_step / 2, args.x_step)
    rfr, lo, hi = risk_mod.rfr_vs_nightshifts(fit, grid, cfg.risk)
    lines = ["x,rfr,ci_low,ci_high"]
    for g, r, l, h in zip(grid, rfr, lo, hi):
        lines.append(_csv_row(g, r, l, h))
    _write(args.out, "rfr_nns.csv", "\n".join(lines) + "\n")

    ratio, sigma = risk_mod.rfr_ratio(fit, args.x_hi, args.x_lo)
    summary = {
        "x_lo": args.x_lo, "x_hi": args.x_hi,
        "rfr_ratio": ratio, "rfr_increase": ratio - 1.0,
        "sigma": sigma,
        "ci95_low": ratio - 1.0 - 2.0 * sigma,
        "ci95_high": ratio - 1.0 + 2.0 * sigma,
        "b": cfg.risk.b, "sigma_b": cfg.risk.sigma_b,
        "note": "ratio is independent of b (exact cancellation)",
    }
    _write(args.out, "rfr_nns_summary.json",
           json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if not args.no_figures:
        plots.save_curve_figure(
            os.path.join(args.out, "rfr_nns.png"), grid, rfr, lo, hi,
            xlabel="night shifts (30-day epoch)", ylabel="relative fatigue risk",
            title=f"RFR({args.x_hi:g})/RFR({args.x_lo:g}) - 1 = {ratio - 1:.3f}")
    print(f"RFR({args.x_hi:g})/RFR({args.x_lo:g}) - 1 = {ratio - 1:.4f} "
          f"+/- {2 * sigma:.4f} (95% CI)")
    return 0


def _read_samples(path: str, in_flight_only: bool) -> tuple[np.ndarray, np.ndarray]:
    import csv as _csv
    import io as _io

    t, e = [], []
    reader = _csv.DictReader(_io.StringIO(_read_file(path)))
    needed = {"t", "effectiveness", "in_flight"}
    if reader.fieldnames is None or not needed <= set(reader.fieldnames):
        raise InputError(f"{path!r} is not a samples table "
                         f"(need columns {sorted(needed)})")
    for row in reader:
        if in_flight_only and row["in_flight"] != "1":
            continue
        t.append(int(row["t"]))
        e.append(float(row["effectiveness"]))
    if not t:
        raise InputError("no samples selected (is the table empty or all "
                         "samples outside flights?)")
    return np.asarray(t), np.asarray(e)


def _risk_clock(args, cfg: RunConfig) -> int:
    times, values = _read_samples(args.inputs[0], not args.all_samples)
    bins = risk_mod.effectiveness_by_clock(times, values,
                                           cfg.engine.sample_minutes)
    rfr, lo, hi = risk_mod.rfr_by_clock(bins, cfg.risk)

    lines = ["bin_start_min,mean_effectiveness,sem,n"]
    for s, m, se, n in zip(bins.starts, bins.mean, bins.sem, bins.count):
        lines.append(_csv_row(s, m, se, n))
    _write(args.out, "clock_effectiveness.csv", "\n".join(lines) + "\n")

    lines = ["bin_start_min,rfr,ci_low,ci_high"]
    for s, r, l, h in zip(bins.starts, rfr, lo, hi):
        lines.append(_csv_row(s, r, l, h))
    _write(args.out, "rfr_clock.csv", "\n".join(lines) + "\n")

    norm_rfr, factor = risk_mod.normalize_rfr(rfr, bins.starts)
    lines = ["bin_start_min,rfr_normalized,ci_low,ci_high"]
    for s, r, l, h in zip(bins.starts, norm_rfr, lo / factor, hi / factor):
        lines.append(_csv_row(s, r, l, h))
    _write(args.out, "rfr_clock_normalized.csv", "\n".join(lines) + "\n")

    edges = [int(x) for x in args.bins.split(",")]
    coarse = risk_mod.average_curve_in_bins(norm_rfr, bins.starts, edges)
    coarse_lo = risk_mod.average_curve_in_bins(lo / factor, bins.starts, edges)
    coarse_hi = risk_mod.average_curve_in_bins(hi / factor, bins.starts, edges)
    lines = ["bin_start_min,bin_end_min,rfr_normalized,ci_low,ci_high"]
    for (s, e), v, l, h in zip(zip(edges[:-1], edges[1:]), coarse, coarse_lo, coarse_hi):
        lines.append(_csv_row(s, e, v, l, h))
    _write(args.out, "rfr_bins_normalized.csv", "\n".join(lines) + "\n")

    props = risk_mod.event_proportion_by_clock(times, edges)
    lines = ["bin_start_min,bin_end_min,percent"]
    for s, e, pct in props:
        lines.append(_csv_row(s, e, pct))
    _write(args.out, "event_proportions.csv", "\n".join(lines) + "\n")

    if not args.no_figures:
        hours = bins.starts / 60.0
        plots.save_curve_figure(
            os.path.join(args.out, "clock_effectiveness.png"),
            hours, bins.mean,
            points=[(s / 60.0, m, se) for s, m, se, n in
                    zip(bins.starts, bins.mean, bins.sem, bins.count) if n > 0],
            xlabel="time of day (h)", ylabel="mean effectiveness (%)",
            title="effectiveness by clock bin")
        plots.save_curve_figure(
            os.path.join(args.out, "rfr_clock.png"), hours, rfr, lo, hi,
            xlabel="time of day (h)", ylabel="relative fatigue risk",
            title="relative fatigue risk by clock bin")
        valid = [0.0 if v is None else v for v in coarse]
        plots.save_step_figure(
            os.path.join(args.out, "rfr_bins_normalized.png"),
            [e / 60.0 for e in edges], valid,
            xlabel="time of day (h)",
            ylabel="normalized relative fatigue risk",
            title="normalized RFR (window mean 18:00-23:59 = 1)")
        plots.save_step_figure(
            os.path.join(args.out, "event_proportions.png"),
            [e / 60.0 for e in edges], [p for _, _, p in props],
            xlabel="time of day (h)", ylabel="events (%)",
            title="event proportion by time of day")
    print(f"clock curve over {int(np.sum(bins.count))} samples; "
          f"normalization window mean RFR = {factor:.4f}")
    return 0


def _risk_expected_fha(args, cfg: RunConfig) -> int:
    fit = _load_fit(args.inputs[0])
    records = read_kpi_csv(_read_file(args.inputs[1]))
    dists = pipeline.wocl_distributions(records)
    if not dists:
        raise InputError("KPI table holds no rosters")
    lines = ["epoch,expected_fha_min,sigma_full_cov,ci_low_full,ci_high_full,"
             "sigma_independent,ci_low_indep,ci_high_indep,n_rosters"]
    rows = []
    for label, dist in dists.items():
        exp = risk_mod.expected_fha(dist, fit)
        lo_f, hi_f = exp.ci("full")
        lo_i, hi_i = exp.ci("independent")
        rows.append((label, exp))
        lines.append(f"{label},{exp.value!r},{exp.sigma_full_cov!r},"
                     f"{lo_f!r},{hi_f!r},{exp.sigma_independent!r},"
                     f"{lo_i!r},{hi_i!r},{dist.total}")
    _write(args.out, "expected_fha.csv", "\n".join(lines) + "\n")
    if not args.no_figures:
        xs = np.arange(len(rows))
        vals = np.array([e.value for _, e in rows])
        los = np.array([e.ci("full")[0] for _, e in rows])
        his = np.array([e.ci("full")[1] for _, e in rows])
        import matplotlib.pyplot as plt
        fig, ax = plt.subplots(figsize=(7.2, 4.2))
        ax.plot(xs, vals, "o-", color="tab:blue", label="expected hazard area")
        ax.plot(xs, his, color="tab:red", linestyle="-.", label="95% CI upper")
        ax.plot(xs, los, color="tab:green", linestyle="-.", label="95% CI lower")
        ax.set_xticks(xs)
        ax.set_xticklabels([label for label, _ in rows], rotation=45, ha="right")
        ax.set_ylabel("expected hazard area (min)")
        ax.legend(fontsize=8)
        ax.grid(alpha=0.25)
        fig.tight_layout()
        fig.savefig(os.path.join(args.out, "expected_fha.png"), dpi=150)
        plt.close(fig)
    for label, exp in rows:
        print(f"{label}: {exp.value:.3f} min "
              f"(+/- {2 * exp.sigma_full_cov:.3f} full-cov)")
    return 0


def cmd_risk(args, cfg: RunConfig) -> int:
    expected_inputs = {"nns": 1, "clock": 1, "expected_fha": 2}[args.mode]
    if len(args.inputs) != expected_inputs:
        raise InputError(
            f"mode {args.mode!r} expects {expected_inputs} input file(s): "
            + {"nns": "fit.json", "clock": "samples.csv",
               "expected_fha": "fit.json kpi.csv"}[args.mode])
    if args.mode == "nns":
        return _risk_nns(args, cfg)
    if args.mode == "clock":
        return _risk_clock(args, cfg)
    return _risk_expected_fha(args, cfg)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crewfatigue",
        description="Roster-to-fatigue-risk analytics pipeline")
    parser.add_argument("--config", metavar="PATH", default=None,
                        help="INI run configuration (defaults reproduce the "
                             "standard parametrization)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic roster population")
    p.add_argument("--out", metavar="DIR", default=".")
    p.add_argument("--seed", type=int, default=None,
                   help="override the configured generator seed")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("analyze", help="roster CSV -> KPI table + samples")
    p.add_argument("rosters", metavar="ROSTERS.csv")
    p.add_argument("--out", metavar="DIR", default=".")
    p.add_argument("--timelines", action="store_true",
                   help="also export predicted schedule intervals for audit")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fit", help="fit a KPI curve model")
    p.add_argument("kpi", metavar="KPI.csv")
    p.add_argument("--model", required=True, choices=sorted(FIT_MODELS))
    p.add_argument("--pool-above", type=int, default=None,
                   help="pool rosters with x above this into one tail point")
    p.add_argument("--out", metavar="DIR", default=".")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compare", help="compare two KPI tables")
    p.add_argument("kpi_a", metavar="KPI_A.csv")
    p.add_argument("kpi_b", metavar="KPI_B.csv")
    p.add_argument("--paired", action="store_true",
                   help="match rows by crew id and use paired statistics")
    p.add_argument("--out", metavar="DIR", default=".")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("risk", help="risk curves and expectations")
    p.add_argument("inputs", nargs="+", metavar="INPUT",
                   help="nns: fit.json | clock: samples.csv | "
                        "expected_fha: fit.json kpi.csv")
    p.add_argument("--mode", required=True,
                   choices=("nns", "clock", "expected_fha"))
    p.add_argument("--x-lo", type=float, default=1.0)
    p.add_argument("--x-hi", type=float, default=13.0)
    p.add_argument("--x-step", type=float, default=0.25)
    p.add_argument("--bins", default=f"0,360,720,1080,{MINUTES_PER_DAY}",
                   help="coarse clock bin edges in minutes (clock mode)")
    p.add_argument("--all-samples", action="store_true",
                   help="clock mode: use every sample, not just in-flight ones")
    p.add_argument("--out", metavar="DIR", default=".")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_risk)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (InputError, RosterFormatError, InsufficientBinsError,
            SynthError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
