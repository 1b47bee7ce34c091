"""Command-line interface: limits, monitor, simulate, preprocess, acf.

Report-producing commands write delimited output plus a rendered figure next
to it (suppress with --no-plot). Calibrated limits are cached in a plain-text
file; the cache directory defaults to $NSWCHART_CACHE_DIR (else the working
directory).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import casestudy, dataio, dfewma, limits, plotting, simulate
from .monitor import Monitor, MonitorConfig, check_signal, diagnose


def _figure_path(out: str) -> str:
    return str(Path(out).with_suffix(".png"))


def _cmd_limits(args) -> int:
    cfg = limits.LimitConfig(
        fap_alpha=args.alpha,
        bootstrap_B=args.B,
        horizon_n=args.n,
        window_W=args.W,
        step_s=args.s,
        seed=args.seed,
    )
    if args.reference:
        reference = dataio.read_matrix_csv(args.reference)
        if args.p and reference.shape[1] != args.p:
            raise ValueError(f"--p {args.p} does not match reference file with {reference.shape[1]} columns")
    else:
        if not args.p:
            raise ValueError("--p is required when no --reference file is given")
        reference = limits.standard_normal_reference(args.p, size=args.pool_size, seed=args.seed)
    cache_path = args.cache or limits.default_cache_path()
    limit = limits.get_or_compute_limit(cache_path, reference, cfg)
    print(limits._record_line(reference.shape[1], limit))
    return 0


def _load_limit(args, p: int) -> limits.ControlLimit:
    if args.h is not None:
        cfg = limits.LimitConfig(
            fap_alpha=args.alpha,
            bootstrap_B=1,
            horizon_n=max(args.W, 100),
            window_W=args.W,
            step_s=args.s,
            seed=0,
        )
        return limits.ControlLimit(h=args.h, config=cfg, quantile_level=1.0 - args.alpha, source_fingerprint="manual")
    cache_path = args.limit_cache or limits.default_cache_path()
    found = limits.find_limit(cache_path, p, args.W, args.s)
    if found is None:
        raise ValueError(
            f"no cached limit for p={p}, W={args.W}, s={args.s} in {cache_path}; run `nswchart limits` or pass --h"
        )
    return found


def _cmd_monitor(args) -> int:
    stream = dataio.read_matrix_csv(args.input)
    if not np.isfinite(stream).all():
        raise ValueError(f"{args.input}: stream contains missing values; preprocess it first")
    p = stream.shape[1]
    limit = _load_limit(args, p)
    cfg = MonitorConfig(p=p, W=args.W, s=args.s, limit=limit)
    mon = Monitor(cfg)
    lines = [dataio.CHART_RECORD_HEADER]
    first_report = None
    for row in stream:
        cp = mon.observe(row)
        if cp is None:
            continue
        report = None
        if check_signal(cp, cfg) and first_report is None:
            first_report = diagnose(mon.current_window(), cp, cfg)
            report = first_report if args.diagnose else None
        lines.append(dataio.format_chart_record(cp, limit.h, report))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        if not args.no_plot and mon.history:
            plotting.save_chart_figure(
                mon.chart_times,
                mon.chart_values,
                limit.h,
                _figure_path(args.out),
                signal_time=first_report.alarm_time_n if first_report else None,
                title=f"W={args.W}, s={args.s}, p={p}",
            )
    else:
        sys.stdout.write(text)
    if first_report is not None:
        print(
            f"signal at n={first_report.alarm_time_n}: value={first_report.statistic_value:.6g} "
            f"change_point={first_report.change_point_estimate} "
            f"variables={';'.join(str(v) for v in first_report.suspicious_variables)}",
            file=sys.stderr,
        )
    return 0


def _cmd_simulate(args) -> int:
    specs, settings = dataio.load_scenario_grid(args.grid)
    lim_set = {"alpha": 0.01, "B": 10000, "seed": 0, "pool": 1000, "s": 5, **settings.get("limit", {})}
    rows = []
    if args.scheme == "nsw":
        cache_path = args.cache or limits.default_cache_path()
        limit_cache: dict[tuple, limits.ControlLimit] = {}
        for spec in specs:
            key = (spec.p, spec.W)
            if key not in limit_cache:
                cfg = limits.LimitConfig(
                    fap_alpha=lim_set["alpha"],
                    bootstrap_B=lim_set["B"],
                    horizon_n=spec.horizon_n,
                    window_W=spec.W,
                    step_s=lim_set["s"],
                    seed=lim_set["seed"],
                )
                reference = limits.standard_normal_reference(spec.p, size=lim_set["pool"], seed=lim_set["seed"])
                limit_cache[key] = limits.get_or_compute_limit(cache_path, reference, cfg)
            mon_cfg = MonitorConfig(p=spec.p, W=spec.W, s=lim_set["s"], limit=limit_cache[key])
            summary = simulate.run_scenario(spec, simulate.ModelParams(), mon_cfg)
            rows.append(simulate.metrics_row(spec, summary, scheme="nsw"))
            print(f"nsw {spec.model} p={spec.p} W={spec.W} tau={spec.tau} delta={spec.delta} v={spec.sparsity_v}: "
                  f"DR={summary.dr:.3f} CED={summary.ced if summary.ced is None else round(summary.ced, 2)}")
    else:
        dfw_set = {"m0": 100, "lambda": 0.1, "alpha": 0.01, "cal_runs": 1000, "cal_seed": 0,
                   **settings.get("dfewma", {})}
        h_cache: dict[tuple, float] = {}
        for spec in specs:
            cfg = dfewma.comparison_config(
                spec.p, spec.W, m0=dfw_set["m0"], lambda_=dfw_set["lambda"], fap_alpha=dfw_set["alpha"]
            )
            key = (spec.p, spec.W, spec.horizon_n)
            if key not in h_cache:
                h_cache[key] = dfewma.calibrate_dfewma_limit(
                    cfg, spec.horizon_n, n_runs=dfw_set["cal_runs"], seed=dfw_set["cal_seed"]
                )
            summary = dfewma.run_dfewma_scenario(spec, simulate.ModelParams(), dfewma.with_limit(cfg, h_cache[key]))
            rows.append(simulate.metrics_row(spec, summary, scheme="dfewma"))
            print(f"dfewma {spec.model} p={spec.p} W={spec.W} tau={spec.tau} delta={spec.delta} v={spec.sparsity_v}: "
                  f"DR={summary.dr:.3f} CED={summary.ced if summary.ced is None else round(summary.ced, 2)}")
    dataio.write_metrics_csv(args.out, rows)
    if not args.no_plot:
        plotting.save_metrics_figure(rows, _figure_path(args.out))
    print(f"wrote {len(rows)} scenario rows to {args.out}")
    return 0


def _cmd_preprocess(args) -> int:
    delim = " " if args.delimiter == "space" else args.delimiter
    ic_raw = dataio.read_matrix_csv(args.ic, delimiter=delim)
    oc_raw = dataio.read_matrix_csv(args.oc, delimiter=delim)
    ic_clean, oc_clean, report = casestudy.preprocess_secom(ic_raw, oc_raw)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataio.write_matrix_csv(str(out_dir / "ic_clean.csv"), ic_clean)
    dataio.write_matrix_csv(str(out_dir / "oc_clean.csv"), oc_clean)
    report_doc = {
        "removed_constant_columns": list(report.removed_constant_columns),
        "removed_degenerate_columns": list(report.removed_degenerate_columns),
        "retained_columns": report.retained_columns,
        "outliers_replaced": report.outliers_replaced.tolist(),
        "missing_imputed_ic": report.missing_imputed_ic.tolist(),
        "missing_imputed_oc": report.missing_imputed_oc.tolist(),
        "ic_means": report.ic_means.tolist(),
        "ic_stds": report.ic_stds.tolist(),
    }
    (out_dir / "preprocess_report.json").write_text(json.dumps(report_doc, indent=1), encoding="utf-8")
    print(
        f"retained {report.retained_columns} of {ic_raw.shape[1]} columns "
        f"({len(report.removed_constant_columns)} constant, {len(report.removed_degenerate_columns)} degenerate); "
        f"wrote cleaned matrices and report to {out_dir}"
    )
    return 0


def _cmd_acf(args) -> int:
    if args.input:
        stream = dataio.read_matrix_csv(args.input)
    else:
        n = args.W + (args.points - 1) * args.s
        stream = np.random.default_rng(args.seed).standard_normal((n, args.p))
    acf = simulate.chart_acf(stream, args.W, args.s, args.lags)
    n_points = simulate.evaluation_times(args.W, args.s, stream.shape[0]).size
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("lag,acf\n")
        for lag, value in enumerate(acf, start=1):
            fh.write(f"{lag},{dataio.FLOAT_FMT % value}\n")
    if not args.no_plot:
        plotting.save_acf_figure(acf, _figure_path(args.out), n_points, title=f"W={args.W}, s={args.s}")
    print(f"wrote {args.lags} autocorrelations ({n_points} chart points) to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nswchart", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_lim = sub.add_parser("limits", help="calibrate and cache a control limit")
    p_lim.add_argument("--p", type=int, default=0, help="dimension (required unless --reference)")
    p_lim.add_argument("--W", type=int, required=True)
    p_lim.add_argument("--s", type=int, default=5)
    p_lim.add_argument("--n", type=int, default=100, help="monitoring horizon")
    p_lim.add_argument("--alpha", type=float, default=0.01)
    p_lim.add_argument("--B", type=int, default=10000)
    p_lim.add_argument("--seed", type=int, default=0)
    p_lim.add_argument("--reference", help="CSV of in-control observations to bootstrap from")
    p_lim.add_argument("--pool-size", type=int, default=limits.DEFAULT_POOL_SIZE)
    p_lim.add_argument("--cache", help="cache file (default: $NSWCHART_CACHE_DIR/limits.txt)")
    p_lim.set_defaults(func=_cmd_limits)

    p_mon = sub.add_parser("monitor", help="stream a CSV file through the chart")
    p_mon.add_argument("--input", required=True)
    p_mon.add_argument("--limit-cache", help="limit cache file")
    p_mon.add_argument("--h", type=float, help="explicit control limit (skips the cache)")
    p_mon.add_argument("--alpha", type=float, default=0.01)
    p_mon.add_argument("--W", type=int, required=True)
    p_mon.add_argument("--s", type=int, default=5)
    p_mon.add_argument("--diagnose", action="store_true", help="fill diagnosis fields on the first alarm record")
    p_mon.add_argument("--out", help="write chart records here (default stdout)")
    p_mon.add_argument("--no-plot", action="store_true")
    p_mon.set_defaults(func=_cmd_monitor)

    p_sim = sub.add_parser("simulate", help="run a scenario grid and write a metrics table")
    p_sim.add_argument("--grid", required=True, help="JSON grid file")
    p_sim.add_argument("--scheme", choices=("nsw", "dfewma"), default="nsw")
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--cache", help="limit cache file")
    p_sim.add_argument("--no-plot", action="store_true")
    p_sim.set_defaults(func=_cmd_simulate)

    p_pre = sub.add_parser("preprocess", help="clean paired IC/OC raw samples")
    p_pre.add_argument("--ic", required=True)
    p_pre.add_argument("--oc", required=True)
    p_pre.add_argument("--out-dir", required=True)
    p_pre.add_argument("--delimiter", default=",", help="field delimiter; use 'space' for whitespace")
    p_pre.set_defaults(func=_cmd_preprocess)

    p_acf = sub.add_parser("acf", help="autocorrelation of the chart statistic on an IC stream")
    p_acf.add_argument("--W", type=int, required=True)
    p_acf.add_argument("--s", type=int, required=True)
    p_acf.add_argument("--lags", type=int, default=10)
    p_acf.add_argument("--out", required=True)
    p_acf.add_argument("--input", help="CSV stream; omit to simulate a standard-normal stream")
    p_acf.add_argument("--p", type=int, default=100)
    p_acf.add_argument("--points", type=int, default=500, help="chart points when simulating")
    p_acf.add_argument("--seed", type=int, default=0)
    p_acf.add_argument("--no-plot", action="store_true")
    p_acf.set_defaults(func=_cmd_acf)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
