"""Plot-ready tables from a batch report. No plotting happens here.

Files written to the report directory:

``baseline.csv``            metric,value reference rows (normal-period averages)
``distributions.csv``       long format, one row per scenario x model x metric
``cell_summary.csv``        per (mode, delta) aggregates under both weightings
``equity_comparison.csv``   vulnerable-subgroup travel time, base vs equity model
``demand_points.csv``       per (mode, delta) siting demand-point counts and totals
``demand_points/<mode>_delta_<d>.csv``  site_cbg,total_demand per cell

Averages come in two weightings: ``scenario_mean`` (mean of per-scenario
averages) and ``patient_weighted`` (pooled over all patients in the cell).
"""

from __future__ import annotations

import csv
from pathlib import Path

from .errors import CarenetError

COUNT_METRICS = ("lost_access", "reallocated", "unserved", "no_real_option",
                 "retained_patients", "vulnerable_lost", "vulnerable_reallocated",
                 "vulnerable_unserved")
# average metric -> the count that weights it when pooling patients
AVERAGE_WEIGHTS = {
    "avg_retained_time_s": "retained_patients",
    "avg_reallocated_time_s": "reallocated",
    "avg_reallocated_vulnerable_time_s": "vulnerable_reallocated",
}
SITING_METRICS = ("covered", "uncovered", "avg_time_s")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _cells(records):
    cells: dict = {}
    for r in records:
        cells.setdefault((r["mode"], r["delta"]), []).append(r)
    return dict(sorted(cells.items()))


def _scenario_mean(values):
    vals = [v for v in values if v is not None]
    return (sum(vals) / len(vals), len(vals)) if vals else (None, 0)


def _pooled(pairs):
    # pairs of (average, weight)
    num = sum(a * w for a, w in pairs if a is not None and w)
    den = sum(w for a, w in pairs if a is not None and w)
    return (num / den, den) if den else (None, 0)


def _model_rows(record):
    yield "base", record["metrics"]
    if record.get("equity_metrics") is not None:
        yield "equity", record["equity_metrics"]


def emit_report(report, outdir) -> dict[str, Path]:
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "demand_points").mkdir(exist_ok=True)
    except OSError as exc:
        raise CarenetError(f"cannot write report to {outdir}: {exc.strerror}") from None
    b = report.baseline
    paths = {name: outdir / f"{name}.csv" for name in
             ("baseline", "distributions", "cell_summary", "equity_comparison", "demand_points")}

    _write(paths["baseline"], ["metric", "value"], [
        ("baseline_avg_time_s", b.avg_time_s),
        ("baseline_median_time_s", b.median_time_s),
        ("travel_threshold_s", b.travel_threshold_s),
        ("poverty_line_usd", b.poverty_line_usd),
        ("patients", b.patients),
        ("unreachable_patients", b.unreachable_patients),
        ("vulnerable_cbgs", b.vulnerable_cbgs),
        ("vulnerable_patients", b.vulnerable_patients),
    ])

    dist_rows = []
    for r in sorted(report.records, key=lambda r: (r["mode"], r["delta"], r["case"])):
        key = (r["mode"], r["delta"], r["case"])
        for model, m in _model_rows(r):
            for metric in COUNT_METRICS + tuple(AVERAGE_WEIGHTS) + ("objective_s",):
                dist_rows.append(key + (model, metric, m[metric]))
        if r.get("siting") is not None:
            for metric in SITING_METRICS:
                dist_rows.append(key + ("siting", metric, r["siting"][metric]))
    _write(paths["distributions"], ["mode", "delta", "case", "model", "metric", "value"],
           dist_rows)

    cell_rows, eq_rows, dp_rows = [], [], []
    for (mode, delta), recs in _cells(report.records).items():
        models = {"base": [r["metrics"] for r in recs]}
        eq = [r["equity_metrics"] for r in recs if r.get("equity_metrics") is not None]
        if eq:
            models["equity"] = eq
        for model, ms in models.items():
            for metric in COUNT_METRICS:
                vals = [m[metric] for m in ms]
                cell_rows.append((mode, delta, model, metric, "scenario_mean",
                                  sum(vals) / len(vals), len(vals)))
                cell_rows.append((mode, delta, model, metric, "total", sum(vals), len(vals)))
            for metric, weight in AVERAGE_WEIGHTS.items():
                mean, n = _scenario_mean(m[metric] for m in ms)
                cell_rows.append((mode, delta, model, metric, "scenario_mean", mean, n))
                pooled, w = _pooled((m[metric], m[weight]) for m in ms)
                cell_rows.append((mode, delta, model, metric, "patient_weighted", pooled, w))
        if eq:
            base = models["base"]
            key = "avg_reallocated_vulnerable_time_s"
            bw = AVERAGE_WEIGHTS[key]
            eq_rows.append((mode, delta, "scenario_mean", _scenario_mean(m[key] for m in base)[0],
                            _scenario_mean(m[key] for m in eq)[0],
                            sum(m["vulnerable_unserved"] for m in base) / len(base),
                            sum(m["vulnerable_unserved"] for m in eq) / len(eq), len(recs)))
            eq_rows.append((mode, delta, "patient_weighted",
                            _pooled((m[key], m[bw]) for m in base)[0],
                            _pooled((m[key], m[bw]) for m in eq)[0],
                            sum(m["vulnerable_unserved"] for m in base),
                            sum(m["vulnerable_unserved"] for m in eq), len(recs)))
            sit = [r["siting"] for r in recs]
            mean, n = _scenario_mean(s["avg_time_s"] for s in sit)
            cell_rows.append((mode, delta, "siting", "avg_time_s", "scenario_mean", mean, n))
            pooled, w = _pooled((s["avg_time_s"], s["covered"]) for s in sit)
            cell_rows.append((mode, delta, "siting", "avg_time_s", "patient_weighted", pooled, w))
            for metric in ("covered", "uncovered"):
                vals = [s[metric] for s in sit]
                cell_rows.append((mode, delta, "siting", metric, "total", sum(vals), len(vals)))

    for key, totals in sorted(report.demand_points.items()):
        mode, delta = key.split("|")
        _write(outdir / "demand_points" / f"{mode}_delta_{delta}.csv",
               ["site_cbg", "total_demand"], sorted(totals.items()))
        dp_rows.append((mode, float(delta), len(totals), sum(totals.values())))

    _write(paths["cell_summary"], ["mode", "delta", "model", "metric", "weighting", "value", "n"],
           cell_rows)
    _write(paths["equity_comparison"],
           ["mode", "delta", "weighting", "base_vulnerable_avg_s", "equity_vulnerable_avg_s",
            "base_vulnerable_unserved", "equity_vulnerable_unserved", "cases"], eq_rows)
    _write(paths["demand_points"], ["mode", "delta", "points", "total_demand"], dp_rows)
    return paths
