"""Batch orchestration: ingest, simulate, allocate, site, aggregate.

Output layout under the run directory::

    summary.json
    batch_report.json
    scenarios/<mode>/delta_<d>/case_<k>/
        scenario.json  plan.csv  metrics.json
        equity_plan.csv  siting_plan.csv        (equity runs only)
    report/ ...                                 (see ``report.emit_report``)
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .config import RunConfig, format_param
from .errors import CarenetError
from .graph import MICROS, UNREACHABLE_US
from .ingest import ingest_instance
from .model import (Instance, classify_vulnerable, resolve_poverty_line,
                    resolve_travel_threshold, weighted_quantile)
from .reallocation import (AllocationPlan, EquityRule, Metrics, assess_access,
                           build_transport_problem, plan_metrics, residual_demand,
                           solve_transport)
from .report import emit_report
from .scenarios import Scenario, enumerate_batch
from .siting import SitingPlan, aggregate_demand_points, build_siting_problem, solve_siting


@dataclass(frozen=True)
class Baseline:
    avg_time_s: Optional[float]
    median_time_s: Optional[float]
    patients: int
    unreachable_patients: int
    travel_threshold_s: float
    poverty_line_usd: float
    vulnerable_cbgs: int
    vulnerable_patients: int


@dataclass(frozen=True, eq=False)
class ScenarioResult:
    scenario: Scenario
    metrics: Metrics
    plan: AllocationPlan
    equity_metrics: Optional[Metrics] = None
    equity_plan: Optional[AllocationPlan] = None
    siting: Optional[SitingPlan] = None

    @property
    def key(self):
        s = self.scenario.spec
        return (s.mode, s.delta, s.case_index)

    def record(self) -> dict:
        s = self.scenario.spec
        doc = {
            "mode": s.mode, "delta": s.delta, "case": s.case_index, "seed": s.seed,
            "closed_edges": len(self.scenario.closed_edges),
            "closed_facilities": len(self.scenario.closed_facilities),
            "metrics": self.metrics.to_dict(),
            "equity_metrics": None, "siting": None,
        }
        if self.equity_metrics is not None:
            doc["equity_metrics"] = self.equity_metrics.to_dict()
        if self.siting is not None:
            doc["siting"] = {
                "covered": self.siting.covered,
                "uncovered": sum(self.siting.uncovered.values()),
                "total_time_s": self.siting.total_time_s,
                "avg_time_s": (self.siting.total_time_s / self.siting.covered
                               if self.siting.covered else None),
                "inbound": self.siting.inbound(),
            }
        return doc


@dataclass
class BatchReport:
    baseline: Baseline
    records: list = field(default_factory=list)  # ScenarioResult.record() dicts
    cases_per_delta: int = 0
    inputs: dict = field(default_factory=dict)
    # "<mode>|<delta>" -> {site: aggregated demand}
    demand_points: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "baseline": self.baseline.__dict__,
            "cases_per_delta": self.cases_per_delta,
            "demand_points": self.demand_points,
            "inputs": self.inputs,
            "records": self.records,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BatchReport":
        return cls(Baseline(**doc["baseline"]), doc["records"], doc["cases_per_delta"],
                   doc.get("inputs", {}), doc.get("demand_points", {}))


def load_instance(cfg: RunConfig) -> Instance:
    return ingest_instance(cfg.network_file, cfg.facilities_file, cfg.blockgroups_file,
                           cfg.visits_file, cfg.params)


def compute_baseline(instance: Instance) -> Baseline:
    t = instance.baseline_pair_micros
    n = np.asarray([c for *_, c in instance.baseline_pairs], dtype=np.int64)
    ok = t != UNREACHABLE_US
    reach = int(n[ok].sum())
    vuln = classify_vulnerable(instance)
    return Baseline(
        avg_time_s=float((t[ok] * n[ok]).sum()) / reach / MICROS if reach else None,
        median_time_s=(weighted_quantile((t[ok] / MICROS).tolist(), n[ok].tolist(), 0.5)
                       if reach else None),
        patients=int(n.sum()),
        unreachable_patients=int(n[~ok].sum()),
        travel_threshold_s=resolve_travel_threshold(instance),
        poverty_line_usd=resolve_poverty_line(instance),
        vulnerable_cbgs=len(vuln),
        vulnerable_patients=sum(b.patients for b in instance.block_groups if b.id in vuln),
    )


def evaluate_scenario(instance: Instance, scenario: Scenario, equity: Optional[EquityRule],
                      vulnerable: frozenset, allow_self_site: bool = False) -> ScenarioResult:
    """assess -> allocate, plus threshold re-solve and siting when ``equity`` is given."""
    report = assess_access(instance, scenario)
    plan = solve_transport(build_transport_problem(instance, scenario, report))
    metrics = plan_metrics(instance, scenario, report, plan, vulnerable)
    if equity is None:
        return ScenarioResult(scenario, metrics, plan)
    eplan = solve_transport(build_transport_problem(instance, scenario, report, equity))
    emetrics = plan_metrics(instance, scenario, report, eplan, vulnerable)
    sproblem = build_siting_problem(instance, scenario, residual_demand(eplan), allow_self_site)
    return ScenarioResult(scenario, metrics, plan, emetrics, eplan, solve_siting(sproblem))


def _dump_json(doc, path: Path) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def scenario_dir(root: Path, scenario: Scenario) -> Path:
    s = scenario.spec
    return root / "scenarios" / s.mode / f"delta_{s.delta!r}" / f"case_{s.case_index:02d}"


def write_result(result: ScenarioResult, root: Path) -> None:
    d = scenario_dir(root, result.scenario)
    d.mkdir(parents=True, exist_ok=True)
    (d / "scenario.json").write_text(result.scenario.to_json(), encoding="utf-8")
    result.plan.write_csv(d / "plan.csv")
    _dump_json(result.record(), d / "metrics.json")
    if result.equity_plan is not None:
        result.equity_plan.write_csv(d / "equity_plan.csv")
        result.siting.write_csv(d / "siting_plan.csv")


_worker_state: dict = {}


def _worker_init(instance, cfg, equity, vulnerable):
    _worker_state.update(instance=instance, cfg=cfg, equity=equity, vulnerable=vulnerable)


def _worker_run(scenario: Scenario) -> ScenarioResult:
    st = _worker_state
    cfg = st["cfg"]
    rule = st["equity"] if cfg.equity_applies(scenario.spec.mode) else None
    return evaluate_scenario(st["instance"], scenario, rule, st["vulnerable"],
                             cfg.allow_self_site)


def _digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_batch(cfg: RunConfig, instance: Optional[Instance] = None,
              write: bool = True) -> BatchReport:
    """Run the configured scenario grid; with ``write`` emit the full output tree."""
    if instance is None:
        instance = load_instance(cfg)
    baseline = compute_baseline(instance)
    vulnerable = classify_vulnerable(instance)
    equity = EquityRule(baseline.travel_threshold_s, vulnerable)
    scenarios = enumerate_batch(instance, cfg.deltas, cfg.cases_per_delta, cfg.modes,
                                cfg.master_seed, cfg.rank_fraction_count)
    _worker_init(instance, cfg, equity, vulnerable)
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers, initializer=_worker_init,
                                 initargs=(instance, cfg, equity, vulnerable)) as pool:
            results = list(pool.map(_worker_run, scenarios, chunksize=1))
    else:
        results = []
        for sc in scenarios:
            try:
                results.append(_worker_run(sc))
            except CarenetError as exc:
                s = sc.spec
                raise type(exc)(f"scenario mode={s.mode} delta={s.delta} "
                                f"case={s.case_index}: {exc}") from exc

    inputs = {}
    for key, p in cfg.input_files.items():
        if Path(p).exists():
            inputs[key] = {"name": Path(p).name, "sha256": _digest(p)}
    points = {f"{mode}|{delta!r}": dict(m.totals)
              for (mode, delta), m in demand_point_maps(results).items()}
    report = BatchReport(baseline, [r.record() for r in results], cfg.cases_per_delta, inputs,
                         points)
    if write:
        root = Path(cfg.output_dir)
        root.mkdir(parents=True, exist_ok=True)
        for r in results:
            write_result(r, root)
        _dump_json(report.to_dict(), root / "batch_report.json")
        p = cfg.params
        _dump_json({
            "scenarios": len(results),
            "deltas": list(cfg.deltas),
            "cases_per_delta": cfg.cases_per_delta,
            "modes": list(cfg.modes),
            "master_seed": cfg.master_seed,
            "equity": cfg.equity,
            "equity_rank_ordering": cfg.equity_rank_ordering,
            "params": {
                "capacity_utilization": p.capacity_utilization,
                "poverty_line": format_param(p.poverty_line),
                "travel_threshold": format_param(p.travel_threshold),
                "dummy_cost": p.dummy_cost,
            },
            "baseline": baseline.__dict__,
            "inputs": inputs,
        }, root / "summary.json")
        emit_report(report, root / "report")
    return report


def demand_point_maps(results) -> dict:
    """(mode, delta) -> DemandPointMap over that cell's siting plans."""
    cells: dict = {}
    for r in results:
        if r.siting is not None:
            cells.setdefault((r.scenario.spec.mode, r.scenario.spec.delta), []).append(r.siting)
    return {k: aggregate_demand_points(v) for k, v in sorted(cells.items())}
