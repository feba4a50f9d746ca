"""Command-line entry point.

Exit codes: 0 success, 2 validation error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import RunConfig, parse_config, with_overrides, write_config
from .errors import CarenetError, ValidationError
from .model import classify_vulnerable
from .pipeline import (BatchReport, compute_baseline, evaluate_scenario, load_instance,
                       run_batch)
from .reallocation import (EquityRule, assess_access, build_transport_problem, plan_metrics,
                           solve_transport)
from .report import emit_report
from .scenarios import MODES, Scenario, ScenarioSpec, sample
from .synth import SynthSpec, generate_synthetic_instance

EXIT_VALIDATION, EXIT_RUNTIME = 2, 3


def _common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
    p.add_argument("--config", type=Path, required=config_required, help="flat TOML run config")
    p.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
    p.add_argument("--out", type=Path, default=None, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="carenet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a seeded synthetic instance and a config for it")
    _common(p, config_required=False)
    p.add_argument("--rows", type=int, default=SynthSpec.rows)
    p.add_argument("--cols", type=int, default=SynthSpec.cols)
    p.add_argument("--facilities", type=int, default=SynthSpec.n_facilities)
    p.add_argument("--cbgs", type=int, default=SynthSpec.n_cbgs)
    p.add_argument("--visits", type=int, default=SynthSpec.total_visits)

    p = sub.add_parser("ingest-check", help="validate the configured inputs and summarize them")
    _common(p)

    p = sub.add_parser("simulate", help="sample one flood scenario")
    _common(p)
    p.add_argument("--mode", choices=MODES, default="random")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--case", type=int, default=0)

    for name, text in (("allocate", "solve the travel-time re-allocation for a scenario"),
                       ("site", "run the threshold solve then temporary-facility siting")):
        p = sub.add_parser(name, help=text)
        _common(p)
        p.add_argument("--scenario", type=Path, required=True, help="scenario JSON")
        if name == "allocate":
            p.add_argument("--equity", action="store_true", help="apply the travel threshold")

    p = sub.add_parser("run-batch", help="run the whole scenario grid")
    _common(p)
    p.add_argument("--deltas", type=float, nargs="+", default=None)
    p.add_argument("--cases", type=int, default=None)
    p.add_argument("--modes", choices=MODES, nargs="+", default=None)
    p.add_argument("--equity", dest="equity", action="store_true", default=None)
    p.add_argument("--no-equity", dest="equity", action="store_false")
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("report", help="re-emit report tables from a run-batch directory")
    _common(p, config_required=False)
    p.add_argument("--batch", type=Path, required=True, help="run-batch output directory")
    return parser


def _config(args) -> RunConfig:
    cfg = parse_config(args.config)
    return with_overrides(cfg, master_seed=args.seed, output_dir=args.out)


def _print(doc) -> None:
    print(json.dumps(doc, indent=2, sort_keys=True))


def _out(args, cfg=None) -> Path:
    out = args.out or (cfg.output_dir if cfg else Path("."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_synth(args):
    out = args.out or Path("synthetic")
    spec = SynthSpec(rows=args.rows, cols=args.cols, n_facilities=args.facilities,
                     n_cbgs=args.cbgs, total_visits=args.visits)
    seed = 0 if args.seed is None else args.seed
    inst = generate_synthetic_instance(seed, spec, outdir=out)
    cfg = RunConfig(out / "network.csv", out / "facilities.csv", out / "blockgroups.csv",
                    out / "visits.csv", master_seed=seed, output_dir=out / "run")
    write_config(cfg, out / "config.toml")
    _print({"out": str(out), "block_groups": inst.m, "facilities": inst.n,
            "edges": len(inst.network.edges), "visits": sum(inst.visits_by_facility.values())})


def cmd_ingest_check(args):
    cfg = _config(args)
    inst = load_instance(cfg)
    base = compute_baseline(inst)
    tags = inst.network.edge_ids_by_floodplain
    _print({
        "block_groups": inst.m,
        "facilities": inst.n,
        "nodes": len(inst.network.nodes),
        "edges": len(inst.network.edges),
        "edges_fp100": len(tags["fp100"]),
        "edges_fp500": len(tags["fp500"]),
        "facilities_fp100": len(inst.floodplain_facilities("fp100")),
        "facilities_fp500": len(inst.floodplain_facilities("fp500")),
        "visits": sum(inst.visits_by_facility.values()),
        "total_capacity": sum(f.total_capacity or 0 for f in inst.facilities),
        "baseline": base.__dict__,
    })


def cmd_simulate(args):
    cfg = _config(args)
    inst = load_instance(cfg)
    spec = ScenarioSpec(args.delta, args.mode, cfg.master_seed, args.case)
    sc = sample(inst, spec, cfg.rank_fraction_count)
    if args.out is None:
        sys.stdout.write(sc.to_json())
    else:
        out = _out(args)
        (out / "scenario.json").write_text(sc.to_json(), encoding="utf-8")
        _print({"scenario": str(out / "scenario.json"), "closed_edges": len(sc.closed_edges),
                "closed_facilities": len(sc.closed_facilities)})


def _read_scenario(path: Path) -> Scenario:
    try:
        return Scenario.from_json(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read scenario {path}: {exc.strerror}") from None


def cmd_allocate(args):
    cfg = _config(args)
    inst = load_instance(cfg)
    sc = _read_scenario(args.scenario)
    vuln = classify_vulnerable(inst)
    rule = EquityRule(compute_baseline(inst).travel_threshold_s, vuln) if args.equity else None
    report = assess_access(inst, sc)
    plan = solve_transport(build_transport_problem(inst, sc, report, rule))
    metrics = plan_metrics(inst, sc, report, plan, vuln)
    out = _out(args, cfg)
    plan.write_csv(out / "plan.csv")
    (out / "metrics.json").write_text(json.dumps(metrics.to_dict(), indent=2, sort_keys=True)
                                      + "\n", encoding="utf-8")
    _print(metrics.to_dict())


def cmd_site(args):
    cfg = _config(args)
    inst = load_instance(cfg)
    sc = _read_scenario(args.scenario)
    vuln = classify_vulnerable(inst)
    rule = EquityRule(compute_baseline(inst).travel_threshold_s, vuln)
    result = evaluate_scenario(inst, sc, rule, vuln, cfg.allow_self_site)
    out = _out(args, cfg)
    result.equity_plan.write_csv(out / "equity_plan.csv")
    result.siting.write_csv(out / "siting_plan.csv")
    doc = result.record()["siting"]
    (out / "siting.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                                     encoding="utf-8")
    _print(doc)


def cmd_run_batch(args):
    cfg = _config(args)
    cfg = with_overrides(
        cfg,
        deltas=tuple(args.deltas) if args.deltas else None,
        cases_per_delta=args.cases,
        modes=tuple(args.modes) if args.modes else None,
        equity=args.equity,
        workers=args.workers,
    )
    report = run_batch(cfg)
    _print({"out": str(cfg.output_dir), "scenarios": len(report.records)})


def cmd_report(args):
    path = args.batch / "batch_report.json"
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    out = args.out or (args.batch / "report")
    paths = emit_report(BatchReport.from_dict(doc), out)
    _print({k: str(v) for k, v in paths.items()})


COMMANDS = {
    "synth": cmd_synth,
    "ingest-check": cmd_ingest_check,
    "simulate": cmd_simulate,
    "allocate": cmd_allocate,
    "site": cmd_site,
    "run-batch": cmd_run_batch,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (CarenetError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
