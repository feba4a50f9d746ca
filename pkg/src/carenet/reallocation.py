"""Patient re-allocation after a flood scenario.

Patients whose baseline facility is still open and reachable stay put. The
rest are routed by an exact integral min-cost transportation solve over the
flooded network, with an uncapacitated dummy destination priced at the
dummy cost absorbing whatever real capacity cannot. The equity variant
additionally forbids real arcs longer than the travel threshold for
vulnerable block groups.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from typing import Mapping, Optional

import numpy as np

from . import kernels
from .errors import CarenetError, ValidationError
from .graph import MICROS, UNREACHABLE_US
from .model import Instance, classify_vulnerable, facility_micros
from .scenarios import Scenario

DUMMY = "DUMMY"


@dataclass(frozen=True, eq=False)
class AccessReport:
    scenario: Scenario
    pair_retained: np.ndarray  # bool, aligned with instance.baseline_pairs
    lost_demand: Mapping[str, int]  # p_i for every block group
    remaining_capacity: Mapping[str, int]  # c_j for every facility
    retained_micros: np.ndarray  # per baseline pair; UNREACHABLE_US when lost
    facility_micros: np.ndarray  # CBG x facility on the flooded network

    def status(self, k: int) -> str:
        return "retained" if self.pair_retained[k] else "lost"


@dataclass(frozen=True)
class EquityRule:
    threshold_s: float
    vulnerable: frozenset


@dataclass(frozen=True, eq=False)
class TransportProblem:
    origins: tuple[str, ...]
    supplies: np.ndarray  # int64
    destinations: tuple[str, ...]  # real facilities, then DUMMY
    capacities: np.ndarray  # int64, dummy last
    cost: np.ndarray  # int64 microseconds, origins x destinations
    allowed: np.ndarray  # uint8 arc mask
    dummy_cost_us: int
    equity: Optional[EquityRule] = None

    @property
    def n_real(self) -> int:
        return len(self.destinations) - 1

    def check(self) -> None:
        if len(self.origins) == 0:
            return
        if not self.allowed[:, -1].all():
            raise CarenetError("every origin needs a permitted dummy arc")
        real = self.allowed[:, :-1].astype(bool)
        if real.any() and self.cost[:, :-1][real].max() >= self.dummy_cost_us:
            raise CarenetError("dummy cost must exceed every finite real-arc cost")
        if self.capacities[-1] < self.supplies.sum():
            raise CarenetError("dummy capacity must cover total supply")


@dataclass(frozen=True, eq=False)
class AllocationPlan:
    problem: TransportProblem
    flow: np.ndarray  # int64, origins x destinations

    @property
    def objective_us(self) -> int:
        return int((self.flow * np.where(self.problem.allowed, self.problem.cost, 0)).sum())

    @property
    def objective_s(self) -> float:
        return self.objective_us / MICROS

    @property
    def dummy_flow(self) -> dict[str, int]:
        return {o: int(self.flow[k, -1]) for k, o in enumerate(self.problem.origins)}

    def violations(self) -> list[str]:
        """Constraint breaches of the stored plan; empty when feasible."""
        p, out = self.problem, []
        if not np.issubdtype(self.flow.dtype, np.integer):
            out.append("non-integral flow dtype")
        if (self.flow < 0).any():
            out.append("negative flow")
        if len(p.origins):
            bad = (self.flow != 0) & (p.allowed == 0)
            if bad.any():
                out.append(f"{int(bad.sum())} forbidden arcs carry flow")
            rows = self.flow.sum(axis=1)
            if not np.array_equal(rows, p.supplies):
                out.append("demand conservation broken")
            cols = self.flow.sum(axis=0)
            if (cols > p.capacities).any():
                out.append("capacity exceeded")
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["cbg_id", "facility_id", "patients"])
            for a, o in enumerate(self.problem.origins):
                for b, d in enumerate(self.problem.destinations):
                    if self.flow[a, b]:
                        w.writerow([o, d, int(self.flow[a, b])])


def assess_access(instance: Instance, scenario: Scenario) -> AccessReport:
    scenario.validate(instance)
    times = facility_micros(instance, scenario.closed_edges)
    fids = [f.id for f in instance.facilities]
    open_ = np.asarray([fid not in scenario.closed_facilities for fid in fids])
    pairs = instance.baseline_pairs
    retained = np.zeros(len(pairs), dtype=bool)
    retained_us = np.full(len(pairs), UNREACHABLE_US, dtype=np.int64)
    lost = {b.id: 0 for b in instance.block_groups}
    used = {fid: 0 for fid in fids}
    for k, (i, j, n) in enumerate(pairs):
        t = times[i, j]
        if open_[j] and t != UNREACHABLE_US:
            retained[k] = True
            retained_us[k] = t
            used[fids[j]] += n
        else:
            lost[instance.block_groups[i].id] += n
    remaining = {
        f.id: (f.total_capacity - used[f.id]) if open_[j] else 0
        for j, f in enumerate(instance.facilities)
    }
    return AccessReport(scenario, retained, lost, remaining, retained_us, times)


def build_transport_problem(instance: Instance, scenario: Scenario, report: AccessReport,
                            equity: Optional[EquityRule] = None) -> TransportProblem:
    if report.scenario != scenario:
        raise ValidationError("access report was derived from a different scenario")
    cidx = [i for i, b in enumerate(instance.block_groups) if report.lost_demand[b.id] > 0]
    fidx = [j for j, f in enumerate(instance.facilities)
            if f.id not in scenario.closed_facilities and report.remaining_capacity[f.id] > 0]
    origins = tuple(instance.block_groups[i].id for i in cidx)
    supplies = np.asarray([report.lost_demand[o] for o in origins], dtype=np.int64)
    dests = tuple(instance.facilities[j].id for j in fidx) + (DUMMY,)
    caps = np.asarray([report.remaining_capacity[d] for d in dests[:-1]] + [int(supplies.sum())],
                      dtype=np.int64)
    m_us = int(round(instance.params.dummy_cost * MICROS))

    real = report.facility_micros[np.ix_(cidx, fidx)] if cidx and fidx else \
        np.zeros((len(cidx), len(fidx)), dtype=np.int64)
    ok = real != UNREACHABLE_US
    if equity is not None:
        limit = equity.threshold_s * MICROS
        vuln = np.asarray([o in equity.vulnerable for o in origins], dtype=bool)
        ok &= ~(vuln[:, None] & (real > limit))
    if ok.any() and real[ok].max() >= m_us:
        raise ValidationError(
            f"dummy_cost {instance.params.dummy_cost} s must exceed the largest finite "
            f"travel time {real[ok].max() / MICROS} s")
    cost = np.zeros((len(origins), len(dests)), dtype=np.int64)
    cost[:, :-1] = np.where(ok, real, 0)
    cost[:, -1] = m_us
    allowed = np.ones((len(origins), len(dests)), dtype=np.uint8)
    allowed[:, :-1] = ok
    return TransportProblem(origins, supplies, dests, caps, cost, allowed, m_us, equity)


def solve_transport(problem: TransportProblem) -> AllocationPlan:
    """Optimal integral plan via successive shortest paths on the residual network."""
    problem.check()
    flow = kernels.transport_min_cost(problem.supplies, problem.capacities,
                                      problem.cost, problem.allowed)
    return AllocationPlan(problem, np.asarray(flow, dtype=np.int64))


def certify_optimal(plan: AllocationPlan) -> bool:
    """True when the residual network of ``plan`` has no negative-cost cycle.

    Independent of the solver: plain Bellman-Ford over origins, real and dummy
    destinations and a sink node that ties the destinations together.
    """
    p = plan.problem
    no, nf = len(p.origins), len(p.destinations)
    if no == 0:
        return True
    sink = no + nf
    arcs = []
    used = plan.flow.sum(axis=0)
    for i in range(no):
        for j in range(nf):
            if p.allowed[i, j]:
                c = int(p.cost[i, j])
                arcs.append((i, no + j, c))
                if plan.flow[i, j] > 0:
                    arcs.append((no + j, i, -c))
    for j in range(nf):
        if used[j] < p.capacities[j]:
            arcs.append((no + j, sink, 0))
        if used[j] > 0:
            arcs.append((sink, no + j, 0))
    dist = [0] * (sink + 1)
    for _ in range(sink + 1):
        changed = False
        for a, b, c in arcs:
            if dist[a] + c < dist[b]:
                dist[b] = dist[a] + c
                changed = True
        if not changed:
            return True
    return False


def residual_demand(plan: AllocationPlan) -> dict[str, int]:
    """Patients still routed to the dummy destination, per origin block group."""
    return plan.dummy_flow


@dataclass(frozen=True)
class Metrics:
    lost_access: int
    reallocated: int
    unserved: int
    no_real_option: int
    retained_patients: int
    avg_retained_time_s: Optional[float]
    avg_reallocated_time_s: Optional[float]
    vulnerable_lost: int
    vulnerable_reallocated: int
    vulnerable_unserved: int
    avg_reallocated_vulnerable_time_s: Optional[float]
    max_reallocated_vulnerable_time_s: Optional[float]
    objective_s: float

    def to_dict(self) -> dict:
        return asdict(self)


def _mean(total_us: int, count: int) -> Optional[float]:
    return None if count == 0 else total_us / count / MICROS


def plan_metrics(instance: Instance, scenario: Scenario, report: AccessReport,
                 plan: AllocationPlan, vulnerable: Optional[frozenset] = None) -> Metrics:
    """Access and travel-time summary; dummy flow never enters an average."""
    if vulnerable is None:
        vulnerable = classify_vulnerable(instance)
    p = plan.problem
    counts = np.asarray([n for _, _, n in instance.baseline_pairs], dtype=np.int64)
    kept = report.pair_retained
    retained_n = int(counts[kept].sum())
    retained_t = int((counts[kept] * report.retained_micros[kept]).sum())

    real_flow = plan.flow[:, :-1] if len(p.origins) else np.zeros((0, 0), dtype=np.int64)
    real_cost = p.cost[:, :-1] if len(p.origins) else real_flow
    vmask = np.asarray([o in vulnerable for o in p.origins], dtype=bool)
    vflow = real_flow[vmask]
    vcost = real_cost[vmask]
    no_real = int(p.supplies[~p.allowed[:, :-1].any(axis=1)].sum()) if len(p.origins) else 0
    return Metrics(
        lost_access=int(p.supplies.sum()),
        reallocated=int(real_flow.sum()),
        unserved=int(plan.flow[:, -1].sum()) if len(p.origins) else 0,
        no_real_option=no_real,
        retained_patients=retained_n,
        avg_retained_time_s=_mean(retained_t, retained_n),
        avg_reallocated_time_s=_mean(int((real_flow * real_cost).sum()), int(real_flow.sum())),
        vulnerable_lost=int(p.supplies[vmask].sum()) if len(p.origins) else 0,
        vulnerable_reallocated=int(vflow.sum()),
        vulnerable_unserved=int(plan.flow[vmask, -1].sum()) if len(p.origins) else 0,
        avg_reallocated_vulnerable_time_s=_mean(int((vflow * vcost).sum()), int(vflow.sum())),
        max_reallocated_vulnerable_time_s=(
            float(vcost[vflow > 0].max()) / MICROS if (vflow > 0).any() else None),
        objective_s=plan.objective_s,
    )
