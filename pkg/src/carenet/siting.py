"""Temporary-facility siting for patients left unserved by the equity solve.

Candidate sites are the centroids of all block groups. Sites have no capacity
and their number is unbounded, so the lexicographic program (first maximize
covered patients, then minimize their total travel time) splits into one
independent choice per residual patient: the cheapest reachable foreign
centroid, ties to the smaller site id.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import ValidationError
from .graph import MICROS, UNREACHABLE_US, apply_closures, micros_matrix
from .model import Instance
from .scenarios import Scenario


@dataclass(frozen=True, eq=False)
class SitingProblem:
    origins: tuple[str, ...]  # block groups with residual demand
    residual: np.ndarray  # int64, p^dt per origin
    sites: tuple[str, ...]  # every block group id, instance order
    cost: np.ndarray  # int64 microseconds, origins x sites
    allow_self_site: bool = False

    @property
    def allowed(self) -> np.ndarray:
        ok = self.cost != UNREACHABLE_US
        if not self.allow_self_site:
            pos = {s: k for k, s in enumerate(self.sites)}
            for a, o in enumerate(self.origins):
                if o in pos:
                    ok[a, pos[o]] = False
        return ok


@dataclass(frozen=True, eq=False)
class SitingPlan:
    sites: tuple[str, ...]
    flows: Mapping[tuple[str, str], int]  # (origin, site) -> patients
    covered: int
    total_time_us: int
    uncovered: Mapping[str, int] = field(default_factory=dict)

    @property
    def total_time_s(self) -> float:
        return self.total_time_us / MICROS

    def inbound(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for (_, s), n in self.flows.items():
            out[s] = out.get(s, 0) + n
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["origin_cbg", "site_cbg", "patients"])
            for (o, s), n in sorted(self.flows.items()):
                w.writerow([o, s, n])


def build_siting_problem(instance: Instance, scenario: Scenario, residual: Mapping[str, int],
                         allow_self_site: bool = False) -> SitingProblem:
    """Siting costs on the same flooded network as the scenario's re-allocation."""
    bgs = instance.block_groups
    unknown = set(residual) - instance.block_group_by_id.keys()
    if unknown:
        raise ValidationError(f"residual demand for unknown block group {sorted(unknown)[0]!r}")
    origins = tuple(b.id for b in bgs if residual.get(b.id, 0) > 0)
    sites = tuple(b.id for b in bgs)
    if origins:
        overlay = apply_closures(instance.network, scenario.closed_edges)
        by_id = instance.block_group_by_id
        cost = micros_matrix(overlay, [by_id[o].centroid_node for o in origins],
                             [b.centroid_node for b in bgs])
    else:
        cost = np.zeros((0, len(sites)), dtype=np.int64)
    res = np.asarray([residual[o] for o in origins], dtype=np.int64)
    return SitingProblem(origins, res, sites, cost, allow_self_site)


def solve_siting(problem: SitingProblem) -> SitingPlan:
    ok = problem.allowed
    flows, uncovered = {}, {}
    covered = total = 0
    for a, o in enumerate(problem.origins):
        n = int(problem.residual[a])
        cand = np.flatnonzero(ok[a])
        if len(cand) == 0:
            uncovered[o] = n
            continue
        best = min(cand, key=lambda k: (problem.cost[a, k], problem.sites[k]))
        flows[(o, problem.sites[best])] = n
        covered += n
        total += n * int(problem.cost[a, best])
    return SitingPlan(problem.sites, flows, covered, total, uncovered)


def solve_siting_bruteforce(problem: SitingProblem) -> tuple[int, int]:
    """(covered, total_time_us) of the lexicographic optimum by full enumeration.

    Each residual patient independently picks a permitted site or stays
    uncovered. Exponential; meant for validation on tiny problems.
    """
    ok = problem.allowed
    choices = []
    for a in range(len(problem.origins)):
        opts = [None] + [int(problem.cost[a, k]) for k in np.flatnonzero(ok[a])]
        choices.extend([opts] * int(problem.residual[a]))
    best = (0, 0)
    for combo in itertools.product(*choices):
        picked = [c for c in combo if c is not None]
        value = (len(picked), -sum(picked))
        if value > (best[0], -best[1]):
            best = (value[0], -value[1])
    return best


@dataclass(frozen=True, eq=False)
class DemandPointMap:
    totals: Mapping[str, int]  # site -> aggregated inbound patients, sorted by site

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["site_cbg", "total_demand"])
            for s, n in self.totals.items():
                w.writerow([s, n])


def aggregate_demand_points(plans: Iterable[SitingPlan]) -> DemandPointMap:
    plans = list(plans)
    if plans and any(p.sites != plans[0].sites for p in plans):
        raise ValidationError("siting plans come from different instances")
    out: dict[str, int] = {}
    for p in plans:
        for s, n in p.inbound().items():
            out[s] = out.get(s, 0) + n
    return DemandPointMap({s: out[s] for s in sorted(out) if out[s] > 0})
