"""Seeded flood failure scenarios.

Random streams are PCG64 generators seeded from
``SeedSequence(entropy=seed, spawn_key=(case_index, delta_ppm, stream))``
where ``delta_ppm = round(delta * 1e6)`` and ``stream`` is 0 for road
segments and 1 for facilities. Road draws never depend on the failure mode,
so a rank-ordering scenario floods exactly the same roads as the random
scenario with the same (seed, case, delta).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .model import Instance

MODES = ("random", "rank_ordering")
EDGE_STREAM, FACILITY_STREAM = 0, 1
RANK_FRACTION = Fraction(1, 10)
FP500_FACTOR = Fraction(1, 5)


@dataclass(frozen=True)
class ScenarioSpec:
    delta: float
    mode: str = "random"
    seed: int = 0
    case_index: int = 0

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise ValidationError(f"delta must lie in [0, 1], got {self.delta}")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class Scenario:
    spec: ScenarioSpec
    closed_edges: frozenset = field(default_factory=frozenset)
    closed_facilities: frozenset = field(default_factory=frozenset)

    def to_json(self) -> str:
        doc = {
            "spec": asdict(self.spec),
            "closed_edges": sorted(self.closed_edges),
            "closed_facilities": sorted(self.closed_facilities),
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        try:
            doc = json.loads(text)
            spec = ScenarioSpec(**doc["spec"])
            return cls(spec, frozenset(doc["closed_edges"]), frozenset(doc["closed_facilities"]))
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ValidationError(f"malformed scenario JSON: {exc}") from None

    def validate(self, instance: Instance) -> None:
        net = instance.network
        by_tag = net.edge_ids_by_floodplain
        allowed = set(by_tag["fp100"]) | set(by_tag["fp500"])
        for e in self.closed_edges:
            if e not in net.edge_index:
                raise ValidationError(f"scenario closes unknown edge {e!r}")
            if e not in allowed:
                raise ValidationError(f"scenario closes edge {e!r} outside the floodplain")
        for f in self.closed_facilities:
            fac = instance.facility_by_id.get(f)
            if fac is None:
                raise ValidationError(f"scenario closes unknown facility {f!r}")
            if fac.floodplain == "none":
                raise ValidationError(f"scenario closes facility {f!r} outside the floodplain")


def _rng(seed: int, case_index: int, delta: float, stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed,
                                spawn_key=(case_index, int(round(delta * 1e6)), stream))
    return np.random.Generator(np.random.PCG64(ss))


def _exact(delta: float) -> Fraction:
    # decimal reading of the float, so 0.29 * 100 floors to 29, not 28
    return Fraction(repr(float(delta)))


def flood_count(delta: float, size: int, factor: Fraction = Fraction(1)) -> int:
    """floor(factor * delta * size), computed exactly."""
    return int(factor * _exact(delta) * size)


def _draw(rng: np.random.Generator, pool: Sequence[str], k: int) -> list[str]:
    if k == 0:
        return []
    return [pool[i] for i in rng.permutation(len(pool))[:k]]


def _flooded_edges(instance: Instance, spec: ScenarioSpec) -> frozenset:
    tags = instance.network.edge_ids_by_floodplain
    rng = _rng(spec.seed, spec.case_index, spec.delta, EDGE_STREAM)
    closed = _draw(rng, tags["fp100"], flood_count(spec.delta, len(tags["fp100"])))
    closed += _draw(rng, tags["fp500"], flood_count(spec.delta, len(tags["fp500"]), FP500_FACTOR))
    return frozenset(closed)


def sample_random_failure(instance: Instance, delta: float, seed: int,
                          case_index: int = 0) -> Scenario:
    spec = ScenarioSpec(delta, "random", seed, case_index)
    rng = _rng(seed, case_index, delta, FACILITY_STREAM)
    f100 = instance.floodplain_facilities("fp100")
    f500 = instance.floodplain_facilities("fp500")
    closed = _draw(rng, f100, flood_count(delta, len(f100)))
    closed += _draw(rng, f500, flood_count(delta, len(f500), FP500_FACTOR))
    return Scenario(spec, _flooded_edges(instance, spec), frozenset(closed))


def rank_count(n_floodplain: int, fraction: Fraction = RANK_FRACTION) -> int:
    """Round-half-up of ``fraction * n_floodplain`` (52 facilities -> 5)."""
    return int(fraction * n_floodplain + Fraction(1, 2))


def top_capacity_facilities(instance: Instance, k: int) -> tuple[str, ...]:
    """The k floodplain facilities with most capacity; ties go to the smaller id."""
    pool = [f for f in instance.facilities if f.floodplain != "none"]
    pool.sort(key=lambda f: (-(f.total_capacity or 0), f.id))
    return tuple(f.id for f in pool[:k])


def sample_rank_ordering_failure(instance: Instance, delta: float, seed: int,
                                 case_index: int = 0,
                                 rank_fraction_count: int | None = None) -> Scenario:
    """Random road flooding plus closure of the largest floodplain facilities.

    ``rank_fraction_count`` overrides the number of facilities closed.
    """
    spec = ScenarioSpec(delta, "rank_ordering", seed, case_index)
    n_fp = sum(1 for f in instance.facilities if f.floodplain != "none")
    k = rank_count(n_fp) if rank_fraction_count is None else int(rank_fraction_count)
    if k < 0:
        raise ValidationError(f"rank_fraction_count must be non-negative, got {k}")
    return Scenario(spec, _flooded_edges(instance, spec),
                    frozenset(top_capacity_facilities(instance, k)))


def sample(instance: Instance, spec: ScenarioSpec, rank_fraction_count: int | None = None):
    if spec.mode == "random":
        return sample_random_failure(instance, spec.delta, spec.seed, spec.case_index)
    return sample_rank_ordering_failure(instance, spec.delta, spec.seed, spec.case_index,
                                        rank_fraction_count)


def enumerate_batch(instance: Instance, deltas: Sequence[float], cases_per_delta: int,
                    mode, master_seed: int, rank_fraction_count: int | None = None
                    ) -> list[Scenario]:
    """All scenarios of a grid, ordered by (mode, delta, case).

    ``mode`` is one mode name or a sequence of them. Every scenario uses
    ``master_seed`` as entropy; (case, delta, stream) split the streams.
    """
    if not deltas:
        raise ValidationError("delta list is empty")
    if cases_per_delta < 1:
        raise ValidationError(f"cases_per_delta must be >= 1, got {cases_per_delta}")
    modes = (mode,) if isinstance(mode, str) else tuple(mode)
    return [
        sample(instance, ScenarioSpec(float(d), m, master_seed, c), rank_fraction_count)
        for m in modes
        for d in deltas
        for c in range(cases_per_delta)
    ]
