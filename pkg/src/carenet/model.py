"""Domain types: facilities, census block groups, instances and parameters."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ValidationError
from .graph import FLOODPLAIN_TAGS, StreetNetwork, apply_closures, micros_matrix


@dataclass(frozen=True)
class Quantile:
    """A parameter resolved as a patient-weighted quantile of the instance."""

    q: float

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValidationError(f"quantile must lie in [0, 1], got {self.q}")


@dataclass(frozen=True)
class ModelParams:
    capacity_utilization: float = 0.9
    poverty_line: Union[float, Quantile] = Quantile(0.25)
    travel_threshold: Union[float, Quantile] = Quantile(0.5)  # seconds
    dummy_cost: float = 1e6  # seconds

    def __post_init__(self):
        if not 0.0 < self.capacity_utilization <= 1.0:
            raise ValidationError(
                f"capacity_utilization must lie in (0, 1], got {self.capacity_utilization}")
        if not self.dummy_cost > 0:
            raise ValidationError(f"dummy_cost must be positive, got {self.dummy_cost}")


@dataclass(frozen=True)
class Facility:
    id: str
    node: str
    floodplain: str = "none"
    total_capacity: Optional[int] = None


@dataclass(frozen=True)
class BlockGroup:
    id: str
    centroid_node: str
    median_income: float
    baseline_visits: tuple[tuple[str, int], ...] = ()

    @property
    def patients(self) -> int:
        return sum(n for _, n in self.baseline_visits)


@dataclass(frozen=True)
class Instance:
    network: StreetNetwork
    facilities: tuple[Facility, ...]
    block_groups: tuple[BlockGroup, ...]
    params: ModelParams = field(default_factory=ModelParams)

    def __post_init__(self):
        nodes = self.network.node_index
        fids = set()
        for f in self.facilities:
            if f.id in fids:
                raise ValidationError(f"duplicate facility id {f.id!r}")
            fids.add(f.id)
            if f.node not in nodes:
                raise ValidationError(f"facility {f.id!r} references unknown node {f.node!r}")
            if f.floodplain not in FLOODPLAIN_TAGS:
                raise ValidationError(f"facility {f.id!r} has bad floodplain tag {f.floodplain!r}")
            if f.total_capacity is not None and f.total_capacity < 0:
                raise ValidationError(f"facility {f.id!r} has negative capacity")
        cids = set()
        for b in self.block_groups:
            if b.id in cids:
                raise ValidationError(f"duplicate block group id {b.id!r}")
            cids.add(b.id)
            if b.centroid_node not in nodes:
                raise ValidationError(
                    f"block group {b.id!r} references unknown node {b.centroid_node!r}")
            for fid, n in b.baseline_visits:
                if fid not in fids:
                    raise ValidationError(
                        f"block group {b.id!r} has visits to unknown facility {fid!r}")
                if n < 0:
                    raise ValidationError(f"negative visit count for ({b.id!r}, {fid!r})")
        visits = self.visits_by_facility
        for f in self.facilities:
            if f.total_capacity is not None and f.total_capacity < visits[f.id]:
                raise ValidationError(
                    f"facility {f.id!r} capacity {f.total_capacity} is below its "
                    f"{visits[f.id]} baseline visits")

    @property
    def m(self) -> int:
        return len(self.block_groups)

    @property
    def n(self) -> int:
        return len(self.facilities)

    @cached_property
    def facility_by_id(self) -> dict[str, Facility]:
        return {f.id: f for f in self.facilities}

    @cached_property
    def block_group_by_id(self) -> dict[str, BlockGroup]:
        return {b.id: b for b in self.block_groups}

    @cached_property
    def visits_by_facility(self) -> dict[str, int]:
        out = {f.id: 0 for f in self.facilities}
        for b in self.block_groups:
            for fid, n in b.baseline_visits:
                out[fid] += n
        return out

    @cached_property
    def baseline_pairs(self) -> tuple[tuple[int, int, int], ...]:
        """(cbg index, facility index, visits) for every positive visit record."""
        fidx = {f.id: k for k, f in enumerate(self.facilities)}
        return tuple(
            (i, fidx[fid], n)
            for i, b in enumerate(self.block_groups)
            for fid, n in b.baseline_visits
            if n > 0
        )

    @cached_property
    def baseline_facility_micros(self) -> np.ndarray:
        """CBG x facility travel times on the undamaged network (microseconds)."""
        return facility_micros(self, frozenset())

    @cached_property
    def baseline_pair_micros(self) -> np.ndarray:
        t = self.baseline_facility_micros
        return np.asarray([t[i, j] for i, j, _ in self.baseline_pairs], dtype=np.int64)

    def floodplain_facilities(self, tag: str) -> tuple[str, ...]:
        return tuple(sorted(f.id for f in self.facilities if f.floodplain == tag))


def facility_micros(instance: Instance, closed_edges) -> np.ndarray:
    overlay = apply_closures(instance.network, closed_edges)
    return micros_matrix(overlay,
                         [b.centroid_node for b in instance.block_groups],
                         [f.node for f in instance.facilities])


def estimate_capacities(instance: Instance) -> Instance:
    """Size every facility so its observed visits use ``capacity_utilization``."""
    u = instance.params.capacity_utilization
    if not 0.0 < u <= 1.0:
        raise ValidationError(f"capacity_utilization must lie in (0, 1], got {u}")
    visits = instance.visits_by_facility
    facilities = tuple(
        replace(f, total_capacity=capacity_for(visits[f.id], u)) for f in instance.facilities)
    return replace(instance, facilities=facilities)


def capacity_for(visits: int, utilization: float) -> int:
    if visits == 0:
        return 0
    # exact rational ceiling; a float division can land a hair above an integer
    return math.ceil(Fraction(visits) / Fraction(str(utilization)))


def weighted_quantile(values: Sequence[float], weights: Sequence[int], q: float) -> float:
    """Quantile of the sample where ``values[k]`` appears ``weights[k]`` times.

    Linear interpolation between order statistics at position ``(N - 1) * q``,
    i.e. numpy's default method applied to the expanded sample.
    """
    pairs = sorted((v, int(w)) for v, w in zip(values, weights) if w > 0)
    total = sum(w for _, w in pairs)
    if total == 0:
        raise ValidationError("quantile of an empty (zero-weight) sample")
    h = (total - 1) * q
    lo = math.floor(h)
    hi = min(lo + 1, total - 1)

    def order_stat(k):
        seen = 0
        for v, w in pairs:
            seen += w
            if k < seen:
                return v
        return pairs[-1][0]

    x_lo, x_hi = order_stat(lo), order_stat(hi)
    return x_lo + (h - lo) * (x_hi - x_lo)


def resolve_poverty_line(instance: Instance) -> float:
    rho = instance.params.poverty_line
    if isinstance(rho, Quantile):
        bgs = instance.block_groups
        return weighted_quantile([b.median_income for b in bgs], [b.patients for b in bgs], rho.q)
    return float(rho)


def classify_vulnerable(instance: Instance) -> frozenset[str]:
    """Ids of block groups whose median income is strictly below the poverty line."""
    rho = resolve_poverty_line(instance)
    return frozenset(b.id for b in instance.block_groups if b.median_income < rho)


def resolve_travel_threshold(instance: Instance) -> float:
    """Travel-time threshold in seconds; quantiles are over baseline patients."""
    t = instance.params.travel_threshold
    if not isinstance(t, Quantile):
        return float(t)
    times = instance.baseline_pair_micros
    counts = [n for _, _, n in instance.baseline_pairs]
    finite = times != np.iinfo(np.int64).max
    secs = (times[finite] / 1e6).tolist()
    return weighted_quantile(secs, [c for c, ok in zip(counts, finite) if ok], t.q)
