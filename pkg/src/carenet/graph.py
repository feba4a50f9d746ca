"""Road network, closure overlays and exact shortest travel times.

Edge travel time is free-flow: length / speed. All path arithmetic happens in
integer microseconds (each edge rounded once), so shortest-path results are
exact and comparable with ``==``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import ValidationError

FLOODPLAIN_TAGS = ("none", "fp100", "fp500")

#: Sentinel for "no path" in second-valued results. Compares greater than any
#: finite time and poisons arithmetic instead of hiding in a sum.
UNREACHABLE = math.inf
#: Integer counterpart used in microsecond arrays.
UNREACHABLE_US = int(kernels.INF)

MICROS = 1_000_000


@dataclass(frozen=True)
class Node:
    id: str
    x: float
    y: float


@dataclass(frozen=True)
class Edge:
    id: str
    u: str
    v: str
    length_m: float
    speed_mps: float
    floodplain: str = "none"
    oneway: bool = False


def edge_weight(edge: Edge) -> float:
    """Free-flow traversal time of ``edge`` in seconds."""
    return edge.length_m / edge.speed_mps


def edge_weight_us(edge: Edge) -> int:
    return int(round(edge.length_m / edge.speed_mps * MICROS))


@dataclass(frozen=True)
class StreetNetwork:
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self):
        seen = set()
        for n in self.nodes:
            if n.id in seen:
                raise ValidationError(f"duplicate node id {n.id!r}")
            seen.add(n.id)
        eids = set()
        for e in self.edges:
            if e.id in eids:
                raise ValidationError(f"duplicate edge id {e.id!r}")
            eids.add(e.id)
            if e.u not in seen or e.v not in seen:
                missing = e.u if e.u not in seen else e.v
                raise ValidationError(f"edge {e.id!r} references unknown node {missing!r}")
            if e.u == e.v:
                raise ValidationError(f"edge {e.id!r} is a self-loop")
            if not (e.length_m > 0 and e.speed_mps > 0):
                raise ValidationError(f"edge {e.id!r} needs positive length and speed")
            if e.floodplain not in FLOODPLAIN_TAGS:
                raise ValidationError(f"edge {e.id!r} has bad floodplain tag {e.floodplain!r}")

    @cached_property
    def node_index(self) -> dict[str, int]:
        return {n.id: k for k, n in enumerate(self.nodes)}

    @cached_property
    def edge_index(self) -> dict[str, int]:
        return {e.id: k for k, e in enumerate(self.edges)}

    @cached_property
    def edge_ids_by_floodplain(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {t: [] for t in FLOODPLAIN_TAGS}
        for e in self.edges:
            out[e.floodplain].append(e.id)
        return {t: tuple(sorted(ids)) for t, ids in out.items()}

    @cached_property
    def _csr(self):
        return _build_csr(self, reverse=False)

    @cached_property
    def _csr_reverse(self):
        return _build_csr(self, reverse=True)

    def csr(self, reverse: bool = False):
        """(indptr, heads, weights_us, arc_edge) arrays, int64."""
        return self._csr_reverse if reverse else self._csr


def _build_csr(net: StreetNetwork, reverse: bool):
    idx = net.node_index
    tails, heads, weights, owner = [], [], [], []
    for k, e in enumerate(net.edges):
        u, v, w = idx[e.u], idx[e.v], edge_weight_us(e)
        arcs = [(u, v)] if e.oneway else [(u, v), (v, u)]
        for a, b in arcs:
            if reverse:
                a, b = b, a
            tails.append(a)
            heads.append(b)
            weights.append(w)
            owner.append(k)
    tails = np.asarray(tails, dtype=np.int64)
    order = np.argsort(tails, kind="stable")
    indptr = np.zeros(len(net.nodes) + 1, dtype=np.int64)
    np.cumsum(np.bincount(tails, minlength=len(net.nodes)), out=indptr[1:])
    return (
        indptr,
        np.asarray(heads, dtype=np.int64)[order],
        np.asarray(weights, dtype=np.int64)[order],
        np.asarray(owner, dtype=np.int64)[order],
    )


@dataclass(frozen=True)
class ClosureOverlay:
    """A street network with a set of edges made impassable."""

    base: StreetNetwork
    closed_edges: frozenset = field(default_factory=frozenset)

    @cached_property
    def edge_open(self) -> np.ndarray:
        mask = np.ones(len(self.base.edges), dtype=np.uint8)
        idx = self.base.edge_index
        for eid in self.closed_edges:
            mask[idx[eid]] = 0
        return mask


def apply_closures(net: StreetNetwork, closed_edges: Iterable[str] = ()) -> ClosureOverlay:
    closed = frozenset(closed_edges)
    unknown = closed - net.edge_index.keys()
    if unknown:
        raise ValidationError(f"unknown edge id {sorted(unknown)[0]!r}")
    return ClosureOverlay(net, closed)


@dataclass(frozen=True, eq=False)
class TravelTimeMatrix:
    origins: tuple[str, ...]
    destinations: tuple[str, ...]
    micros: np.ndarray  # int64, UNREACHABLE_US where no path exists

    @property
    def seconds(self) -> np.ndarray:
        out = self.micros.astype(float) / MICROS
        out[self.micros == UNREACHABLE_US] = UNREACHABLE
        return out

    def reachable(self) -> np.ndarray:
        return self.micros != UNREACHABLE_US

    def __eq__(self, other):
        if not isinstance(other, TravelTimeMatrix):
            return NotImplemented
        return (
            self.origins == other.origins
            and self.destinations == other.destinations
            and np.array_equal(self.micros, other.micros)
        )

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["origin_id", "destination_id", "seconds"])
            for a, o in enumerate(self.origins):
                for b, d in enumerate(self.destinations):
                    t = int(self.micros[a, b])
                    w.writerow([o, d, "UNREACHABLE" if t == UNREACHABLE_US else repr(t / MICROS)])


def _node_indices(net: StreetNetwork, ids: Sequence[str]) -> np.ndarray:
    idx = net.node_index
    try:
        return np.asarray([idx[i] for i in ids], dtype=np.int64)
    except KeyError as exc:
        raise ValidationError(f"unknown node {exc.args[0]!r}") from None


def micros_matrix(overlay: ClosureOverlay, origins: Sequence[str], destinations: Sequence[str],
                  chunk: int = 256) -> np.ndarray:
    """Origin x destination microsecond matrix.

    Runs Dijkstra from whichever side has fewer distinct nodes; the reverse
    graph serves destination-rooted searches so oneway edges stay correct.
    """
    net = overlay.base
    o_idx = _node_indices(net, origins)
    d_idx = _node_indices(net, destinations)
    out = np.empty((len(o_idx), len(d_idx)), dtype=np.int64)
    if len(o_idx) == 0 or len(d_idx) == 0:
        return out
    uo, o_inv = np.unique(o_idx, return_inverse=True)
    ud, d_inv = np.unique(d_idx, return_inverse=True)
    reverse = len(ud) < len(uo)
    roots, leaves = (ud, uo) if reverse else (uo, ud)
    indptr, heads, weights, owner = net.csr(reverse)
    block = np.empty((len(roots), len(leaves)), dtype=np.int64)
    for start in range(0, len(roots), chunk):
        part = roots[start:start + chunk]
        block[start:start + len(part)] = kernels.dijkstra_many(
            indptr, heads, weights, owner, overlay.edge_open, part, leaves)
    if reverse:
        block = block.T
    out[:, :] = block[np.ix_(o_inv.ravel(), d_inv.ravel())]
    return out


def travel_time_matrix(overlay: ClosureOverlay, origins: Sequence[str],
                       destinations: Sequence[str]) -> TravelTimeMatrix:
    if len(origins) == 0 or len(destinations) == 0:
        raise ValidationError("origin and destination lists must be non-empty")
    return TravelTimeMatrix(tuple(origins), tuple(destinations),
                            micros_matrix(overlay, origins, destinations))


def shortest_times_from(overlay: ClosureOverlay, source: str,
                        targets: Iterable[str]) -> Mapping[str, float]:
    """Seconds from ``source`` to each target; ``UNREACHABLE`` if cut off."""
    targets = list(targets)
    if source not in overlay.base.node_index:
        raise ValidationError(f"unknown node {source!r}")
    if not targets:
        return {}
    row = micros_matrix(overlay, [source], targets)[0]
    return {t: (UNREACHABLE if m == UNREACHABLE_US else int(m) / MICROS)
            for t, m in zip(targets, row)}
