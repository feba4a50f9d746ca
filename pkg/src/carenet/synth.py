"""Seeded synthetic instances shaped like a county dialysis network.

The street graph is a jittered grid with one diagonal per cell. A meandering
river band tags nodes as 100-year floodplain (inner band) or 500-year
floodplain (outer band); an edge takes the worse tag of its endpoints.
Facility attractiveness is Pareto-distributed, patients choose facilities by
a distance-decay gravity rule, and capacities come from ``estimate_capacities``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .graph import Edge, Node, StreetNetwork
from .ingest import write_instance
from .model import BlockGroup, Facility, Instance, ModelParams, estimate_capacities


@dataclass(frozen=True)
class SynthSpec:
    rows: int = 10
    cols: int = 10
    n_facilities: int = 6
    n_cbgs: int = 20
    total_visits: int = 200
    spacing_m: float = 200.0
    # floodplain band half-widths as fractions of the grid height
    fp100_halfwidth: float = 0.08
    fp500_halfwidth: float = 0.17
    # share of facilities sitting in each band (25 and 27 of 142 by default)
    fp100_facility_share: float = 25 / 142
    fp500_facility_share: float = 27 / 142
    pareto_shape: float = 1.2
    decay_m: float = 2500.0
    # share of block groups clustered around the largest facilities
    urban_share: float = 0.6
    urban_sigma_m: float = 1500.0
    hubs_in_floodplain: bool = True
    arterial_every: int = 8
    arterial_speed_mps: float = 20.0
    local_speed_mps: float = 11.0


def _floodplain_tags(x, y, height, spec, rng):
    width = x.max() - x.min() if len(x) > 1 else 1.0
    phase = rng.uniform(0, 2 * np.pi)
    centre = height * (0.5 + 0.18 * np.sin(2 * np.pi * (x - x.min()) / max(width, 1.0) * 1.3 + phase))
    gap = np.abs(y - centre)
    tags = np.full(len(x), "none", dtype=object)
    tags[gap < spec.fp500_halfwidth * height] = "fp500"
    tags[gap < spec.fp100_halfwidth * height] = "fp100"
    return tags


def _network(spec: SynthSpec, rng):
    r, c, s = spec.rows, spec.cols, spec.spacing_m
    jitter = rng.uniform(-0.2, 0.2, size=(r * c, 2)) * s
    gy, gx = np.divmod(np.arange(r * c), c)
    x = gx * s + jitter[:, 0]
    y = gy * s + jitter[:, 1]
    x = np.round(x, 2)
    y = np.round(y, 2)
    tags = _floodplain_tags(x, y, max((r - 1) * s, s), spec, rng)
    width = len(str(r * c - 1))
    nid = [f"N{k:0{width}d}" for k in range(r * c)]
    nodes = tuple(Node(nid[k], float(x[k]), float(y[k])) for k in range(r * c))

    pairs = []
    for k in range(r * c):
        i, j = gy[k], gx[k]
        if j + 1 < c:
            pairs.append((k, k + 1, i % spec.arterial_every == 0))
        if i + 1 < r:
            pairs.append((k, k + c, j % spec.arterial_every == 0))
        if i + 1 < r and j + 1 < c:
            if rng.random() < 0.5:
                pairs.append((k, k + c + 1, False))
            else:
                pairs.append((k + 1, k + c, False))
    detour = rng.uniform(1.0, 1.15, size=len(pairs))
    rank = {"none": 0, "fp500": 1, "fp100": 2}
    worst = ("none", "fp500", "fp100")
    ewidth = len(str(len(pairs) - 1))
    edges = []
    for n, (a, b, arterial) in enumerate(pairs):
        length = float(np.round(np.hypot(x[a] - x[b], y[a] - y[b]) * detour[n], 2))
        speed = spec.arterial_speed_mps if arterial else spec.local_speed_mps
        tag = worst[max(rank[tags[a]], rank[tags[b]])]
        edges.append(Edge(f"E{n:0{ewidth}d}", nid[a], nid[b], max(length, 1.0), speed, tag, False))
    return StreetNetwork(nodes, tuple(edges)), x, y, tags


def generate_synthetic_instance(seed: int, scale: SynthSpec | None = None,
                                params: ModelParams | None = None,
                                outdir=None) -> Instance:
    """Build a reproducible instance; with ``outdir`` also write the four CSVs."""
    spec = scale or SynthSpec()
    n_nodes = spec.rows * spec.cols
    if spec.rows < 2 or spec.cols < 2:
        raise ValidationError("synthetic grid needs at least 2 x 2 nodes")
    if spec.n_facilities > n_nodes:
        raise ValidationError(
            f"infeasible scale: {spec.n_facilities} facilities on {n_nodes} nodes")
    if spec.n_cbgs > n_nodes:
        raise ValidationError(f"infeasible scale: {spec.n_cbgs} block groups on {n_nodes} nodes")
    rng = np.random.Generator(np.random.PCG64(seed))
    net, x, y, tags = _network(spec, rng)

    n = spec.n_facilities
    n100 = int(round(n * spec.fp100_facility_share))
    n500 = int(round(n * spec.fp500_facility_share))
    pools = {t: np.flatnonzero(tags == t) for t in ("fp100", "fp500", "none")}
    want = {"fp100": n100, "fp500": n500, "none": n - n100 - n500}
    # spill over when a band has too few nodes
    for t in ("fp100", "fp500"):
        short = want[t] - len(pools[t])
        if short > 0:
            want[t] -= short
            want["none"] += short
    if want["none"] > len(pools["none"]):
        raise ValidationError("infeasible scale: not enough nodes outside the floodplain")
    sites, site_tags = [], []
    for t in ("fp100", "fp500", "none"):
        chosen = rng.choice(pools[t], size=want[t], replace=False) if want[t] else []
        sites.extend(int(k) for k in chosen)
        site_tags.extend([t] * want[t])
    order = rng.permutation(n)
    sites = [sites[k] for k in order]
    site_tags = [site_tags[k] for k in order]

    attract = np.sort(rng.pareto(spec.pareto_shape, size=n) + 1.0)[::-1]
    slots = list(rng.permutation(n))
    if spec.hubs_in_floodplain:
        flooded = [k for k in range(n) if site_tags[k] != "none"]
        hubs = max(1, int(round(0.1 * len(flooded)))) if flooded else 0
        rng.shuffle(flooded)
        head = flooded[:hubs]
        slots = head + [k for k in slots if k not in head]
    weight = np.empty(n)
    weight[slots] = attract

    fwidth = len(str(n - 1)) if n > 1 else 1
    fid = [f"F{k:0{fwidth}d}" for k in range(n)]

    # population density: Gaussian clusters around facilities weighted by
    # attractiveness, over a uniform background
    hub_w = weight / weight.sum()
    dens = np.full(n_nodes, (1.0 - spec.urban_share) / n_nodes)
    for k in range(n):
        d2 = (x - x[sites[k]]) ** 2 + (y - y[sites[k]]) ** 2
        bump = np.exp(-0.5 * d2 / spec.urban_sigma_m ** 2)
        dens += spec.urban_share * hub_w[k] * bump / bump.sum()
    cnodes = rng.choice(n_nodes, size=spec.n_cbgs, replace=False, p=dens / dens.sum())
    cwidth = len(str(spec.n_cbgs - 1)) if spec.n_cbgs > 1 else 1
    incomes = np.round(rng.lognormal(np.log(55_000.0), 0.55, size=spec.n_cbgs), 2)
    propensity = rng.lognormal(0.0, 0.6, size=spec.n_cbgs)
    per_cbg = rng.multinomial(spec.total_visits, propensity / propensity.sum())

    fx, fy = x[sites], y[sites]
    block_groups = []
    for i, node in enumerate(cnodes):
        d = np.hypot(fx - x[node], fy - y[node])
        p = weight * np.exp(-d / spec.decay_m)
        counts = rng.multinomial(per_cbg[i], p / p.sum())
        visits = tuple((fid[j], int(counts[j])) for j in range(n) if counts[j] > 0)
        block_groups.append(BlockGroup(f"C{i:0{cwidth}d}", net.nodes[int(node)].id,
                                       float(incomes[i]), visits))

    facilities = tuple(Facility(fid[k], net.nodes[sites[k]].id, site_tags[k]) for k in range(n))
    inst = estimate_capacities(Instance(net, facilities, tuple(block_groups),
                                        params or ModelParams()))
    if outdir is not None:
        write_instance(inst, Path(outdir), include_capacity=False)
    return inst
