"""CSV ingestion and emission for the four instance input files.

network file: a node section (header ``node_id,x,y``) followed by an edge
section introduced by its own header row
``edge_id,u,v,length_m,speed_mps,floodplain,oneway``.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

from .errors import ValidationError
from .graph import FLOODPLAIN_TAGS, Edge, Node, StreetNetwork
from .model import BlockGroup, Facility, Instance, ModelParams, estimate_capacities

NODE_HEADER = ["node_id", "x", "y"]
EDGE_HEADER = ["edge_id", "u", "v", "length_m", "speed_mps", "floodplain", "oneway"]
FACILITY_HEADER = ["facility_id", "node_id", "floodplain", "total_capacity"]
BLOCKGROUP_HEADER = ["cbg_id", "node_id", "median_income_usd"]
VISIT_HEADER = ["cbg_id", "facility_id", "visit_count"]


class _Rows:
    def __init__(self, path):
        self.path = Path(path)

    def __iter__(self):
        try:
            fh = open(self.path, newline="", encoding="utf-8")
        except OSError as exc:
            raise ValidationError(f"cannot read {self.path}: {exc.strerror}") from None
        with fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if row:
                    yield lineno, [c.strip() for c in row]

    def fail(self, lineno, msg):
        raise ValidationError(f"{self.path.name}, line {lineno}: {msg}")


def _num(rows, lineno, text, kind=float):
    try:
        return kind(text)
    except ValueError:
        rows.fail(lineno, f"expected a number, got {text!r}")


def _count(rows, lineno, text):
    v = _num(rows, lineno, text, int)
    if v < 0:
        rows.fail(lineno, f"expected a non-negative integer, got {text!r}")
    return v


def _tag(rows, lineno, text):
    if text not in FLOODPLAIN_TAGS:
        rows.fail(lineno, f"floodplain must be one of {'|'.join(FLOODPLAIN_TAGS)}, got {text!r}")
    return text


def _header(rows, it, expected, optional=()):
    try:
        lineno, row = next(it)
    except StopIteration:
        raise ValidationError(f"{rows.path.name}: empty file, header row required") from None
    allowed = [c for c in expected if c not in optional]
    if row != expected and row != allowed:
        rows.fail(lineno, f"expected header {','.join(expected)}, got {','.join(row)}")
    return len(row)


def read_network(path) -> StreetNetwork:
    rows = _Rows(path)
    it = iter(rows)
    _header(rows, it, NODE_HEADER)
    nodes, edges = [], []
    section = "nodes"
    for lineno, row in it:
        if section == "nodes":
            if row == EDGE_HEADER:
                section = "edges"
                continue
            if len(row) != 3:
                rows.fail(lineno, f"node row needs 3 fields, got {len(row)}")
            nodes.append(Node(row[0], _num(rows, lineno, row[1]), _num(rows, lineno, row[2])))
        else:
            if len(row) != 7:
                rows.fail(lineno, f"edge row needs 7 fields, got {len(row)}")
            if row[6] not in ("0", "1"):
                rows.fail(lineno, f"oneway must be 0 or 1, got {row[6]!r}")
            length = _num(rows, lineno, row[3])
            speed = _num(rows, lineno, row[4])
            if not (length > 0 and speed > 0):
                rows.fail(lineno, "length_m and speed_mps must be positive")
            edges.append(Edge(row[0], row[1], row[2], length, speed,
                              _tag(rows, lineno, row[5]), row[6] == "1"))
    return StreetNetwork(tuple(nodes), tuple(edges))


def ingest_instance(network_file, facilities_file, blockgroups_file, visits_file,
                    params: ModelParams | None = None) -> Instance:
    """Read and validate an instance; capacities are estimated when absent."""
    params = params or ModelParams()
    network = read_network(network_file)

    rows = _Rows(facilities_file)
    it = iter(rows)
    width = _header(rows, it, FACILITY_HEADER, optional=("total_capacity",))
    facilities = []
    for lineno, row in it:
        if len(row) != width:
            rows.fail(lineno, f"facility row needs {width} fields, got {len(row)}")
        cap = _count(rows, lineno, row[3]) if width == 4 and row[3] != "" else None
        facilities.append(Facility(row[0], row[1], _tag(rows, lineno, row[2]), cap))

    rows = _Rows(blockgroups_file)
    it = iter(rows)
    _header(rows, it, BLOCKGROUP_HEADER)
    cbg_rows = []
    for lineno, row in it:
        if len(row) != 3:
            rows.fail(lineno, f"block group row needs 3 fields, got {len(row)}")
        cbg_rows.append((row[0], row[1], _num(rows, lineno, row[2])))

    known_cbgs = {r[0] for r in cbg_rows}
    known_facilities = {f.id for f in facilities}
    rows = _Rows(visits_file)
    it = iter(rows)
    _header(rows, it, VISIT_HEADER)
    visits: dict[str, dict[str, int]] = defaultdict(dict)
    for lineno, row in it:
        if len(row) != 3:
            rows.fail(lineno, f"visit row needs 3 fields, got {len(row)}")
        cbg, fid, n = row[0], row[1], _count(rows, lineno, row[2])
        if cbg not in known_cbgs:
            rows.fail(lineno, f"dangling reference to unknown block group {cbg!r}")
        if fid not in known_facilities:
            rows.fail(lineno, f"dangling reference to unknown facility {fid!r}")
        if fid in visits[cbg]:
            rows.fail(lineno, f"duplicate visit record ({cbg!r}, {fid!r})")
        visits[cbg][fid] = n

    block_groups = tuple(
        BlockGroup(cid, node, income, tuple(sorted(visits.get(cid, {}).items())))
        for cid, node, income in cbg_rows)
    instance = Instance(network, tuple(facilities), block_groups, params)
    if any(f.total_capacity is None for f in facilities):
        estimated = estimate_capacities(instance)
        given = {f.id: f.total_capacity for f in facilities}
        instance = Instance(
            network,
            tuple(f if given[f.id] is None else
                  Facility(f.id, f.node, f.floodplain, given[f.id]) for f in estimated.facilities),
            block_groups, params)
    return instance


def _writer(path):
    fh = open(path, "w", newline="", encoding="utf-8")
    return fh, csv.writer(fh, lineterminator="\n")


def write_instance(instance: Instance, outdir, include_capacity: bool = True) -> dict[str, Path]:
    """Emit the four input files; returns their paths keyed by role."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "network_file": outdir / "network.csv",
        "facilities_file": outdir / "facilities.csv",
        "blockgroups_file": outdir / "blockgroups.csv",
        "visits_file": outdir / "visits.csv",
    }
    fh, w = _writer(paths["network_file"])
    with fh:
        w.writerow(NODE_HEADER)
        for n in instance.network.nodes:
            w.writerow([n.id, repr(n.x), repr(n.y)])
        w.writerow(EDGE_HEADER)
        for e in instance.network.edges:
            w.writerow([e.id, e.u, e.v, repr(e.length_m), repr(e.speed_mps), e.floodplain,
                        int(e.oneway)])
    fh, w = _writer(paths["facilities_file"])
    with fh:
        w.writerow(FACILITY_HEADER)
        for f in instance.facilities:
            cap = "" if (f.total_capacity is None or not include_capacity) else f.total_capacity
            w.writerow([f.id, f.node, f.floodplain, cap])
    fh, w = _writer(paths["blockgroups_file"])
    with fh:
        w.writerow(BLOCKGROUP_HEADER)
        for b in instance.block_groups:
            w.writerow([b.id, b.centroid_node, repr(float(b.median_income))])
    fh, w = _writer(paths["visits_file"])
    with fh:
        w.writerow(VISIT_HEADER)
        for b in instance.block_groups:
            for fid, n in b.baseline_visits:
                w.writerow([b.id, fid, n])
    return paths
