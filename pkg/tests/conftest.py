import numpy as np
import pytest

from carenet import kernels
from carenet.graph import Edge, Node, StreetNetwork
from carenet.model import BlockGroup, Facility, Instance, ModelParams
from carenet.reallocation import DUMMY, TransportProblem


def path_network(ids, seconds=100.0, floodplain="none"):
    """Nodes in a line, each hop ``seconds`` long at 10 m/s."""
    nodes = tuple(Node(n, float(k), 0.0) for k, n in enumerate(ids))
    edges = tuple(
        Edge(f"{a}{b}", a, b, seconds * 10.0, 10.0, floodplain)
        for a, b in zip(ids[:-1], ids[1:]))
    return StreetNetwork(nodes, edges)


def make_instance(nodes, edges, facilities, cbgs, params=None):
    """Compact constructor.

    nodes: ids; edges: (id, u, v, seconds, floodplain[, oneway]);
    facilities: (id, node, floodplain, capacity);
    cbgs: (id, node, income, {facility: visits}).
    """
    net = StreetNetwork(
        tuple(Node(n, float(k), 0.0) for k, n in enumerate(nodes)),
        tuple(Edge(e[0], e[1], e[2], e[3] * 10.0, 10.0, e[4], bool(e[5]) if len(e) > 5 else False)
              for e in edges))
    facs = tuple(Facility(*f) for f in facilities)
    bgs = tuple(BlockGroup(c[0], c[1], float(c[2]), tuple(sorted(c[3].items()))) for c in cbgs)
    return Instance(net, facs, bgs, params or ModelParams())


@pytest.fixture
def small_instance():
    """Two CBGs, two facilities on a 4-node path A-B-C-D (100 s per hop).

    F1 sits on B in the 100-year floodplain; F2 on D. The C-D edge is fp100.
    """
    return make_instance(
        ["A", "B", "C", "D"],
        [("AB", "A", "B", 100, "none"), ("BC", "B", "C", 100, "fp500"),
         ("CD", "C", "D", 100, "fp100")],
        [("F1", "B", "fp100", 4), ("F2", "D", "none", 3)],
        [("CA", "A", 20_000, {"F1": 2, "F2": 1}), ("CC", "C", 60_000, {"F2": 1})],
    )


def make_problem(supplies, capacities, real_cost, real_allowed, dummy_us=10**12):
    """TransportProblem straight from arrays; a dummy column is appended."""
    no, nf = len(supplies), len(capacities)
    cost = np.zeros((no, nf + 1), dtype=np.int64)
    allowed = np.ones((no, nf + 1), dtype=np.uint8)
    if nf:
        cost[:, :nf] = np.asarray(real_cost, dtype=np.int64).reshape(no, nf)
        allowed[:, :nf] = np.asarray(real_allowed, dtype=np.uint8).reshape(no, nf)
    cost[:, :nf] *= allowed[:, :nf]
    cost[:, nf] = dummy_us
    sup = np.asarray(supplies, dtype=np.int64)
    caps = np.asarray(list(capacities) + [int(sup.sum())], dtype=np.int64)
    return TransportProblem(tuple(f"O{i}" for i in range(no)), sup,
                            tuple(f"D{j}" for j in range(nf)) + (DUMMY,), caps, cost, allowed,
                            dummy_us)


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request):
    return kernels.available_backends()[request.param]


# criterion number -> (title, detail); filled in by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    outcomes = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in nodeid:
                continue
            num = int(nodeid.split("test_criterion_")[1][:2])
            if status != "passed" or rep.when == "call":
                outcomes[num] = "PASS" if status == "passed" else "FAIL"
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(outcomes):
        title, detail = ACCEPTANCE.get(num, ("(no result recorded)", ""))
        terminalreporter.write_line(f"{outcomes[num]}  criterion {num:2d}  {title}: {detail}")
