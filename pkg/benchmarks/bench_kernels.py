"""Time the compiled and pure-Python kernels on the same inputs.

    python benchmarks/bench_kernels.py [--rows 60] [--sources 50] [--repeat 3]

Both backends must return identical arrays; the script exits non-zero if not.
"""

import argparse
import sys
import time

import numpy as np

from carenet import kernels
from carenet.graph import apply_closures
from carenet.synth import SynthSpec, generate_synthetic_instance


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, np.asarray(out)


def transport_inputs(rng, origins, facilities):
    supply = rng.integers(1, 20, origins).astype(np.int64)
    caps = np.append(rng.integers(0, 30, facilities), supply.sum()).astype(np.int64)
    cost = rng.integers(1, 3_600_000_000, (origins, facilities + 1)).astype(np.int64)
    cost[:, -1] = 10**12
    allowed = (rng.random((origins, facilities + 1)) < 0.9).astype(np.uint8)
    allowed[:, -1] = 1
    return supply, caps, cost, allowed


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=60, help="grid side length")
    ap.add_argument("--sources", type=int, default=50, help="Dijkstra roots")
    ap.add_argument("--origins", type=int, default=120, help="transport origins")
    ap.add_argument("--facilities", type=int, default=40, help="transport facilities")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the Python backend is available")

    inst = generate_synthetic_instance(0, SynthSpec(rows=args.rows, cols=args.rows,
                                                    n_facilities=10, n_cbgs=20, total_visits=50))
    net = inst.network
    ov = apply_closures(net)
    indptr, heads, w, owner = net.csr()
    rng = np.random.default_rng(0)
    src = np.sort(rng.choice(len(net.nodes), min(args.sources, len(net.nodes)), replace=False))
    dst = np.arange(len(net.nodes), dtype=np.int64)
    tp = transport_inputs(rng, args.origins, args.facilities)

    print(f"graph: {len(net.nodes)} nodes, {len(net.edges)} edges, {len(src)} sources")
    print(f"transport: {args.origins} origins x {args.facilities + 1} destinations, "
          f"supply {int(tp[0].sum())}")
    results = {}
    for name, mod in sorted(backends.items()):
        t_sp, d = best_of(lambda: mod.dijkstra_many(indptr, heads, w, owner, ov.edge_open,
                                                    src.astype(np.int64), dst), args.repeat)
        t_tp, f = best_of(lambda: mod.transport_min_cost(*tp), args.repeat)
        results[name] = (t_sp, t_tp, d, f)
        print(f"{name:>9}: dijkstra {t_sp * 1e3:9.2f} ms   transport {t_tp * 1e3:9.2f} ms")

    if len(results) == 2:
        c, p = results["compiled"], results["python"]
        print(f"  speedup: dijkstra x{p[0] / c[0]:.1f}   transport x{p[1] / c[1]:.1f}")
        cost = tp[2]
        same = np.array_equal(c[2], p[2]) and int((c[3] * cost).sum()) == int((p[3] * cost).sum())
        if not same:
            print("backends disagree", file=sys.stderr)
            return 1
        print("  outputs identical (distances and transport objective)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
