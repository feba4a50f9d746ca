"""Pure-Python fallback for the numeric kernels.

Mirrors ``carenet._kernels`` (Cython) function for function. Integer inputs
are numpy int64 arrays; results are returned as numpy arrays so callers never
care which backend ran.
"""

from __future__ import annotations

import heapq

import numpy as np

INF = np.iinfo(np.int64).max


def dijkstra_many(indptr, heads, weights, arc_edge, edge_open, sources, targets):
    """Shortest integer path lengths from each source to each target.

    The graph is CSR (``indptr``/``heads``/``weights``); ``arc_edge`` maps each
    arc to its edge and arcs whose edge has ``edge_open == 0`` are skipped.
    Unreached targets get ``INF``.
    """
    indptr = indptr.tolist()
    heads = heads.tolist()
    weights = weights.tolist()
    arc_open = [edge_open[e] != 0 for e in arc_edge.tolist()]
    n = len(indptr) - 1
    targets = [int(t) for t in targets]
    out = np.full((len(sources), len(targets)), INF, dtype=np.int64)
    for row, s in enumerate(sources):
        s = int(s)
        dist = [INF] * n
        dist[s] = 0
        heap = [(0, s)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for a in range(indptr[u], indptr[u + 1]):
                if not arc_open[a]:
                    continue
                v = heads[a]
                nd = d + weights[a]
                if nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        out[row, :] = [dist[t] for t in targets]
    return out


def transport_min_cost(supply, capacity, cost, allowed):
    """Integral min-cost transportation by successive shortest paths.

    Ships every unit of ``supply`` (origins) into ``capacity`` (destinations)
    over arcs where ``allowed`` is nonzero, minimizing total ``cost``. The
    caller guarantees feasibility. Dijkstra runs on reduced costs with node
    potentials, so all arc costs must be non-negative.
    """
    no = len(supply)
    nf = len(capacity)
    flow = [[0] * nf for _ in range(no)]
    if no == 0:
        return np.zeros((0, nf), dtype=np.int64)
    rem_s = [int(v) for v in supply]
    rem_c = [int(v) for v in capacity]
    cost = cost.tolist()
    allowed = allowed.tolist()
    adj = [[j for j in range(nf) if allowed[i][j]] for i in range(no)]
    nv = no + nf + 2
    src, snk = no + nf, no + nf + 1
    pot = [0] * nv

    while any(rem_s):
        dist = [INF] * nv
        prev = [-1] * nv
        done = [False] * nv
        dist[src] = 0
        heap = [(0, src)]
        while heap:
            d, u = heapq.heappop(heap)
            if done[u] or d > dist[u]:
                continue
            done[u] = True
            if u == snk:
                break
            if u == src:
                for i in range(no):
                    if rem_s[i] > 0:
                        nd = d + pot[src] - pot[i]
                        if nd < dist[i]:
                            dist[i], prev[i] = nd, src
                            heapq.heappush(heap, (nd, i))
            elif u < no:
                pu = pot[u]
                row = cost[u]
                for j in adj[u]:
                    v = no + j
                    nd = d + row[j] + pu - pot[v]
                    if nd < dist[v]:
                        dist[v], prev[v] = nd, u
                        heapq.heappush(heap, (nd, v))
            else:
                j = u - no
                pu = pot[u]
                if rem_c[j] > 0:
                    nd = d + pu - pot[snk]
                    if nd < dist[snk]:
                        dist[snk], prev[snk] = nd, u
                        heapq.heappush(heap, (nd, snk))
                for i in range(no):
                    if flow[i][j] > 0:
                        nd = d - cost[i][j] + pu - pot[i]
                        if nd < dist[i]:
                            dist[i], prev[i] = nd, u
                            heapq.heappush(heap, (nd, i))
        if not done[snk]:
            raise RuntimeError("transport problem is infeasible")
        dt = dist[snk]
        for v in range(nv):
            pot[v] += dist[v] if done[v] else dt

        # walk back snk <- facility <- origin <- facility ... <- origin <- src
        path = []
        v = snk
        while v != src:
            path.append(v)
            v = prev[v]
        path.reverse()
        first, last = path[0], path[-2] - no
        amount = min(rem_s[first], rem_c[last])
        for a, b in zip(path[:-1], path[1:]):
            if a >= no and b < no:
                amount = min(amount, flow[b][a - no])
        for a, b in zip(path[:-1], path[1:]):
            if b == snk:
                continue
            if a < no:
                flow[a][b - no] += amount
            else:
                flow[b][a - no] -= amount
        rem_s[first] -= amount
        rem_c[last] -= amount
    return np.asarray(flow, dtype=np.int64)
