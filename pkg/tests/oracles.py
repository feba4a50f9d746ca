"""Brute-force references used by the test suite.

Nothing here imports the solvers it checks; the only package types touched are
plain data containers.
"""

from __future__ import annotations

import itertools
from collections import deque

INF = float("inf")


def label_correcting(n, arcs, source):
    """FIFO label-correcting shortest paths. ``arcs`` is [(u, v, w), ...]."""
    out = [[] for _ in range(n)]
    for u, v, w in arcs:
        out[u].append((v, w))
    dist = [INF] * n
    dist[source] = 0
    queue, queued = deque([source]), [False] * n
    queued[source] = True
    while queue:
        u = queue.popleft()
        queued[u] = False
        for v, w in out[u]:
            if dist[u] + w < dist[v]:
                dist[v] = dist[u] + w
                if not queued[v]:
                    queue.append(v)
                    queued[v] = True
    return dist


def reachable(n, arcs, source):
    out = [[] for _ in range(n)]
    for u, v, *_ in arcs:
        out[u].append(v)
    seen, stack = {source}, [source]
    while stack:
        u = stack.pop()
        for v in out[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def _compositions(total, slots):
    """All ways to write ``total`` as an ordered sum over ``slots`` non-negative parts."""
    if slots == 0:
        if total == 0:
            yield ()
        return
    if slots == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, slots - 1):
            yield (first,) + rest


def transport_enumerate(supplies, capacities, cost, allowed):
    """Minimum total cost over every feasible integral assignment, or None.

    Rows of ``cost``/``allowed`` are origins, columns destinations.
    """
    no, nf = len(supplies), len(capacities)
    per_origin = []
    for i in range(no):
        cols = [j for j in range(nf) if allowed[i][j]]
        opts = []
        for parts in _compositions(int(supplies[i]), len(cols)):
            row = [0] * nf
            for j, x in zip(cols, parts):
                row[j] = x
            opts.append(row)
        per_origin.append(opts)
    best = None
    for rows in itertools.product(*per_origin):
        if any(sum(r[j] for r in rows) > capacities[j] for j in range(nf)):
            continue
        total = sum(int(cost[i][j]) * rows[i][j] for i in range(no) for j in range(nf))
        if best is None or total < best:
            best = total
    return best


def siting_enumerate(residual, cost_rows, allowed_rows):
    """Lexicographic (max covered, then min time) over all integral x with row sums <= p.

    Enumerates each origin's full vector x_i over its permitted sites, with
    the remainder left uncovered, so the search space is every integral
    point of the feasible region.
    """
    per_origin = []
    for p, costs, ok in zip(residual, cost_rows, allowed_rows):
        cols = [k for k in range(len(costs)) if ok[k]]
        opts = []
        for parts in _compositions(int(p), len(cols) + 1):  # last slot: uncovered
            covered = sum(parts[:-1])
            time = sum(int(costs[k]) * x for k, x in zip(cols, parts[:-1]))
            opts.append((covered, time))
        per_origin.append(opts)
    best = None
    for combo in itertools.product(*per_origin):
        covered = sum(c for c, _ in combo)
        time = sum(t for _, t in combo)
        if best is None or (covered, -time) > (best[0], -best[1]):
            best = (covered, time)
    return best
