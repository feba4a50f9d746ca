"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the pure-Python
module takes over with identical results, roughly 10x slower on shortest
paths and 40x slower on transportation solves.
"""

from __future__ import annotations

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

INF = _kernels_py.INF

if _compiled is not None:
    BACKEND = "compiled"
    dijkstra_many = _compiled.dijkstra_many
    transport_min_cost = _compiled.transport_min_cost
else:
    BACKEND = "python"
    dijkstra_many = _kernels_py.dijkstra_many
    transport_min_cost = _kernels_py.transport_min_cost


def available_backends():
    """Map backend name -> kernel module, for tests and benchmarks."""
    out = {"python": _kernels_py}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out
