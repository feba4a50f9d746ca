"""Flood resilience analysis for critical-care facility networks.

Simulates road and facility flooding, re-allocates patients who lose access
with an exact integral transportation solve, applies a travel-time threshold
for low-income block groups, and sites temporary facilities for whoever is
still unserved.
"""

from .errors import CarenetError, ValidationError
from .graph import (UNREACHABLE, ClosureOverlay, Edge, Node, StreetNetwork, TravelTimeMatrix,
                    apply_closures, edge_weight, shortest_times_from, travel_time_matrix)
from .ingest import ingest_instance, write_instance
from .kernels import BACKEND
from .model import (BlockGroup, Facility, Instance, ModelParams, Quantile, classify_vulnerable,
                    estimate_capacities)
from .reallocation import (DUMMY, AccessReport, AllocationPlan, EquityRule, Metrics,
                           TransportProblem, assess_access, build_transport_problem,
                           certify_optimal, plan_metrics, residual_demand, solve_transport)
from .scenarios import (Scenario, ScenarioSpec, enumerate_batch, sample_random_failure,
                        sample_rank_ordering_failure)
from .siting import (DemandPointMap, SitingPlan, SitingProblem, aggregate_demand_points,
                     build_siting_problem, solve_siting)
from .synth import SynthSpec, generate_synthetic_instance

__version__ = "0.1.0"
